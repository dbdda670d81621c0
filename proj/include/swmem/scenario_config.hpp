#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "swmem/ensemble.hpp"
#include "swmem/photon_stats.hpp"

namespace swmem {

/// Scenario as written by a user, in lab units. Every field has a default
/// (the 3 degree clock-state scenario) except `delays_us`.
struct ScenarioConfig {
    double temperature_uK = 100.0;
    double theta_deg = 3.0;
    double write_wavelength_nm = 795.0;
    double waist_um = 100.0;
    std::size_t atom_count = 100000;
    double density_per_cm3 = 1.0e10;
    std::string state_pair = "1,0/2,0";
    double bias_field_G = 3.2;
    double gradient_G_per_cm = kCalibratedGradient / constants::kGaussPerCm;
    double chi = 0.005;
    double eta_s = 0.6;
    double eta_as = 0.2;
    double background_B = 0.3;
    std::vector<double> delays_us;
    std::int64_t trials_per_point = 10'000'000;
    std::uint64_t seed = 1;
    Engine engine = Engine::Analytic;
    GeometryMode geometry_mode = GeometryMode::Exact;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    /// SI scenario. Pencil length and gravity are not config keys.
    Scenario to_scenario() const;

    std::vector<double> delays_seconds() const;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::size_t line, std::string field)
        : std::runtime_error(what), line_(line), field_(std::move(field))
    {
    }

    /// 1-based line, or 0 when the problem is not tied to one line.
    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// Environment variable that supplies the seed when a config omits it.
inline constexpr const char* kSeedEnvVar = "SWMEM_SEED";

/// Parses either a flat `key = value` document ('#' starts a comment) or a
/// JSON object with the same keys. Unknown or repeated keys are errors.
/// `default_seed` is used when the document has no `seed`.
ScenarioConfig parse_scenario_config(std::istream& is, std::optional<std::uint64_t> default_seed = std::nullopt);

ScenarioConfig load_scenario_config(const std::filesystem::path& path,
                                    std::optional<std::uint64_t> default_seed = std::nullopt);

/// Seed from kSeedEnvVar, if set and numeric.
std::optional<std::uint64_t> seed_from_environment();

/// "1,0/2,0" -> {|1,0>, |2,0>}
StatePair parse_state_pair(const std::string& text);
std::string format_state_pair(const StatePair& pair);

/// Writes the config back in key = value form.
void write_scenario_config(std::ostream& os, const ScenarioConfig& config);

} // namespace swmem
