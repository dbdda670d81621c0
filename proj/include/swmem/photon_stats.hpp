#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "swmem/analytic.hpp"
#include "swmem/core_physics.hpp"
#include "swmem/ensemble.hpp"
#include "swmem/parallel.hpp"

namespace swmem {

struct CountRecord {
    std::int64_t trials = 0;
    std::int64_t n_s = 0;
    std::int64_t n_as = 0;
    std::int64_t n_coinc = 0;
    double delay = 0.0; // s

    friend bool operator==(const CountRecord&, const CountRecord&) = default;
};

/// A count record with an empty channel; g is undefined.
class InsufficientStatisticsError : public std::runtime_error {
public:
    InsufficientStatisticsError(const std::string& what, CountRecord record)
        : std::runtime_error(what), record_(record)
    {
    }

    const CountRecord& record() const noexcept { return record_; }

private:
    CountRecord record_;
};

struct CurvePoint {
    double delay = 0.0; // s
    double g = 0.0;
    double sigma_g = 0.0;
    bool missing = false;
};

struct DecayCurve {
    std::vector<CurvePoint> points;

    /// Points that carry data, in delay order.
    std::vector<CurvePoint> valid_points() const;
};

/// Trial-by-trial generative model: an excitation with probability chi
/// heralds a Stokes click with probability eta_s; the anti-Stokes detector
/// clicks on the retrieved photon with probability gamma eta_as (given an
/// excitation) or on background with probability B eta_as. The two
/// anti-Stokes sources are exclusive, which requires (gamma + B) eta_as <= 1.
/// The per-trial outcome classes are sampled jointly as a multinomial.
/// Expected g is (gamma + B) / (chi gamma + B).
CountRecord simulate_counts(double gamma, const DetectionModel& det, std::int64_t trials, std::mt19937_64& engine);

CountRecord simulate_counts(double gamma, const DetectionModel& det, std::int64_t trials, std::uint64_t seed);

struct CorrelationEstimate {
    double g;
    double sigma_g;
};

/// g = n_c N / (n_s n_as) with Poisson error propagation.
CorrelationEstimate estimate_g(const CountRecord& record);

enum class Engine { Analytic, MonteCarlo };

/// Everything needed to turn a storage delay into an observed g.
struct Scenario {
    EnsembleParams ensemble{};
    BeamGeometry geometry{};
    ZeemanConfig zeeman{};
    DetectionModel detection{};
    double pencil_length = kDefaultPencilLength; // m
    bool gravity = false;
    Engine engine = Engine::Analytic;
};

/// Closed-form retrieval efficiency: motional x loss x gradient dephasing.
double analytic_efficiency(const Scenario& scenario, double delay);

/// Retrieval efficiency at each delay from the scenario's engine. The Monte
/// Carlo engine draws one ensemble from `seed` and reuses it for all delays.
std::vector<double> retrieval_efficiencies(const Scenario& scenario, std::span<const double> delays,
                                           std::uint64_t seed, const Execution& exec = {});

/// Counts and g with error bars at every delay. Point i draws its counts
/// from an engine derived from (seed, i). A point whose counts leave a
/// channel empty is marked missing.
DecayCurve synthesize_curve(const Scenario& scenario, std::span<const double> delays, std::int64_t trials_per_point,
                            std::uint64_t seed, const Execution& exec = {});

// -- CSV: delay_us,g,sigma_g ------------------------------------------------

class CsvError : public std::runtime_error {
public:
    CsvError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

void write_curve_csv(std::ostream& os, const DecayCurve& curve);
DecayCurve read_curve_csv(std::istream& is);

/// Six significant digits, "nan" for non-finite values.
std::string format_sig6(double value);

} // namespace swmem
