#pragma once

// Scenario runners behind the command-line tool.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swmem/fitting.hpp"
#include "swmem/scenario_config.hpp"

namespace swmem {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

struct RunOptions {
    Execution exec{};
    double gaussian_min_angle_deg = 0.6; ///< below this (and above 0) the combined model is fitted
    std::optional<double> fixed_a;       ///< s^-2, pins A for combined fits
    bool exclude_first_point = false;
    bool gravity = false;
};

/// Gaussian for theta >= threshold, combined for 0 < theta < threshold,
/// Lorentzian in the collinear case.
ModelKind select_model(double theta_deg, double gaussian_min_angle_deg);

struct SimulationOutcome {
    DecayCurve curve;
    ModelKind model = ModelKind::GaussianMotional;
    std::optional<FitResult> fit;
    std::string fit_error; ///< non-empty when the fit failed
    std::optional<FitResult> collinear_fit; ///< reference run that supplied A
};

/// synthesize_curve followed by fit_decay with the angle-appropriate model.
/// A combined fit without a pinned A first runs the same scenario at
/// theta = 0 (delays stretched to its lifetime) and takes A from that fit.
SimulationOutcome run_simulation(const ScenarioConfig& config, const RunOptions& options);

struct SweepEntry {
    double theta_deg = 0.0;
    ScenarioConfig config;
    SimulationOutcome outcome;
};

struct SweepOutcome {
    std::vector<SweepEntry> entries; ///< input order
    std::optional<SweepEntry> collinear_reference;
    std::optional<TemperatureEstimate> temperature;
    std::string temperature_error;
};

/// Predicted 1/e time of the closed-form efficiency for a scenario.
double predicted_lifetime(const Scenario& scenario);

/// Config for one sweep angle: the base delay grid is stretched by the ratio
/// of predicted lifetimes, and the seed is derived from (base seed, index).
ScenarioConfig config_for_angle(const ScenarioConfig& base, double theta_deg, std::uint64_t index);

/// Runs every angle, then infers the temperature from the motional lifetimes.
/// If a combined fit is needed and no A is pinned, a collinear run supplies A.
SweepOutcome run_sweep(const ScenarioConfig& base, std::span<const double> thetas_deg, const RunOptions& options);

void write_sweep_csv(std::ostream& os, const SweepOutcome& sweep);
void write_temperature_report(std::ostream& os, const SweepOutcome& sweep);

/// gnuplot script plotting a curve CSV with its fitted model.
std::string gnuplot_script(const std::string& csv_path, const std::optional<FitResult>& fit);

// -- Reference-value reproduction -------------------------------------------

struct ReproduceInputs {
    double temperature_uK = 100.0;
    double theta_deg = 3.0;
    double write_wavelength_nm = 795.0;
    double waist_um = 100.0;
    double density_per_cm3 = 1.0e10;
    double bias_field_G = 3.2;
};

struct ReproduceRow {
    std::string quantity;
    std::string unit;
    double computed = 0.0;
    double reference = 0.0;
    double lo = 0.0; ///< acceptance band
    double hi = 0.0;
    bool pass = false;

    /// |computed - reference| / |reference|, or the absolute value for a zero reference.
    double deviation() const;
};

std::vector<ReproduceRow> reproduce_table(const ReproduceInputs& inputs = {});
void write_reproduce_table(std::ostream& os, const std::vector<ReproduceRow>& rows);

} // namespace swmem
