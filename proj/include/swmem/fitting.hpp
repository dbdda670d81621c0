#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "swmem/analytic.hpp"
#include "swmem/core_physics.hpp"
#include "swmem/photon_stats.hpp"

namespace swmem {

struct ParamEstimate {
    double value = 0.0;
    double sigma = 0.0;
    bool fixed = false;
};

/// Weighted least-squares fit of g(t) = 1 + C gamma(t).
struct FitResult {
    ModelKind model = ModelKind::GaussianMotional;
    ParamEstimate c;
    std::optional<ParamEstimate> tau_d; // s
    std::optional<ParamEstimate> a;     // s^-2
    Eigen::Matrix2d tau_a_covariance = Eigen::Matrix2d::Zero();
    double lifetime = 0.0;       // s, where gamma falls to 1/e
    double lifetime_sigma = 0.0; // s
    double chi2_reduced = 0.0;
    std::size_t points_used = 0;
    int iterations = 0;
    bool converged = false;

    DecayModel decay_model() const;
};

/// The optimizer ran out of iterations; carries the last accepted state.
class FitFailure : public std::runtime_error {
public:
    FitFailure(const std::string& what, FitResult best) : std::runtime_error(what), best_(std::move(best)) {}

    const FitResult& best_so_far() const noexcept { return best_; }

private:
    FitResult best_;
};

/// The curvature matrix at the optimum is singular.
class DegenerateFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FitOptions {
    std::optional<double> fixed_a; ///< pins A (s^-2) of the Combined model
    bool exclude_first_point = false;
    int max_iterations = 200;
    double step_tolerance = 1e-9;
};

FitResult fit_decay(const DecayCurve& curve, ModelKind kind, const FitOptions& options = {});

/// Time at which the fitted gamma falls to 1/e and its standard error.
std::pair<double, double> lifetime_from_fit(const FitResult& result);

struct AngleLifetime {
    double theta = 0.0; // rad
    double tau_d = 0.0; // s
    double sigma = 0.0; // s
};

struct TemperatureEstimate {
    double temperature = 0.0; // K
    double sigma = 0.0;       // K
    double v_s = 0.0;         // m/s
    double v_s_sigma = 0.0;   // m/s
    std::size_t points_used = 0;
};

/// Weighted fit of tau_D = 1 / (dk(theta) v_s) over the points with theta > 0.
TemperatureEstimate infer_temperature(std::span<const AngleLifetime> points, const BeamGeometry& geometry,
                                      const SpeciesConstants& species = {});

// -- Serialisation ----------------------------------------------------------

std::string model_name(ModelKind kind);
std::optional<ModelKind> parse_model_name(const std::string& name);

/// Flat key=value report, lab units (us, s^-2).
void write_fit_report(std::ostream& os, const FitResult& result);

std::string fit_csv_header();
/// One CSV row; `label` fills the first column (e.g. the detection angle).
std::string fit_csv_row(const std::string& label, const FitResult& result);

} // namespace swmem
