#pragma once

// Closed-form decay laws and photon-correlation relations. Everything here is
// header-only and templated on the scalar type so the same expressions can be
// evaluated in double, long double, or an autodiff scalar.

#include <cmath>
#include <numbers>
#include <variant>

#include "swmem/core_physics.hpp"
#include "swmem/error.hpp"

namespace swmem {

/// sqrt(e - 1): the loss-limited lifetime in units of r0 / v_r.
template <typename Scalar = double>
inline const Scalar kLossLifetimeFactor = std::sqrt(std::numbers::e_v<Scalar> - Scalar(1));

/// Motional dephasing exp(-(t/tau_D)^2).
template <typename Scalar>
Scalar gamma_motional(Scalar delay, Scalar tau_d)
{
    if (!(tau_d > Scalar(0)))
        throw DomainError("motional lifetime must be positive");
    const Scalar x = delay / tau_d;
    return std::exp(-x * x);
}

/// tau_D = 1 / (dk v_s)
inline double motional_lifetime(const SpinWaveVector& sw, double v_s)
{
    if (!(sw.magnitude_delta_k > 0.0) || !(v_s > 0.0))
        throw DomainError("motional lifetime needs dk > 0 and v_s > 0");
    return 1.0 / (sw.magnitude_delta_k * v_s);
}

/// Transverse escape from the detection mode, r0^2 / (r0^2 + v_r^2 t^2).
template <typename Scalar>
Scalar gamma_loss(Scalar delay, Scalar r0, Scalar v_r)
{
    if (!(r0 > Scalar(0)))
        throw DomainError("mode radius r0 must be positive");
    const Scalar x = v_r * delay / r0;
    return Scalar(1) / (Scalar(1) + x * x);
}

template <typename Scalar>
Scalar loss_lifetime(Scalar r0, Scalar v_r)
{
    if (!(r0 > Scalar(0)) || !(v_r > Scalar(0)))
        throw DomainError("loss lifetime needs r0 > 0 and v_r > 0");
    return kLossLifetimeFactor<Scalar> * r0 / v_r;
}

/// Loss rate A = (v_r / r0)^2 of the Lorentzian law 1 / (1 + A t^2).
template <typename Scalar>
Scalar loss_rate(Scalar r0, Scalar v_r)
{
    if (!(r0 > Scalar(0)))
        throw DomainError("mode radius r0 must be positive");
    const Scalar x = v_r / r0;
    return x * x;
}

/// Dephasing of a non-clock pair by a linear field gradient across a uniform
/// pencil of length L, for atoms with 1D rms speed v_s moving ballistically:
/// sinc^2(kappa G L t / 2) * exp(-(kappa G v_s t^2 / 2)^2), where kappa is
/// the differential Zeeman coefficient in rad/s/T.
template <typename Scalar>
Scalar gamma_gradient(Scalar delay, Scalar kappa_gradient, Scalar pencil_length, Scalar v_s)
{
    const Scalar x = kappa_gradient * pencil_length * delay / Scalar(2);
    const Scalar sinc = x == Scalar(0) ? Scalar(1) : std::sin(x) / x;
    const Scalar y = kappa_gradient * v_s * delay * delay / Scalar(2);
    return sinc * sinc * std::exp(-y * y);
}

// -- Decay models -----------------------------------------------------------

struct GaussianMotional {
    double tau_d; // s
};

struct LorentzianLoss {
    double a; // s^-2
};

struct Combined {
    double tau_d; // s
    double a;     // s^-2
};

using DecayModel = std::variant<GaussianMotional, LorentzianLoss, Combined>;

enum class ModelKind { GaussianMotional, LorentzianLoss, Combined };

inline ModelKind kind_of(const DecayModel& m) { return static_cast<ModelKind>(m.index()); }

void validate(const DecayModel& model);

/// Retrieval efficiency gamma(t) of a decay model.
double evaluate(const DecayModel& model, double delay);

// -- Detection and correlations ---------------------------------------------

struct DetectionModel {
    double chi = 0.005;        ///< excitation probability per trial
    double eta_s = 0.6;        ///< Stokes channel detection efficiency
    double eta_as = 0.2;       ///< anti-Stokes channel detection efficiency
    double background_b = 0.3; ///< anti-Stokes background, in units of eta_as

    void validate() const;
};

/// 1 + gamma / (chi gamma + B)
double cross_correlation(double gamma, const DetectionModel& det);

/// 1 + C gamma, the linearised form fitted to data.
inline double cross_correlation_linear(double gamma, double c) { return 1.0 + c * gamma; }

struct DetectionRates {
    double p_s;
    double p_as;
    double p_s_as;

    double g() const { return p_s_as / (p_s * p_as); }
};

DetectionRates rates_from_model(double gamma, const DetectionModel& det);

/// Heralded single-photon autocorrelation, 4 / (g - 1).
double heralded_autocorrelation(double g);

/// CHSH parameter 2 sqrt(2) (g - 1) / (g + 1).
double bell_parameter(double g);

/// True iff g_s_as^2 > g_s_s g_as_as.
bool cauchy_schwarz_violated(double g_s_as, double g_s_s, double g_as_as);

/// g_s_as > 2, the Cauchy-Schwarz bound for thermal auto-correlations.
inline bool nonclassical_threshold(double g) { return g > 2.0; }

} // namespace swmem
