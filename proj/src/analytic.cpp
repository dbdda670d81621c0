#include "swmem/analytic.hpp"

#include <cmath>
#include <limits>

namespace swmem {

namespace {

bool unit_interval(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

} // namespace

void validate(const DecayModel& model)
{
    std::visit(overloaded{
                   [](const GaussianMotional& m) {
                       if (!(m.tau_d > 0.0))
                           throw DomainError("tau_D must be positive");
                   },
                   [](const LorentzianLoss& m) {
                       if (!(m.a >= 0.0))
                           throw DomainError("loss rate A must be non-negative");
                   },
                   [](const Combined& m) {
                       if (!(m.tau_d > 0.0) || !(m.a >= 0.0))
                           throw DomainError("combined model needs tau_D > 0 and A >= 0");
                   },
               },
               model);
}

double evaluate(const DecayModel& model, double delay)
{
    validate(model);
    return std::visit(overloaded{
                          [&](const GaussianMotional& m) { return gamma_motional(delay, m.tau_d); },
                          [&](const LorentzianLoss& m) { return 1.0 / (1.0 + m.a * delay * delay); },
                          [&](const Combined& m) {
                              return gamma_motional(delay, m.tau_d) / (1.0 + m.a * delay * delay);
                          },
                      },
                      model);
}

void DetectionModel::validate() const
{
    if (!unit_interval(chi) || !unit_interval(eta_s) || !unit_interval(eta_as) || !unit_interval(background_b))
        throw DomainError("detection parameters must lie in [0, 1]");
}

double cross_correlation(double gamma, const DetectionModel& det)
{
    det.validate();
    if (!unit_interval(gamma))
        throw DomainError("retrieval efficiency must lie in [0, 1]");
    const double denom = det.chi * gamma + det.background_b;
    if (denom == 0.0) {
        if (gamma > 0.0)
            throw ModelOutOfRangeError("cross correlation diverges: chi gamma + B = 0");
        return 1.0;
    }
    return 1.0 + gamma / denom;
}

DetectionRates rates_from_model(double gamma, const DetectionModel& det)
{
    det.validate();
    if (!unit_interval(gamma))
        throw DomainError("retrieval efficiency must lie in [0, 1]");
    DetectionRates r{};
    r.p_s = det.chi * det.eta_s;
    r.p_as = det.chi * gamma * det.eta_as + det.background_b * det.eta_as;
    r.p_s_as = det.chi * gamma * det.eta_s * det.eta_as + r.p_s * r.p_as;
    if (!unit_interval(r.p_s) || !unit_interval(r.p_as) || !unit_interval(r.p_s_as))
        throw ModelOutOfRangeError("detection probability outside [0, 1]");
    return r;
}

double heralded_autocorrelation(double g)
{
    if (!(g > 1.0))
        throw DomainError("heralded autocorrelation needs g > 1");
    if (std::isinf(g))
        return 0.0;
    return 4.0 / (g - 1.0);
}

double bell_parameter(double g)
{
    if (!(g >= 1.0))
        throw DomainError("Bell parameter needs g >= 1");
    constexpr double s_max = 2.0 * std::numbers::sqrt2;
    const double s = std::isinf(g) ? s_max : s_max * (g - 1.0) / (g + 1.0);
    // (g - 1) / (g + 1) rounds to 1 for g beyond ~1e16; the bound is strict.
    return s < s_max ? s : std::nextafter(s_max, 0.0);
}

bool cauchy_schwarz_violated(double g_s_as, double g_s_s, double g_as_as)
{
    if (!(g_s_as >= 0.0) || !(g_s_s >= 0.0) || !(g_as_as >= 0.0))
        throw DomainError("correlation functions must be non-negative");
    return g_s_as * g_s_as > g_s_s * g_as_as;
}

} // namespace swmem
