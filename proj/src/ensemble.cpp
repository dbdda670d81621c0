#include "swmem/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace swmem {

void ZeemanConfig::validate() const
{
    for (const HyperfineState& st : {pair.g, pair.s}) {
        if (!lande_g.contains(st.f))
            throw DomainError("no Lande g-factor for F = " + std::to_string(st.f));
        if (std::abs(st.m_f) > st.f)
            throw DomainError("|m_F| exceeds F");
    }
    if (!std::isfinite(bias_field) || !std::isfinite(field_gradient))
        throw DomainError("magnetic field must be finite");
    if (!(gradient_axis.norm() > 0.0))
        throw DomainError("gradient axis must be non-zero");
}

bool is_clock_pair(const StatePair& pair)
{
    return std::ranges::find(kClockPairs, pair) != std::end(kClockPairs);
}

double differential_zeeman_coefficient(const ZeemanConfig& config)
{
    config.validate();
    const double gs = config.lande_g.at(config.pair.s.f);
    const double gg = config.lande_g.at(config.pair.g.f);
    const double dm = config.pair.s.m_f * gs - config.pair.g.m_f * gg;
    return dm * constants::kBohrMagneton / constants::kHbar;
}

double first_order_zeeman_shift(const ZeemanConfig& config)
{
    return differential_zeeman_coefficient(config) * config.bias_field;
}

double one_over_e_time(const std::function<double(double)>& efficiency, double t_hi, double rel_tol)
{
    const double target = std::exp(-1.0);
    if (!(t_hi > 0.0) || efficiency(t_hi) > target)
        throw DomainError("1/e crossing not bracketed");
    double lo = 0.0;
    double hi = t_hi;
    while (hi - lo > rel_tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (efficiency(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double calibrate_gradient(const AtomSample& sample, const ZeemanConfig& config, double target_lifetime,
                          double pencil_length, const Execution& exec)
{
    if (!(target_lifetime > 0.0) || !(pencil_length > 0.0))
        throw DomainError("calibration needs a positive lifetime and pencil length");
    const double kappa = std::abs(differential_zeeman_coefficient(config));
    if (kappa == 0.0)
        throw DomainError("a clock pair cannot be dephased by a gradient");

    // First zero of sinc(kappa G L t / 2).
    const double g_node = 2.0 * std::numbers::pi / (kappa * pencil_length * target_lifetime);
    const double target = std::exp(-1.0);
    ZeemanConfig trial = config;
    auto factor = [&](double gradient) {
        trial.field_gradient = gradient;
        return magnetic_dephasing_factor(sample, trial, target_lifetime, exec);
    };
    if (factor(g_node) > target)
        throw DomainError("gradient calibration not bracketed");

    double lo = 0.0;
    double hi = g_node;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (factor(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace swmem
