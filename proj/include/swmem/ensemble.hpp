#pragma once

// Particle Monte Carlo for a stored spin wave: thermal sampling, ballistic
// propagation, and the overlap of the evolved collective state with the one
// that was written.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>

#include <Eigen/Core>

#include "swmem/constants.hpp"
#include "swmem/core_physics.hpp"
#include "swmem/error.hpp"
#include "swmem/parallel.hpp"

namespace swmem {

inline constexpr double kDefaultPencilLength = 3.0e-3; // m

/// Atoms that share the stored excitation. Row j holds atom j. The pencil
/// axis (write beam) is z; x and y are transverse.
template <typename Scalar>
struct BasicAtomSample {
    using Points = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

    Points positions;
    Points velocities;

    std::size_t count() const { return static_cast<std::size_t>(positions.rows()); }
};

using AtomSample = BasicAtomSample<double>;

namespace detail {

enum Stream : std::uint64_t { kSampleStream = 0x5a3e };

template <typename Scalar>
std::complex<Scalar> mean_phasor(const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& phases)
{
    return {phases.array().cos().sum(), phases.array().sin().sum()};
}

} // namespace detail

/// Draws velocities from the isotropic Maxwell-Boltzmann distribution at the
/// ensemble temperature, transverse positions from the detection-mode
/// intensity profile exp(-2 rho^2 / r0^2), and axial positions uniformly over
/// the pencil. Chunk c uses its own engine derived from (seed, c), so the
/// sample does not depend on the thread count.
template <typename Scalar = double>
BasicAtomSample<Scalar> sample_ensemble(const EnsembleParams& params, double pencil_length, std::uint64_t seed,
                                        const Execution& exec = {})
{
    if (params.atom_count == 0)
        throw DomainError("atom count must be at least 1");
    params.validate();
    if (!(pencil_length > 0.0))
        throw DomainError("pencil length must be positive");

    const auto n = static_cast<Eigen::Index>(params.atom_count);
    const Scalar v_s = static_cast<Scalar>(one_d_speed(params));
    const Scalar sigma_transverse = static_cast<Scalar>(params.cloud_radius_r0 / 2.0);
    const Scalar half_length = static_cast<Scalar>(pencil_length / 2.0);

    BasicAtomSample<Scalar> sample;
    sample.positions.resize(n, 3);
    sample.velocities.resize(n, 3);

    for_each_chunk(chunk_count(params.atom_count), exec, [&](std::size_t c) {
        auto engine = derived_engine(seed, detail::kSampleStream, c);
        std::normal_distribution<Scalar> velocity(Scalar(0), v_s);
        std::normal_distribution<Scalar> transverse(Scalar(0), sigma_transverse);
        std::uniform_real_distribution<Scalar> axial(-half_length, half_length);
        const auto begin = static_cast<Eigen::Index>(c * kChunkSize);
        const auto end = std::min<Eigen::Index>(begin + static_cast<Eigen::Index>(kChunkSize), n);
        for (Eigen::Index j = begin; j < end; ++j) {
            sample.positions(j, 0) = transverse(engine);
            sample.positions(j, 1) = transverse(engine);
            sample.positions(j, 2) = axial(engine);
            for (int k = 0; k < 3; ++k)
                sample.velocities(j, k) = velocity(engine);
        }
    });
    return sample;
}

/// |(1/N) sum_j exp(i dk . v_j t)|^2
template <typename Scalar>
Scalar motional_retrieval_efficiency(const BasicAtomSample<Scalar>& sample, const SpinWaveVector& sw, double delay,
                                     const Execution& exec = {})
{
    if (!(delay >= 0.0))
        throw DomainError("delay must be non-negative");
    const Eigen::Matrix<Scalar, 3, 1> dk_t = (sw.vector() * delay).template cast<Scalar>();
    const auto sum = chunked_reduce(
        sample.count(), exec, std::complex<Scalar>{},
        [&](std::size_t begin, std::size_t len) {
            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> phases =
                sample.velocities.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(len)) * dk_t;
            return detail::mean_phasor<Scalar>(phases);
        },
        std::plus<>{});
    return std::norm(sum / static_cast<Scalar>(sample.count()));
}

struct SurvivalOptions {
    bool gravity = false; ///< free fall along -x during the delay
};

/// Spin-wave weight left inside the detection mode after ballistic flight,
/// weighted by the mode intensity exp(-2 rho^2 / r0^2) and normalised to its
/// value at zero delay.
template <typename Scalar>
Scalar mode_overlap_survival(const BasicAtomSample<Scalar>& sample, double waist_r0, double delay,
                             const SurvivalOptions& options = {}, const Execution& exec = {})
{
    if (!(waist_r0 > 0.0))
        throw DomainError("mode waist must be positive");
    if (!(delay >= 0.0))
        throw DomainError("delay must be non-negative");

    const Scalar inv_w2 = static_cast<Scalar>(2.0 / (waist_r0 * waist_r0));
    const Scalar t = static_cast<Scalar>(delay);
    const Scalar drop = options.gravity ? static_cast<Scalar>(0.5 * constants::kStandardGravity * delay * delay)
                                        : Scalar(0);

    using Pair = Eigen::Matrix<Scalar, 2, 1>;
    const Pair sums = chunked_reduce(
        sample.count(), exec, Pair(Pair::Zero()),
        [&](std::size_t begin, std::size_t len) {
            const auto b = static_cast<Eigen::Index>(begin);
            const auto l = static_cast<Eigen::Index>(len);
            const auto r0 = sample.positions.middleRows(b, l).template leftCols<2>();
            auto r1 = (r0 + t * sample.velocities.middleRows(b, l).template leftCols<2>()).eval();
            r1.col(0).array() -= drop;
            Pair p;
            p(0) = (-inv_w2 * r0.rowwise().squaredNorm().array()).exp().sum();
            p(1) = (-inv_w2 * r1.rowwise().squaredNorm().array()).exp().sum();
            return p;
        },
        [](const Pair& a, const Pair& b) -> Pair { return a + b; });
    // At short delays the first-order sampling noise can outweigh the
    // second-order loss and push the ratio just above 1.
    return std::min(sums(1) / sums(0), Scalar(1));
}

// -- Zeeman -----------------------------------------------------------------

struct HyperfineState {
    int f = 1;
    int m_f = 0;

    friend bool operator==(const HyperfineState&, const HyperfineState&) = default;
};

struct StatePair {
    HyperfineState g{1, 0}; ///< initial ground state
    HyperfineState s{2, 0}; ///< storage state

    friend bool operator==(const StatePair&, const StatePair&) = default;
};

/// The three first-order field-insensitive pairs of the 87Rb ground manifold.
inline const StatePair kClockPairs[3] = {
    {{1, 1}, {2, -1}},
    {{1, 0}, {2, 0}},
    {{1, -1}, {2, 1}},
};

/// Linear gradient (T/m, along `gradient_axis`) that dephases the
/// non-clock pair |1,-1> / |2,-1> with a 1/e time of 10 us at 100 uK over a
/// 3 mm pencil. Reproduced by calibrate_gradient in the test suite.
inline constexpr double kCalibratedGradient = 1.2465e-3;

struct ZeemanConfig {
    StatePair pair{};
    double bias_field = 3.2 * constants::kGauss;   // T
    double field_gradient = kCalibratedGradient;   // T/m
    Eigen::Vector3d gradient_axis = Eigen::Vector3d::UnitZ();
    std::map<int, double> lande_g{{1, -0.5}, {2, 0.5}};

    void validate() const;
};

bool is_clock_pair(const StatePair& pair);

/// (m_s g_s - m_g g_g) mu_B / hbar, in rad/s/T.
double differential_zeeman_coefficient(const ZeemanConfig& config);

/// Differential first-order shift at the bias field, rad/s.
double first_order_zeeman_shift(const ZeemanConfig& config);

/// |(1/N) sum_j exp(i phi_j)|^2 where phi_j integrates the differential
/// Zeeman frequency along atom j's straight path through bias + gradient.
template <typename Scalar>
Scalar magnetic_dephasing_factor(const BasicAtomSample<Scalar>& sample, const ZeemanConfig& config, double delay,
                                 const Execution& exec = {})
{
    if (!(delay >= 0.0))
        throw DomainError("delay must be non-negative");
    const double kappa = differential_zeeman_coefficient(config);
    if (kappa == 0.0)
        return Scalar(1);

    const Eigen::Vector3d axis = config.gradient_axis.normalized();
    const Eigen::Matrix<Scalar, 3, 1> pos_coeff = (kappa * config.field_gradient * delay * axis).cast<Scalar>();
    const Eigen::Matrix<Scalar, 3, 1> vel_coeff = (0.5 * kappa * config.field_gradient * delay * delay * axis).cast<Scalar>();
    const Scalar bias_phase = static_cast<Scalar>(kappa * config.bias_field * delay);

    const auto sum = chunked_reduce(
        sample.count(), exec, std::complex<Scalar>{},
        [&](std::size_t begin, std::size_t len) {
            const auto b = static_cast<Eigen::Index>(begin);
            const auto l = static_cast<Eigen::Index>(len);
            Eigen::Matrix<Scalar, Eigen::Dynamic, 1> phases =
                sample.positions.middleRows(b, l) * pos_coeff + sample.velocities.middleRows(b, l) * vel_coeff;
            phases.array() += bias_phase;
            return detail::mean_phasor<Scalar>(phases);
        },
        std::plus<>{});
    return std::norm(sum / static_cast<Scalar>(sample.count()));
}

struct CombinedOptions {
    double waist_r0 = 100.0e-6;
    SurvivalOptions survival{};
};

/// Motional x magnetic x mode-survival factors on one trajectory realisation.
template <typename Scalar>
Scalar combined_efficiency(const BasicAtomSample<Scalar>& sample, const SpinWaveVector& sw, const ZeemanConfig& config,
                           const CombinedOptions& options, double delay, const Execution& exec = {})
{
    return motional_retrieval_efficiency(sample, sw, delay, exec) *
           magnetic_dephasing_factor(sample, config, delay, exec) *
           mode_overlap_survival(sample, options.waist_r0, delay, options.survival, exec);
}

/// First time at which a decreasing efficiency curve falls to 1/e, by
/// bisection on [0, t_hi]. Throws DomainError if f(t_hi) > 1/e.
double one_over_e_time(const std::function<double(double)>& efficiency, double t_hi, double rel_tol = 1e-10);

/// Gradient (T/m) for which the simulated magnetic factor of `config.pair`
/// reaches 1/e at `target_lifetime`. Bisection over gradients up to the first
/// node of the pencil sinc.
double calibrate_gradient(const AtomSample& sample, const ZeemanConfig& config, double target_lifetime,
                          double pencil_length, const Execution& exec = {});

} // namespace swmem
