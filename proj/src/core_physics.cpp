#include "swmem/core_physics.hpp"

#include <cmath>
#include <numbers>

#include "swmem/error.hpp"

namespace swmem {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

} // namespace

void SpeciesConstants::validate() const
{
    if (!positive_finite(mass) || !positive_finite(scattering_length) || !positive_finite(hyperfine_splitting))
        throw DomainError("species constants must be finite and strictly positive");
}

void EnsembleParams::validate() const
{
    if (!positive_finite(temperature))
        throw DomainError("temperature must be positive");
    if (!std::isfinite(density) || density < 0.0)
        throw DomainError("density must be non-negative");
    if (!positive_finite(cloud_radius_r0))
        throw DomainError("cloud radius r0 must be positive");
    if (atom_count < 1)
        throw DomainError("atom count must be at least 1");
    species.validate();
}

void BeamGeometry::validate() const
{
    if (!positive_finite(write_wavelength))
        throw DomainError("write wavelength must be positive");
    if (!std::isfinite(detection_angle_theta) || detection_angle_theta < 0.0 ||
        detection_angle_theta >= std::numbers::pi / 2)
        throw DomainError("detection angle must lie in [0, pi/2)");
}

double one_d_speed(double temperature, const SpeciesConstants& species)
{
    if (!positive_finite(temperature))
        throw DomainError("temperature must be positive");
    species.validate();
    return std::sqrt(constants::kBoltzmann * temperature / species.mass);
}

double one_d_speed(const EnsembleParams& params) { return one_d_speed(params.temperature, params.species); }

double radial_speed(double temperature, const SpeciesConstants& species)
{
    return std::numbers::sqrt2 * one_d_speed(temperature, species);
}

double radial_speed(const EnsembleParams& params) { return radial_speed(params.temperature, params.species); }

double temperature_from_speed(double speed, const SpeciesConstants& species)
{
    if (!positive_finite(speed))
        throw DomainError("speed must be positive");
    return species.mass * speed * speed / constants::kBoltzmann;
}

SpinWaveVector spin_wave_vector(const BeamGeometry& geometry, const SpeciesConstants& species)
{
    geometry.validate();
    species.validate();

    const double theta = geometry.detection_angle_theta;
    const double k_write = 2.0 * std::numbers::pi / geometry.write_wavelength;

    SpinWaveVector sw;
    switch (geometry.mode) {
    case GeometryMode::SmallAngle:
        if (theta == 0.0)
            throw DegenerateGeometryError("small-angle spin-wave vector vanishes at theta = 0; use exact geometry");
        sw.magnitude_delta_k = k_write * std::sin(theta);
        sw.direction = Eigen::Vector3d(-1.0, 0.0, 0.0);
        break;
    case GeometryMode::Exact: {
        const double k_hf = 2.0 * std::numbers::pi * species.hyperfine_splitting / constants::kSpeedOfLight;
        const double k_stokes = k_write - k_hf;
        const Eigen::Vector3d kw(0.0, 0.0, k_write);
        const Eigen::Vector3d ks(k_stokes * std::sin(theta), 0.0, k_stokes * std::cos(theta));
        // The difference loses ~9 digits to cancellation near theta = 0, so
        // the magnitude comes from the law of cosines in a stable form.
        const double half = std::sin(theta / 2.0);
        sw.magnitude_delta_k = std::sqrt(k_hf * k_hf + 4.0 * k_write * k_stokes * half * half);
        const Eigen::Vector3d diff = kw - ks;
        sw.direction = diff.norm() > 0.0 ? Eigen::Vector3d(diff.normalized()) : Eigen::Vector3d::UnitZ();
        break;
    }
    }
    if (!(sw.magnitude_delta_k > 0.0))
        throw DegenerateGeometryError("spin-wave vector vanishes");
    sw.wavelength_lambda = 2.0 * std::numbers::pi / sw.magnitude_delta_k;
    return sw;
}

double collision_rate(const EnsembleParams& params)
{
    params.validate();
    const double a = params.species.scattering_length;
    const double cross_section = 8.0 * std::numbers::pi * a * a;
    return params.density * one_d_speed(params) * cross_section;
}

} // namespace swmem
