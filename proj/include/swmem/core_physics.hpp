#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "swmem/constants.hpp"

namespace swmem {

struct SpeciesConstants {
    double mass = constants::kRb87Mass;                            // kg
    double scattering_length = constants::kRb87ScatteringLength;   // m
    double hyperfine_splitting = constants::kRb87HyperfineSplitting; // Hz

    void validate() const;
};

/// Macroscopic description of the cold cloud. `cloud_radius_r0` is the
/// detection-mode waist (1/e^2 intensity radius) that bounds the
/// interaction region.
struct EnsembleParams {
    double temperature = 100.0e-6; // K
    double density = 1.0e16;       // m^-3
    double cloud_radius_r0 = 100.0e-6;
    std::size_t atom_count = 100000;
    SpeciesConstants species{};

    void validate() const;
};

enum class GeometryMode {
    SmallAngle, ///< dk = k_W sin(theta)
    Exact,      ///< |k_W - k_S| with the Stokes photon one hyperfine quantum red of the write
};

struct BeamGeometry {
    double write_wavelength = constants::kDefaultWriteWavelength; // m
    double detection_angle_theta = 0.0;                           // rad
    GeometryMode mode = GeometryMode::Exact;

    void validate() const;
};

struct SpinWaveVector {
    double magnitude_delta_k = 0.0; // rad/m
    double wavelength_lambda = 0.0; // m
    Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();

    /// Delta-k as a 3-vector in the frame where the write beam runs along +z
    /// and the Stokes mode is tilted towards +x.
    Eigen::Vector3d vector() const { return magnitude_delta_k * direction; }
};

/// sqrt(k_B T / m)
double one_d_speed(const EnsembleParams& params);
double one_d_speed(double temperature, const SpeciesConstants& species);

/// sqrt(2 k_B T / m)
double radial_speed(const EnsembleParams& params);
double radial_speed(double temperature, const SpeciesConstants& species);

/// Temperature that produces a given one-dimensional rms speed.
double temperature_from_speed(double one_d_speed, const SpeciesConstants& species);

SpinWaveVector spin_wave_vector(const BeamGeometry& geometry, const SpeciesConstants& species);

/// s-wave collision rate n v_s 8 pi a^2.
double collision_rate(const EnsembleParams& params);

} // namespace swmem
