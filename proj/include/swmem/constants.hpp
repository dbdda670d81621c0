#pragma once

#include <numbers>

namespace swmem::constants {

// CODATA 2018 exact / recommended values, SI units.
inline constexpr double kBoltzmann = 1.380649e-23;        // J/K
inline constexpr double kPlanck = 6.62607015e-34;         // J s
inline constexpr double kHbar = kPlanck / (2.0 * std::numbers::pi);
inline constexpr double kBohrMagneton = 9.2740100783e-24; // J/T
inline constexpr double kSpeedOfLight = 299792458.0;      // m/s
inline constexpr double kStandardGravity = 9.80665;       // m/s^2

// 87Rb
inline constexpr double kRb87Mass = 1.443160648e-25;            // kg
inline constexpr double kRb87ScatteringLength = 6.0e-9;         // m
inline constexpr double kRb87HyperfineSplitting = 6.834682611e9; // Hz

// Rb D1 line.
inline constexpr double kDefaultWriteWavelength = 795.0e-9; // m

// Lab-unit conversions.
inline constexpr double kMicro = 1.0e-6;
inline constexpr double kGauss = 1.0e-4;         // T
inline constexpr double kGaussPerCm = 1.0e-2;    // T/m
inline constexpr double kPerCubicCm = 1.0e6;     // m^-3

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

} // namespace swmem::constants
