#pragma once

#include <numbers>

// Program units: c = 1, hbar = 1, epsilon_0 = 1. Lengths are measured in
// units of the stack design wavelength lambda_0 (default 1), so the design
// angular frequency is omega_0 = 2*pi. All internal frequencies are raw
// angular frequencies in these units; I/O layers convert to omega_0 units.
namespace cavity {

inline constexpr double speed_of_light = 1.0;
inline constexpr double hbar = 1.0;
inline constexpr double eps0 = 1.0;
inline constexpr double pi = std::numbers::pi;

}  // namespace cavity
