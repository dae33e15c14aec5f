#pragma once

// Regression constants measured on the pinned calibration corpus and frozen
// with a safety margin. They are not the (unspecified) constants of the
// underlying estimates; see tools/calibrate.cpp for how they were produced.

namespace vortexldp::frozen {

inline constexpr double C_K = 0.167113;
inline constexpr double C_0 = 0.07428;
inline constexpr double C_1 = 0.0637153;
inline constexpr double C_2 = 0.0267505;
inline constexpr double C_N = 1.32365;
inline constexpr double C_energy = 0.0329905;

}  // namespace vortexldp::frozen
