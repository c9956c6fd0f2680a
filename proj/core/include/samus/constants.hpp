#pragma once

#include <numbers>

namespace samus {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Earth defaults, km and s.
inline constexpr double kMuEarth = 398600.4418;
inline constexpr double kJ2Earth = 1.08263e-3;
inline constexpr double kRadiusEarth = 6378.137;

inline constexpr double kArcsec = kPi / (180.0 * 3600.0);
inline constexpr double kDeg = kPi / 180.0;

}  // namespace samus
