#pragma once

namespace mimocal {

inline constexpr const char* kVersion = "0.1.0";

// Euler-Mascheroni constant, 18 significant digits (double rounds it exactly).
inline constexpr double kEulerGamma = 0.577215664901532861;

}  // namespace mimocal
