#pragma once

#include <numbers>

namespace reluctsim {

/// Vacuum permeability (H/m).
inline constexpr double kMu0 = 4.0e-7 * std::numbers::pi;

}  // namespace reluctsim
