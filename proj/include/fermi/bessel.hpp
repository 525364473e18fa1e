#pragma once

#include <array>

namespace fermi {

/// J_0(x) .. J_4(x) evaluated together; |x| <= 1e4.
///
/// Power series for |x| <= 8, normalized downward (Miller) recurrence beyond.
std::array<double, 5> bessel_j_sequence(double x);

}  // namespace fermi
