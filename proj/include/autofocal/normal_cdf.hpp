#pragma once

#include <cmath>
#include <concepts>
#include <numbers>

namespace autofocal {

/// Standard normal CDF through the complementary error function, which keeps
/// full relative precision in both tails.
template <std::floating_point Scalar>
Scalar normal_cdf(Scalar x) {
  return Scalar(0.5) * std::erfc(-x / std::numbers::sqrt2_v<Scalar>);
}

template <std::floating_point Scalar>
Scalar normal_pdf(Scalar x) {
  return std::exp(Scalar(-0.5) * x * x) * std::numbers::inv_sqrtpi_v<Scalar> / std::numbers::sqrt2_v<Scalar>;
}

/// P(|Z| >= z) = 1 - (Phi(z) - Phi(-z)) for z >= 0.
template <std::floating_point Scalar>
Scalar normal_two_sided_tail(Scalar z) {
  return std::erfc(std::abs(z) / std::numbers::sqrt2_v<Scalar>);
}

}  // namespace autofocal
