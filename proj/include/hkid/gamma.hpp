#pragma once

#include <cmath>
#include <numbers>

#include "hkid/error.hpp"

namespace hkid {

/// Γ(z) for real z > 0.
inline double gamma(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw DomainError("kernel_math::gamma", "argument must be positive and finite, got " + std::to_string(z));
  }
  return std::tgamma(z);
}

/// log Γ(z) for z > 0. Reentrant replacement for std::lgamma on the positive axis.
inline double log_gamma(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw DomainError("kernel_math::log_gamma", "argument must be positive and finite, got " + std::to_string(z));
  }
  if (z < 100.0) {
    return std::log(std::tgamma(z));
  }
  // Stirling series; truncation error below 1e-17 for z >= 100.
  const double inv = 1.0 / z;
  const double inv2 = inv * inv;
  const double corr = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0)));
  return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * std::numbers::pi) + corr;
}

}  // namespace hkid
