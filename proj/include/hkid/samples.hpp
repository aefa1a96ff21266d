#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hkid/error.hpp"

namespace hkid {

/// Ordered kernel samples {(t_j, K(t_j))}; the terminal time t_* is the last entry.
struct KernelSamples {
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const noexcept { return times.size(); }
  double t_star() const { return times.back(); }

  friend bool operator==(const KernelSamples&, const KernelSamples&) = default;
};

/// Throws DomainError when times are not strictly increasing or a value is not finite.
inline void validate(const KernelSamples& s, const char* where = "spline_approx::validate") {
  if (s.times.size() != s.values.size()) {
    throw DomainError(where, "times and values differ in length");
  }
  if (s.times.empty()) {
    throw InsufficientDataError(where, "no samples");
  }
  for (std::size_t j = 0; j < s.times.size(); ++j) {
    if (!std::isfinite(s.times[j]) || !std::isfinite(s.values[j])) {
      throw DomainError(where, "non-finite entry at sample j=" + std::to_string(j + 1));
    }
    if (j > 0 && !(s.times[j] > s.times[j - 1])) {
      throw DomainError(where, "times not strictly increasing at sample j=" + std::to_string(j + 1));
    }
  }
}

}  // namespace hkid
