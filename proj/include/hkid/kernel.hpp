#pragma once

//! \file kernel.hpp
//! \brief Rabotnov fractional-exponential creep and relaxation kernels.
//!
//! The creep kernel with parameters (α, β) is
//!
//!     K(s) = s^(-α) Σ_{n≥0} (-β)^n s^((1-α)n) / Γ((1-α)(1+n)),
//!
//! and the relaxation kernel R is the same series with β replaced by λ+β.
//! Every quantity here is built from one family of truncated series,
//!
//!     A_k(t) = Σ_{n≥0} (-β)^n t^((1-α)(n+1)+k-1) / Γ((1-α)(n+1)+k),
//!
//! where k = 0 is the kernel itself and k = 1, 2 are its first and second
//! iterated integrals from 0. Time is dimensionless throughout.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "hkid/error.hpp"
#include "hkid/gamma.hpp"

namespace hkid {

struct KernelParams {
  double alpha = 0.5;   ///< singularity exponent, 0 < α < 1
  double beta = 0.0;    ///< rate parameter, β ≥ 0
  double lambda = 1.0;  ///< hereditary intensity, λ ≥ 0
};

struct SeriesControl {
  int max_terms = 500;
  double abs_tol = 1e-12;
};

/// Largest-term / |sum| ratio above which a result is flagged as cancellation-damaged.
inline constexpr double kPrecisionLossRatio = 1e12;

struct SeriesResult {
  double value = 0.0;
  int terms = 0;             ///< number of series terms summed
  double last_term = 0.0;    ///< magnitude of the last term added
  double max_term = 0.0;     ///< largest term magnitude seen
  bool precision_loss = false;
};

inline void validate(const KernelParams& p, const char* where = "kernel_math::validate") {
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) {
    throw DomainError(where, "alpha must lie in (0,1), got " + std::to_string(p.alpha));
  }
  if (!(p.beta >= 0.0) || !std::isfinite(p.beta)) {
    throw DomainError(where, "beta must be finite and nonnegative, got " + std::to_string(p.beta));
  }
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) {
    throw DomainError(where, "lambda must be finite and nonnegative, got " + std::to_string(p.lambda));
  }
}

inline void validate(const SeriesControl& c, const char* where = "kernel_math::validate") {
  if (c.max_terms < 1 || !(c.abs_tol >= 0.0)) {
    throw DomainError(where, "series control needs max_terms >= 1 and abs_tol >= 0");
  }
}

/// Truncated evaluation of the iterated-integral series A_k(t) for fixed (α, rate, k).
///
/// Holds a table of log Γ values so repeated evaluation (product integration)
/// does not recompute them. Instances are immutable after construction.
class RabotnovSeries {
 public:
  RabotnovSeries(double alpha, double rate, int order, SeriesControl ctl = {},
                 std::string where = "kernel_math::series")
      : a_(1.0 - alpha), rate_(rate), order_(order), ctl_(ctl), where_(std::move(where)) {
    validate(KernelParams{alpha, rate, 0.0}, where_.c_str());
    validate(ctl_, where_.c_str());
    if (order_ < 0) {
      throw DomainError(where_, "integration order must be nonnegative");
    }
    const int cached = std::min(ctl_.max_terms, kCachedTerms);
    log_gamma_.reserve(static_cast<std::size_t>(cached));
    for (int n = 0; n < cached; ++n) {
      log_gamma_.push_back(log_gamma(denominator_argument(n)));
    }
  }

  SeriesResult operator()(double t) const {
    if (!std::isfinite(t)) {
      throw DomainError(where_, "time must be finite");
    }
    if (order_ == 0) {
      if (!(t > 0.0)) {
        throw DomainError(where_, "kernel is singular at s = 0; need s > 0, got " + std::to_string(t));
      }
    } else if (t < 0.0) {
      throw DomainError(where_, "time must be nonnegative, got " + std::to_string(t));
    } else if (t == 0.0) {
      return {};
    }

    const double log_t = std::log(t);
    const double log_prefactor = (a_ + order_ - 1.0) * log_t;

    SeriesResult out;
    if (rate_ == 0.0) {
      const double term = std::exp(log_prefactor - log_gamma_[0]);
      out.value = term;
      out.terms = 1;
      out.last_term = term;
      out.max_term = term;
      return out;
    }

    const double log_x = std::log(rate_) + a_ * log_t;
    double sum = 0.0;
    double compensation = 0.0;
    double previous = 0.0;
    bool converged = false;
    int n = 0;
    for (; n < ctl_.max_terms; ++n) {
      const double magnitude = std::exp(n * log_x + log_prefactor - lg(n));
      const double term = (n % 2 == 0) ? magnitude : -magnitude;
      // Neumaier summation
      const double next = sum + term;
      if (std::abs(sum) >= std::abs(term)) {
        compensation += (sum - next) + term;
      } else {
        compensation += (term - next) + sum;
      }
      sum = next;
      out.max_term = std::max(out.max_term, magnitude);
      out.last_term = magnitude;
      // log-magnitudes are concave in n, so a decreasing term stays decreasing
      if (n > 0 && magnitude <= ctl_.abs_tol && magnitude <= previous) {
        converged = true;
        ++n;
        break;
      }
      previous = magnitude;
    }
    if (!converged) {
      throw ConvergenceError(where_, out.last_term);
    }
    out.value = sum + compensation;
    out.terms = n;
    out.precision_loss = out.max_term > kPrecisionLossRatio * std::abs(out.value);
    return out;
  }

  int order() const noexcept { return order_; }

 private:
  static constexpr int kCachedTerms = 128;

  double denominator_argument(int n) const { return a_ * (n + 1) + order_; }

  double lg(int n) const {
    return n < static_cast<int>(log_gamma_.size()) ? log_gamma_[static_cast<std::size_t>(n)]
                                                    : log_gamma(denominator_argument(n));
  }

  double a_;
  double rate_;
  int order_;
  SeriesControl ctl_;
  std::string where_;
  std::vector<double> log_gamma_;
};

/// K(s) for s > 0.
inline SeriesResult creep_kernel(const KernelParams& p, double s, const SeriesControl& ctl = {}) {
  validate(p, "kernel_math::creep_kernel");
  return RabotnovSeries(p.alpha, p.beta, 0, ctl, "kernel_math::creep_kernel")(s);
}

/// R(s) for s > 0: the creep series with β replaced by λ+β.
inline SeriesResult relaxation_kernel(const KernelParams& p, double s, const SeriesControl& ctl = {}) {
  validate(p, "kernel_math::relaxation_kernel");
  return RabotnovSeries(p.alpha, p.beta + p.lambda, 0, ctl, "kernel_math::relaxation_kernel")(s);
}

/// ∫₀ᵗ K(τ) dτ, summed term by term; zero at t = 0.
inline SeriesResult creep_kernel_integral(const KernelParams& p, double t, const SeriesControl& ctl = {}) {
  validate(p, "kernel_math::creep_kernel_integral");
  return RabotnovSeries(p.alpha, p.beta, 1, ctl, "kernel_math::creep_kernel_integral")(t);
}

}  // namespace hkid
