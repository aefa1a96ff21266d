#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the series, spline or estimator code it is used to check.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace hkid::oracle {

using big = boost::multiprecision::cpp_bin_float_50;

/// s^(-α) Σ_{n<terms} (-β)^n s^((1-α)n) / Γ((1-α)(1+n)) in 50-digit arithmetic.
inline double rabotnov_series_hp(double alpha, double beta, double s, int terms = 200) {
  const big a = big(1) - big(alpha);
  const big S = big(s);
  const big x = -big(beta) * boost::multiprecision::pow(S, a);
  big sum = 0;
  big power = 1;
  for (int n = 0; n < terms; ++n) {
    sum += power / boost::math::tgamma(a * (n + 1));
    power *= x;
  }
  return static_cast<double>(sum * boost::multiprecision::pow(S, -big(alpha)));
}

/// Σ_{n<terms} (-β)^n t^((1-α)(1+n)) / Γ((1-α)(1+n)+1) in 50-digit arithmetic.
inline double rabotnov_integral_hp(double alpha, double beta, double t, int terms = 200) {
  const big a = big(1) - big(alpha);
  const big T = big(t);
  const big x = -big(beta) * boost::multiprecision::pow(T, a);
  big sum = 0;
  big power = 1;
  for (int n = 0; n < terms; ++n) {
    sum += power / boost::math::tgamma(a * (n + 1) + 1);
    power *= x;
  }
  return static_cast<double>(sum * boost::multiprecision::pow(T, a));
}

/// ∫₀ᵗ f with tanh-sinh quadrature (tolerates the integrable endpoint singularity).
inline double integrate(const std::function<double(double)>& f, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> rule;
  return rule.integrate(f, a, b, 1e-13);
}

/// Plain bisection for ε^q - η q on [lo, hi] with f(lo) > 0 > f(hi).
inline double bisect_q(double eps, double eta, double lo, double hi, int iterations = 200) {
  const auto f = [&](double q) { return std::pow(eps, q) - eta * q; };
  for (int k = 0; k < iterations; ++k) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Bisection for ε^q - η q in 50-digit arithmetic. Needed for tangent roots,
/// where f ≈ c (q - q*)² vanishes in double precision about 1e-8 from q*.
inline double bisect_q_hp(double eps, double eta, double lo, double hi, int iterations = 200) {
  const big e = big(eps);
  const big h = big(eta);
  const auto f = [&](const big& q) { return boost::multiprecision::pow(e, q) - h * q; };
  big a = lo;
  big b = hi;
  for (int k = 0; k < iterations; ++k) {
    const big mid = (a + b) / 2;
    (f(mid) > 0 ? a : b) = mid;
  }
  return static_cast<double>((a + b) / 2);
}

/// Deterministic generator for the randomized property suites.
inline std::mt19937_64 rng(unsigned long long seed = 20261015ULL) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

}  // namespace hkid::oracle
