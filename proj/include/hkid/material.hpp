#pragma once

//! \file material.hpp
//! \brief Nonlinear hereditary constitutive model.
//!
//!     φ₀(ε(t)) = σ(t) + λ ∫₀ᵗ K(t-τ) σ(τ) dτ          (creep form)
//!     σ(t)     = φ₀(ε(t)) - λ ∫₀ᵗ R(t-τ) φ₀(ε(τ)) dτ   (relaxation form)
//!
//! with the power law φ₀(ε) = (H/q) ε^q. Constant-load responses use the
//! term-wise kernel integrals directly; general histories go through product
//! integration with the loading piecewise linear on the grid.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hkid/error.hpp"
#include "hkid/kernel.hpp"
#include "hkid/samples.hpp"

namespace hkid {

struct PowerLaw {
  double H = 1.0;  ///< stress-like modulus
  double q = 1.0;  ///< dimensionless exponent
};

inline void validate(const PowerLaw& pl, const char* where = "material_model::validate") {
  if (!(pl.H > 0.0) || !std::isfinite(pl.H) || !(pl.q > 0.0) || !std::isfinite(pl.q)) {
    throw DomainError(where, "power law needs H > 0 and q > 0");
  }
}

enum class HistoryKind {
  creep,       ///< strain response at constant stress
  relaxation,  ///< stress response at constant strain
};

struct ResponseHistory {
  std::vector<double> times;
  std::vector<double> values;
  HistoryKind kind = HistoryKind::creep;
  double driver = 0.0;  ///< the held constant: σ for creep, ε for relaxation
};

/// φ₀(ε) = (H/q) ε^q, ε ≥ 0.
inline double phi0(const PowerLaw& pl, double eps) {
  validate(pl, "material_model::phi0");
  if (!(eps >= 0.0)) {
    throw DomainError("material_model::phi0", "strain must be nonnegative, got " + std::to_string(eps));
  }
  return pl.H / pl.q * std::pow(eps, pl.q);
}

inline double phi0_inverse(const PowerLaw& pl, double phi) {
  validate(pl, "material_model::phi0_inverse");
  if (!(phi >= 0.0)) {
    throw DomainError("material_model::phi0_inverse", "argument must be nonnegative, got " + std::to_string(phi));
  }
  return std::pow(pl.q * phi / pl.H, 1.0 / pl.q);
}

/// Grid of `points` equally spaced instants on [0, t_end].
inline std::vector<double> uniform_grid(double t_end, std::size_t points) {
  if (points < 2 || !(t_end > 0.0) || !std::isfinite(t_end)) {
    throw DomainError("material_model::uniform_grid", "need t_end > 0 and at least 2 points");
  }
  std::vector<double> grid(points);
  const double step = t_end / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = step * static_cast<double>(k);
  }
  grid.back() = t_end;
  return grid;
}

inline void validate_grid(std::span<const double> times, const char* where) {
  if (times.size() < 2) {
    throw InsufficientDataError(where, "time grid needs at least 2 instants");
  }
  if (times.front() != 0.0) {
    throw DomainError(where, "time grid must start at 0");
  }
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!std::isfinite(times[k]) || !(times[k] > times[k - 1])) {
      throw DomainError(where, "time grid must be finite and strictly increasing (index " + std::to_string(k) + ")");
    }
  }
}

/// Strain under constant stress σ: ε(t) = φ₀⁻¹(σ [1 + λ ∫₀ᵗ K]).
inline ResponseHistory simulate_creep(const KernelParams& kp, const PowerLaw& pl, double sigma,
                                      std::span<const double> grid, const SeriesControl& ctl = {}) {
  constexpr const char* where = "material_model::simulate_creep";
  validate(kp, where);
  validate(pl, where);
  validate_grid(grid, where);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError(where, "stress must be positive");
  }
  const RabotnovSeries integral(kp.alpha, kp.beta, 1, ctl, where);
  ResponseHistory out{{grid.begin(), grid.end()}, {}, HistoryKind::creep, sigma};
  out.values.reserve(grid.size());
  for (const double t : grid) {
    out.values.push_back(phi0_inverse(pl, sigma * (1.0 + kp.lambda * integral(t).value)));
  }
  return out;
}

/// Stress under constant strain ε: σ(t) = φ₀(ε) [1 - λ ∫₀ᵗ R].
inline ResponseHistory simulate_relaxation(const KernelParams& kp, const PowerLaw& pl, double eps,
                                           std::span<const double> grid, const SeriesControl& ctl = {}) {
  constexpr const char* where = "material_model::simulate_relaxation";
  validate(kp, where);
  validate(pl, where);
  validate_grid(grid, where);
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw DomainError(where, "strain must be positive");
  }
  const RabotnovSeries integral(kp.alpha, kp.beta + kp.lambda, 1, ctl, where);
  const double instantaneous = phi0(pl, eps);
  ResponseHistory out{{grid.begin(), grid.end()}, {}, HistoryKind::relaxation, eps};
  out.values.reserve(grid.size());
  for (const double t : grid) {
    out.values.push_back(instantaneous * (1.0 - kp.lambda * integral(t).value));
  }
  return out;
}

/// Second-order finite-difference derivative on a nonuniform grid:
/// three-point central formula inside, three-point one-sided at both ends.
inline std::vector<double> differentiate(std::span<const double> x, std::span<const double> f) {
  constexpr const char* where = "material_model::differentiate";
  if (x.size() != f.size()) {
    throw DomainError(where, "abscissae and values differ in length");
  }
  if (x.size() < 3) {
    throw InsufficientDataError(where, "need at least 3 samples, got " + std::to_string(x.size()));
  }
  const std::size_t n = x.size();
  std::vector<double> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = x[i] - x[i - 1];
    const double h2 = x[i + 1] - x[i];
    d[i] = -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * (h1 + h2)) * f[i + 1];
  }
  {
    const double h1 = x[1] - x[0];
    const double h2 = x[2] - x[1];
    d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * f[0] + (h1 + h2) / (h1 * h2) * f[1] - h1 / (h2 * (h1 + h2)) * f[2];
  }
  {
    const double h1 = x[n - 2] - x[n - 3];
    const double h2 = x[n - 1] - x[n - 2];
    d[n - 1] = h2 / (h1 * (h1 + h2)) * f[n - 3] - (h1 + h2) / (h1 * h2) * f[n - 2] +
               (h1 + 2.0 * h2) / (h2 * (h1 + h2)) * f[n - 1];
  }
  return d;
}

/// R(t_j) = -(1/λ) q/(H ε^q) dσ/dt from a constant-strain relaxation record.
inline KernelSamples relaxation_kernel_from_history(const ResponseHistory& hist, const PowerLaw& pl, double lambda) {
  constexpr const char* where = "material_model::relaxation_kernel_from_history";
  validate(pl, where);
  if (hist.kind != HistoryKind::relaxation) {
    throw DomainError(where, "history must be a constant-strain relaxation record");
  }
  if (lambda == 0.0 || !std::isfinite(lambda)) {
    throw DomainError(where, "lambda must be nonzero and finite");
  }
  if (!(hist.driver > 0.0)) {
    throw DomainError(where, "held strain must be positive");
  }
  if (hist.times.size() < 3) {
    throw InsufficientDataError(where, "need at least 3 samples, got " + std::to_string(hist.times.size()));
  }
  const std::vector<double> rate = differentiate(hist.times, hist.values);
  const double scale = -(1.0 / lambda) * pl.q / (pl.H * std::pow(hist.driver, pl.q));
  KernelSamples out{hist.times, {}};
  out.values.reserve(rate.size());
  for (const double r : rate) {
    out.values.push_back(scale * r);
  }
  return out;
}

/// ∫₀^{t_k} kernel(t_k - τ) f(τ) dτ at every grid point, f piecewise linear.
///
/// The kernel is the (α, rate) Rabotnov series. On each subinterval the weakly
/// singular factor is integrated exactly through the first and second iterated
/// kernel integrals, so the only discretisation error is the interpolation of f.
inline std::vector<double> hereditary_convolution(double alpha, double rate, std::span<const double> times,
                                                  std::span<const double> f, const SeriesControl& ctl = {}) {
  constexpr const char* where = "material_model::hereditary_convolution";
  validate_grid(times, where);
  if (f.size() != times.size()) {
    throw DomainError(where, "history and grid differ in length");
  }
  const RabotnovSeries first(alpha, rate, 1, ctl, where);
  const RabotnovSeries second(alpha, rate, 2, ctl, where);

  const std::size_t n = times.size();
  std::vector<double> out(n, 0.0);
  // first/second iterated integrals at lag u, cached per lag index when the grid is uniform
  const double step = times[1] - times[0];
  bool uniform = true;
  for (std::size_t k = 1; k < n && uniform; ++k) {
    uniform = std::abs((times[k] - times[k - 1]) - step) <= 1e-12 * step;
  }
  std::vector<double> a1_cache;
  std::vector<double> a2_cache;
  if (uniform) {
    a1_cache.resize(n);
    a2_cache.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
      const double u = step * static_cast<double>(m);
      a1_cache[m] = first(u).value;
      a2_cache[m] = second(u).value;
    }
  }

  for (std::size_t k = 1; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double a1_near, a1_far, a2_near, a2_far;  // near: lag t_k - t_{i+1}; far: lag t_k - t_i
      if (uniform) {
        a1_near = a1_cache[k - i - 1];
        a1_far = a1_cache[k - i];
        a2_near = a2_cache[k - i - 1];
        a2_far = a2_cache[k - i];
      } else {
        const double u_near = times[k] - times[i + 1];
        const double u_far = times[k] - times[i];
        a1_near = first(u_near).value;
        a1_far = first(u_far).value;
        a2_near = second(u_near).value;
        a2_far = second(u_far).value;
      }
      const double h = times[i + 1] - times[i];
      const double d1 = a1_far - a1_near;
      const double slope_part = (a2_far - a2_near) - h * a1_near;  // ∫ K(u) (u_far - u) du
      acc += f[i] * d1 + (f[i + 1] - f[i]) / h * slope_part;
    }
    out[k] = acc;
  }
  return out;
}

/// Strain history produced by a stress program through the creep form.
inline std::vector<double> strain_from_stress(const KernelParams& kp, const PowerLaw& pl, std::span<const double> times,
                                              std::span<const double> stress, const SeriesControl& ctl = {}) {
  constexpr const char* where = "material_model::strain_from_stress";
  validate(kp, where);
  validate(pl, where);
  const std::vector<double> conv = hereditary_convolution(kp.alpha, kp.beta, times, stress, ctl);
  std::vector<double> strain(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    strain[k] = phi0_inverse(pl, stress[k] + kp.lambda * conv[k]);
  }
  return strain;
}

/// Stress history produced by a strain program through the relaxation form.
inline std::vector<double> stress_from_strain(const KernelParams& kp, const PowerLaw& pl, std::span<const double> times,
                                              std::span<const double> strain, const SeriesControl& ctl = {}) {
  constexpr const char* where = "material_model::stress_from_strain";
  validate(kp, where);
  validate(pl, where);
  std::vector<double> drive(strain.size());
  for (std::size_t k = 0; k < strain.size(); ++k) {
    drive[k] = phi0(pl, strain[k]);
  }
  const std::vector<double> conv = hereditary_convolution(kp.alpha, kp.beta + kp.lambda, times, drive, ctl);
  std::vector<double> stress(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    stress[k] = drive[k] - kp.lambda * conv[k];
  }
  return stress;
}

/// Max |σ_rec - σ| after pushing a stress program through the creep form and
/// back through the relaxation form. Vanishes as the grid is refined because R
/// is the resolvent of K at intensity λ.
inline double resolvent_mismatch(const KernelParams& kp, const PowerLaw& pl, std::span<const double> times,
                                 std::span<const double> stress, const SeriesControl& ctl = {}) {
  constexpr const char* where = "material_model::resolvent_mismatch";
  if (times.size() < 8) {
    throw InsufficientDataError(where, "grid too coarse: need at least 8 points, got " + std::to_string(times.size()));
  }
  const std::vector<double> strain = strain_from_stress(kp, pl, times, stress, ctl);
  const std::vector<double> rebuilt = stress_from_strain(kp, pl, times, strain, ctl);
  double worst = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    worst = std::max(worst, std::abs(rebuilt[k] - stress[k]));
  }
  return worst;
}

}  // namespace hkid
