#pragma once

//! \file weighted_residual.hpp
//! \brief Two-stage weighted-residual estimation of λ and q.
//!
//! Observed kernel samples K(t_j) are paired with model values K_j(t) from the
//! spline segments. Stage 1 fixes (λ₀, q₀), builds the weights
//!
//!     w̃_j = 1 / (1 + |r_j / r_*|^m),  r_j = K(t_j) - λ₀ K_j(t),
//!
//! normalised by the terminal residual r_* = K(t_*) - λ₀ K(t_*) of the model,
//! and picks m by the smallest δ = Σ (w̃_j r_j)². Stage 2 evaluates λ̃ with
//! the γ-weights w̃_j = √γ / |r_j| and solves ε^q - η q = 0 for each strain
//! observation.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hkid/error.hpp"
#include "hkid/material.hpp"
#include "hkid/samples.hpp"
#include "hkid/spline.hpp"

namespace hkid {

struct WeightConfig {
  double lambda0 = 1.0;
  double q0 = 1.0;
  int m = 2;
  double gamma = 1e-6;
};

inline void validate(const WeightConfig& cfg, const char* where = "weighted_residual::validate") {
  if (!(cfg.lambda0 > 0.0) || !(cfg.q0 > 0.0) || !std::isfinite(cfg.lambda0) || !std::isfinite(cfg.q0)) {
    throw DomainError(where, "lambda0 and q0 must be positive");
  }
  if (cfg.m < 2) {
    throw DomainError(where, "moment order m must be >= 2, got " + std::to_string(cfg.m));
  }
  if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma)) {
    throw DomainError(where, "gamma must be positive");
  }
}

/// Where each segment is evaluated inside its interval.
enum class EvalPoint {
  midpoint,  ///< (t_j + t_{j+1}) / 2; the last segment uses its knot
  knot,      ///< t_j
};

/// Observed and model kernel values lined up per sample.
struct KernelPairing {
  std::vector<double> times;     ///< knots t_j
  std::vector<double> eval_at;   ///< where K_j was evaluated
  std::vector<double> observed;  ///< K(t_j)
  std::vector<double> model;     ///< K_j(t)
  double observed_terminal = 0.0;  ///< K(t_*)
  double model_terminal = 0.0;     ///< spline value at t_*

  std::size_t size() const noexcept { return observed.size(); }
};

inline KernelPairing pair_kernels(const KernelSamples& samples, std::span<const SplineSegment> segments,
                                  EvalPoint mode = EvalPoint::midpoint) {
  constexpr const char* where = "weighted_residual::pair_kernels";
  validate(samples, where);
  if (segments.size() != samples.size()) {
    throw DomainError(where, "sample count " + std::to_string(samples.size()) + " differs from segment count " +
                                 std::to_string(segments.size()));
  }
  const std::size_t n = samples.size();
  KernelPairing p;
  p.times = samples.times;
  p.observed = samples.values;
  p.eval_at.resize(n);
  p.model.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double tj = samples.times[j];
    if (std::abs(segments[j].t - tj) > 1e-12 * std::max(1.0, std::abs(tj))) {
      throw DomainError(where, "segment knot does not match sample time at j=" + std::to_string(j + 1));
    }
    const bool at_knot = mode == EvalPoint::knot || j + 1 == n;
    p.eval_at[j] = at_knot ? segments[j].t : 0.5 * (segments[j].t + segments[j + 1].t);
    p.model[j] = segments[j](p.eval_at[j]);
  }
  p.observed_terminal = samples.values.back();
  p.model_terminal = eval_kernel_spline(segments, segments.back().t);
  return p;
}

/// Hand-built pairing (tests, external designs).
inline KernelPairing make_pairing(std::vector<double> observed, std::vector<double> model, double observed_terminal,
                                  double model_terminal) {
  if (observed.size() != model.size() || observed.empty()) {
    throw DomainError("weighted_residual::make_pairing", "observed and model must be nonempty and equal length");
  }
  KernelPairing p;
  p.times.resize(observed.size());
  for (std::size_t j = 0; j < p.times.size(); ++j) {
    p.times[j] = static_cast<double>(j);
  }
  p.eval_at = p.times;
  p.observed = std::move(observed);
  p.model = std::move(model);
  p.observed_terminal = observed_terminal;
  p.model_terminal = model_terminal;
  return p;
}

inline std::vector<double> residuals(const KernelPairing& p, double lambda) {
  std::vector<double> r(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    r[j] = p.observed[j] - lambda * p.model[j];
  }
  return r;
}

inline std::vector<double> stage1_weights(const KernelPairing& p, const WeightConfig& cfg) {
  constexpr const char* where = "weighted_residual::stage1_weights";
  validate(cfg, where);
  const double terminal = p.observed_terminal - cfg.lambda0 * p.model_terminal;
  if (terminal == 0.0) {
    throw DegenerateError(where, "terminal residual K(t*) - lambda0 K(t*) vanishes; perturb lambda0");
  }
  std::vector<double> w(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double r = p.observed[j] - cfg.lambda0 * p.model[j];
    w[j] = r == 0.0 ? 1.0 : 1.0 / (1.0 + std::pow(std::abs(r / terminal), cfg.m));
  }
  return w;
}

/// Σ_j (w_j r_j)² with r_j evaluated at λ.
inline double weighted_sum_of_squares(const KernelPairing& p, std::span<const double> weights, double lambda) {
  double sum = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double term = weights[j] * (p.observed[j] - lambda * p.model[j]);
    sum += term * term;
  }
  return sum;
}

inline double residual_delta(const KernelPairing& p, const WeightConfig& cfg) {
  return weighted_sum_of_squares(p, stage1_weights(p, cfg), cfg.lambda0);
}

/// Moment order in `m_range` with the smallest δ; ties go to the smaller m.
inline int select_moment_order(const KernelPairing& p, WeightConfig cfg, std::span<const int> m_range) {
  constexpr const char* where = "weighted_residual::select_moment_order";
  if (m_range.empty()) {
    throw DomainError(where, "moment-order range is empty");
  }
  std::vector<int> orders(m_range.begin(), m_range.end());
  std::sort(orders.begin(), orders.end());
  for (const int m : orders) {
    if (m < 2 || m > 12) {
      throw DomainError(where, "moment order " + std::to_string(m) + " outside {2,...,12}");
    }
  }
  int best = orders.front();
  double best_delta = INFINITY;
  for (const int m : orders) {
    cfg.m = m;
    const double delta = residual_delta(p, cfg);
    if (delta < best_delta) {
      best_delta = delta;
      best = m;
    }
  }
  return best;
}

/// Coarse scan over candidate starting values. The segment model carries no q
/// dependence, so δ only varies with λ₀ and q₀ is passed through untouched.
/// Candidates whose terminal residual vanishes are skipped.
inline WeightConfig scan_initial_values(const KernelPairing& p, WeightConfig cfg, std::span<const double> lambda_grid) {
  constexpr const char* where = "weighted_residual::scan_initial_values";
  double best_delta = INFINITY;
  WeightConfig best = cfg;
  for (const double l0 : lambda_grid) {
    cfg.lambda0 = l0;
    try {
      const double d = residual_delta(p, cfg);
      if (d < best_delta) {
        best_delta = d;
        best = cfg;
      }
    } catch (const DegenerateError&) {
    }
  }
  if (!std::isfinite(best_delta)) {
    throw DegenerateError(where, "no admissible lambda0 in the scan grid");
  }
  return best;
}

/// Minimiser of λ ↦ Σ (w_j [K(t_j) - λ K_j(t)])² for fixed weights.
inline double lambda_closed_form(const KernelPairing& p, std::span<const double> weights) {
  constexpr const char* where = "weighted_residual::lambda_closed_form";
  if (weights.size() != p.size()) {
    throw DomainError(where, "weight count differs from sample count");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double w2 = weights[j] * weights[j];
    num += w2 * p.observed[j] * p.model[j];
    den += w2 * p.model[j] * p.model[j];
  }
  if (den == 0.0) {
    throw DegenerateError(where, "all weighted model values vanish");
  }
  return num / den;
}

/// γ-weights √γ / |K(t_j) - λ₀ K_j(t)|; throws PoleError on an exact fit.
inline std::vector<double> gamma_weights(const KernelPairing& p, const WeightConfig& cfg) {
  constexpr const char* where = "weighted_residual::lambda_gamma_form";
  validate(cfg, where);
  std::vector<double> w(p.size());
  const double root_gamma = std::sqrt(cfg.gamma);
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double r = p.observed[j] - cfg.lambda0 * p.model[j];
    if (r == 0.0) {
      throw PoleError(where, j + 1);
    }
    w[j] = root_gamma / std::abs(r);
  }
  return w;
}

inline double lambda_gamma_form(const KernelPairing& p, const WeightConfig& cfg) {
  return lambda_closed_form(p, gamma_weights(p, cfg));
}

/// η_j = (σ/H) (1 + λ̃ ∫₀^{t_j} K_j).
inline double eta(const SplineSegment& segment, double sigma, const PowerLaw& pl, double lambda_hat) {
  constexpr const char* where = "weighted_residual::eta";
  validate(pl, where);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError(where, "stress must be positive");
  }
  const double value = sigma / pl.H * (1.0 + lambda_hat * integrate_segment_from_zero(segment));
  if (!(value > 0.0)) {
    throw NumericalError(where, "infeasible eta=" + std::to_string(value) + " at knot t=" + std::to_string(segment.t) +
                                    "; the q equation needs eta > 0");
  }
  return value;
}

struct RootCertificate {
  double q = 0.0;
  double residual = 0.0;  ///< ε^q - η q at the root
  double bracket_lo = 0.0;  ///< f ≥ 0 here
  double bracket_hi = 0.0;  ///< f ≤ 0 here
  int iterations = 0;
};

inline constexpr double kRootLowerBound = 1e-6;
inline constexpr double kRootResidualTol = 1e-10;

/// Positive root of ε^q - η q = 0 on (10⁻⁶, q̄): bisection with safeguarded
/// Newton steps, iterated until the step stalls so the root is resolved to a
/// few ulps rather than just to the residual bound.
///
/// For ε > 1 with η = ε ln ε the curve only touches zero at q = 1/ln ε and no
/// sign-changing bracket exists. That tangent root is returned when it meets
/// the residual bound and lies below q̄; its bracket collapses to the point.
inline RootCertificate solve_q(double eps, double eta_value, double q_bar) {
  constexpr const char* where = "weighted_residual::solve_q";
  if (!(eps > 0.0) || !std::isfinite(eps) || !(eta_value > 0.0) || !std::isfinite(eta_value)) {
    throw DomainError(where, "need eps > 0 and eta > 0");
  }
  if (!(q_bar > kRootLowerBound) || !std::isfinite(q_bar)) {
    throw DomainError(where, "upper bracket must exceed " + std::to_string(kRootLowerBound));
  }
  const double log_eps = std::log(eps);
  const auto f = [&](double q) { return std::pow(eps, q) - eta_value * q; };
  const auto within_bound = [&](double q, double fq) {
    return std::abs(fq) <= kRootResidualTol * std::max(1.0, eta_value * q);
  };

  double lo = kRootLowerBound;
  double hi = q_bar;
  if (!(f(hi) < 0.0)) {
    if (log_eps > 0.0) {
      const double q_min = std::log(eta_value / log_eps) / log_eps;
      if (q_min > lo && q_min < hi && within_bound(q_min, f(q_min))) {
        return {q_min, f(q_min), q_min, q_min, 0};
      }
    }
    throw NoRootError(where, "no root bracket: eps^q_bar >= eta*q_bar at q_bar=" + std::to_string(q_bar));
  }
  const double f_lo = f(lo);
  if (f_lo < 0.0) {
    throw NoRootError(where, "f(q) = eps^q - eta*q is negative on all of (0, q_bar]");
  }
  if (f_lo == 0.0) {
    return {lo, 0.0, lo, lo, 0};
  }

  RootCertificate best{0.0, INFINITY, lo, hi, 0};
  double x = 0.5 * (lo + hi);
  for (int iter = 1; iter <= 300; ++iter) {
    const double fx = f(x);
    if (fx >= 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (std::abs(fx) <= std::abs(best.residual)) {
      best.q = x;
      best.residual = fx;
    }
    best.iterations = iter;
    if (fx == 0.0 || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      break;
    }
    const double slope = std::pow(eps, x) * log_eps - eta_value;
    double next = slope != 0.0 ? x - fx / slope : lo - 1.0;
    if (!(next > lo && next < hi) || next == x) {
      next = 0.5 * (lo + hi);
    }
    if (next == lo || next == hi) {
      break;
    }
    x = next;
  }
  best.bracket_lo = lo;
  best.bracket_hi = hi;
  if (!within_bound(best.q, best.residual)) {
    throw NumericalError(where, "root iteration stalled before reaching the residual bound");
  }
  return best;
}

/// Smallest q̄ = 10⁻⁶·2^k (k ≤ 60) with ε^q̄ < η q̄, if any.
inline std::optional<double> find_upper_bracket(double eps, double eta_value) {
  double q = kRootLowerBound;
  for (int k = 0; k <= 60; ++k, q *= 2.0) {
    if (q > kRootLowerBound && std::pow(eps, q) < eta_value * q) {
      return q;
    }
  }
  return std::nullopt;
}

/// One strain level reached at knot `knot` under stress `sigma`.
struct StrainObservation {
  double strain = 0.0;
  std::size_t knot = 0;  ///< zero-based segment index
  double sigma = 0.0;
};

/// Every strain level paired with every knot under one stress.
inline std::vector<StrainObservation> observations_from_levels(std::span<const double> strain_levels,
                                                               std::size_t knots, double sigma) {
  std::vector<StrainObservation> out;
  out.reserve(strain_levels.size() * knots);
  for (std::size_t j = 0; j < knots; ++j) {
    for (const double eps : strain_levels) {
      out.push_back({eps, j, sigma});
    }
  }
  return out;
}

/// Creep record at constant stress, keeping the rows that fall on knot times.
inline std::vector<StrainObservation> observations_from_creep(std::span<const double> times,
                                                              std::span<const double> strains,
                                                              std::span<const double> knot_times, double sigma) {
  std::vector<StrainObservation> out;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const auto it = std::lower_bound(knot_times.begin(), knot_times.end(), t - 1e-12 * std::max(1.0, std::abs(t)));
    if (it != knot_times.end() && std::abs(*it - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
      out.push_back({strains[k], static_cast<std::size_t>(it - knot_times.begin()), sigma});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.knot < b.knot; });
  return out;
}

/// Isochrone matrix entries: strain ε_i reached at t_j under stress φ_t(ε_i, t_j).
inline std::vector<StrainObservation> observations_from_isochrones(const IsochroneDataset& data,
                                                                   std::span<const double> knot_times) {
  validate(data, "weighted_residual::observations_from_isochrones");
  std::vector<StrainObservation> out;
  for (std::size_t j = 0; j < data.instants(); ++j) {
    const double t = data.times[j];
    const auto it = std::lower_bound(knot_times.begin(), knot_times.end(), t - 1e-12 * std::max(1.0, std::abs(t)));
    if (it == knot_times.end() || std::abs(*it - t) > 1e-12 * std::max(1.0, std::abs(t))) {
      continue;
    }
    for (std::size_t i = 0; i < data.levels(); ++i) {
      out.push_back({data.strain_levels[i], static_cast<std::size_t>(it - knot_times.begin()), data.phi_t[i][j]});
    }
  }
  return out;
}

struct IdentifyConfig {
  WeightConfig weights;
  std::vector<int> m_range{2, 3, 4, 5, 6, 7, 8};
  EvalPoint eval = EvalPoint::midpoint;
};

struct PairEstimate {
  StrainObservation obs;
  double eta = 0.0;
  std::optional<double> q;
  std::string failure;  ///< empty on success
};

struct IdentificationResult {
  double lambda_hat = 0.0;
  std::optional<double> q_hat;  ///< median over successful pairs
  double delta = 0.0;
  int m_selected = 2;
  KernelPairing pairing;
  std::vector<double> weights;        ///< stage-1 w̃_j at m_selected
  std::vector<double> contributions;  ///< (w̃_j r_j)²
  std::vector<PairEstimate> pairs;
};

inline double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Full two-stage estimate. Pairs are processed in (knot, input) order; a
/// failed root solve is recorded and left out of the median.
inline IdentificationResult identify(const KernelSamples& samples, std::span<const SplineSegment> segments,
                                     std::span<const StrainObservation> observations, const IdentifyConfig& cfg,
                                     const PowerLaw& pl0) {
  constexpr const char* where = "weighted_residual::identify";
  validate(cfg.weights, where);
  validate(pl0, where);

  IdentificationResult res;
  res.pairing = pair_kernels(samples, segments, cfg.eval);

  WeightConfig stage1 = cfg.weights;
  stage1.m = select_moment_order(res.pairing, stage1, cfg.m_range);
  res.m_selected = stage1.m;
  res.weights = stage1_weights(res.pairing, stage1);
  res.contributions.resize(res.pairing.size());
  for (std::size_t j = 0; j < res.pairing.size(); ++j) {
    const double term = res.weights[j] * (res.pairing.observed[j] - stage1.lambda0 * res.pairing.model[j]);
    res.contributions[j] = term * term;
    res.delta += res.contributions[j];
  }

  res.lambda_hat = lambda_gamma_form(res.pairing, cfg.weights);

  std::vector<StrainObservation> ordered(observations.begin(), observations.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.knot < b.knot; });
  std::vector<double> roots;
  for (const StrainObservation& obs : ordered) {
    PairEstimate est{obs, 0.0, std::nullopt, {}};
    try {
      if (obs.knot >= segments.size()) {
        throw DomainError(where, "observation knot index out of range");
      }
      est.eta = eta(segments[obs.knot], obs.sigma, pl0, res.lambda_hat);
      const std::optional<double> q_bar = find_upper_bracket(obs.strain, est.eta);
      if (!q_bar) {
        throw NoRootError(where, "no q_bar with eps^q_bar < eta*q_bar up to 1e12");
      }
      est.q = solve_q(obs.strain, est.eta, *q_bar).q;
      roots.push_back(*est.q);
    } catch (const Error& e) {
      est.failure = e.what();
    }
    res.pairs.push_back(std::move(est));
  }
  if (!roots.empty()) {
    res.q_hat = median(std::move(roots));
  }
  return res;
}

}  // namespace hkid
