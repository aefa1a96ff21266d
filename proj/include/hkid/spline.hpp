#pragma once

//! \file spline.hpp
//! \brief Similarity means and the piecewise creep-kernel approximation.
//!
//! Segment j (valid on [t_j, t_{j+1})) is
//!
//!     K_j(t) = B_j + 2C_j (t - t_j) + 3D_j (t - t_j)²
//!
//! with B_j = K(t_j), C_1 = D_1 = 0 and, for j ≥ 2,
//!
//!     2C_j = 2 t_j ΔK_j / (h_{j-1} (2 t_j - h_{j-1})),
//!     3D_j =       ΔK_j / (h_{j-1} (2 t_j - h_{j-1})),   h_j = t_{j+1} - t_j.
//!
//! Coefficients are stored in the printed 2C / 3D form.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hkid/error.hpp"
#include "hkid/material.hpp"
#include "hkid/samples.hpp"

namespace hkid {

/// Isochronous values φ_t(ε_i, t_j): rows are strain levels, columns are times.
struct IsochroneDataset {
  std::vector<double> strain_levels;       ///< ε_i, positive, increasing
  std::vector<double> times;               ///< t_j, nonnegative, increasing
  std::vector<std::vector<double>> phi_t;  ///< phi_t[i][j]

  std::size_t levels() const noexcept { return strain_levels.size(); }
  std::size_t instants() const noexcept { return times.size(); }
};

inline void validate(const IsochroneDataset& d, const char* where = "spline_approx::validate") {
  if (d.strain_levels.empty() || d.times.size() < 2) {
    throw InsufficientDataError(where, "isochrones need at least 1 strain level and 2 times");
  }
  for (std::size_t i = 0; i < d.strain_levels.size(); ++i) {
    if (!(d.strain_levels[i] > 0.0) || !std::isfinite(d.strain_levels[i]) ||
        (i > 0 && !(d.strain_levels[i] > d.strain_levels[i - 1]))) {
      throw DomainError(where, "strain levels must be positive and increasing (level " + std::to_string(i + 1) + ")");
    }
  }
  for (std::size_t j = 0; j < d.times.size(); ++j) {
    if (!(d.times[j] >= 0.0) || !std::isfinite(d.times[j]) || (j > 0 && !(d.times[j] > d.times[j - 1]))) {
      throw DomainError(where, "times must be nonnegative and increasing (column " + std::to_string(j + 1) + ")");
    }
  }
  if (d.phi_t.size() != d.strain_levels.size()) {
    throw DomainError(where, "phi_t has " + std::to_string(d.phi_t.size()) + " rows for " +
                                 std::to_string(d.strain_levels.size()) + " strain levels");
  }
  for (std::size_t i = 0; i < d.phi_t.size(); ++i) {
    if (d.phi_t[i].size() != d.times.size()) {
      throw DomainError(where, "phi_t row " + std::to_string(i + 1) + " is ragged");
    }
    for (std::size_t j = 0; j < d.phi_t[i].size(); ++j) {
      if (!(d.phi_t[i][j] > 0.0) || !std::isfinite(d.phi_t[i][j])) {
        throw DomainError(where, "phi_t must be positive and finite at (i=" + std::to_string(i + 1) +
                                     ", j=" + std::to_string(j + 1) + ")");
      }
    }
  }
}

struct SplineSegment {
  double t = 0.0;       ///< knot t_j
  double B = 0.0;       ///< K(t_j)
  double twoC = 0.0;    ///< 2C_j
  double threeD = 0.0;  ///< 3D_j

  double C() const noexcept { return twoC / 2.0; }
  double D() const noexcept { return threeD / 3.0; }

  /// Segment polynomial at any t (no range check).
  double operator()(double time) const noexcept {
    const double dt = time - t;
    return B + twoC * dt + threeD * dt * dt;
  }

  friend bool operator==(const SplineSegment&, const SplineSegment&) = default;
};

/// Least-squares similarity factor per time column:
/// S̄_j = Σ_i φ₀(ε_i) φ_t(ε_i,t_j) / Σ_i φ_t(ε_i,t_j)².
inline std::vector<double> similarity_means(const IsochroneDataset& data, const PowerLaw& pl) {
  constexpr const char* where = "spline_approx::similarity_means";
  validate(data, where);
  validate(pl, where);
  std::vector<double> means(data.instants());
  for (std::size_t j = 0; j < data.instants(); ++j) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < data.levels(); ++i) {
      const double ph = data.phi_t[i][j];
      num += phi0(pl, data.strain_levels[i]) * ph;
      den += ph * ph;
    }
    if (den == 0.0) {
      throw DegenerateError(where, "degenerate column j=" + std::to_string(j + 1) + ": all phi_t vanish");
    }
    means[j] = num / den;
  }
  return means;
}

/// Kernel samples dS̄/dt from similarity means (times must be those of the means).
/// By the similarity relation these are λK(t_j).
inline KernelSamples similarity_rate_samples(std::span<const double> times, std::span<const double> means) {
  constexpr const char* where = "spline_approx::similarity_rate_samples";
  KernelSamples out{{times.begin(), times.end()}, {}};
  validate(KernelSamples{out.times, {means.begin(), means.end()}}, where);
  out.values = differentiate(times, means);
  return out;
}

inline std::vector<SplineSegment> fit_kernel_spline(const KernelSamples& samples) {
  constexpr const char* where = "spline_approx::fit_kernel_spline";
  validate(samples, where);
  if (samples.size() < 2) {
    throw InsufficientDataError(where, "need at least 2 samples");
  }
  const std::size_t n = samples.size();
  std::vector<SplineSegment> segs(n);
  segs[0] = {samples.times[0], samples.values[0], 0.0, 0.0};
  for (std::size_t j = 1; j < n; ++j) {
    const double tj = samples.times[j];
    const double h = tj - samples.times[j - 1];
    const double denom = h * (2.0 * tj - h);
    if (denom == 0.0) {
      throw NumericalError(where, "singular denominator at knot j=" + std::to_string(j + 1) + " (2 t_j = h_{j-1})");
    }
    const double dk = samples.values[j] - samples.values[j - 1];
    segs[j] = {tj, samples.values[j], 2.0 * tj * dk / denom, dk / denom};
  }
  return segs;
}

/// Piecewise evaluation on [t_1, t_n]; segment j covers [t_j, t_{j+1}), the last knot is closed.
inline double eval_kernel_spline(std::span<const SplineSegment> segs, double t) {
  constexpr const char* where = "spline_approx::eval_kernel_spline";
  if (segs.empty()) {
    throw InsufficientDataError(where, "no segments");
  }
  if (!(t >= segs.front().t && t <= segs.back().t)) {
    throw DomainError(where, "t=" + std::to_string(t) + " outside [" + std::to_string(segs.front().t) + ", " +
                                 std::to_string(segs.back().t) + "]");
  }
  const auto it = std::upper_bound(segs.begin(), segs.end(), t,
                                   [](double value, const SplineSegment& s) { return value < s.t; });
  return (*std::prev(it))(t);
}

/// ∫₀^{t_j} K_j(τ) dτ = B t_j - C t_j² + D t_j³ (segment polynomial carried back to 0).
inline double integrate_segment_from_zero(const SplineSegment& s) {
  if (!std::isfinite(s.t) || !std::isfinite(s.B) || !std::isfinite(s.twoC) || !std::isfinite(s.threeD)) {
    throw DomainError("spline_approx::integrate_segment_from_zero", "segment coefficients must be finite");
  }
  const double t = s.t;
  return s.B * t - s.C() * t * t + s.D() * t * t * t;
}

// ---------------------------------------------------------------------------
// Table 1 fixture

/// One printed row: knot, kernel value and the coefficient columns as printed.
struct Table1Row {
  int j;
  double t;
  double K;
  std::string_view twoC;
  std::string_view threeD;
};

inline constexpr std::array<Table1Row, 16> kTable1{{
    {1, 0, 3750, "0", "0"},
    {2, 5, 3500, "-100", "-10"},
    {3, 7, 3250, "-149", "-10.42"},
    {4, 10, 2900, "-137", "-6.86"},
    {5, 12, 2600, "-167", "-6.82"},
    {6, 15, 2250, "-130", "-4.32"},
    {7, 17, 1900, "-186", "-5.47"},
    {8, 30, 1500, "-39.3", "-0.65"},
    {9, 70, 1150, "-12.25", "-0.09"},
    {10, 80, 900, "-27", "-0.17"},
    {11, 100, 750, "-8.3", "-0.04"},
    {12, 150, 500, "-6", "-0.02"},
    {13, 250, 300, "-2.5", "-0.005"},
    {14, 350, 250, "-0.6", "-0.0008"},
    {15, 750, 150, "-0.34", "-0.0002"},
    {16, 1050, 100, "-0.2", "-0.0001"},
}};

/// Relative tolerance for the printed-versus-recomputed coefficient comparison.
inline constexpr double kTable1Tolerance = 0.02;

inline KernelSamples table1_fixture() {
  KernelSamples s;
  for (const auto& row : kTable1) {
    s.times.push_back(row.t);
    s.values.push_back(row.K);
  }
  return s;
}

/// A printed decimal and the half-unit of its last printed digit.
struct PrintedValue {
  double value = 0.0;
  double half_ulp = 0.5;
};

inline PrintedValue parse_printed(std::string_view text) {
  PrintedValue out;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out.value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ParseError("spline_approx::parse_printed", "not a decimal: " + std::string(text));
  }
  const auto dot = text.find('.');
  const int decimals = dot == std::string_view::npos ? 0 : static_cast<int>(text.size() - dot - 1);
  out.half_ulp = 0.5 * std::pow(10.0, -decimals);
  return out;
}

struct CoefficientCheck {
  double printed = 0.0;
  double computed = 0.0;
  double relative_deviation = 0.0;  ///< |computed - printed| / |computed|, 0 when both vanish
  bool within_print_rounding = true;
  /// Deviation exceeds both the relative tolerance and the printed rounding.
  bool inconsistent = false;
};

struct Table1Comparison {
  int j = 0;
  double t = 0.0;
  double K = 0.0;
  CoefficientCheck twoC;
  CoefficientCheck threeD;

  bool flagged() const noexcept { return twoC.inconsistent || threeD.inconsistent; }
};

inline CoefficientCheck check_coefficient(std::string_view printed_text, double computed, double tolerance) {
  const PrintedValue printed = parse_printed(printed_text);
  CoefficientCheck c;
  c.printed = printed.value;
  c.computed = computed;
  const double gap = std::abs(computed - printed.value);
  c.relative_deviation = computed == 0.0 ? (gap == 0.0 ? 0.0 : INFINITY) : gap / std::abs(computed);
  c.within_print_rounding = gap <= printed.half_ulp;
  c.inconsistent = c.relative_deviation > tolerance && !c.within_print_rounding;
  return c;
}

/// Refit (t_j, K(t_j)) pairs and compare against the printed coefficient
/// columns row by row. The samples must have the 16 printed rows' shape.
inline std::vector<Table1Comparison> compare_table1(const KernelSamples& samples,
                                                    double tolerance = kTable1Tolerance) {
  if (samples.size() != kTable1.size()) {
    throw DomainError("spline_approx::compare_table1",
                      "expected " + std::to_string(kTable1.size()) + " samples, got " + std::to_string(samples.size()));
  }
  const std::vector<SplineSegment> segs = fit_kernel_spline(samples);
  std::vector<Table1Comparison> rows;
  rows.reserve(kTable1.size());
  for (std::size_t k = 0; k < kTable1.size(); ++k) {
    const Table1Row& row = kTable1[k];
    rows.push_back({row.j, samples.times[k], samples.values[k], check_coefficient(row.twoC, segs[k].twoC, tolerance),
                    check_coefficient(row.threeD, segs[k].threeD, tolerance)});
  }
  return rows;
}

inline std::vector<Table1Comparison> compare_table1(double tolerance = kTable1Tolerance) {
  return compare_table1(table1_fixture(), tolerance);
}

}  // namespace hkid
