#pragma once

// End-to-end driver behind the command-line tool: ingest, fit, estimate and
// report. Four modes share one configuration record.
//
//   identify  observed kernel samples (or isochrones) -> spline -> λ̃, q̃
//   simulate  forward model -> CSV files consumable by identify
//   table1    recompute the bundled coefficient table and flag inconsistent rows
//   validate  run the estimator invariants against an input file

#include <chrono>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hkid/error.hpp"
#include "hkid/io.hpp"
#include "hkid/kernel.hpp"
#include "hkid/material.hpp"
#include "hkid/report.hpp"
#include "hkid/samples.hpp"
#include "hkid/spline.hpp"
#include "hkid/weighted_residual.hpp"

namespace hkid {

inline constexpr const char* kToolName = "hkid";
inline constexpr const char* kToolVersion = "0.1.0";

enum class Mode { identify, simulate, table1, validate };

inline Mode parse_mode(const std::string& s) {
  if (s == "identify") return Mode::identify;
  if (s == "simulate") return Mode::simulate;
  if (s == "table1") return Mode::table1;
  if (s == "validate") return Mode::validate;
  throw ParseError("pipeline_cli::parse_mode", "unknown mode '" + s + "' (identify|simulate|table1|validate)");
}

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::identify: return "identify";
    case Mode::simulate: return "simulate";
    case Mode::table1: return "table1";
    case Mode::validate: return "validate";
  }
  return "?";
}

/// "2..8" or a comma list such as "2,3,4".
inline std::vector<int> parse_m_range(const std::string& text) {
  constexpr const char* where = "pipeline_cli::parse_m_range";
  const auto to_int = [&](std::string_view s) {
    s = io::trim(s);
    int v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
      throw ParseError(where, "not an integer: '" + std::string(s) + "'");
    }
    return v;
  };
  std::vector<int> out;
  const std::size_t dots = text.find("..");
  if (dots != std::string::npos) {
    const int lo = to_int(std::string_view(text).substr(0, dots));
    const int hi = to_int(std::string_view(text).substr(dots + 2));
    if (hi < lo) throw DomainError(where, "empty moment-order range " + text);
    for (int m = lo; m <= hi; ++m) out.push_back(m);
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    out.push_back(to_int(std::string_view(text).substr(start, comma == std::string::npos ? comma : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct RunConfig {
  Mode mode = Mode::identify;

  // inputs
  std::string input;       ///< observed kernel samples (t, K)
  std::string reference;   ///< kernel samples the spline is fitted to; defaults to `input`
  std::string isochrones;  ///< φ_t(ε_i, t_j) matrix
  std::string creep;       ///< creep record (t, strain) at σ = sigma_over_H · H

  // estimator
  WeightConfig weights;
  std::vector<int> m_range{2, 3, 4, 5, 6, 7, 8};
  bool eval_at_knots = false;
  std::optional<double> sigma_over_H;
  double H = 1.0;
  std::vector<double> strain_levels;

  // simulate
  KernelParams kernel{0.5, 0.0, 0.8};
  double q = 1.5;
  double t_end = 4.0;
  std::size_t points = 64;
  std::optional<double> strain;  ///< relaxation hold strain; defaults to the instantaneous creep strain

  std::string output;
  bool timestamp = true;
};

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Value optional_value(const std::optional<double>& v) { return v ? Value{*v} : Value{}; }

inline std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + std::to_string(v[k]);
  return out;
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + detail::format_double(v[k]);
  return out;
}

/// Digest over every input the run reads, each prefixed by its role.
inline std::string input_digest(const std::vector<std::pair<std::string, std::string>>& inputs) {
  io::Fnv1a h;
  for (const auto& [role, contents] : inputs) {
    h.update(role).update(std::string_view("\0", 1)).update(contents).update(std::string_view("\0", 1));
  }
  return "fnv1a64:" + h.hex();
}

inline void echo_config(Report& r, const RunConfig& cfg) {
  Section& s = r.section("config");
  s.set("input", cfg.input);
  s.set("reference", cfg.reference);
  s.set("isochrones", cfg.isochrones);
  s.set("creep", cfg.creep);
  s.set("lambda0", cfg.weights.lambda0);
  s.set("q0", cfg.weights.q0);
  s.set("gamma", cfg.weights.gamma);
  s.set("m_range", join_ints(cfg.m_range));
  s.set("eval_point", cfg.eval_at_knots ? "knot" : "midpoint");
  s.set("sigma_over_H", optional_value(cfg.sigma_over_H));
  s.set("H", cfg.H);
  s.set("strain_levels", join_doubles(cfg.strain_levels));
  if (cfg.mode == Mode::simulate) {
    s.set("alpha", cfg.kernel.alpha);
    s.set("beta", cfg.kernel.beta);
    s.set("lambda", cfg.kernel.lambda);
    s.set("q", cfg.q);
    s.set("t_end", cfg.t_end);
    s.set("points", static_cast<std::int64_t>(cfg.points));
    s.set("strain", optional_value(cfg.strain));
  }
  s.set("output", cfg.output);
}

inline Report start_report(const RunConfig& cfg, const std::string& digest) {
  Report r;
  r.set("tool", kToolName);
  r.set("tool_version", kToolVersion);
  r.set("mode", mode_name(cfg.mode));
  if (cfg.timestamp) r.set("timestamp", utc_timestamp());
  r.set("input_digest", digest);
  return r;
}

inline void add_segments(Section& s, const std::vector<SplineSegment>& segs) {
  ReportTable& t = s.table("segments", {"j", "t_j", "B", "2C", "3D", "integral_0_tj"});
  for (std::size_t j = 0; j < segs.size(); ++j) {
    t.add_row({static_cast<std::int64_t>(j + 1), segs[j].t, segs[j].B, segs[j].twoC, segs[j].threeD,
               integrate_segment_from_zero(segs[j])});
  }
}

inline Report run_table1(const RunConfig& cfg) {
  KernelSamples samples = table1_fixture();
  std::string text;
  if (!cfg.input.empty()) {
    text = io::read_file(cfg.input, "pipeline_cli::run");
    samples = io::parse_kernel_samples(text, cfg.input);
  } else {
    text = io::format_series(samples, "t_j", "K_j");
  }
  Report r = start_report(cfg, input_digest({{"table1", text}}));
  r.set("comparison_tolerance", kTable1Tolerance);
  r.set("flag_rule", "relative deviation > tolerance and gap > half a unit of the printed last digit");
  echo_config(r, cfg);

  const auto rows = compare_table1(samples);
  Section& s = r.section("table1");
  std::vector<int> flagged;
  std::vector<int> strict;
  for (const auto& row : rows) {
    if (row.flagged()) flagged.push_back(row.j);
    if (row.twoC.relative_deviation > kTable1Tolerance || row.threeD.relative_deviation > kTable1Tolerance) {
      strict.push_back(row.j);
    }
  }
  s.set("rows", static_cast<std::int64_t>(rows.size()));
  s.set("rows_flagged", join_ints(flagged));
  s.set("rows_beyond_tolerance_only", join_ints(strict));
  ReportTable& t = s.table("comparison", {"j", "t_j", "K_j", "2C_printed", "2C_computed", "2C_rel_dev", "3D_printed",
                                          "3D_computed", "3D_rel_dev", "flagged"});
  for (const auto& row : rows) {
    t.add_row({static_cast<std::int64_t>(row.j), row.t, row.K, row.twoC.printed, row.twoC.computed,
               row.twoC.relative_deviation, row.threeD.printed, row.threeD.computed, row.threeD.relative_deviation,
               row.flagged()});
  }
  return r;
}

inline Report run_simulate(const RunConfig& cfg) {
  constexpr const char* where = "pipeline_cli::run";
  if (cfg.output.empty()) {
    throw DomainError(where, "simulate needs --output naming a directory for the generated files");
  }
  const PowerLaw pl{cfg.H, cfg.q};
  validate(cfg.kernel, where);
  validate(pl, where);
  const double sigma = cfg.sigma_over_H.value_or(1e-4) * cfg.H;
  const std::vector<double> grid = uniform_grid(cfg.t_end, cfg.points);

  KernelSamples observed;
  KernelSamples reference;
  const KernelParams shape{cfg.kernel.alpha, cfg.kernel.beta, 1.0};
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double K = creep_kernel(shape, grid[k]).value;
    reference.times.push_back(grid[k]);
    reference.values.push_back(K);
    observed.times.push_back(grid[k]);
    observed.values.push_back(cfg.kernel.lambda * K);
  }
  const ResponseHistory creep = simulate_creep(cfg.kernel, pl, sigma, grid);
  const double hold = cfg.strain.value_or(creep.values.front());
  const ResponseHistory relax = simulate_relaxation(cfg.kernel, pl, hold, grid);

  std::vector<std::pair<std::string, std::string>> files{
      {"kernel_samples.csv", io::format_series(observed, "t", "K")},
      {"reference_kernel.csv", io::format_series(reference, "t", "K")},
      {"creep.csv", io::format_series({creep.times, creep.values}, "t", "strain")},
      {"relaxation.csv", io::format_series({relax.times, relax.values}, "t", "stress")},
  };
  if (!cfg.strain_levels.empty()) {
    // same instants as the kernel samples so the matrix pairs with the reference spline
    IsochroneDataset iso{cfg.strain_levels, reference.times, {}};
    const RabotnovSeries integral(shape.alpha, shape.beta, 1, {}, where);
    for (const double eps : cfg.strain_levels) {
      iso.phi_t.emplace_back();
      for (const double t : iso.times) {
        iso.phi_t.back().push_back(phi0(pl, eps) / (1.0 + cfg.kernel.lambda * integral(t).value));
      }
    }
    validate(iso, where);
    files.emplace_back("isochrones.csv", io::format_isochrones(iso));
  }

  std::error_code ec;
  std::filesystem::create_directories(cfg.output, ec);
  if (ec) throw DomainError(where, "cannot create output directory '" + cfg.output + "': " + ec.message());
  for (const auto& [name, contents] : files) {
    io::write_file((std::filesystem::path(cfg.output) / name).string(), contents);
  }

  Report r = start_report(cfg, input_digest({}));
  echo_config(r, cfg);
  Section& s = r.section("simulate");
  s.set("sigma", sigma);
  s.set("relaxation_strain", hold);
  s.set("grid_points", static_cast<std::int64_t>(grid.size()));
  s.set("kernel_samples", static_cast<std::int64_t>(observed.size()));
  s.set("identify_hint", "--input kernel_samples.csv --reference reference_kernel.csv --creep creep.csv");
  ReportTable& t = s.table("files", {"name", "bytes", "digest"});
  for (const auto& [name, contents] : files) {
    t.add_row({name, static_cast<std::int64_t>(contents.size()), "fnv1a64:" + io::Fnv1a().update(contents).hex()});
  }
  return r;
}

struct IdentifyInputs {
  KernelSamples observed;
  KernelSamples reference;
  std::optional<IsochroneDataset> isochrones;
  std::optional<KernelSamples> creep;
  std::vector<std::pair<std::string, std::string>> texts;
  std::string observed_source;
};

inline IdentifyInputs load_identify_inputs(const RunConfig& cfg) {
  constexpr const char* where = "pipeline_cli::run";
  IdentifyInputs in;
  if (!cfg.isochrones.empty()) {
    const std::string text = io::read_file(cfg.isochrones, where);
    in.isochrones = io::parse_isochrones(text, cfg.isochrones);
    in.texts.emplace_back("isochrones", text);
  }
  if (!cfg.input.empty()) {
    const std::string text = io::read_file(cfg.input, where);
    in.observed = io::parse_kernel_samples(text, cfg.input);
    in.texts.emplace_back("input", text);
    in.observed_source = "input";
  } else if (in.isochrones) {
    const auto means = similarity_means(*in.isochrones, {cfg.H, cfg.weights.q0});
    in.observed = similarity_rate_samples(in.isochrones->times, means);
    in.observed_source = "isochrone similarity rate";
  } else {
    throw DomainError(where, "identify needs --input kernel samples or --isochrones");
  }
  if (!cfg.reference.empty()) {
    const std::string text = io::read_file(cfg.reference, where);
    in.reference = io::parse_kernel_samples(text, cfg.reference);
    in.texts.emplace_back("reference", text);
  } else {
    in.reference = in.observed;
  }
  if (!cfg.creep.empty()) {
    const std::string text = io::read_file(cfg.creep, where);
    in.creep = io::parse_strain_history(text, cfg.creep);
    in.texts.emplace_back("creep", text);
  }
  return in;
}

inline Report run_identify(const RunConfig& cfg) {
  constexpr const char* where = "pipeline_cli::run";
  const IdentifyInputs in = load_identify_inputs(cfg);
  const std::vector<SplineSegment> segs = fit_kernel_spline(in.reference);
  const PowerLaw pl0{cfg.H, cfg.weights.q0};

  std::vector<StrainObservation> obs;
  std::string obs_source = "none";
  if (in.creep) {
    if (!cfg.sigma_over_H) throw DomainError(where, "--creep needs --sigma-over-H");
    obs = observations_from_creep(in.creep->times, in.creep->values, in.reference.times, *cfg.sigma_over_H * cfg.H);
    obs_source = "creep record";
  } else if (!cfg.strain_levels.empty()) {
    if (!cfg.sigma_over_H) throw DomainError(where, "--strain-levels needs --sigma-over-H");
    obs = observations_from_levels(cfg.strain_levels, segs.size(), *cfg.sigma_over_H * cfg.H);
    obs_source = "strain levels";
  } else if (in.isochrones) {
    obs = observations_from_isochrones(*in.isochrones, in.reference.times);
    obs_source = "isochrones";
  }

  IdentifyConfig icfg;
  icfg.weights = cfg.weights;
  icfg.m_range = cfg.m_range;
  icfg.eval = cfg.eval_at_knots ? EvalPoint::knot : EvalPoint::midpoint;
  const IdentificationResult res = identify(in.observed, segs, obs, icfg, pl0);
  if (!obs.empty() && !res.q_hat) {
    throw NoRootError(where, "none of the " + std::to_string(res.pairs.size()) +
                                 " strain observations has a root; first failure: " + res.pairs.front().failure);
  }

  Report r = start_report(cfg, input_digest(in.texts));
  echo_config(r, cfg);
  Section& s = r.section("identify");
  s.set("observed_source", in.observed_source);
  s.set("observation_source", obs_source);
  s.set("samples", static_cast<std::int64_t>(in.observed.size()));
  s.set("t_star", in.observed.t_star());
  s.set("lambda_hat", res.lambda_hat);
  s.set("q_hat", detail::optional_value(res.q_hat));
  s.set("delta", res.delta);
  s.set("m_selected", static_cast<std::int64_t>(res.m_selected));
  std::int64_t solved = 0;
  for (const auto& p : res.pairs) solved += p.q ? 1 : 0;
  s.set("pairs", static_cast<std::int64_t>(res.pairs.size()));
  s.set("pairs_solved", solved);

  ReportTable& t = s.table("samples", {"j", "t_j", "eval_at", "K_obs", "K_model", "weight", "residual", "contribution"});
  const auto r0 = residuals(res.pairing, cfg.weights.lambda0);
  for (std::size_t j = 0; j < res.pairing.size(); ++j) {
    t.add_row({static_cast<std::int64_t>(j + 1), res.pairing.times[j], res.pairing.eval_at[j], res.pairing.observed[j],
               res.pairing.model[j], res.weights[j], r0[j], res.contributions[j]});
  }
  ReportTable& pt = s.table("pairs", {"j", "t_j", "strain", "sigma", "eta", "q", "failure"});
  for (const auto& p : res.pairs) {
    const bool in_range = p.obs.knot < segs.size();
    pt.add_row({static_cast<std::int64_t>(p.obs.knot + 1), in_range ? Value{segs[p.obs.knot].t} : Value{},
                p.obs.strain, p.obs.sigma, p.failure.empty() || p.eta > 0 ? Value{p.eta} : Value{},
                detail::optional_value(p.q), p.failure});
  }
  detail::add_segments(r.section("spline"), segs);
  return r;
}

struct CheckOutcome {
  std::string name;
  bool pass = false;
  double measure = 0.0;
  double bound = 0.0;
  std::string detail;
};

/// Every check is run and recorded; an exception inside a check fails that check only.
inline std::vector<CheckOutcome> invariant_checks(const KernelSamples& samples, const RunConfig& cfg) {
  std::vector<CheckOutcome> out;
  const auto guarded = [&](const std::string& name, double bound, auto&& fn) {
    CheckOutcome c{name, false, 0.0, bound, {}};
    try {
      c.measure = fn();
      c.pass = c.measure <= bound;
    } catch (const Error& e) {
      c.detail = e.what();
    }
    out.push_back(std::move(c));
  };
  std::vector<SplineSegment> segs;
  guarded("spline_fit", 0.0, [&] {
    segs = fit_kernel_spline(samples);
    return 0.0;
  });
  if (segs.empty()) return out;

  guarded("knot_interpolation", 0.0, [&] {
    double worst = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j) {
      worst = std::max(worst, std::abs(eval_kernel_spline(segs, samples.times[j]) - samples.values[j]));
    }
    return worst;
  });
  guarded("first_segment_flat", 0.0, [&] { return std::abs(segs[0].twoC) + std::abs(segs[0].threeD); });
  guarded("ratio_identity", 1e-12, [&] {
    double worst = 0.0;
    for (std::size_t j = 1; j < segs.size(); ++j) {
      if (segs[j].threeD == 0.0) continue;
      worst = std::max(worst, std::abs(segs[j].twoC / segs[j].threeD - 2.0 * segs[j].t) / std::abs(2.0 * segs[j].t));
    }
    return worst;
  });

  const EvalPoint eval = cfg.eval_at_knots ? EvalPoint::knot : EvalPoint::midpoint;
  const KernelPairing knot = pair_kernels(samples, segs, EvalPoint::knot);
  const KernelPairing chosen = pair_kernels(samples, segs, eval);
  // λ₀ = 1 makes every knot residual vanish, so the identities use 0.5 and 2
  guarded("knot_identity", 1e-12, [&] {
    double worst = 0.0;
    for (double l0 : {0.5, 2.0}) {
      WeightConfig w = cfg.weights;
      w.lambda0 = l0;
      worst = std::max(worst, std::abs(lambda_gamma_form(knot, w) - 1.0));
    }
    return worst;
  });
  guarded("gamma_invariance", 1e-14, [&] {
    WeightConfig w = cfg.weights;
    w.lambda0 = 0.5;
    w.gamma = 1e-4;
    const double ref = lambda_gamma_form(chosen, w);
    double worst = 0.0;
    for (double g : {1e-8, 1e-1}) {
      w.gamma = g;
      worst = std::max(worst, std::abs(lambda_gamma_form(chosen, w) - ref) / std::max(1.0, std::abs(ref)));
    }
    return worst;
  });
  guarded("weight_bounds", 0.0, [&] {
    WeightConfig w = cfg.weights;
    w.lambda0 = 0.5;
    double violations = 0.0;
    for (int m : cfg.m_range) {
      w.m = m;
      for (double x : stage1_weights(chosen, w)) violations += (x > 0.0 && x <= 1.0) ? 0.0 : 1.0;
    }
    return violations;
  });
  guarded("delta_refit_monotone", 0.0, [&] {
    WeightConfig w = cfg.weights;
    w.lambda0 = 0.5;
    const auto weights = stage1_weights(chosen, w);
    const double refit = lambda_closed_form(chosen, weights);
    const double before = residual_delta(chosen, w);
    return std::max(0.0, weighted_sum_of_squares(chosen, weights, refit) - before * (1 + 1e-14));
  });
  guarded("quadratic_optimality", 0.0, [&] {
    WeightConfig w = cfg.weights;
    w.lambda0 = 0.5;
    const auto weights = stage1_weights(chosen, w);
    const double l = lambda_closed_form(chosen, weights);
    const double omega = weighted_sum_of_squares(chosen, weights, l);
    double worst = 0.0;
    for (double rel : {1e-3, 1e-2}) {
      for (double sign : {-1.0, 1.0}) {
        const double shifted = weighted_sum_of_squares(chosen, weights, l + sign * rel * std::abs(l));
        worst = std::max(worst, omega * (1 - 1e-15) - shifted);
      }
    }
    return std::max(0.0, worst);
  });
  return out;
}

inline Report run_validate(const RunConfig& cfg) {
  constexpr const char* where = "pipeline_cli::run";
  if (cfg.input.empty()) throw DomainError(where, "validate needs --input");
  const std::string text = io::read_file(cfg.input, where);
  const KernelSamples samples = io::parse_kernel_samples(text, cfg.input);
  const auto checks = invariant_checks(samples, cfg);
  bool ok = true;
  for (const auto& c : checks) ok = ok && c.pass;

  Report r = start_report(cfg, input_digest({{"input", text}}));
  r.set("status", ok ? "pass" : "fail");
  echo_config(r, cfg);
  Section& s = r.section("validate");
  s.set("samples", static_cast<std::int64_t>(samples.size()));
  s.set("checks", static_cast<std::int64_t>(checks.size()));
  std::int64_t passed = 0;
  for (const auto& c : checks) passed += c.pass ? 1 : 0;
  s.set("passed", passed);
  ReportTable& t = s.table("checks", {"name", "status", "measure", "bound", "detail"});
  for (const auto& c : checks) t.add_row({c.name, c.pass ? "pass" : "fail", c.measure, c.bound, c.detail});
  return r;
}

}  // namespace detail

inline Report run(const RunConfig& cfg) {
  validate(cfg.weights, "pipeline_cli::run");
  switch (cfg.mode) {
    case Mode::identify: return detail::run_identify(cfg);
    case Mode::simulate: return detail::run_simulate(cfg);
    case Mode::table1: return detail::run_table1(cfg);
    case Mode::validate: return detail::run_validate(cfg);
  }
  throw DomainError("pipeline_cli::run", "unknown mode");
}

/// True when a validate report recorded a failing check.
inline bool report_failed(const Report& r) {
  const Value* status = r.find("status");
  return status && std::holds_alternative<std::string>(*status) && std::get<std::string>(*status) == "fail";
}

}  // namespace hkid
