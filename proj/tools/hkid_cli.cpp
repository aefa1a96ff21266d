// hkid command-line driver.
//
// Exit status: 0 success, 1 parse, 2 validation (including a failed validate
// run), 3 numerical, 4 no root.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hkid/hkid.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hereditary kernel identification: spline fit and weighted-residual estimation of lambda and q"};
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.option_defaults()->always_capture_default();

  hkid::RunConfig cfg;
  std::string mode = "identify";
  std::string m_range = "2..8";
  double sigma_over_H = 0.0;
  double strain = 0.0;
  bool no_timestamp = false;
  bool json = false;

  app.add_option("--mode", mode, "identify | simulate | table1 | validate")->required();
  app.add_option("--input", cfg.input, "Observed kernel samples (t,K)");
  app.add_option("--reference", cfg.reference, "Kernel samples for the spline fit (default: --input)");
  app.add_option("--isochrones", cfg.isochrones, "Isochrone matrix phi_t(eps_i, t_j)");
  app.add_option("--creep", cfg.creep, "Creep record (t,strain) at sigma = sigma_over_H * H");
  app.add_option("--lambda0", cfg.weights.lambda0, "Initial lambda");
  app.add_option("--q0", cfg.weights.q0, "Initial q (also the q of phi0 for isochrone means)");
  app.add_option("--m-range", m_range, "Moment orders to scan: lo..hi or a comma list");
  app.add_option("--gamma", cfg.weights.gamma, "Target residual for the gamma-weights");
  auto* sigma_opt = app.add_option("--sigma-over-H", sigma_over_H, "Stress over H for the q stage and simulate");
  app.add_option("--H", cfg.H, "Power-law coefficient H");
  app.add_option("--strain-levels", cfg.strain_levels, "Strain levels for the q stage or isochrone output")
      ->delimiter(',');
  app.add_flag("--eval-at-knots", cfg.eval_at_knots, "Evaluate segments at t_j instead of the interval midpoint");
  app.add_option("--output", cfg.output, "Report file (simulate: directory for generated data)");
  app.add_flag("--no-timestamp", no_timestamp, "Omit the timestamp so reports are byte-reproducible");
  app.add_flag("--json", json, "Emit the report as JSON");

  app.add_option("--alpha", cfg.kernel.alpha, "simulate: kernel exponent alpha");
  app.add_option("--beta", cfg.kernel.beta, "simulate: kernel rate beta");
  app.add_option("--lambda", cfg.kernel.lambda, "simulate: hereditary intensity lambda");
  app.add_option("--q", cfg.q, "simulate: power-law exponent q");
  app.add_option("--t-end", cfg.t_end, "simulate: grid end time");
  app.add_option("--points", cfg.points, "simulate: grid points including t = 0");
  auto* strain_opt = app.add_option("--strain", strain, "simulate: relaxation hold strain");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    cfg.mode = hkid::parse_mode(mode);
    cfg.m_range = hkid::parse_m_range(m_range);
    if (sigma_opt->count() > 0) cfg.sigma_over_H = sigma_over_H;
    if (strain_opt->count() > 0) cfg.strain = strain;
    cfg.timestamp = !no_timestamp;

    const hkid::Report report = hkid::run(cfg);
    const std::string text = json ? hkid::render_json(report) : hkid::render_text(report);
    if (cfg.mode != hkid::Mode::simulate && !cfg.output.empty()) {
      hkid::io::write_file(cfg.output, text);
    } else {
      std::fwrite(text.data(), 1, text.size(), stdout);
    }
    if (hkid::report_failed(report)) {
      std::cerr << "hkid: validate: one or more invariant checks failed\n";
      return static_cast<int>(hkid::ErrorClass::validation);
    }
    return 0;
  } catch (const hkid::Error& e) {
    std::cerr << "hkid: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "hkid: internal error: " << e.what() << "\n";
    return static_cast<int>(hkid::ErrorClass::numerical);
  }
}
