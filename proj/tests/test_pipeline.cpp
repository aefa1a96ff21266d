#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "hkid/pipeline.hpp"

namespace hkid {
namespace {

namespace fs = std::filesystem;

const std::string kTable1Path = std::string(HKID_DATA_DIR) + "/table1.csv";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hkid_test_pipeline_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args, const fs::path& out_file = {}) {
  std::string cmd = std::string(HKID_CLI_PATH) + " " + args;
  cmd += out_file.empty() ? " > /dev/null" : " > " + out_file.string();
  cmd += " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double number(const Section& s, const std::string& key) { return std::get<double>(*s.find(key)); }

TEST(ParseOptions, ModesAndMomentRanges) {
  EXPECT_EQ(parse_mode("table1"), Mode::table1);
  EXPECT_THROW(parse_mode("fit"), ParseError);
  EXPECT_EQ(parse_m_range("2..5"), (std::vector<int>{2, 3, 4, 5}));
  EXPECT_EQ(parse_m_range("4, 2"), (std::vector<int>{4, 2}));
  EXPECT_THROW(parse_m_range("2..x"), ParseError);
  EXPECT_THROW(parse_m_range("5..2"), DomainError);
}

TEST(Run, Table1FlagsRowsThreeAndFive) {
  RunConfig cfg;
  cfg.mode = Mode::table1;
  cfg.timestamp = false;
  const Report r = run(cfg);
  EXPECT_EQ(std::get<double>(*r.find("comparison_tolerance")), 0.02);
  const Section* s = r.find_section("table1");
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(std::get<std::string>(*s->find("rows_flagged")), "3,5");
  EXPECT_EQ(s->find_table("comparison")->rows.size(), 16u);
  // the bundled file gives the same comparison as the compiled-in fixture
  cfg.input = kTable1Path;
  EXPECT_EQ(std::get<std::string>(*run(cfg).find_section("table1")->find("rows_flagged")), "3,5");
}

TEST(Run, IdentifyTable1KnotModeReportsUnitLambda) {
  RunConfig cfg;
  cfg.input = kTable1Path;
  cfg.eval_at_knots = true;
  cfg.weights.lambda0 = 0.9;
  cfg.timestamp = false;
  const Report r = run(cfg);
  const Section& s = *r.find_section("identify");
  EXPECT_EQ(number(s, "lambda_hat"), 1.0);
  EXPECT_EQ(std::get<std::int64_t>(*s.find("m_selected")), 8);
  EXPECT_TRUE(std::holds_alternative<std::monostate>(*s.find("q_hat")));
  EXPECT_EQ(s.find_table("samples")->rows.size(), 16u);
  EXPECT_EQ(r.find_section("spline")->find_table("segments")->rows.size(), 16u);
}

TEST(Run, DeterministicWithoutTimestamp) {
  RunConfig cfg;
  cfg.input = kTable1Path;
  cfg.weights.lambda0 = 0.9;
  cfg.strain_levels = {1e-3, 2e-3};
  cfg.sigma_over_H = 1e-6;
  cfg.timestamp = false;
  EXPECT_EQ(render_text(run(cfg)), render_text(run(cfg)));
  EXPECT_EQ(render_json(run(cfg)), render_json(run(cfg)));
  cfg.timestamp = true;
  EXPECT_NE(run(cfg).find("timestamp"), nullptr);
}

TEST(Run, ReportRoundTripsThroughBothForms) {
  RunConfig cfg;
  cfg.input = kTable1Path;
  cfg.weights.lambda0 = 0.9;
  cfg.strain_levels = {1e-3};
  cfg.sigma_over_H = 1e-6;
  const Report r = run(cfg);
  EXPECT_EQ(parse_text(render_text(r)), r);
  EXPECT_EQ(parse_json(render_json(r)), r);
}

TEST(Run, DigestTracksInputContents) {
  const fs::path dir = scratch("digest");
  fs::copy_file(kTable1Path, dir / "a.csv");
  {
    std::ofstream(dir / "b.csv") << slurp(kTable1Path) << "# trailing comment\n";
  }
  RunConfig cfg;
  cfg.mode = Mode::validate;
  cfg.timestamp = false;
  cfg.input = (dir / "a.csv").string();
  const auto da = std::get<std::string>(*run(cfg).find("input_digest"));
  cfg.input = (dir / "b.csv").string();
  const auto db = std::get<std::string>(*run(cfg).find("input_digest"));
  EXPECT_NE(da, db);
  EXPECT_EQ(da.rfind("fnv1a64:", 0), 0u);
}

TEST(Run, ValidatePassesOnTable1) {
  RunConfig cfg;
  cfg.mode = Mode::validate;
  cfg.input = kTable1Path;
  const Report r = run(cfg);
  EXPECT_EQ(std::get<std::string>(*r.find("status")), "pass");
  EXPECT_FALSE(report_failed(r));
  const auto* checks = r.find_section("validate")->find_table("checks");
  EXPECT_EQ(checks->rows.size(), 9u);
}

TEST(Run, MissingInputsAreValidationErrors) {
  RunConfig cfg;
  EXPECT_THROW(run(cfg), DomainError);
  cfg.mode = Mode::validate;
  EXPECT_THROW(run(cfg), DomainError);
  cfg.mode = Mode::simulate;
  EXPECT_THROW(run(cfg), DomainError);
  cfg.mode = Mode::identify;
  cfg.input = kTable1Path;
  cfg.strain_levels = {1e-3};
  EXPECT_THROW(run(cfg), DomainError);  // strain levels without σ/H
}

TEST(Run, SimulateIdentifyClosure) {
  const fs::path dir = scratch("closure");
  RunConfig sim;
  sim.mode = Mode::simulate;
  sim.output = dir.string();
  sim.strain_levels = {1e-3, 2e-3};
  sim.timestamp = false;
  const Report sr = run(sim);
  for (const char* f : {"kernel_samples.csv", "reference_kernel.csv", "creep.csv", "relaxation.csv", "isochrones.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_EQ(sr.find_section("simulate")->find_table("files")->rows.size(), 5u);

  RunConfig id;
  id.input = (dir / "kernel_samples.csv").string();
  id.reference = (dir / "reference_kernel.csv").string();
  id.creep = (dir / "creep.csv").string();
  id.sigma_over_H = 1e-4;
  id.timestamp = false;
  const Section s = *run(id).find_section("identify");
  EXPECT_NEAR(number(s, "lambda_hat"), 0.8, 0.05 * 0.8);
  EXPECT_NEAR(number(s, "q_hat"), 1.5, 0.05 * 1.5);
  EXPECT_EQ(std::get<std::int64_t>(*s.find("pairs_solved")), 63);

  // knot evaluation just off the true λ recovers it to the printed precision
  id.eval_at_knots = true;
  id.weights.lambda0 = 0.8 * (1 + 1e-6);
  EXPECT_NEAR(number(*run(id).find_section("identify"), "lambda_hat"), 0.8, 1e-8);

  RunConfig iso;
  iso.isochrones = (dir / "isochrones.csv").string();
  iso.reference = (dir / "reference_kernel.csv").string();
  iso.weights.q0 = 1.5;
  const Section is = *run(iso).find_section("identify");
  EXPECT_NEAR(number(is, "lambda_hat"), 0.8, 0.1 * 0.8);
  EXPECT_EQ(std::get<std::int64_t>(*is.find("pairs_solved")), 126);
}

TEST(Cli, Table1ReportAndDeterminism) {
  const fs::path dir = scratch("cli_table1");
  ASSERT_EQ(cli("--mode table1 --no-timestamp", dir / "a.txt"), 0);
  ASSERT_EQ(cli("--mode table1 --no-timestamp", dir / "b.txt"), 0);
  const std::string a = slurp(dir / "a.txt");
  EXPECT_EQ(a, slurp(dir / "b.txt"));
  EXPECT_NE(a.find("rows_flagged = \"3,5\""), std::string::npos);
  ASSERT_EQ(cli("--mode table1 --output " + (dir / "file.txt").string()), 0);
  EXPECT_NE(slurp(dir / "file.txt").find("timestamp = "), std::string::npos);
  ASSERT_EQ(cli("--mode table1 --no-timestamp --json", dir / "c.json"), 0);
  EXPECT_EQ(parse_json(slurp(dir / "c.json")), parse_text(a));
}

TEST(Cli, ConfigFile) {
  const fs::path dir = scratch("cli_config");
  std::ofstream(dir / "run.toml") << "mode = \"identify\"\ninput = \"" << kTable1Path
                                  << "\"\nlambda0 = 0.9\neval-at-knots = true\nno-timestamp = true\n";
  ASSERT_EQ(cli("--config " + (dir / "run.toml").string(), dir / "out.txt"), 0);
  const Report r = parse_text(slurp(dir / "out.txt"));
  EXPECT_EQ(std::get<double>(*r.find_section("identify")->find("lambda_hat")), 1.0);
  EXPECT_EQ(std::get<double>(*r.find_section("config")->find("lambda0")), 0.9);
}

TEST(Cli, ExitCodesPerErrorClass) {
  const fs::path dir = scratch("cli_exit");
  std::ofstream(dir / "dup.csv") << "t,K\n0,1\n0,2\n";
  std::ofstream(dir / "bad.csv") << "t,K\n0,x\n";
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli("--mode identify --no-such-flag"), 1);
  EXPECT_EQ(cli("--mode fit"), 1);
  EXPECT_EQ(cli("--mode identify --input " + (dir / "bad.csv").string()), 1);
  EXPECT_EQ(cli("--mode identify --input " + (dir / "dup.csv").string()), 2);
  EXPECT_EQ(cli("--mode identify --input " + kTable1Path + " --lambda0 -1"), 2);
  EXPECT_EQ(cli("--mode identify --input " + kTable1Path + " --eval-at-knots --lambda0 1"), 3);
  EXPECT_EQ(cli("--mode identify --input " + kTable1Path +
                " --eval-at-knots --lambda0 0.9 --strain-levels 5 --sigma-over-H 1e-9"),
            4);
  EXPECT_EQ(cli("--mode validate --input " + kTable1Path), 0);
}

TEST(Cli, SimulateThenIdentify) {
  const fs::path dir = scratch("cli_closure");
  ASSERT_EQ(cli("--mode simulate --no-timestamp --output " + dir.string()), 0);
  const std::string args = "--mode identify --no-timestamp --input " + (dir / "kernel_samples.csv").string() +
                           " --reference " + (dir / "reference_kernel.csv").string() + " --creep " +
                           (dir / "creep.csv").string() + " --sigma-over-H 1e-4 --json";
  ASSERT_EQ(cli(args, dir / "report.json"), 0);
  const Report r = parse_json(slurp(dir / "report.json"));
  EXPECT_NEAR(std::get<double>(*r.find_section("identify")->find("q_hat")), 1.5, 0.05 * 1.5);
}

}  // namespace
}  // namespace hkid
