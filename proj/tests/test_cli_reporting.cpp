#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "parabolicity/cli_reporting.hpp"

using namespace parabolicity;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("parabolicity_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string(PARABOLICITY_TOOL) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kPowerConfig = R"({
  "profile": {"family": "power", "alpha": 1.0, "glue": {"B": -5.0, "R": 2.0}},
  "n": 3,
  "r_max": 1000000,
  "grid": {"kind": "stretched", "nodes": 4096, "first_spacing": 0.01},
  "p": [5.5]
})";

std::string expect_config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected ConfigError for " << text;
  return {};
}

}  // namespace

TEST(Config, ParsesAndDefaults) {
  const RunConfig c = parse_config(kPowerConfig);
  EXPECT_EQ(c.n, 3);
  EXPECT_EQ(c.grid.kind, GridKind::Stretched);
  EXPECT_EQ(c.grid.r_max, 1e6);
  EXPECT_EQ(c.tolerances.ode_tol, 1e-10);
  EXPECT_EQ(c.tolerances.fit_margin, 0.02);
  ASSERT_TRUE(c.profile.glue);
  EXPECT_EQ(c.profile.glue->core_bound, -5.0);
  EXPECT_EQ(c.p, std::vector<double>{5.5});
}

TEST(Config, UnknownKeysRejectedWithPath) {
  EXPECT_NE(expect_config_error(R"({"profile": {"family": "constant", "value": 0}, "n": 3, "r_mx": 10})")
                .find("'r_mx'"),
            std::string::npos);
  EXPECT_NE(expect_config_error(
                R"({"profile": {"family": "constant", "value": 0}, "n": 3, "tolerances": {"ode_tl": 1e-8}})")
                .find("'tolerances.ode_tl'"),
            std::string::npos);
  EXPECT_NE(expect_config_error(
                R"({"profile": {"family": "power", "alpha": 1, "glue": {"B": -5, "R": 2, "X": 1}}, "n": 3})")
                .find("'profile.glue.X'"),
            std::string::npos);
}

TEST(Config, SyntaxErrorsCarryLine) {
  const std::string msg = expect_config_error("{\n  \"n\": 3,\n  \"profile\": {,\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(Config, InvariantViolations) {
  expect_config_error(R"({"profile": {"family": "constant", "value": 0}, "n": 1})");
  expect_config_error(R"({"profile": {"family": "constant", "value": 0}, "n": 2.5})");
  expect_config_error(R"({"profile": {"family": "constant", "value": 0}, "n": 3, "p": [1.0]})");
  expect_config_error(R"({"profile": {"family": "constant", "value": 0}, "n": 3, "tolerances": {"stability": 0}})");
  expect_config_error(R"({"profile": {"family": "constant", "value": 0}, "n": 3, "tolerances": {"ode_tol": 1e-2}})");
  expect_config_error(R"({"profile": {"family": "bogus"}, "n": 3})");
  expect_config_error(R"({"n": 3})");
  expect_config_error(R"({"profile": {"family": "constant", "value": 0}, "n": 3, "output": {"formats": ["xml"]}})");
}

TEST(Config, RoundTripIsIdentity) {
  const RunConfig c = parse_config(kPowerConfig);
  const std::string echoed = config_to_json(c).dump(2);
  EXPECT_EQ(parse_config(echoed), c);
  EXPECT_EQ(config_to_json(parse_config(echoed)).dump(2), echoed);
}

TEST(Config, RandomRoundTrips) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    RunConfig c;
    const int pick = t % 4;
    if (pick == 0) c.profile.family = PowerDecay{0.1 + 3 * u(rng)};
    if (pick == 1) c.profile.family = Sech2Decay{0.1 + 3 * u(rng)};
    if (pick == 2) c.profile.family = TwoExponent{1.0 + u(rng), 0.5 * u(rng) + 0.1};
    if (pick == 3) c.profile.family = Tabulated{{0.0, 1.0, 2.0, 3.0 + u(rng)}, {u(rng), -u(rng), 0.0, 1.0}};
    if (pick != 3) c.profile.glue = GlueSpec{-10.0 * u(rng), 2.0 + u(rng)};
    if (pick == 1) c.profile.delta = 0.01 + 0.3 * u(rng);
    c.profile.normalization = t % 2 ? Normalization::Total : Normalization::PerDirection;
    c.n = 2 + t % 5;
    c.grid = GridSpec{t % 3 ? GridKind::Uniform : GridKind::Stretched, 10.0 + 1e4 * u(rng),
                      static_cast<std::size_t>(64 + t), 1e-3 + 1e-2 * u(rng)};
    c.tolerances.ode_tol = 1e-12 + 1e-6 * u(rng);
    c.tolerances.fit_margin = 0.001 + u(rng);
    c.p = {1.0 + 1e-9 + u(rng), 2.0 + 10 * u(rng)};
    if (t % 2) c.p_sweep = PSweep{1.01 + u(rng), 5.0 + u(rng), static_cast<std::size_t>(1 + t)};
    if (t % 3 == 0) c.window = Window{1.0 + u(rng), 100.0 + u(rng)};
    if (t % 5 == 0) c.sweep = SweepGrid{"two_exponent", {u(rng) + 0.5}, {2, 4}, 0.3};
    if (t % 7 == 0) c.validate.push_back(ValidationCase{"sphere", 1.5, 2.0, "", c.profile});
    c.output = OutputSpec{"dir" + std::to_string(t), t % 2 == 0, true};
    const RunConfig back = parse_config(config_to_json(c).dump());
    EXPECT_EQ(back, c) << config_to_json(c).dump();
  }
}

TEST(Config, PSweepSpec) {
  const PSweep s = detail::parse_p_sweep_string("p=1.01:20:64");
  EXPECT_EQ(s.from, 1.01);
  EXPECT_EQ(s.to, 20.0);
  EXPECT_EQ(s.count, 64u);
  RunConfig c;
  c.p_sweep = s;
  const auto ps = c.p_values();
  ASSERT_EQ(ps.size(), 64u);
  EXPECT_DOUBLE_EQ(ps.front(), 1.01);
  EXPECT_DOUBLE_EQ(ps.back(), 20.0);
  EXPECT_NEAR(ps[2] / ps[1], ps[1] / ps[0], 1e-12);
  EXPECT_THROW(detail::parse_p_sweep_string("p=1:2"), ConfigError);
  EXPECT_THROW(detail::parse_p_sweep_string("p=a:b:c"), ConfigError);
}

TEST(Csv, HeaderLfAndFullPrecision) {
  std::ostringstream out;
  write_csv(out, {"r", "x"}, {{0.0, 0.1}, {1.0 / 3.0, 1e-300}});
  const std::string s = out.str();
  EXPECT_EQ(s, "r,x\n0,0.33333333333333331\n0.10000000000000001,1e-300\n");
  EXPECT_EQ(s.find('\r'), std::string::npos);
  std::istringstream in(s);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(std::stod(line.substr(0, line.find(','))), 0.1);
}

TEST(Certificate, KeyOrderAndExitCodes) {
  RunConfig c = parse_config(kPowerConfig);
  c.p = {5.5};
  const auto cert = certify(c.profile, c.n, c.certify_options());
  const Json j = certificate_to_json(cert);
  std::vector<std::string> keys;
  for (const auto& [k, _] : j.items()) keys.push_back(k);
  const std::vector<std::string> expect{"profile", "n", "gamma_hat", "drift", "p_star", "criterion_used", "verdicts",
                                        "audit"};
  EXPECT_EQ(keys, expect);
  std::vector<std::string> vkeys;
  for (const auto& [k, _] : j["verdicts"][0].items()) vkeys.push_back(k);
  EXPECT_EQ(vkeys, (std::vector<std::string>{"p", "verdict", "form"}));
  EXPECT_EQ(j["verdicts"][0]["verdict"], "certified");
  EXPECT_EQ(certify_exit_code(cert), 0);

  c.p = {3.0, 5.5};
  const auto mixed = certify(c.profile, c.n, c.certify_options());
  EXPECT_EQ(certify_exit_code(mixed), 2);
  EXPECT_EQ(certificate_to_json(mixed)["verdicts"][0]["verdict"], "not_certified");
}

TEST(Commands, CertifyWritesDeterministicOutputs) {
  RunConfig c = parse_config(kPowerConfig);
  const fs::path d1 = scratch_dir("certify_a"), d2 = scratch_dir("certify_b");
  c.output.dir = d1.string();
  EXPECT_EQ(cmd_certify(c).exit_code, 0);
  c.output.dir = d2.string();
  EXPECT_EQ(cmd_certify(c).exit_code, 0);
  for (const char* f : {"certificate.json", "solution.csv", "volume.csv"}) {
    ASSERT_TRUE(fs::exists(d1 / f)) << f;
    EXPECT_EQ(read_file(d1 / f), read_file(d2 / f)) << f;
  }
  const Json cert = Json::parse(read_file(d1 / "certificate.json"));
  EXPECT_NEAR(cert["p_star"].get<double>(), 5.0, 0.1);
  EXPECT_EQ(read_file(d1 / "solution.csv").substr(0, 13), "r,phi,dphi\n0,");
  RunConfig echoed = load_config(d1 / "config.json");
  echoed.output.dir = c.output.dir;
  EXPECT_EQ(echoed, c);
}

TEST(Commands, SolveAndVolume) {
  RunConfig c;
  c.profile.family = Constant{-1.0};
  c.n = 2;
  c.grid.r_max = 2.0;
  c.output.dir = scratch_dir("volume").string();
  EXPECT_EQ(cmd_solve(c).exit_code, 0);
  EXPECT_EQ(cmd_volume(c).exit_code, 0);
  const std::string vol = read_file(fs::path(c.output.dir) / "volume.csv");
  EXPECT_EQ(vol.substr(0, 15), "r,vbar,dvbar\n0,");
  const auto last_line = vol.substr(vol.rfind('\n', vol.size() - 2) + 1);
  const double vbar = std::stod(last_line.substr(last_line.find(',') + 1));
  EXPECT_NEAR(vbar / (2.0 * std::numbers::pi * (std::cosh(2.0) - 1.0)), 1.0, 1e-9);
}

TEST(Commands, SweepRows) {
  RunConfig c = parse_config(kPowerConfig);
  c.sweep = SweepGrid{"power", {0.5, 1.0}, {2, 3}, 1.0};
  const auto rows = run_sweep(c);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].alpha, 0.5);
  EXPECT_EQ(rows[0].n, 2);
  EXPECT_EQ(rows[0].analytic, 2.5);
  EXPECT_EQ(rows[3].analytic, 5.0);
  for (const auto& r : rows) {
    ASSERT_TRUE(r.numeric);
    EXPECT_LT(std::abs(*r.numeric - r.analytic), 0.1);
  }
  std::ostringstream out;
  write_sweep_csv(out, rows);
  EXPECT_EQ(out.str().substr(0, 43), "alpha,n,p_star_numeric,p_star_analytic,gap\n");
}

TEST(Commands, ValidateBuiltInSuite) {
  RunConfig c;
  c.output.dir = scratch_dir("validate").string();
  const auto outcomes = run_validation(c);
  ASSERT_EQ(outcomes.size(), 3u);
  for (const auto& o : outcomes) EXPECT_TRUE(o.report.holds) << o.name;
  EXPECT_EQ(cmd_validate(c).exit_code, 0);
}

TEST(Tool, ExitCodes) {
  const fs::path dir = scratch_dir("tool");
  const std::string cfg = std::string(PARABOLICITY_CONFIGS) + "/power_a1_n3.json";
  EXPECT_EQ(run_tool("certify --config " + cfg + " --out " + dir.string() + " --p 5.5"), 0);
  EXPECT_EQ(run_tool("certify --config " + cfg + " --out " + dir.string() + " --p 3"), 2);
  EXPECT_EQ(run_tool("certify --config " + cfg + " --out " + dir.string() + " --p 0.5"), 1);
  EXPECT_EQ(run_tool("certify --config " + cfg + " --out " + dir.string() + " --format xml"), 1);
  EXPECT_EQ(run_tool("certify --config /nonexistent.json"), 1);
  EXPECT_EQ(run_tool("frobnicate"), 1);

  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << R"({"profile": {"family": "constant", "value": 0}, "n": 3, "typo": 1})";
  EXPECT_EQ(run_tool("solve --config " + bad.string()), 1);

  EXPECT_EQ(run_tool("solve --config " + std::string(PARABOLICITY_CONFIGS) + "/sphere_first_zero.json --out " +
                     dir.string()),
            0);
  EXPECT_EQ(run_tool("volume --config " + std::string(PARABOLICITY_CONFIGS) + "/sphere_first_zero.json --out " +
                     dir.string()),
            1);
  EXPECT_EQ(run_tool("certify --config " + cfg + " --out " + dir.string() + " --format json --sweep p=5.5:8:4"), 0);
  EXPECT_FALSE(fs::exists(dir / "solution.csv") && read_file(dir / "certificate.json").empty());
}
