#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "muskat/io.hpp"

using namespace muskat;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("muskat_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> violations_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.violations;
  }
  return {};
}

SimConfig small_config(const fs::path& dir) {
  auto c = parse_config(json::parse(R"j({"grid": {"Nx": 16, "Ny": 4}, "stepper": {"dt": 2e-3, "t_end": 0.6}})j"));
  c.output.trajectory = (dir / "traj.csv").string();
  c.output.summary = (dir / "summary.json").string();
  return c;
}

}  // namespace

TEST(Config, EmptyDocumentGivesDefaults) {
  auto c = parse_config(json::object());
  EXPECT_EQ(c.params.g, 1.0);
  EXPECT_EQ(c.params.sigma, 1.0);
  EXPECT_EQ(c.params.gamma_jump, 0.0);
  EXPECT_EQ(c.params.M, 4.0);
  EXPECT_EQ(c.Nx, 64);
  EXPECT_EQ(c.stepper.scheme, Scheme::semi_implicit);
  EXPECT_EQ(c.stepper.dn_refresh, 1);
  EXPECT_EQ(c.initial.family, "cosine");
  EXPECT_TRUE(c.initial.zero_mean);
}

TEST(Config, RefreshPolicy) {
  EXPECT_EQ(parse_config(json::parse(R"j({"grid": {"Nx": 256}})j")).stepper.dn_refresh, 5);
  EXPECT_EQ(parse_config(json::parse(R"j({"stepper": {"dn_refresh": "lagged(3)"}})j")).stepper.dn_refresh, 3);
  EXPECT_EQ(parse_config(json::parse(R"j({"grid": {"Nx": 256}, "stepper": {"dn_refresh": "every-step"}})j")).stepper.dn_refresh, 1);
  EXPECT_EQ(violations_of(json::parse(R"j({"stepper": {"dn_refresh": "lagged(0)"}})j")).size(), 1u);
  EXPECT_EQ(violations_of(json::parse(R"j({"stepper": {"dn_refresh": "lagged(2)x"}})j")).size(), 1u);
}

TEST(Config, YoungsLawViolationIsNamed) {
  auto v = violations_of(json::parse(R"j({"params": {"gamma_jump": 1.0}})j"));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("Young's law"), std::string::npos);
}

TEST(Config, CoarseGridRejected) {
  auto v = violations_of(json::parse(R"j({"grid": {"Nx": 6}})j"));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("grid.Nx"), std::string::npos);
}

TEST(Config, AllViolationsAreListed) {
  auto v = violations_of(json::parse(R"j({
    "params": {"sigma": -1, "colour": 3},
    "grid": {"Nx": 7.5},
    "stepper": {"dt": 0.3, "t_end": 1.0, "scheme": "rk4"},
    "output": {"snapshot_stride": 5},
    "extra": {}
  })j"));
  // unknown key, sigma, Young's law (|0| < -1 fails), Nx type, dt multiple, scheme, snapshot dir, unknown section
  EXPECT_GE(v.size(), 7u);
  auto has = [&](const std::string& s) {
    for (auto& e : v)
      if (e.find(s) != std::string::npos) return true;
    return false;
  };
  EXPECT_TRUE(has("unknown key 'colour'"));
  EXPECT_TRUE(has("unknown section 'extra'"));
  EXPECT_TRUE(has("grid.Nx: expected an integer"));
  EXPECT_TRUE(has("integer multiple"));
  EXPECT_TRUE(has("stepper.scheme"));
  EXPECT_TRUE(has("snapshot_dir"));
}

TEST(Config, FileErrors) {
  auto d = scratch_dir("cfg");
  EXPECT_THROW(load_config((d / "missing.json").string()), ConfigError);
  std::ofstream(d / "two.json") << "{} {}";
  EXPECT_THROW(load_config((d / "two.json").string()), ConfigError);
  std::ofstream(d / "ok.json") << R"j({"grid": {"Nx": 32}})j";
  EXPECT_EQ(load_config((d / "ok.json").string()).Nx, 32);
}

TEST(Config, JsonRoundTrip) {
  auto c = parse_config(json::parse(R"j({"params": {"gamma_jump": -0.25}, "vessel": {"family": "cosine", "c1": 0.1},
    "stepper": {"dn_refresh": "lagged(4)"}, "diagnostics": {"fit_window": [1, 2]}})j"));
  auto back = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Csv, SeventeenDigitsRoundTripExactly) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int k = 0; k < 1000; ++k) {
    const double v = U(rng) * std::pow(10.0, (k % 40) - 20);
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
}

TEST(Csv, DialectAndErrors) {
  std::ostringstream os;
  write_csv_header(os, {"a", "b"});
  write_csv_row(os, {0.1, 2.0});
  EXPECT_EQ(os.str(), "a,b\n0.10000000000000001,2\n");
  std::istringstream good(os.str());
  auto t = read_csv(good);
  EXPECT_EQ(t.rows[0][0], 0.1);
  std::istringstream bad("a,b\n1,2\n3\n");
  try {
    read_csv(bad, "f");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("f:3"), std::string::npos);
  }
  std::istringstream junk("a\n1x\n");
  EXPECT_THROW(read_csv(junk), std::invalid_argument);
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty), std::invalid_argument);
}

TEST(Simulate, RunsAreByteIdentical) {
  auto d = scratch_dir("det");
  auto c = small_config(d);
  simulate(c);
  const auto first = slurp(c.output.trajectory), first_summary = slurp(c.output.summary);
  simulate(c);
  EXPECT_EQ(slurp(c.output.trajectory), first);
  EXPECT_EQ(slurp(c.output.summary), first_summary);
  EXPECT_EQ(first.find('\r'), std::string::npos);
}

TEST(Simulate, TrajectoryRoundTripsThroughDiagnose) {
  auto d = scratch_dir("rt");
  auto c = small_config(d);
  json j;
  auto res = simulate(c, &j);
  auto recs = records_from_csv(read_csv(c.output.trajectory));
  ASSERT_EQ(recs.size(), res.records.size());
  for (std::size_t k = 0; k < recs.size(); ++k) EXPECT_EQ(record_values(recs[k]), record_values(res.records[k]));
  auto a = summary_json(summarize(res.records, c.diag)), b = summary_json(summarize(recs, c.diag));
  for (auto it = a.begin(); it != a.end(); ++it) {
    if (it->is_number_float())
      EXPECT_NEAR(it->get<double>(), b[it.key()].get<double>(), 1e-12 * std::max(1.0, std::abs(it->get<double>()))) << it.key();
    else
      EXPECT_EQ(*it, b[it.key()]) << it.key();
  }
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["records"], 301);
}

TEST(Simulate, ZeroEndTimeWritesOneRecord) {
  auto d = scratch_dir("t0");
  auto c = small_config(d);
  c.stepper.t_end = 0;
  simulate(c);
  EXPECT_EQ(read_csv(c.output.trajectory).rows.size(), 1u);
}

TEST(Snapshot, RoundTrip) {
  auto d = scratch_dir("snap");
  auto c = small_config(d);
  c.stepper.t_end = 0.008;
  c.output.snapshot_stride = 2;
  c.stepper.snapshot_stride = 2;
  c.output.snapshot_dir = (d / "snaps").string();
  auto res = simulate(c);
  EXPECT_TRUE(fs::exists(d / "snaps" / "snap_000000.json"));
  EXPECT_FALSE(fs::exists(d / "snaps" / "snap_000003.json"));
  auto s = read_snapshot((d / "snaps" / "snap_000004.json").string());
  EXPECT_EQ(s.nx, 16);
  EXPECT_EQ(s.ny, 4);
  EXPECT_EQ(s.step, 4);
  EXPECT_DOUBLE_EQ(s.t, 4 * c.stepper.dt);
  EXPECT_EQ(s.fields.at("Phi").size(), 85u);
  EXPECT_EQ(s.fields.at("eta"), res.last.eta.v);
  EXPECT_EQ(s.fields.at("Phi"), res.last.Phi.v);
}

TEST(Stationary, CsvAndSummary) {
  auto d = scratch_dir("stat");
  PhysParams p;
  p.gamma_jump = 0.5;
  auto st = solve_stationary(p, VesselGeometry{}, 32);
  write_stationary_csv((d / "s.csv").string(), st);
  auto t = read_csv((d / "s.csv").string());
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "h_s", "hs_prime", "h_w"}));
  ASSERT_EQ(t.rows.size(), 33u);
  EXPECT_EQ(t.rows[5][1], st.h_s[5]);
  auto j = stationary_summary(st, p);
  EXPECT_LE(j["young_residual"].get<double>(), 1e-6);
}
