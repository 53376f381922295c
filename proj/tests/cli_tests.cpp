#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ncelab/field_io.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliRun {
  int status = -1;
  std::string output;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Runs the installed binary with the given argument string, capturing the
/// merged stdout/stderr stream and the exit status.
CliRun run_cli(const std::string& args) {
  static int counter = 0;
  const std::string capture =
      testing::TempDir() + "cli_capture_" + std::to_string(counter++) + ".txt";
  const std::string cmd =
      std::string("\"") + NCELAB_BINARY_PATH + "\" " + args + " > \"" + capture + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  CliRun r;
  r.status = (raw == -1) ? -1 : WEXITSTATUS(raw);
  r.output = slurp(capture);
  return r;
}

std::string fresh_dir(const std::string& stem) {
  static int counter = 0;
  const std::string dir = testing::TempDir() + stem + "_" + std::to_string(counter++);
  fs::create_directories(dir);
  return dir;
}

std::string fixture(const std::string& name) {
  return std::string(NCELAB_SOURCE_DIR) + "/configs/" + name;
}

/// A 17x17 two-solution instance small enough that a full solve-both run
/// takes well under a second.
std::string write_small_config() {
  const std::string path = testing::TempDir() + "cli_small.json";
  std::ofstream out(path, std::ios::trunc);
  out << R"({
  "mode": "solve-both",
  "grid": { "counts": [17, 17], "lengths": [1.0, 1.0] },
  "coefficients": {
    "A": { "kind": "identity" },
    "c0": { "kind": "gaussian-bump", "center": [0.5, 0.5], "width": 0.25, "amplitude": 10.0 },
    "f": { "kind": "gaussian-bump", "center": [0.5, 0.5], "width": 0.25, "amplitude": 0.1 },
    "mu": { "kind": "constant", "value": 1.0 }
  }
})";
  return path;
}

json load_manifest(const std::string& dir) {
  return json::parse(slurp(dir + "/manifest.json"));
}

TEST(Cli, HelpPrintsUsageAndExitsCleanly) {
  const CliRun r = run_cli("--help");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("usage: ncelab"), std::string::npos);
  EXPECT_NE(r.output.find("solve-general"), std::string::npos);
}

TEST(Cli, MissingCommandShowsUsage) {
  const CliRun r = run_cli("");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("usage: ncelab"), std::string::npos);
}

TEST(Cli, UnknownCommandIsNamed) {
  const CliRun r = run_cli("frobnicate");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("unknown command 'frobnicate'"), std::string::npos);
}

TEST(Cli, MissingConfigIsNamed) {
  const CliRun r = run_cli("solve-both");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("requires --config"), std::string::npos);
}

TEST(Cli, UnknownFlagIsAnArgumentError) {
  const CliRun r = run_cli("props --frobnicate");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("error (arguments)"), std::string::npos);
}

TEST(Cli, MissingConfigFileIsAConfigError) {
  const CliRun r = run_cli("check --config /nonexistent/nope.json");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("cannot open config file"), std::string::npos);
}

TEST(Cli, NonPositiveToleranceOverrideIsRejected) {
  const CliRun r = run_cli("check --config \"" + fixture("check1d.json") + "\" --tol 0");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.output.find("--tol must be positive"), std::string::npos);
}

TEST(Cli, PropsRunsWithoutAConfig) {
  const std::string dir = fresh_dir("props");
  const CliRun r = run_cli("props --out \"" + dir + "\"");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.output.find("PASS"), std::string::npos);
  EXPECT_NE(r.output.find("positivity of g"), std::string::npos);

  const std::string csv = slurp(dir + "/props.csv");
  EXPECT_EQ(csv.rfind("name,worst,limit,pass\n", 0), 0u);
  EXPECT_EQ(csv.find("FAIL"), std::string::npos);
}

TEST(Cli, CheckFixturePassesAndRecordsMargins) {
  const std::string dir = fresh_dir("check");
  const CliRun r = run_cli("check --config \"" + fixture("check1d.json") + "\" --out \"" + dir + "\"");
  EXPECT_EQ(r.status, 0) << r.output;

  const json m = load_manifest(dir);
  EXPECT_TRUE(m.at("ok").get<bool>());
  EXPECT_EQ(m.at("mode"), "check");
  ASSERT_TRUE(m.contains("hypotheses"));
  EXPECT_GT(m["hypotheses"].at("coercivity").get<double>(), 0.0);
}

TEST(Cli, FailedHypothesisExitsWithItsClassAndStillWritesTheManifest) {
  const std::string dir = fresh_dir("large_mu");
  const CliRun r =
      run_cli("check --config \"" + fixture("check_large_mu.json") + "\" --out \"" + dir + "\"");
  EXPECT_EQ(r.status, 3);
  EXPECT_NE(r.output.find("error (hypothesis)"), std::string::npos);

  const json m = load_manifest(dir);
  EXPECT_FALSE(m.at("ok").get<bool>());
  EXPECT_EQ(m.at("error").at("class"), "hypothesis");
  EXPECT_EQ(m.at("error").at("exit_code").get<int>(), 3);
}

TEST(Cli, SeedOverrideLandsInTheManifest) {
  const std::string dir = fresh_dir("seeded");
  const CliRun r =
      run_cli("check --config \"" + fixture("check1d.json") + "\" --seed 99 --out \"" + dir + "\"");
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_EQ(load_manifest(dir).at("seed").get<std::uint64_t>(), 99u);
}

TEST(Cli, SolveBothRunsAreBitwiseReproducible) {
  const std::string config = write_small_config();
  const std::string a = fresh_dir("repro_a");
  const std::string b = fresh_dir("repro_b");

  const CliRun first = run_cli("solve-both --config \"" + config + "\" --out \"" + a + "\"");
  const CliRun second = run_cli("solve-both --config \"" + config + "\" --out \"" + b + "\"");
  ASSERT_EQ(first.status, 0) << first.output;
  ASSERT_EQ(second.status, 0) << second.output;

  for (const char* name : {"v_min.field", "u_min.field", "v_mp.field", "u_mp.field",
                           "min_log.csv", "mp_log.csv", "path_profile.csv"})
    EXPECT_EQ(slurp(a + "/" + name), slurp(b + "/" + name)) << name;

  json ma = load_manifest(a);
  json mb = load_manifest(b);
  ma.erase("timings");
  mb.erase("timings");
  EXPECT_EQ(ma, mb);
}

TEST(Cli, ManifestChecksumsMatchTheArtifactsOnDisk) {
  const std::string config = write_small_config();
  const std::string dir = fresh_dir("artifacts");
  const CliRun r = run_cli("solve-both --config \"" + config + "\" --out \"" + dir + "\"");
  ASSERT_EQ(r.status, 0) << r.output;

  const json m = load_manifest(dir);
  ASSERT_FALSE(m.at("artifacts").empty());
  for (const json& entry : m["artifacts"]) {
    const std::string path = dir + "/" + entry.at("path").get<std::string>();
    EXPECT_EQ(fs::file_size(path), entry.at("bytes").get<std::uint64_t>()) << path;
    EXPECT_EQ(ncelab::checksum_file(path), entry.at("fnv1a64").get<std::string>()) << path;
  }
}

TEST(Cli, SolveLogsKeepTheirHeaders) {
  const std::string config = write_small_config();
  const std::string dir = fresh_dir("headers");
  const CliRun r = run_cli("solve-both --config \"" + config + "\" --out \"" + dir + "\"");
  ASSERT_EQ(r.status, 0) << r.output;

  EXPECT_EQ(slurp(dir + "/min_log.csv").rfind("iteration,residual,energy,cerami\n", 0), 0u);
  EXPECT_EQ(slurp(dir + "/mp_log.csv").rfind("iteration,residual,energy,cerami\n", 0), 0u);
  EXPECT_EQ(slurp(dir + "/path_profile.csv").rfind("sweep,node,energy\n", 0), 0u);

  const json m = load_manifest(dir);
  EXPECT_TRUE(m.at("ok").get<bool>());
  EXPECT_LT(m.at("solves").at("minimum").at("energy").get<double>(), 0.0);
  EXPECT_GT(m.at("solves").at("pass").at("energy").get<double>(), 0.0);
}

}  // namespace
