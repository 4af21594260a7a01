#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace wdq;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  CliRun r;
  std::string cmd = std::string(WDQ_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST(RunConfig, MergeAndValidate) {
  RunConfig cfg;
  cfg.merge_json({{"dim", 2}, {"trials", 3}, {"connection", "curved-linear-n2"}});
  EXPECT_EQ(cfg.n, 2);
  EXPECT_EQ(cfg.trials, 3);
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_THROW(cfg.merge_json({{"colour", "red"}}), ConfigError);
  EXPECT_THROW(cfg.merge_json({{"dim", "two"}}), ConfigError);
  RunConfig bad;
  bad.trials = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = RunConfig{};
  bad.n = 7;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = RunConfig{};
  bad.fedosov_order = 4;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(RunConfig, JsonEmbedsResolvedValues) {
  RunConfig cfg;
  nlohmann::json j = cfg.to_json();
  EXPECT_EQ(j["base_degree"], 10);
  RunConfig back;
  back.merge_json(j);
  EXPECT_EQ(back.to_json(), j);
}

TEST(RunConfig, ResolvesNamesAndRejectsMismatches) {
  RunConfig cfg;
  cfg.connection = "curved-linear-n2";
  EXPECT_THROW(resolve_connection(cfg), ConfigError);
  cfg.connection = "flat";
  cfg.poisson = nlohmann::json::array({{0, 0}, {0, 0}});
  EXPECT_THROW(resolve_connection(cfg), ConfigError);
  cfg.poisson = nlohmann::json::array({{0, "1/2"}, {"-1/2", 0}});
  EXPECT_EQ(resolve_connection(cfg).poisson().pi()(0, 1), Scalar::ratio(1, 2));
  cfg.subset = "plane-in-r4";
  EXPECT_THROW(resolve_subset(cfg), ConfigError);
  cfg.subset = "/nonexistent/subset.json";
  EXPECT_THROW(resolve_subset(cfg), ConfigError);
}

TEST(Verify, ReportIsDeterministic) {
  RunConfig cfg;
  cfg.trials = 3;
  std::string a = run_verify(cfg).to_json().dump();
  std::string b = run_verify(cfg).to_json().dump();
  EXPECT_EQ(a, b);
  cfg.seed = 2;
  EXPECT_NE(run_verify(cfg).to_json().dump(), a);
}

TEST(Verify, SuitesAreIndependentOfEachOther) {
  RunConfig all;
  all.trials = 2;
  RunConfig one = all;
  one.suite = "whitney";
  auto full = run_verify(all).to_json();
  auto part = run_verify(one).to_json();
  nlohmann::json from_full;
  for (const auto& s : full["suites"])
    if (s["suite"] == "whitney") from_full = s;
  EXPECT_EQ(from_full, part["suites"][0]);
}

TEST(Verify, UnknownSuiteIsConfigError) {
  RunConfig cfg;
  cfg.suite = "topology";
  EXPECT_THROW(run_verify(cfg), ConfigError);
}

TEST(Star, ReportCarriesCoefficients) {
  RunConfig cfg;
  Report r = run_star(cfg, "x1", "x2", false);
  EXPECT_EQ(r.extra["ambient"]["series"], "x1*x2 + (-1/2*i)*h");
  EXPECT_EQ(r.extra["ambient"]["coefficients"][1]["c"], "-1/2*i");
  EXPECT_FALSE(r.extra.contains("induced"));
  EXPECT_THROW(run_star(cfg, "x1 +", "x2", false), ConfigError);
  EXPECT_THROW(run_star(cfg, "y1", "x2", false), ConfigError);
}

TEST(Cli, StarExamples) {
  CliRun r = run_cli("star x1 x2 --format text");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("f*g = x1*x2 + (-1/2*i)*h"), std::string::npos) << r.out;
  r = run_cli("star 1 \"x1^2 + 3*x2\" --format text");
  EXPECT_NE(r.out.find("f*g = x1^2 + (3)*x2\n"), std::string::npos) << r.out;
  r = run_cli("star x1 x2 --dim 2 --connection curved-linear-n2");
  EXPECT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["ambient"]["coefficients"][0]["c"], "x1*x2");
  r = run_cli("star x1 x2 --subset axis --format text");
  EXPECT_NE(r.out.find("induced on axis"), std::string::npos) << r.out;
  EXPECT_EQ(run_cli("star \"x1 +\" x2").code, 2);
  EXPECT_EQ(run_cli("star x1").code, 2);
}

TEST(Cli, VerifyExitCodes) {
  CliRun r = run_cli("verify --suite derham --format text");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("star_involution: pass"), std::string::npos) << r.out;
  EXPECT_EQ(run_cli("verify --suite weyl --poisson \"[[0,0],[0,0]]\"").code, 2);
  EXPECT_EQ(run_cli("verify --suite nonsense").code, 2);
  EXPECT_EQ(run_cli("verify --dim 9").code, 2);
}

TEST(Cli, ConfigFileAndFlagsWin) {
  auto cfg = temp_file("wdq_test_cfg.json", R"({"suite": "weyl", "trials": 2, "seed": 5, "format": "json"})");
  auto out = std::filesystem::temp_directory_path() / "wdq_test_out.json";
  CliRun r = run_cli("verify --config " + cfg.string() + " --trials 3 --out " + out.string());
  EXPECT_EQ(r.code, 0) << r.out;
  std::ifstream in(out);
  auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["config"]["trials"], 3);
  EXPECT_EQ(j["config"]["seed"], 5);
  EXPECT_EQ(j["suites"].size(), 1u);
  EXPECT_EQ(j["schema"], kReportSchema);
  EXPECT_EQ(j["version"], kVersion);
  auto broken = temp_file("wdq_test_broken.json", "{ not json");
  EXPECT_EQ(run_cli("verify --config " + broken.string()).code, 2);
}

TEST(Cli, HomologyTables) {
  CliRun r = run_cli("homology --subset two-points --format text");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("   0       2          0         0"), std::string::npos) << r.out;
  r = run_cli("homology --subset point");
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["betti"]["de_rham"], nlohmann::json::array({1, 0, 0}));
  EXPECT_EQ(j["betti"]["duality"], true);
  r = run_cli("homology --hochschild --q-max 2");
  EXPECT_EQ(r.code, 0);
  j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["hochschild"][0].contains("caveat"));
  EXPECT_EQ(run_cli("homology --hochschild --q-max 5").code, 2);
  EXPECT_EQ(run_cli("homology --jet-order 2 --dim 2").code, 2);
}

TEST(Cli, SubsetAndConnectionFiles) {
  auto sub = temp_file("wdq_test_subset.json", subset_to_json(SubsetModel::builtin("cross", 1)).dump());
  auto conn = temp_file("wdq_test_conn.json", connection_to_json(ConnectionInput::flat(1)).dump());
  CliRun r = run_cli("homology --subset " + sub.string() + " --connection " + conn.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(nlohmann::json::parse(r.out)["betti"]["de_rham"], nlohmann::json::array({1, 0, 0}));
}
