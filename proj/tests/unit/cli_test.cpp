#include "esq/cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

const fs::path kScenarios = ESQ_SCENARIO_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = esq::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("esq_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string scenario(const char* file) { return (kScenarios / file).string(); }

TEST(Cli, ValidateBrokenModelFails) {
  const auto dir = scratch("broken");
  const Result r = run({"validate", "--scenario", scenario("broken_model.json"), "--out", dir.string()});
  EXPECT_EQ(r.code, esq::cli::kExitCheckFailed);
  EXPECT_NE(r.out.find("FAIL validate_model"), std::string::npos);
  const auto report = nlohmann::json::parse(slurp(dir / "validate_report.json"));
  EXPECT_FALSE(report["pass"].get<bool>());
}

TEST(Cli, ValidateCataloguedModelsPass) {
  for (const char* file : {"mminf.json", "state_dependent.json", "atom_service.json"}) {
    const auto dir = scratch("valid");
    EXPECT_EQ(run({"validate", "--scenario", scenario(file), "--out", dir.string()}).code,
              esq::cli::kExitOk)
        << file;
  }
}

TEST(Cli, BadInputExitsTwo) {
  const auto dir = scratch("bad");
  EXPECT_EQ(run({"validate", "--scenario", (dir / "missing.json").string()}).code,
            esq::cli::kExitBadInput);
  {
    std::ofstream f(dir / "garbled.json");
    f << "{\"model\": {\"Lambda\": ";
  }
  const Result garbled = run({"bounds", "--scenario", (dir / "garbled.json").string()});
  EXPECT_EQ(garbled.code, esq::cli::kExitBadInput);
  EXPECT_NE(garbled.err.find("invalid scenario"), std::string::npos);
  {
    std::ofstream f(dir / "no_phi.json");
    f << R"({"model": {"Lambda": 1}})";
  }
  EXPECT_EQ(run({"validate", "--scenario", (dir / "no_phi.json").string()}).code,
            esq::cli::kExitBadInput);
  EXPECT_EQ(run({"frobnicate"}).code, esq::cli::kExitBadInput);
  EXPECT_EQ(run({"verify"}).code, esq::cli::kExitBadInput);
  EXPECT_EQ(run({"verify", "--scenario", scenario("mminf.json"), "--reps", "0"}).code,
            esq::cli::kExitBadInput);
}

TEST(Cli, BoundsAreByteDeterministic) {
  const auto a = scratch("bounds_a");
  const auto b = scratch("bounds_b");
  for (const auto& dir : {a, b}) {
    const Result r = run({"bounds", "--scenario", scenario("mminf.json"), "--seed", "3",
                          "--reps", "1000", "--out", dir.string()});
    ASSERT_EQ(r.code, esq::cli::kExitOk) << r.err;
  }
  for (const char* f : {"bounds.json", "bound_curve.csv", "busy_cdf.csv"}) {
    const std::string text = slurp(a / f);
    EXPECT_FALSE(text.empty()) << f;
    EXPECT_EQ(text, slurp(b / f)) << f;
  }
  EXPECT_EQ(slurp(a / "bound_curve.csv").rfind("t,tv_bound,tv_empirical,tv_empirical_ci_hi\n", 0), 0u);

  // Every number in the report is tagged.
  const auto j = nlohmann::json::parse(slurp(a / "bounds.json"));
  for (const auto& [key, value] : j["plan"].items()) {
    EXPECT_TRUE(value.contains("provenance")) << key;
  }
  EXPECT_EQ(j["plan"]["er0_k"]["provenance"], "empirical+3se");
}

TEST(Cli, SimulateWritesCsv) {
  const auto dir = scratch("simulate");
  const Result r = run({"simulate", "--scenario", scenario("atom_service.json"), "--reps", "500",
                        "--out", dir.string()});
  ASSERT_EQ(r.code, esq::cli::kExitOk) << r.err;
  EXPECT_EQ(slurp(dir / "events.csv").rfind("time,kind,n_after,x0_after\n", 0), 0u);
  const std::string regen = slurp(dir / "regenerations.csv");
  EXPECT_EQ(regen.rfind("cycle,sigma,zeta,r\n", 0), 0u);
  EXPECT_EQ(std::count(regen.begin(), regen.end(), '\n'), 501);
}

TEST(Cli, VerifyStandardScenarioPasses) {
  const auto dir = scratch("verify");
  const Result r = run({"verify", "--scenario", scenario("mminf.json"), "--seed", "42",
                        "--out", dir.string()});
  EXPECT_EQ(r.code, esq::cli::kExitOk) << r.out << r.err;
  const auto report = nlohmann::json::parse(slurp(dir / "verify_report.json"));
  std::vector<std::string> names;
  for (const auto& c : report["checks"]) names.push_back(c["name"].get<std::string>());
  for (const char* want : {"validate_model", "poisson_law", "busy_mean", "busy_cdf",
                           "busy_laplace", "busy_moment_bound", "domination", "coupling_plan",
                           "tv_bound"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
  }
  EXPECT_NE(std::find(names.begin(), names.end(), "lorden/history-mixture/k=3"), names.end());
}

TEST(Cli, VerifyBrokenModelFails) {
  const auto dir = scratch("verify_broken");
  EXPECT_EQ(run({"verify", "--scenario", scenario("broken_model.json"), "--out", dir.string()}).code,
            esq::cli::kExitCheckFailed);
}

}  // namespace
