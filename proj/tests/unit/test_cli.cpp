#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

std::string cli() {
  const char* p = std::getenv("DDTUNE_CLI");
  return p ? p : "ddtune";
}

/// Runs the CLI with `args`; stderr is merged into the captured output when
/// `merge` is set.
Run run(const std::string& args, bool merge = false) {
  const std::string cmd = cli() + " " + args + (merge ? " 2>&1" : " 2>/dev/null");
  Run r;
  FILE* f = popen(cmd.c_str(), "r");
  if (!f) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, f)) > 0) r.out.append(buf, n);
  const int status = pclose(f);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ddtune_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpExitsZero) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"gen", "tune-batch", "tune-online", "bounds", "dispersion", "path-study"})
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
}

TEST_F(CliTest, GenIsByteIdentical) {
  const std::string base = "gen --task clustering --n 6 --L 2 --seed 7";
  ASSERT_EQ(run(base + " --out " + path("a.json")).code, 0);
  ASSERT_EQ(run("--out " + path("b.json") + " " + base).code, 0);
  const auto a = slurp(path("a.json"));
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(path("b.json")));
  const auto j = nlohmann::json::parse(a);
  EXPECT_EQ(j["distances"].size(), 2u);
  EXPECT_EQ(j["meta"]["seed"], 7);
  EXPECT_NE(a, run("gen --task clustering --n 6 --L 2 --seed 8").out);
}

TEST_F(CliTest, MissingFlagExitsTwoAndNamesIt) {
  const auto r = run("gen --n 6", true);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("--task"), std::string::npos);
  const auto f = run("bounds --formula gj --d 2", true);
  EXPECT_EQ(f.code, 2);
  EXPECT_NE(f.out.find("q"), std::string::npos);
}

TEST_F(CliTest, BadValuesExitTwo) {
  EXPECT_EQ(run("gen --task clustering --n 1").code, 2);
  EXPECT_EQ(run("bounds --family H9 --n 3").code, 2);
  EXPECT_EQ(run("tune-batch --config " + path("missing.json")).code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
}

TEST_F(CliTest, BoundsFamilyJson) {
  const auto r = run("bounds --family H1 --n 3 --L 1");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["pdim_bound"].get<double>(), 3385.8982672610058646, 1e-8);
  EXPECT_EQ(j["inputs"]["k_G"], 6561);
  EXPECT_EQ(j["header"]["tool"], "ddtune");
  const auto g = nlohmann::json::parse(run("bounds --formula gj --d 2 --q 1 --M 1 --Delta 2 --K 3").out);
  EXPECT_NEAR(g["pdim_bound"].get<double>(), 60.679700005769249452, 1e-10);
}

TEST_F(CliTest, TuneBatchCsvIsThreadIndependent) {
  {
    std::ofstream cfg(path("cfg.json"));
    cfg << R"({"task":"clustering-M1","alpha":{"lo":0.5,"hi":4,"points":6,"symmetric":false,"include_inf":false},)"
        << R"("generate":{"count":6,"n":6}})";
  }
  const std::string base = "tune-batch --config " + path("cfg.json") + " --format csv";
  const auto a = run(base + " --threads 1");
  const auto b = run(base + " --threads 3");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("# ddtune", 0), 0u);
  EXPECT_NE(a.out.find("alpha,beta_0,mean_utility,n_instances"), std::string::npos);
  ASSERT_EQ(run(base + " --out " + path("r.csv")).code, 0);
  EXPECT_EQ(slurp(path("r.csv")), a.out);
}

TEST_F(CliTest, TuneBatchFromInstanceFiles) {
  for (int s = 0; s < 3; ++s)
    ASSERT_EQ(run("gen --task ssl --n-labeled 2 --n-unlabeled 4 --seed " + std::to_string(s) + " --out " +
                  path("i" + std::to_string(s) + ".json"))
                  .code,
              0);
  {
    std::ofstream cfg(path("cfg.json"));
    cfg << R"({"task":"ssl","sigma":{"lo":0.3,"hi":2,"points":4},"instances":[")" << path("i0.json")
        << R"(",")" << path("i1.json") << R"(",")" << path("i2.json") << R"("]})";
  }
  const auto r = run("tune-batch --config " + path("cfg.json") + " --format json");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["utility_table"].size(), 4u);
  EXPECT_TRUE(j["best_param"].contains("sigma"));
}

TEST_F(CliTest, TuneOnlineCsv) {
  const auto r = run("tune-online --task clustering-M1 --T 20 --n 6 --grid-points 5 --lo 0.5 --hi 4 --format csv");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line[0] != 't') ++rows;
  EXPECT_EQ(rows, 20);
  EXPECT_NE(r.out.find("t,cum_utility,cum_best,regret"), std::string::npos);
}

TEST_F(CliTest, OutputDirEnvironment) {
  const std::string cmd = "DDTUNE_OUTPUT_DIR=" + dir_.string() + " ";
  const std::string full = cmd + cli() + " gen --task logreg --m 10 --p 2 --m-val 5 --out rel.json 2>/dev/null";
  ASSERT_EQ(std::system(full.c_str()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "rel.json"));
}
