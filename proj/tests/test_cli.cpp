#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "framescope/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(FRAMESCOPE_CLI) + " " + args + " 2>/dev/null";
  Outcome o{0, {}};
  FILE* pipe = popen(cmd.c_str(), "r");
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) o.out.append(buf, n);
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("framescope_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("flow --no-such-flag").code, 2);
  EXPECT_EQ(run("gen --kind nonsense").code, 2);
  EXPECT_EQ(run("wasserstein " + path("missing.json") + " " + path("missing.json")).code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, GenAndWasserstein) {
  ASSERT_EQ(run("gen --kind random-unit-norm --d 2 --n 4 --seed 1 --out " + path("a.json")).code, 0);
  ASSERT_EQ(run("gen --kind perturbed-onb --d 2 --n 4 --seed 2 --mag 0.2 --out " + path("b.json")).code, 0);
  const auto r = run("wasserstein " + path("a.json") + " " + path("b.json") + " -p 2 --plan " + path("plan.csv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_GT(std::stod(r.out), 0.0);
  EXPECT_EQ(slurp(path("plan.csv")).rfind("i,j,mass\n", 0), 0u);
  const auto self = run("wasserstein " + path("a.json") + " " + path("a.json"));
  EXPECT_EQ(std::stod(self.out), 0.0);
}

TEST_F(Cli, FlowIsMonotoneAndReproducible) {
  const std::string args = "flow --gen perturbed-onb --d 2 --n 2 --mag 0.1 --dt 0.01 --eps 0 --out ";
  ASSERT_EQ(run(args + path("t1.csv")).code, 0);
  ASSERT_EQ(run(args + path("t2.csv")).code, 0);
  EXPECT_EQ(slurp(path("t1.csv")), slurp(path("t2.csv")));
  std::ifstream in(path("t1.csv"));
  const auto rows = framescope::read_trajectory_csv(in);
  ASSERT_GT(rows.size(), 2u);
  for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_LE(rows[k].tp, rows[k - 1].tp);
}

TEST_F(Cli, SweepWritesPerSeedFiles) {
  ASSERT_EQ(run("flow --gen perturbed-onb --d 2 --n 2 --sweep 3 --seed 10 --record-every 100 --out " +
                path("s.csv") + " --dump-states " + path("states"))
                .code,
            0);
  for (int s : {10, 11, 12}) {
    EXPECT_TRUE(fs::exists(path("s_seed" + std::to_string(s) + ".csv")));
    EXPECT_TRUE(fs::exists(dir_ / "states" / ("seed" + std::to_string(s)) / "state_000000.json"));
  }
  ASSERT_EQ(run("flow --gen perturbed-onb --d 2 --n 2 --seed 11 --record-every 100 --out " + path("one.csv")).code, 0);
  EXPECT_EQ(slurp(path("one.csv")), slurp(path("s_seed11.csv")));
}

TEST_F(Cli, ConfigFileAndOverrides) {
  std::ofstream(path("c.json")) << R"({"tau": 0.05, "max_steps": 3})";
  ASSERT_EQ(run("jko --gen perturbed-onb --d 2 --n 2 --config " + path("c.json") + " --out " + path("j.csv")).code, 0);
  std::ifstream in(path("j.csv"));
  EXPECT_EQ(framescope::read_trajectory_csv(in).back().step, 3);
  std::ofstream(path("bad.json")) << R"({"taux": 0.05})";
  EXPECT_EQ(run("jko --config " + path("bad.json")).code, 2);
}

TEST_F(Cli, PotentialsAndVerify) {
  ASSERT_EQ(run("gen --kind perturbed-onb --d 2 --n 2 --mag 0 --out " + path("onb.json")).code, 0);
  const auto pot = run("potentials " + path("onb.json") + " --p 4");
  ASSERT_EQ(pot.code, 0);
  const auto j = framescope::json::parse(pot.out);
  EXPECT_EQ(j["pfp"].get<double>(), 0.5);
  EXPECT_TRUE(j["diagnostics"]["is_tight"].get<bool>());
  EXPECT_EQ(run("verify --suite all --seeds 10 --quiet").code, 0);
}

TEST_F(Cli, ReplayWitness) {
  std::ofstream(path("w.json")) << R"({"check": "tp-operator", "tight_tol": 1e-8,
    "mu": {"dim": 2, "points": [[1, 0], [0, 1]], "weights": [0.75, 0.25]}})";
  const auto r = run("verify --replay " + path("w.json"));
  EXPECT_EQ(r.code, 0) << r.out;
}
