#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fbp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(FBP_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, PrecisionTable) {
  const auto r = run("precision --kernel rect --recon linear");
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,lhs,rhs,residual");
  double residual[4];
  for (int n = 0; n < 4; ++n) {
    ASSERT_TRUE(std::getline(in, line));
    residual[n] = std::stod(line.substr(line.rfind(',') + 1));
  }
  EXPECT_LT(std::abs(residual[0]), 1e-8);
  EXPECT_LT(std::abs(residual[1]), 1e-8);
  EXPECT_LT(std::abs(residual[2]), 1e-8);
  EXPECT_NEAR(residual[3], 0.5, 1e-6);
}

TEST_F(Cli, SynthThenEstimateRecoversPlantedMotion) {
  const auto s = run("synth --seed 7 --packets 2 --out " + path("s.txt"));
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_TRUE(fs::exists(path("s.truth.txt")));
  const auto e = run("estimate --in " + path("s.txt") + " --grad fbp --kernel rect --score var --out " + path("est.csv"));
  ASSERT_EQ(e.code, 0) << e.err;
  const auto j = nlohmann::json::parse(e.out);
  EXPECT_EQ(j["n_packets"], 2);
  ASSERT_TRUE(j["rms"].is_number());
  EXPECT_LT(j["rms"].get<double>(), 0.02 * std::sqrt(1.0 + 0.64 + 1.44));
  EXPECT_EQ(j["per_packet"].size(), 2u);
  EXPECT_TRUE(j.contains("config"));
  EXPECT_NE(slurp(path("est.csv")).find("packet,t_ref,theta1"), std::string::npos);
}

TEST_F(Cli, RepeatedRunsAreByteIdentical) {
  ASSERT_EQ(run("synth --seed 3 --points 20 --events-per-point 20 --packets 2 --out " + path("a.txt")).code, 0);
  ASSERT_EQ(run("synth --seed 3 --points 20 --events-per-point 20 --packets 2 --out " + path("b.txt")).code, 0);
  EXPECT_EQ(slurp(path("a.txt")), slurp(path("b.txt")));
  EXPECT_EQ(slurp(path("a.truth.txt")), slurp(path("b.truth.txt")));
  const std::string est = "estimate --ne 400 --in " + path("a.txt");
  ASSERT_EQ(run(est + " --out " + path("e1.csv") + " --json " + path("e1.json")).code, 0);
  ASSERT_EQ(run(est + " --out " + path("e2.csv") + " --json " + path("e2.json")).code, 0);
  EXPECT_EQ(slurp(path("e1.csv")), slurp(path("e2.csv")));
  EXPECT_EQ(slurp(path("e1.json")), slurp(path("e2.json")));
  const std::string bin = "bin --ne 400 --theta 1,-0.8,1.2 --width 40 --height 30 --delta 0.05 --in " + path("a.txt");
  ASSERT_EQ(run(bin + " --out " + path("f1.csv")).code, 0);
  ASSERT_EQ(run(bin + " --out " + path("f2.csv")).code, 0);
  EXPECT_EQ(slurp(path("f1.csv")), slurp(path("f2.csv")));
}

TEST_F(Cli, BinWritesFrameCsv) {
  ASSERT_EQ(run("synth --points 10 --events-per-point 10 --packets 1 --out " + path("s.txt")).code, 0);
  const auto r = run("bin --ne 100 --width 8 --height 6 --delta 0.25 --in " + path("s.txt") + " --out " + path("f.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(slurp(path("f.csv")));
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
  }
  EXPECT_EQ(rows, 6);
  EXPECT_NEAR(nlohmann::json::parse(r.out)["frame_sum"].get<double>(), 100.0, 1e-9);
}

TEST_F(Cli, BiasSmallGrid) {
  const auto r = run("bias --grid-lo -2 --grid-hi 2 --grid-n 3 --out " + path("b.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["evaluations"], 27);
  EXPECT_EQ(j["modes"].size(), 3u);
  std::istringstream in(slurp(path("b.csv")));
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3 * 27 * 3);
}

TEST_F(Cli, GradReport) {
  const auto r = run("grad --theta 0.5,0.5,0.5 --fd-step 1.0");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("mode,axis,g_analytic,g_fd,bias\n", 0), 0u);
  EXPECT_NE(r.out.find("\nnaive,1,0,"), std::string::npos);
  EXPECT_NE(r.out.find("\nfbp-linear,3,"), std::string::npos);
}

TEST_F(Cli, ArgumentErrorsExitTwo) {
  for (const std::string args : {"", "bogus", "precision --kernel box", "estimate --ne abc --in x",
                                 "bias --grid-n 1", "estimate --p 1.5 --in x", "synth"}) {
    const auto r = run(args);
    EXPECT_EQ(r.code, 2) << args;
    const auto line = r.err.substr(0, r.err.find('\n'));
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["error"]["kind"], "argument") << args;
  }
}

TEST_F(Cli, RuntimeErrorsExitOne) {
  auto r = run("estimate --in " + path("missing.txt"));
  EXPECT_EQ(r.code, 1);
  auto j = nlohmann::json::parse(r.err.substr(0, r.err.find('\n')));
  EXPECT_EQ(j["error"]["code"], "IoError");

  std::ofstream(path("bad.txt")) << "0.1 1 2 1\nabc\n";
  r = run("estimate --in " + path("bad.txt"));
  EXPECT_EQ(r.code, 1);
  j = nlohmann::json::parse(r.err.substr(0, r.err.find('\n')));
  EXPECT_EQ(j["error"]["code"], "ParseError");
  EXPECT_NE(j["error"]["message"].get<std::string>().find("line 2"), std::string::npos);
}

TEST_F(Cli, NonMonotonicTimestampsWarn) {
  std::ofstream(path("nm.txt")) << "0.2 120 90 1\n0.1 121 90 0\n0.3 122 91 1\n";
  const auto r = run("bin --ne 3 --in " + path("nm.txt") + " --out " + path("f.csv"));
  EXPECT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.err.substr(0, r.err.find('\n')));
  EXPECT_EQ(j["warning"]["code"], "NonMonotonicTimestamp");
}
