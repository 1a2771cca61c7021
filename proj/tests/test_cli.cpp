#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hmx/cli/run.hpp"

using namespace hmx;
using hmx::cli::parse_config;
using hmx::cli::RunConfig;

namespace {

RunConfig parse(std::vector<std::string> args) {
  args.insert(args.begin(), "hmx");
  return parse_config(args);
}

std::string tmp_path(const std::string& name) { return ::testing::TempDir() + "hmx_" + name; }

int run_args(std::vector<std::string> args, std::string& out, std::string& err) {
  args.insert(args.begin(), "hmx");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int code = hmx::cli::main(static_cast<int>(argv.size()), argv.data(), o, e);
  out = o.str();
  err = e.str();
  return code;
}

}  // namespace

TEST(Cli, Defaults) {
  const RunConfig c = parse({"grid", "dump"});
  EXPECT_EQ(c.command, "grid");
  EXPECT_EQ(c.action, "dump");
  EXPECT_EQ(c.dim, 1);
  EXPECT_EQ(c.lmax, 6);
  EXPECT_EQ(c.p, 2.0);
  EXPECT_EQ(c.theta, 0.0);
  EXPECT_EQ(c.seed, 42u);
}

TEST(Cli, VerifyFlags) {
  const RunConfig c = parse({"verify", "--check", "tmax", "--d", "1", "--seed", "42"});
  EXPECT_EQ(c.command, "verify");
  EXPECT_EQ(c.checks, std::vector<std::string>{"tmax"});
  const RunConfig both = parse({"verify", "--check", "tmax,ratio"});
  EXPECT_EQ(both.checks, (std::vector<std::string>{"tmax", "ratio"}));
  // global flags may precede the command
  EXPECT_EQ(parse({"--seed", "9", "verify", "--all"}).seed, 9u);
}

TEST(Cli, StrictErrorsNameTheFlag) {
  try {
    parse({"grid", "dump", "--p", "1"});
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("--p"), std::string::npos);
  }
  try {
    parse({"grid", "dump", "--bogus", "3"});
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("--bogus"), std::string::npos);
  }
  EXPECT_THROW(parse({"grid", "dump", "--check", "tmax"}), UsageError);  // verify-only flag
  EXPECT_THROW(parse({"grid"}), UsageError);
  EXPECT_THROW(parse({"verify"}), UsageError);
  EXPECT_THROW(parse({"grid", "dump", "--format", "xml"}), UsageError);
  EXPECT_THROW(parse({}), UsageError);
}

TEST(Cli, ConfigFileRoundTrip) {
  const RunConfig c = parse({"weights", "sweep", "--class", "aptheta", "--theta", "4", "--weight", "onepluspow:4",
                             "--p", "2.5", "--tmin", "0.001", "--d", "2", "--depth", "2"});
  const std::string path = tmp_path("cfg.txt");
  {
    std::ofstream f(path);
    f << c.to_text();
  }
  EXPECT_EQ(parse({"--config", path}), c);
  // explicit flags override the file
  EXPECT_EQ(parse({"--config", path, "--theta", "2"}).theta, 2.0);
  {
    std::ofstream f(path);
    f << "command=grid\naction=dump\nnonsense=1\n";
  }
  EXPECT_THROW(parse({"--config", path}), UsageError);
  std::remove(path.c_str());
}

TEST(Cli, HelpAndVersion) {
  std::string out, err;
  EXPECT_EQ(run_args({"--help"}, out, err), 0);
  EXPECT_NE(out.find("verify"), std::string::npos);
  EXPECT_EQ(run_args({"--version"}, out, err), 0);
  EXPECT_NE(out.find(HMX_VERSION_STRING), std::string::npos);
}

TEST(Cli, GridDumpCsv) {
  std::string out, err;
  ASSERT_EQ(run_args({"grid", "dump", "--d", "1", "--lmax", "2", "--format", "csv"}, out, err), 0) << err;
  std::istringstream in(out);
  const Region r = read_region(in, 1);
  EXPECT_EQ(r.size(), 22u);
  EXPECT_NE(out.find("# lmax=2"), std::string::npos);
  EXPECT_NE(err.find("22 cubes"), std::string::npos);
}

TEST(Cli, KernelTmaxJson) {
  std::string out, err;
  ASSERT_EQ(run_args({"kernel", "tmax", "--x", "0.5", "--y", "1e6"}, out, err), 0) << err;
  const auto j = nlohmann::json::parse(out);
  EXPECT_NEAR(j["t_m"].get<double>(), 6.18034e5, 1.0);
  EXPECT_EQ(j["version"], HMX_VERSION_STRING);
  EXPECT_EQ(j["run_config"]["command"], "kernel");
}

TEST(Cli, MaximalAndWeights) {
  std::string out, err;
  ASSERT_EQ(run_args({"maximal", "eval", "--op", "mtheta", "--theta", "2", "--lmax", "2", "--function", "const:1"}, out,
                     err),
            0)
      << err;
  EXPECT_NE(out.find("x_1,operator,parameter,value"), std::string::npos);
  ASSERT_EQ(run_args({"weights", "sweep", "--weight", "pow:0.5", "--family", "subcubes", "--depth", "1", "--format",
                      "json"},
                     out, err),
            0)
      << err;
  const auto j = nlohmann::json::parse(out);
  EXPECT_EQ(j["table"].size(), 3u);
  EXPECT_NEAR(j["table"][0]["ratio"].get<double>(), 2 / std::sqrt(3.0), 1e-12);
  EXPECT_EQ(run_args({"maximal", "eval", "--op", "nope"}, out, err), 2);
  EXPECT_EQ(run_args({"weights", "sweep", "--weight", "pow:-1", "--family", "subcubes"}, out, err), 2);
  EXPECT_NE(err.find("integrable"), std::string::npos);
}

TEST(Cli, SameConfigSameBytes) {
  std::string a, b, err;
  ASSERT_EQ(run_args({"verify", "--check", "tmax", "--seed", "42"}, a, err), 0) << err;
  ASSERT_EQ(run_args({"verify", "--check", "tmax", "--seed", "42"}, b, err), 0) << err;
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("\"schema_version\""), std::string::npos);
  // --output writes the same report body apart from the recorded path
  const std::string path = tmp_path("v.json");
  ASSERT_EQ(run_args({"verify", "--check", "tmax", "--seed", "42", "--output", path}, a, err), 0) << err;
  std::ifstream f(path);
  std::stringstream s;
  s << f.rdbuf();
  auto file = nlohmann::json::parse(s.str()), stdout_report = nlohmann::json::parse(b);
  EXPECT_EQ(file["checks"], stdout_report["checks"]);
  std::remove(path.c_str());
}
