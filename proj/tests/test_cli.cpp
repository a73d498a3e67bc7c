#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "urysohn/urysohn.hpp"

using namespace urysohn;
namespace fs = std::filesystem;

namespace {

const fs::path kSamples = SAMPLES_DIR;

struct Run {
  int code;
  std::string out, err;
};

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("urysohn_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name, std::ios::binary) << text;
    return path_ / name;
  }

 private:
  fs::path path_;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

Run run_sample(const std::string& command, const std::string& sample, const fs::path& out,
               std::vector<std::string> extra = {}) {
  std::vector<std::string> args{command, "--config", (kSamples / sample).string(), "--out", out.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  return run_cli(args);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

GridFunction read_grid(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return read_grid_function_csv(f);
}

bool bitwise_equal(const GridFunction& a, const GridFunction& b) {
  return a.domain().same_as(b.domain()) && a.dim() == b.dim() &&
         std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

}  // namespace

struct SampleCase {
  std::string command, config;
  std::vector<std::string> outputs;
};

void PrintTo(const SampleCase& c, std::ostream* os) { *os << c.command << ' ' << c.config; }

class Samples : public ::testing::TestWithParam<SampleCase> {};

TEST_P(Samples, RunsCleanly) {
  const auto& c = GetParam();
  TempDir dir;
  const auto r = run_sample(c.command, c.config, dir.path());
  EXPECT_EQ(r.code, 0) << r.err << r.out;
  EXPECT_TRUE(r.err.empty()) << r.err;
  for (const auto& name : c.outputs) EXPECT_TRUE(fs::exists(dir.path() / name)) << name;
}

INSTANTIATE_TEST_SUITE_P(
    AllSamples, Samples,
    ::testing::Values(SampleCase{"holder-estimate", "holder_abs_pow.json", {"holder.csv", "function.csv"}},
                      SampleCase{"holder-estimate", "holder_log_refinement.json", {"refinement.csv"}},
                      SampleCase{"apply", "apply_hammerstein.json", {"output.csv"}},
                      SampleCase{"derivative-check", "derivative_check_urysohn.json", {"taylor.csv"}},
                      SampleCase{"derivative-check", "derivative_check_hammerstein.json", {"taylor.csv"}},
                      SampleCase{"derivative-check", "derivative_check_nemytskii.json", {"taylor.csv"}},
                      SampleCase{"nystrom-convergence", "nystrom_trapezoid.json", {"convergence.csv"}},
                      SampleCase{"nystrom-convergence", "nystrom_gauss_legendre.json", {"convergence.csv"}},
                      SampleCase{"ide", "ide_orbit.json", {"orbit.csv", "final_state.csv"}},
                      SampleCase{"fixed-point", "fixed_point.json", {"newton.csv", "u_star.csv"}},
                      SampleCase{"verify-all", "verify_all.json",
                                 {"pathology_log.csv", "pathology_weierstrass.csv", "calculus.csv", "bounds.csv",
                                  "smoothing.csv", "summary.csv"}}),
    [](const auto& info) {
      std::string n = info.param.config.substr(0, info.param.config.find('.'));
      return n;
    });

TEST(Cli, HolderOutputMatchesLibrary) {
  TempDir dir;
  ASSERT_EQ(run_sample("holder-estimate", "holder_abs_pow.json", dir.path()).code, 0);
  const auto u = GridFunction::sample(DiscreteDomain::uniform_interval(-1, 1, 1001), abs_pow(0.5));
  EXPECT_TRUE(bitwise_equal(read_grid(dir.path() / "function.csv"), u));
  std::ostringstream expect;
  expect << "alpha,sup_norm,seminorm,norm,argmax_i,argmax_j\n";
  for (double a : {0.25, 0.5, 1.0}) {
    const auto r = holder_norm(u, a);
    expect << detail::format_double(a) << ',' << detail::format_double(r.sup_norm) << ','
           << detail::format_double(r.seminorm) << ',' << detail::format_double(r.norm) << ','
           << r.argmax_pair.first << ',' << r.argmax_pair.second << '\n';
  }
  EXPECT_EQ(slurp(dir.path() / "holder.csv"), expect.str());
}

TEST(Cli, RefinementReportsMonotonicity) {
  TempDir dir;
  const auto r = run_sample("holder-estimate", "holder_log_refinement.json", dir.path());
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("strictly_increasing[alpha=0.5]=true"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("strictly_increasing[alpha=1]=true"), std::string::npos) << r.out;
}

TEST(Cli, ApplyOutputMatchesLibraryBitwise) {
  TempDir dir;
  ASSERT_EQ(run_sample("apply", "apply_hammerstein.json", dir.path()).code, 0);
  const auto mu = lebesgue_rule(-5, 5, 401, Scheme::trapezoid);
  HammersteinOperator op(laplace_dispersal(1), beverton_holt(2, 1), mu);
  const auto expect = op.apply(GridFunction::constant(mu.domain_ptr(), 1.0));
  EXPECT_TRUE(bitwise_equal(read_grid(dir.path() / "output.csv"), expect));
}

TEST(Cli, FixedPointMatchesLibraryBitwise) {
  TempDir dir;
  const auto r = run_sample("fixed-point", "fixed_point.json", dir.path());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("converged=true"), std::string::npos);
  const auto u0 = read_grid(kSamples / "bump_u0.csv");
  const auto mu = lebesgue_rule(-10, 10, 401, Scheme::trapezoid);
  HammersteinOperator op(laplace_dispersal(1), beverton_holt(2, 1), mu);
  const auto u0_on_rule = GridFunction(mu.domain_ptr(), 1, std::vector<double>(u0.values().begin(), u0.values().end()));
  const auto res = newton_fixed_point(op, u0_on_rule, {.tol = 1e-10, .max_iter = 10, .pre_iterations = 15});
  EXPECT_TRUE(bitwise_equal(read_grid(dir.path() / "u_star.csv"), res.u_star));
}

TEST(Cli, CsvRoundTripIsBitwise) {
  TempDir dir;
  ASSERT_EQ(run_sample("ide", "ide_orbit.json", dir.path()).code, 0);
  const auto state = read_grid(dir.path() / "final_state.csv");
  std::ostringstream again;
  write_csv(again, state);
  EXPECT_EQ(again.str(), slurp(dir.path() / "final_state.csv"));
}

TEST(Cli, VerifyAllIsDeterministic) {
  TempDir a, b;
  ASSERT_EQ(run_sample("verify-all", "verify_all.json", a.path()).code, 0);
  ASSERT_EQ(run_sample("verify-all", "verify_all.json", b.path(), {"--threads", "1"}).code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a.path())) {
    ++files;
    EXPECT_EQ(slurp(e.path()), slurp(b.path() / e.path().filename())) << e.path().filename();
  }
  EXPECT_EQ(files, 6u);
}

TEST(Cli, SeedFlagOverridesConfig) {
  TempDir same, other;
  TempDir base;
  ASSERT_EQ(run_sample("derivative-check", "derivative_check_urysohn.json", base.path()).code, 0);
  ASSERT_EQ(run_sample("derivative-check", "derivative_check_urysohn.json", same.path(), {"--seed", "7"}).code, 0);
  ASSERT_EQ(run_sample("derivative-check", "derivative_check_urysohn.json", other.path(), {"--seed", "8"}).code, 0);
  EXPECT_EQ(slurp(base.path() / "taylor.csv"), slurp(same.path() / "taylor.csv"));
  EXPECT_NE(slurp(base.path() / "taylor.csv"), slurp(other.path() / "taylor.csv"));
}

TEST(Cli, UnknownKeyIsInputError) {
  TempDir dir;
  const auto cfg = dir.write("c.json", R"({"domain": {"a": 0, "b": 1, "N": 11},
    "function": {"generator": "sin"}, "exponents": [0.5], "exponent": 1})");
  const auto r = run_cli({"holder-estimate", "--config", cfg.string(), "--out", dir.path().string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("exponent"), std::string::npos) << r.err;
}

TEST(Cli, MissingSeedIsInputError) {
  TempDir dir;
  const auto cfg = dir.write("c.json", R"({"operator": "nemytskii", "growth": {"name": "ricker", "params": [2]},
    "rule": {"a": 0, "b": 1, "N": 11}, "function": {"constant": 0.5},
    "direction": {"generator": "random_pl"}})");
  const auto r = run_cli({"derivative-check", "--config", cfg.string(), "--out", dir.path().string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("seed"), std::string::npos) << r.err;
  const auto ok = run_cli({"derivative-check", "--config", cfg.string(), "--out", dir.path().string(),
                           "--seed", "1"});
  EXPECT_EQ(ok.code, 0) << ok.err;
}

TEST(Cli, MalformedCsvNamesLine) {
  TempDir dir;
  dir.write("u.csv", "x,u0\n0,1\n0.5,oops\n1,2\n");
  const auto cfg = dir.write("c.json", R"({"function": {"csv": "u.csv"}, "exponents": [1]})");
  const auto r = run_cli({"holder-estimate", "--config", cfg.string(), "--out", dir.path().string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("u.csv"), std::string::npos) << r.err;
}

TEST(Cli, MalformedJsonNamesLine) {
  TempDir dir;
  const auto cfg = dir.write("c.json", "{\n  \"exponents\": [1],\n  \"function\": {,}\n}\n");
  const auto r = run_cli({"holder-estimate", "--config", cfg.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST(Cli, CommandMismatchAndBadArguments) {
  TempDir dir;
  EXPECT_EQ(run_sample("apply", "holder_abs_pow.json", dir.path()).code, 2);
  EXPECT_EQ(run_cli({"frobnicate", "--config", (kSamples / "apply_hammerstein.json").string()}).code, 2);
  EXPECT_EQ(run_cli({"apply"}).code, 2);
  EXPECT_EQ(run_cli({"apply", "--config", (dir.path() / "missing.json").string()}).code, 2);
}

TEST(Cli, FailedToleranceIsAssertionFailure) {
  TempDir dir;
  const auto cfg = dir.write("c.json", R"({"kernel": {"name": "gaussian_dispersal", "params": [1]},
    "growth": {"name": "beverton_holt", "params": [2, 1]},
    "function": {"generator": "sin", "scale": 0.4, "shift": 0.5},
    "a": -5, "b": 5, "levels": [25, 50], "scheme": "trapezoid", "reference_N": 800,
    "tolerances": {"rate_min": 3.5}})");
  const auto r = run_cli({"nystrom-convergence", "--config", cfg.string(), "--out", dir.path().string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("pass=false"), std::string::npos) << r.out;
}

TEST(Cli, OrbitOverflowIsAssertionFailure) {
  TempDir dir;
  const auto cfg = dir.write("c.json", R"({"kernel": {"name": "laplace_dispersal", "params": [1]},
    "growth": {"name": "affine", "params": [1, 100, 0]},
    "rule": {"a": -1, "b": 1, "N": 21}, "function": {"constant": 1}, "steps": 50})");
  const auto r = run_cli({"ide", "--config", cfg.string(), "--out", dir.path().string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("overflow"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir.path() / "orbit.csv"));
}
