#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "philap/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "philap");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = philap::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string config(const std::string& name) { return std::string(PHILAP_CONFIG_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("philap_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, VerifyExampleA5) {
  const auto dir = scratch("verify");
  const Outcome o = run({"verify-example", "A5", "--p", "3", "--N", "4", "--r", "3.5", "--gamma", "0.5",
                         "--output-dir", dir.string()});
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.out.find("overall: PASS"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "manifest.txt"));
}

TEST(Cli, IndicesPathological) {
  const auto dir = scratch("indices");
  const Outcome o = run({"indices", "--builtin", "pathological", "--p", "3", "--q", "2", "--eps", "1.9",
                         "--output-dir", dir.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  std::ifstream in(dir / "indices.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "function,lower,upper,lower_at_infinity,upper_at_infinity");
  std::stringstream ss(row);
  std::string name, lo, hi;
  std::getline(ss, name, ',');
  std::getline(ss, lo, ',');
  std::getline(ss, hi, ',');
  EXPECT_NEAR(std::stod(lo), 2.0, 1e-3);
  EXPECT_NEAR(std::stod(hi), 3.0, 1e-3);
}

TEST(Cli, SolveWithoutConfigIsUsageError) { EXPECT_EQ(run({"solve", "--output-dir", scratch("nocfg").string()}).code, 2); }

TEST(Cli, UnknownCommand) { EXPECT_EQ(run({"frobnicate"}).code, 2); }

TEST(Cli, UnknownFlag) { EXPECT_EQ(run({"check", "--bogus", "1"}).code, 2); }

TEST(Cli, UnknownConfigKey) {
  const auto dir = scratch("badkey");
  const Outcome o = run({"check", "--config", config("a5.ini"), "--set", "grid.spacing=3", "--output-dir",
                         dir.string()});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("unknown key"), std::string::npos);
}

TEST(Cli, NegativeControlsExitOne) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"neg_hf1.ini", "H(f)1 FAIL"}, {"neg_hf3.ini", "H(f)3 FAIL"}, {"neg_ha2.ini", "H(a)2 FAIL"}};
  for (const auto& [file, line] : cases) {
    const auto dir = scratch("neg");
    const Outcome o = run({"check", "--config", config(file), "--output-dir", dir.string()});
    EXPECT_EQ(o.code, 1) << file;
    EXPECT_NE(o.out.find(line), std::string::npos) << file << '\n' << o.out;
    EXPECT_NE(slurp(dir / "hypotheses.txt").find(line), std::string::npos);
  }
}

TEST(Cli, MountainPassDeterministic) {
  const auto a = scratch("mp_a"), b = scratch("mp_b");
  const Outcome oa = run({"mountain-pass", "--config", config("a5.ini"), "--output-dir", a.string()});
  const Outcome ob = run({"mountain-pass", "--config", config("a5.ini"), "--output-dir", b.string()});
  ASSERT_EQ(oa.code, 0) << oa.err << oa.out;
  ASSERT_EQ(ob.code, 0);
  for (const char* f : {"solution.csv", "convergence.csv", "mp_convergence.csv", "degiorgi.csv", "threshold.csv",
                        "manifest.txt"}) {
    EXPECT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const std::string sol = slurp(a / "solution.csv");
  EXPECT_EQ(sol.substr(0, sol.find('\n')), "x,u_lambda,v_lambda,u_under");
  EXPECT_EQ(sol.find('\r'), std::string::npos);
  const std::string man = slurp(a / "manifest.txt");
  EXPECT_NE(man.find("config_hash=fnv1a64:"), std::string::npos);
  EXPECT_NE(man.find("seed=20240601"), std::string::npos);
}

TEST(Cli, SeedOverrideChangesManifest) {
  const auto dir = scratch("seed");
  const Outcome o = run({"lambda-star", "--config", config("a5.ini"), "--seed", "5", "--output-dir", dir.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(slurp(dir / "manifest.txt").find("seed=5"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "kappa_curve.csv"));
  EXPECT_NE(slurp(dir / "threshold.csv").find("MuchGreater"), std::string::npos);
}

TEST(Cli, ConjugateAndSobolev) {
  const auto dir = scratch("conj");
  EXPECT_EQ(run({"conjugate", "--builtin", "power", "--p", "3", "--output-dir", dir.string()}).code, 0);
  EXPECT_EQ(run({"sobolev-conjugate", "--builtin", "power", "--p", "2", "--N", "4", "--output-dir", dir.string()})
                .code,
            0);
  EXPECT_TRUE(fs::exists(dir / "conjugate.csv"));
  EXPECT_TRUE(fs::exists(dir / "sobolev_conjugate.csv"));
}

TEST(Cli, DegiorgiFromSolutionCsv) {
  const auto dir = scratch("dg");
  ASSERT_EQ(run({"solve", "--config", config("a5.ini"), "--output-dir", dir.string()}).code, 0);
  const Outcome o = run({"degiorgi", "--config", config("a5.ini"), "--input", (dir / "solution.csv").string(),
                         "--output-dir", dir.string()});
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(slurp(dir / "degiorgi.csv").substr(0, 10), "n,k_n,y_n\n");
}
