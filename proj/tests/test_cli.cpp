#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PSWF_CLI) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  EXPECT_NE(p, nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t k = std::fread(buf, 1, sizeof buf, p)) out.append(buf, k);
  const int st = pclose(p);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string table() { return std::string(" --table ") + PSWF_DESK_TABLE; }

std::vector<std::vector<std::string>> csv(const std::string& s) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> r;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) r.push_back(cell);
    rows.push_back(r);
  }
  return rows;
}

// value column of the eval output
std::vector<double> values(const std::string& s) {
  std::vector<double> v;
  for (const auto& r : csv(s))
    if (r.size() == 3 && r[0] != "x") v.push_back(std::stod(r[1]));
  return v;
}

double summary(const std::string& s, const std::string& key) {
  for (const auto& r : csv(s))
    if (r.size() >= 5 && r[3] == key) return std::stod(r[4]);
  ADD_FAILURE() << "no " << key;
  return NAN;
}

std::string without_time(const std::string& s) {
  std::string out;
  for (const auto& r : csv(s)) {
    for (std::size_t i = 0; i < r.size(); ++i)
      if (i != 6) out += r[i] + ",";
    out += "\n";
  }
  return out;
}

TEST(Cli, EvalParityAtZero) {
  const auto even = run("eval" + table() + " --gamma 300 --n 220 --x 0");
  const auto odd = run("eval" + table() + " --gamma 300 --n 221 --x 0");
  ASSERT_EQ(even.code, 0);
  ASSERT_EQ(odd.code, 0);
  EXPECT_GT(std::abs(values(even.out).at(0)), 1e-3);
  EXPECT_LT(std::abs(values(odd.out).at(0)), 1e-12);
}

TEST(Cli, EvalPhaseMatchesBaseline) {
  const std::string pts = " --x -0.99,-0.5,0,0.123,0.7,0.999999";
  const auto a = run("eval" + table() + " --gamma 1000 --n 640 --method phase" + pts);
  const auto b = run("eval" + table() + " --gamma 1000 --n 640 --method xr" + pts);
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  const auto va = values(a.out), vb = values(b.out);
  ASSERT_EQ(va.size(), 6u);
  ASSERT_EQ(vb.size(), 6u);
  double dot = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) dot += va[i] * vb[i];
  const double s = dot < 0.0 ? -1.0 : 1.0;
  for (std::size_t i = 0; i < va.size(); ++i) EXPECT_NEAR(va[i], s * vb[i], 1e-11);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("eval" + table() + " --gamma 300 --n 220 --x 0.9999999999999").code, 3);
  EXPECT_EQ(run("eval" + table() + " --gamma 300 --n 199 --x 0").code, 3);
  EXPECT_EQ(run("eval" + table() + " --gamma 300 --x 0").code, 2);
  EXPECT_EQ(run("eval" + table() + " --gamma 300 --n 220 --x 0 --method xr --kind qs").code, 2);
  EXPECT_EQ(run("build --gamma-min-exp 9 --gamma-max-exp 8 --out /dev/null").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("eval --table /nonexistent/table.bin --gamma 300 --n 220 --x 0").code, 5);
}

TEST(Cli, ChiBenchWithinTolerance) {
  const auto r = run("bench --suite chi" + table() + " --gamma-lo 256 --gamma-hi 512 --gammas 50 --ns 50 --seed 7");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(csv(r.out).at(0).at(0), "gamma");
  EXPECT_LE(summary(r.out, "summary:max_rel_chi_diff"), 1e-13);
}

TEST(Cli, BenchIsDeterministicForASeed) {
  const std::string args = "bench --suite ps" + table() + " --gamma-lo 256 --gamma-hi 2048 --gammas 2 --ns 2 --points 20";
  const auto a = run(args + " --seed 11 --threads 1");
  const auto b = run(args + " --seed 11 --threads 2");
  const auto c = run(args + " --seed 12 --threads 1");
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  ASSERT_EQ(c.code, 0);
  EXPECT_EQ(without_time(a.out), without_time(b.out));
  EXPECT_NE(without_time(a.out), without_time(c.out));
  EXPECT_LE(summary(a.out, "summary:max_abs_ps_diff"), 1e-11);
}

TEST(Cli, TimingSuiteShowsFlatPhaseCost) {
  const auto r = run("bench --suite timing" + table() + " --gamma-lo 512 --gamma-hi 16384 --ns 3 --points 200 --seed 3");
  ASSERT_EQ(r.code, 0);
  EXPECT_LE(summary(r.out, "summary:time_ratio_phase"), 2.0);
  EXPECT_GE(summary(r.out, "summary:time_ratio_xr"), 4.0);
}

TEST(Cli, SmallBuildLoadsAndEvaluates) {
  const auto path = std::filesystem::temp_directory_path() / "pswf_cli_small_table.bin";
  const auto b = run("build --gamma-min-exp 8 --gamma-max-exp 9 --threads 1 --out " + path.string());
  ASSERT_EQ(b.code, 0);
  const auto e = run("eval --table " + path.string() + " --gamma 400 --n 300 --x 0.25");
  const auto ref = run("eval --gamma 400 --n 300 --x 0.25 --method xr");
  const auto beyond = run("eval --table " + path.string() + " --gamma 4000 --n 300 --x 0.25");
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".seconds");
  ASSERT_EQ(e.code, 0);
  ASSERT_EQ(ref.code, 0);
  EXPECT_NEAR(std::abs(values(e.out).at(0)), std::abs(values(ref.out).at(0)), 1e-11);
  EXPECT_EQ(beyond.code, 3);  // gamma beyond the table's range
  EXPECT_EQ(run("eval --table " + path.string() + " --gamma 400 --n 300 --x 0.25").code, 5);  // file gone
}

}  // namespace
