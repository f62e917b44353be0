#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "dabs/commands.hpp"
#include "dabs/errors.hpp"
#include "dabs/scenario.hpp"
#include "doctest.h"

using namespace dabs;
namespace fs = std::filesystem;

namespace {

std::atomic<int> dir_counter{0};

/* fresh directory tree per test, removed on destruction */
struct TempTree {
  fs::path root;
  TempTree() {
    root = fs::temp_directory_path() /
           ("dabs_cmd_" + std::to_string(::getpid()) + "_" +
            std::to_string(dir_counter++));
    fs::create_directories(root);
  }
  ~TempTree() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  std::string write(const std::string& name, const std::string& text) {
    fs::path p = root / name;
    std::ofstream os(p);
    os << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (root / name).string(); }
};

/* 1-D contraction x' = e^{-tau} x + (1 - e^{-tau}) u: every cell can be
 * steered into the target, so the commands all have work to do */
std::string lti_cfg(const std::string& outdir, const std::string& extra = "") {
  return "[system]\nkind = lti\nA = -1\nB = 1\nE = 0\ntau = 0.5\n"
         "[state]\nbox = -1 ; 1\neta = 0.125\n"
         "[input]\nbox = -1 ; 1\nlevels = -0.75 ; -0.25 ; 0.25 ; 0.75\n"
         "[scenario]\nseed = 9\nepsilon = 0.01\nbeta = 0.01\n"
         "[objective]\nkind = reach\ntarget = -0.5 ; 0.5\nx_init = 0.9\n"
         "[simulate]\nhorizon = 50\nruns = 3\n"
         "[output]\ndir = " +
         outdir + "\n" + extra;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(bool(is));
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::istringstream is(slurp(path));
  std::vector<std::string> lines;
  std::string l;
  while (std::getline(is, l))
    if (!l.empty()) lines.push_back(l);
  return lines;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

constexpr unsigned kQ = 2;  /* n^2 + n for the 1-D system */

}  // namespace

TEST_SUITE("commands") {

TEST_CASE("sample-size writes the exact scenario and pac counts") {
  TempTree t;
  std::string cfg = t.write("run.cfg", lti_cfg(t.path("out")));
  CHECK(run_command("sample-size", cfg, {}) == kExitOk);
  auto lines = read_lines(t.path("out/sample_size.csv"));
  REQUIRE(lines.size() == 2);
  auto f = csv_fields(lines[1]);
  REQUIRE(f.size() == 8);
  double bpp = 0.01 / (8.0 * 4.0);
  CHECK(std::stoull(f[6]) == sample_size(0.01, bpp, kQ));
  CHECK(std::stoull(f[7]) == pac_sample_size(0.01, bpp, kQ));
  CHECK(f[2] == "8");
  CHECK(f[3] == "4");
}

TEST_CASE("abstract reports the build and is deterministic across workers") {
  TempTree t;
  std::string cfg1 = t.write("a.cfg", lti_cfg(t.path("w1")));
  std::string cfg2 = t.write("b.cfg", lti_cfg(t.path("w2")));
  CHECK(run_command("abstract", cfg1, {.workers = 1}) == kExitOk);
  CHECK(run_command("abstract", cfg2, {.workers = 2}) == kExitOk);
  CHECK(slurp(t.path("w1/abstraction.txt")) == slurp(t.path("w2/abstraction.txt")));

  auto lines = read_lines(t.path("w1/abstract_summary.csv"));
  REQUIRE(lines.size() == 5);  /* header + one row per input */
  auto f = csv_fields(lines[1]);
  /* gamma for the disturbance-free mode with L = 1: 4 * eps * eta */
  CHECK(std::stod(f[1]) == doctest::Approx(4.0 * 0.01 * 0.125).epsilon(1e-12));
  CHECK(std::stod(f[2]) == 1.0);
  CHECK(std::stoull(f[5]) == sample_size(0.01, 0.01 / 32.0, kQ));
  CHECK(f[9] == "no_disturbance_n");
  CHECK(f[12] == "0");  /* the contraction never leaves the box */
}

TEST_CASE("synthesize wins everywhere on the contraction and caches the abstraction") {
  TempTree t;
  std::string cfg = t.write("run.cfg", lti_cfg(t.path("out")));
  CHECK(run_command("synthesize", cfg, {}) == kExitOk);
  auto lines = read_lines(t.path("out/synthesize_summary.csv"));
  REQUIRE(lines.size() == 2);
  auto f = csv_fields(lines[1]);
  CHECK(f[0] == "reach");
  CHECK(f[1] == "8");
  CHECK(std::stoull(f[3]) == 8);  /* every cell reaches the target */
  CHECK(f[6] == "1");              /* x_init wins */
  std::string ctrl_bytes = slurp(t.path("out/controller.txt"));

  /* second run must reuse out/abstraction.txt and reproduce the controller */
  CHECK(run_command("synthesize", cfg, {}) == kExitOk);
  CHECK(slurp(t.path("out/controller.txt")) == ctrl_bytes);

  /* a stale abstraction built from other parameters is rejected, not reused */
  std::string bumped = lti_cfg(t.path("out"));
  bumped.replace(bumped.find("epsilon = 0.01"), 14, "epsilon = 0.02");
  std::string cfg_mismatch = t.write("mismatch.cfg", bumped);
  CHECK(run_command("synthesize", cfg_mismatch, {}) == kExitConfig);
}

TEST_CASE("synthesize exits with the empty-winning code when no cell certifies") {
  TempTree t;
  /* the target holds no full cell, so its inner approximation is empty */
  std::string text = lti_cfg(t.path("out"));
  text.replace(text.find("target = -0.5 ; 0.5"), 19, "target = -0.01 ; 0.01");
  std::string cfg = t.write("run.cfg", text);
  CHECK(run_command("synthesize", cfg, {}) == kExitEmpty);
}

TEST_CASE("simulate reaches the target on every run, reproducibly") {
  TempTree t;
  std::string cfg = t.write("run.cfg", lti_cfg(t.path("out")));
  CHECK(run_command("simulate", cfg, {}) == kExitOk);
  auto verdicts = read_lines(t.path("out/verdicts.csv"));
  REQUIRE(verdicts.size() == 4);  /* header + 3 runs */
  for (size_t r = 1; r < verdicts.size(); ++r) {
    auto f = csv_fields(verdicts[r]);
    CHECK(f[2] == "1");
    CHECK(f[4].find("reached the target") != std::string::npos);
  }
  auto traj = read_lines(t.path("out/trajectories.csv"));
  CHECK(traj[0] == "run,step,phase,cell,x0,u0");
  CHECK(traj.size() > 4);

  std::string verdict_bytes = slurp(t.path("out/verdicts.csv"));
  std::string traj_bytes = slurp(t.path("out/trajectories.csv"));
  CHECK(run_command("simulate", cfg, {}) == kExitOk);
  CHECK(slurp(t.path("out/verdicts.csv")) == verdict_bytes);
  CHECK(slurp(t.path("out/trajectories.csv")) == traj_bytes);
}

TEST_CASE("sweep tables match direct recomputation and are monotone") {
  TempTree t;
  std::string beta_cfg = t.write("beta.cfg",
                                 lti_cfg(t.path("b"),
                                         "[sweep]\nkind = beta_vs_n\n"
                                         "values = 0.2 0.1 0.05 0.01\n"));
  CHECK(run_command("sweep", beta_cfg, {}) == kExitOk);
  auto lines = read_lines(t.path("b/sweep.csv"));
  REQUIRE(lines.size() == 5);
  uint64_t prev = 0;
  for (size_t i = 1; i < lines.size(); ++i) {
    auto f = csv_fields(lines[i]);
    double beta = std::stod(f[1]);
    uint64_t n = std::stoull(f[3]);
    CHECK(n == sample_size(0.01, beta, kQ));
    CHECK(n > prev);  /* shrinking beta demands more samples */
    prev = n;
  }

  std::string eps_cfg = t.write("eps.cfg",
                                lti_cfg(t.path("e"),
                                        "[sweep]\nkind = eps_vs_n\n"
                                        "values = 0.05 0.1 0.2\n"));
  CHECK(run_command("sweep", eps_cfg, {}) == kExitOk);
  lines = read_lines(t.path("e/sweep.csv"));
  REQUIRE(lines.size() == 4);
  prev = std::numeric_limits<uint64_t>::max();
  for (size_t i = 1; i < lines.size(); ++i) {
    auto f = csv_fields(lines[i]);
    uint64_t n = std::stoull(f[3]);
    CHECK(n == sample_size(std::stod(f[0]), 0.01, kQ));
    CHECK(n < prev);  /* growing tolerance relaxes the count */
    prev = n;
  }

  std::string g_cfg = t.write("g.cfg",
                              lti_cfg(t.path("g"),
                                      "[sweep]\nkind = eps_vs_gamma\n"
                                      "values = 0.01 0.05 0.1\n"));
  CHECK(run_command("sweep", g_cfg, {}) == kExitOk);
  lines = read_lines(t.path("g/sweep.csv"));
  REQUIRE(lines.size() == 4);
  double prev_g = 0.0;
  for (size_t i = 1; i < lines.size(); ++i) {
    auto f = csv_fields(lines[i]);
    double g = std::stod(f[2]);
    CHECK(g == bias_gamma(1.0, std::stod(f[0]), {0.125}, {0.0}, GammaMode::Auto));
    CHECK(g > prev_g);  /* bias grows with the violation tolerance */
    prev_g = g;
  }
}

TEST_CASE("estimate-lipschitz recovers the contraction factor per input") {
  TempTree t;
  std::string cfg = t.write("run.cfg", lti_cfg(t.path("out")));
  CHECK(run_command("estimate-lipschitz", cfg, {}) == kExitOk);
  auto lines = read_lines(t.path("out/lipschitz.csv"));
  REQUIRE(lines.size() == 5);
  for (size_t i = 1; i < lines.size(); ++i) {
    auto f = csv_fields(lines[i]);
    CHECK(std::stod(f[2]) == doctest::Approx(std::exp(-0.5)).epsilon(0.02));
  }
}

TEST_CASE("pac-compare builds both tables and reports the exact counts") {
  TempTree t;
  std::string cfg = t.write("run.cfg", lti_cfg(t.path("out")));
  CHECK(run_command("pac-compare", cfg, {}) == kExitOk);
  auto lines = read_lines(t.path("out/pac_compare.csv"));
  REQUIRE(lines.size() == 4);
  auto f = csv_fields(lines[1]);
  double bpp = 0.01 / 32.0;
  CHECK(std::stoull(f[4]) == sample_size(0.01, bpp, kQ));
  CHECK(std::stoull(f[5]) == pac_sample_size(0.01, bpp, kQ));
  auto cmp = csv_fields(lines[3]);
  REQUIRE(cmp.size() == 9);
  CHECK(cmp[0] == "scenario");
  CHECK(cmp[1] == "pac");
  CHECK(std::stoull(cmp[2]) > 0);
  CHECK(std::stoull(cmp[3]) > 0);
}

TEST_CASE("compare-winning diffs controllers and rejects mismatched grids") {
  TempTree t;
  std::string cfg = t.write("run.cfg", lti_cfg(t.path("out")));
  REQUIRE(run_command("synthesize", cfg, {}) == kExitOk);

  CommandOptions self;
  self.controller_a = t.path("out/controller.txt");
  self.controller_b = t.path("out/controller.txt");
  CHECK(run_command("compare-winning", cfg, self) == kExitOk);
  auto lines = read_lines(t.path("out/compare_winning.csv"));
  REQUIRE(lines.size() == 2);
  auto f = csv_fields(lines[1]);
  CHECK(f[2] == f[3]);      /* same counts */
  CHECK(f[4] == f[2]);      /* full intersection */
  CHECK(f[5] == "0");
  CHECK(f[6] == "0");

  /* same system on a coarser grid: the grids differ, so the diff is refused */
  std::string coarse = lti_cfg(t.path("coarse"));
  coarse.replace(coarse.find("eta = 0.125"), 11, "eta = 0.25");
  std::string cfg2 = t.write("coarse.cfg", coarse);
  REQUIRE(run_command("synthesize", cfg2, {}) == kExitOk);
  CommandOptions cross;
  cross.controller_a = t.path("out/controller.txt");
  cross.controller_b = t.path("coarse/controller.txt");
  CHECK(run_command("compare-winning", cfg, cross) == kExitConfig);

  CHECK(run_command("compare-winning", cfg, {}) == kExitConfig);
}

TEST_CASE("refine-synthesize reports per-level progress and failure") {
  TempTree t;
  /* a state-scaling growth term is what shrinks with the cells, so weight the
   * offset column heavily to keep theta2 out of the fit; the level-0 grid holds
   * no full target cell, forcing at least one halving */
  std::string ok_text = lti_cfg(t.path("ok"),
                                "[refine]\neta0 = 0.5\nmax_halvings = 2\n"
                                "[scenario]\nweight_theta2 = 100\n"
                                "fixed_gamma = 0.01\n");
  std::string cfg = t.write("ok.cfg", ok_text);
  CHECK(run_command("refine-synthesize", cfg, {}) == kExitOk);
  auto lines = read_lines(t.path("ok/refine_report.csv"));
  REQUIRE(lines.size() >= 3);
  CHECK(csv_fields(lines[1])[3] == "0");  /* level 0 has no target cell */
  auto last = csv_fields(lines.back());
  CHECK(last[4] == "1");  /* final level wins x_init */
  CHECK(fs::exists(t.path("ok/controller.txt")));
  CHECK(fs::exists(t.path("ok/abstraction.txt")));

  /* a 2-cell level-0 grid holds no full target cell; with no halvings allowed
   * the loop must give up */
  std::string bad_text =
      lti_cfg(t.path("bad"), "[refine]\neta0 = 0.5\nmax_halvings = 0\n");
  std::string cfg2 = t.write("bad.cfg", bad_text);
  CHECK(run_command("refine-synthesize", cfg2, {}) == kExitEmpty);
  auto bad_lines = read_lines(t.path("bad/refine_report.csv"));
  REQUIRE(bad_lines.size() == 2);
  CHECK(csv_fields(bad_lines[1])[3] == "0");
}

TEST_CASE("dispatch failures map to the config exit code") {
  TempTree t;
  std::string cfg = t.write("run.cfg", lti_cfg(t.path("out")));
  CHECK(run_command("frobnicate", cfg, {}) == kExitConfig);
  CHECK(run_command("sample-size", t.path("nope.cfg"), {}) == kExitConfig);
  /* sweep and refine demand their sections */
  CHECK(run_command("sweep", cfg, {}) == kExitConfig);
  CHECK(run_command("refine-synthesize", cfg, {}) == kExitConfig);
}

}  // TEST_SUITE
