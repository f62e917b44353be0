#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dabs/sampling.hpp"
#include "dabs/systems.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace dabs;

namespace {

/* frozen dynamics with a configurable disturbance box */
SystemModel identity_system(Vec wbar) {
  SystemModel sys;
  sys.state_dim = 2;
  sys.state_box = {{0.0, 0.0}, {1.0, 1.0}};
  sys.input_box = {{0.0}, {1.0}};
  sys.disturbance_box = Box{Vec(wbar.size()), wbar};
  for (size_t i = 0; i < wbar.size(); ++i) sys.disturbance_box.lower[i] = -wbar[i];
  sys.tau = 1.0;
  sys.step = [](const Vec& x, const Vec&, const Vec&, double) { return x; };
  return sys;
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("batches are reproducible and keyed by the pair") {
  SystemModel sys = identity_system({0.1, 0.1});
  UniformGrid grid(sys.state_box, {0.125, 0.125});
  SampleBatch a = sample_cell_batch(sys, grid, 5, {0.5}, 0, 64, 99);
  SampleBatch b = sample_cell_batch(sys, grid, 5, {0.5}, 0, 64, 99);
  REQUIRE(a.triples.size() == 64);
  for (size_t i = 0; i < a.triples.size(); ++i) {
    CHECK(a.triples[i].x == b.triples[i].x);
    CHECK(a.triples[i].x_next == b.triples[i].x_next);
  }

  /* a different cell, input slot, or seed moves the stream */
  SampleBatch c = sample_cell_batch(sys, grid, 6, {0.5}, 0, 64, 99);
  SampleBatch d = sample_cell_batch(sys, grid, 5, {0.5}, 1, 64, 99);
  SampleBatch e = sample_cell_batch(sys, grid, 5, {0.5}, 0, 64, 100);
  CHECK(a.triples[0].x != c.triples[0].x);
  CHECK(a.triples[0].x != d.triples[0].x);
  CHECK(a.triples[0].x != e.triples[0].x);
}

TEST_CASE("draws stay inside the cell and cover it uniformly") {
  SystemModel sys = identity_system({0.0, 0.0});
  UniformGrid grid(sys.state_box, {0.25, 0.25});
  const size_t cell = 2, n = 10000;
  SampleBatch batch = sample_cell_batch(sys, grid, cell, {0.5}, 0, n, 7);
  Box cb = grid.cell_bounds(cell);

  std::vector<double> unit0, unit1;
  double mean0 = 0.0, mean1 = 0.0;
  for (const SampleTriple& t : batch.triples) {
    REQUIRE(cb.contains(t.x));
    unit0.push_back((t.x[0] - cb.lower[0]) / cb.width(0));
    unit1.push_back((t.x[1] - cb.lower[1]) / cb.width(1));
    mean0 += t.x[0];
    mean1 += t.x[1];
  }
  mean0 /= double(n);
  mean1 /= double(n);

  /* per-coordinate mean within 3 sigma / sqrt(N) of the center */
  Vec center = grid.cell_center(cell);
  double sigma = cb.width(0) / std::sqrt(12.0);
  CHECK(std::fabs(mean0 - center[0]) < 3.0 * sigma / std::sqrt(double(n)));
  CHECK(std::fabs(mean1 - center[1]) < 3.0 * sigma / std::sqrt(double(n)));

  /* Kolmogorov-Smirnov below the 1% critical value 1.63 / sqrt(N) */
  CHECK(oracle::ks_uniform(unit0) < 1.63 / std::sqrt(double(n)));
  CHECK(oracle::ks_uniform(unit1) < 1.63 / std::sqrt(double(n)));
}

TEST_CASE("degenerate domain collapses every draw onto the center") {
  SystemModel sys = identity_system({0.0, 0.0});
  sys.state_box = {{0.0, 0.0}, {2e-12, 2e-12}};
  UniformGrid grid(sys.state_box, {1e-12, 1e-12});
  SampleBatch batch = sample_cell_batch(sys, grid, 0, {0.5}, 0, 50, 3);
  for (const SampleTriple& t : batch.triples) {
    CHECK(std::fabs(t.x[0] - 1e-12) <= 1e-12);
    CHECK(std::fabs(t.x_next[0] - 1e-12) <= 1e-12);
  }
}

TEST_CASE("nominal successor is the zero-disturbance oracle call") {
  SystemModel sys = identity_system({0.5, 0.5});
  CHECK(nominal_successor(sys, {0.3, 0.4}, {0.0}) == Vec{0.3, 0.4});

  SystemModel power = make_power3a3m_system();
  Vec z = nominal_successor(power, {0.0, 0.0, 0.0}, {0.0});
  CHECK(linf_norm(z) < 1e-12);

  /* equals the exact discretization with w = 0 */
  const Power3a3mParams& p = power3a3m_params();
  Vec x{0.01, -0.02, 0.05}, u{0.25};
  Mat phi, integ;
  oracle::expm_integral_taylor(p.A, p.tau, phi, integ);
  Vec ref = matvec(phi, x);
  Vec ibu = matvec(integ, matvec(p.B, u));
  for (size_t i = 0; i < 3; ++i) ref[i] += ibu[i];
  CHECK(linf_dist(nominal_successor(power, x, u), ref) < 1e-8);
}

TEST_CASE("paired batches couple consecutive draws from one cell") {
  SystemModel sys = identity_system({0.2, 0.2});
  UniformGrid grid(sys.state_box, {0.125, 0.125});
  const size_t pairs = 500;
  SampleBatch batch = sample_paired_batch(sys, grid, 9, {0.5}, 0, pairs, 11);
  REQUIRE(batch.triples.size() == 2 * pairs);
  Box cb = grid.cell_bounds(9);
  double max_d = 0.0;
  for (size_t k = 0; k < pairs; ++k) {
    const Vec& a = batch.triples[2 * k].x;
    const Vec& b = batch.triples[2 * k + 1].x;
    CHECK(cb.contains(a));
    CHECK(cb.contains(b));
    max_d = std::max(max_d, linf_dist(a, b));
  }
  CHECK(max_d <= 2.0 * 0.125 + 1e-12);

  SampleBatch again = sample_paired_batch(sys, grid, 9, {0.5}, 0, pairs, 11);
  CHECK(again.triples[999].x == batch.triples[999].x);
}

TEST_CASE("batch csv dump has one row per triple") {
  SystemModel sys = identity_system({0.0, 0.0});
  UniformGrid grid(sys.state_box, {0.25, 0.25});
  SampleBatch batch = sample_cell_batch(sys, grid, 1, {0.5}, 0, 10, 5);
  auto path = std::filesystem::temp_directory_path() / "dabs_batch_test.csv";
  write_batch_csv(batch, path.string());
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  size_t rows = 0;
  bool header = false;
  while (std::getline(in, line)) {
    if (rows == 0 && line.find("x") != std::string::npos) header = true;
    ++rows;
  }
  CHECK(header);
  CHECK(rows == 11);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
