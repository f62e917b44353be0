#include "dabs/sampling.hpp"

#include <cstdio>

#include "dabs/errors.hpp"
#include "dabs/rng.hpp"

namespace dabs {

namespace {

/* stream tags keep draw purposes from colliding on one (seed, cell, input) key */
enum : uint64_t { TAG_STANDARD = 1, TAG_PAIRED = 2 };

Vec draw_state(const UniformGrid& grid, size_t cell, CounterRng& rng) {
  Vec c = grid.cell_center(cell);
  const Vec& eta = grid.radii();
  Vec x(c.size());
  for (size_t d = 0; d < c.size(); ++d)
    x[d] = rng.uniform(c[d] - eta[d], c[d] + eta[d]);
  return x;
}

Vec draw_disturbance(const Box& w_box, CounterRng& rng) {
  Vec w(w_box.dim());
  for (size_t d = 0; d < w.size(); ++d)
    w[d] = rng.uniform(w_box.lower[d], w_box.upper[d]);
  return w;
}

}  // namespace

SampleBatch sample_cell_batch(const SystemModel& sys, const UniformGrid& grid,
                              size_t cell, const Vec& u, size_t input_index,
                              size_t n, uint64_t seed) {
  SampleBatch batch;
  batch.cell = cell;
  batch.input_index = input_index;
  batch.u = u;
  batch.seed = seed;
  batch.triples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, {cell, input_index, i, TAG_STANDARD});
    SampleTriple& t = batch.triples[i];
    t.x = draw_state(grid, cell, rng);
    Vec w = draw_disturbance(sys.disturbance_box, rng);
    t.x_next = sys.step(t.x, u, w, sys.tau);
    if (!all_finite(t.x_next))
      throw NumericError("sample_cell_batch: non-finite successor");
  }
  return batch;
}

Vec nominal_successor(const SystemModel& sys, const Vec& x_hat, const Vec& u) {
  Vec w0(sys.disturbance_box.dim(), 0.0);
  Vec y = sys.step(x_hat, u, w0, sys.tau);
  if (!all_finite(y)) throw NumericError("nominal_successor: non-finite successor");
  return y;
}

SampleBatch sample_paired_batch(const SystemModel& sys, const UniformGrid& grid,
                                size_t cell, const Vec& u, size_t input_index,
                                size_t n_pairs, uint64_t seed) {
  SampleBatch batch;
  batch.cell = cell;
  batch.input_index = input_index;
  batch.u = u;
  batch.seed = seed;
  batch.triples.resize(2 * n_pairs);
  for (size_t i = 0; i < 2 * n_pairs; ++i) {
    CounterRng rng(seed, {cell, input_index, i, TAG_PAIRED});
    SampleTriple& t = batch.triples[i];
    t.x = draw_state(grid, cell, rng);
    Vec w = draw_disturbance(sys.disturbance_box, rng);
    t.x_next = sys.step(t.x, u, w, sys.tau);
    if (!all_finite(t.x_next))
      throw NumericError("sample_paired_batch: non-finite successor");
  }
  return batch;
}

void write_batch_csv(const SampleBatch& batch, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  const size_t n = batch.triples.empty() ? 0 : batch.triples[0].x.size();
  for (size_t d = 0; d < n; ++d) std::fprintf(f, "%sx%zu", d ? "," : "", d);
  for (size_t d = 0; d < n; ++d) std::fprintf(f, ",x_next%zu", d);
  std::fprintf(f, "\n");
  for (const auto& t : batch.triples) {
    std::fprintf(f, "%s,%s\n", join_reals(t.x).c_str(), join_reals(t.x_next).c_str());
  }
  std::fclose(f);
}

}  // namespace dabs
