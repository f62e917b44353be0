#ifndef DABS_SAMPLING_HPP_
#define DABS_SAMPLING_HPP_

#include <cstdint>
#include <string>

#include "dabs/geometry.hpp"
#include "dabs/systems.hpp"

namespace dabs {

/* one observed transition; the disturbance draw is consumed, not stored */
struct SampleTriple {
  Vec x;
  Vec x_next;
};

struct SampleBatch {
  size_t cell = 0;
  size_t input_index = 0;
  Vec u;
  uint64_t seed = 0;
  std::vector<SampleTriple> triples;
};

/* n independent draws: x uniform over the cell, w uniform over W, one oracle
 * call each. Draw i is keyed by (seed, cell, input_index, i), so batches are
 * reproducible elementwise and safe to fill from any number of threads. */
SampleBatch sample_cell_batch(const SystemModel& sys, const UniformGrid& grid,
                              size_t cell, const Vec& u, size_t input_index,
                              size_t n, uint64_t seed);

/* successor of the cell center under zero disturbance */
Vec nominal_successor(const SystemModel& sys, const Vec& x_hat, const Vec& u);

/* 2*n_pairs draws laid out so that triples (2k, 2k+1) form a pair; both points
 * of a pair are drawn from the same cell with independent disturbances */
SampleBatch sample_paired_batch(const SystemModel& sys, const UniformGrid& grid,
                                size_t cell, const Vec& u, size_t input_index,
                                size_t n_pairs, uint64_t seed);

/* audit dump, one row per triple: x..., x_next... */
void write_batch_csv(const SampleBatch& batch, const std::string& path);

}  // namespace dabs

#endif
