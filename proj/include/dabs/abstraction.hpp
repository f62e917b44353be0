#ifndef DABS_ABSTRACTION_HPP_
#define DABS_ABSTRACTION_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include "dabs/geometry.hpp"
#include "dabs/scenario.hpp"
#include "dabs/systems.hpp"

namespace dabs {

/* build parameters for scenario-based abstractions */
struct BuildConfig {
  double epsilon = 0.01;
  double beta = 0.01;
  uint64_t seed = 0;                    /* mandatory, no default randomness */
  GammaMode gamma_mode = GammaMode::Auto;
  GrowthWeights weights;
  std::vector<double> lipschitz;        /* per input */
  double theta_cap_scale = 10.0;        /* cap = scale * max(1, L(u)) */
  std::optional<double> theta_cap_override;
  bool permissive = false;              /* infeasible pairs -> out-of-domain instead of abort */
  /* testing / comparison harness knobs */
  std::optional<double> fixed_gamma;    /* overrides bias_gamma (e.g. 0 for PAC builds) */
  std::optional<uint64_t> fixed_samples;/* overrides the scenario sample count */

  double theta_cap_for(size_t input_index) const;
  double lipschitz_for(size_t input_index) const;
};

/* successor descriptor of one (cell, input): an infinity ball, or the sink */
struct PairDescriptor {
  Vec center;
  Vec radius;
  bool out_of_domain = false;
};

struct AbstractionMeta {
  double epsilon = 0.0, beta = 0.0;
  uint64_t seed = 0;
  uint64_t samples_per_pair = 0;   /* N for standard builds, 2N for paired tables */
  GammaMode gamma_mode = GammaMode::Auto;
  bool paired = false;
  bool permissive = false;
  std::vector<double> gamma_per_input;
  std::vector<double> lipschitz_per_input;
  uint64_t out_of_domain_pairs = 0;
};

/* finite transition system over grid cells: per (cell, input) a successor
 * ball, expanded on demand to the block of overlapping cells */
class Abstraction {
 public:
  Abstraction(UniformGrid grid, std::vector<Vec> inputs)
      : grid_(std::move(grid)), inputs_(std::move(inputs)),
        pairs_(grid_.num_cells() * inputs_.size()) {}

  size_t num_cells() const { return grid_.num_cells(); }
  size_t num_inputs() const { return inputs_.size(); }
  size_t pair_index(size_t cell, size_t input) const {
    return cell * inputs_.size() + input;
  }

  const UniformGrid& grid() const { return grid_; }
  const std::vector<Vec>& inputs() const { return inputs_; }
  const PairDescriptor& descriptor(size_t cell, size_t input) const {
    return pairs_[pair_index(cell, input)];
  }
  PairDescriptor& descriptor(size_t cell, size_t input) {
    return pairs_[pair_index(cell, input)];
  }

  /* nullopt for out-of-domain pairs; otherwise the successor cell block */
  std::optional<IndexRect> successors(size_t cell, size_t input) const;

  AbstractionMeta meta;

 private:
  UniformGrid grid_;
  std::vector<Vec> inputs_;
  std::vector<PairDescriptor> pairs_;
};

/* scenario build: per (cell, input), N = sample_size(eps, beta/(n_x n_u), n^2+n)
 * samples, growth LP, descriptor = (nominal successor, theta1 eta + theta2 + gamma) */
Abstraction build_abstraction(const SystemModel& sys, const UniformGrid& grid,
                              const std::vector<Vec>& inputs, const BuildConfig& cfg,
                              unsigned workers = 1);

/* coarse-grid growth bounds from paired batches, reusable across refinements */
struct GrowthTable {
  UniformGrid grid;          /* coarse grid the bounds were fitted on */
  std::vector<Vec> inputs;
  std::vector<GrowthBound> bounds;    /* per (cell, input), empty theta if infeasible */
  std::vector<Vec> anchors;           /* observed successor of each coarse center */
  std::vector<uint8_t> infeasible;
  AbstractionMeta meta;

  size_t pair_index(size_t cell, size_t input) const {
    return cell * inputs.size() + input;
  }
};

GrowthTable build_growth_table(const SystemModel& sys, const UniformGrid& coarse,
                               const std::vector<Vec>& inputs, const BuildConfig& cfg,
                               unsigned workers = 1);

/* instantiates the table on a refinement of its grid (fine = coarse halved
 * k >= 0 times): every fine pair inherits theta from its coarse parent, gets a
 * fresh anchored successor of the fine center, and radius
 * eval_growth(theta, 2 * fine eta) + gamma */
Abstraction instantiate_refined(const GrowthTable& table, const UniformGrid& fine,
                                const SystemModel& sys, unsigned workers = 1);

void save_abstraction(const Abstraction& abs, const std::string& path);
Abstraction load_abstraction(const std::string& path);

const char* gamma_mode_name(GammaMode m);
GammaMode gamma_mode_from_name(const std::string& name);

}  // namespace dabs

#endif
