#ifndef DABS_SYNTHESIS_HPP_
#define DABS_SYNTHESIS_HPP_

#include <cstdint>
#include <string>

#include "dabs/abstraction.hpp"

namespace dabs {

/* subset of grid cells as a dense 0/1 mask */
struct Region {
  std::vector<uint8_t> in;

  Region() = default;
  explicit Region(size_t n) : in(n, 0) {}
  size_t size() const { return in.size(); }
  bool test(size_t i) const { return in[i] != 0; }
  void set(size_t i) { in[i] = 1; }
  size_t count() const;
  bool subset_of(const Region& other) const;
};

/* inner approximation: cells entirely inside some box of the union */
Region region_from_boxes_inner(const UniformGrid& grid, const std::vector<Box>& boxes);
/* outer approximation: cells that intersect any box */
Region region_from_boxes_outer(const UniformGrid& grid, const std::vector<Box>& boxes);

enum class ObjectiveKind { Reach, Safety, ReachAvoid, ReachStay };
const char* objective_name(ObjectiveKind k);
ObjectiveKind objective_from_name(const std::string& name);

/* memoryless grid controller; for reach-stay, `choice` steers toward the
 * invariant set and `phase_choice` keeps it, with the switch taken on first
 * entry to `invariant` */
struct Controller {
  ObjectiveKind kind = ObjectiveKind::Reach;
  Region winning;
  std::vector<int32_t> choice;        /* -1 outside the winning set */
  std::vector<int32_t> phase_choice;  /* reach-stay only, -1 elsewhere */
  Region invariant;                   /* reach-stay only */
  std::vector<uint32_t> rank;         /* fixed-point entry iteration per cell */
  size_t iterations = 0;              /* sweeps until the fixed point closed */
};

/* cells with some input whose successor block exists and lies inside Z */
Region cpre(const Abstraction& abs, const Region& z);

/* least fixed point of Z -> target | (cpre(Z) \ avoid); choice fixed at first
 * entry with the lowest certifying input index */
Controller solve_reach(const Abstraction& abs, const Region& target,
                       const Region& avoid);

/* greatest fixed point of Z -> safe & cpre(Z) */
Controller solve_safety(const Abstraction& abs, const Region& safe);

/* invariance inside the target, then reach toward that invariant set */
Controller solve_reach_stay(const Abstraction& abs, const Region& target,
                            const Region& avoid);

/* exhaustive re-check of the fixed-point certificates straight against the
 * abstraction; throws NumericError on any violation */
void validate_controller(const Abstraction& abs, const Controller& ctrl,
                         const Region& target, const Region& avoid);

/* one concrete closed-loop step: quantize, pick the phase-appropriate input,
 * call the oracle. `phase` is 0 while reaching and flips to 1 permanently on
 * entry to the invariant set. Throws NumericError if x falls outside the
 * winning region. Returns the successor and the applied input index. */
std::pair<Vec, size_t> closed_loop_step(const Controller& ctrl, const Abstraction& abs,
                                        const SystemModel& sys, const Vec& x,
                                        const Vec& w, int& phase);

enum class DisturbancePolicy { Zero, Uniform, WorstCorner };

struct TrajectoryPoint {
  size_t step;
  Vec x;
  Vec u;
  size_t cell;
  int phase;
};

struct SimulationResult {
  std::vector<TrajectoryPoint> points;
  bool success = false;
  std::string verdict;
};

SimulationResult simulate_closed_loop(const Controller& ctrl, const Abstraction& abs,
                                      const SystemModel& sys, const Vec& x0,
                                      size_t horizon, DisturbancePolicy policy,
                                      uint64_t seed,
                                      const std::vector<Box>& target_boxes,
                                      const std::vector<Box>& avoid_boxes);

void save_controller(const Controller& ctrl, const UniformGrid& grid,
                     const std::string& path);
/* returns the controller and the grid it was synthesized on */
std::pair<Controller, UniformGrid> load_controller(const std::string& path);

/* refinement loop: instantiate the growth table on successively halved grids
 * until the cell of x_init wins (or max_halvings is exhausted) */
struct RefineIteration {
  size_t halvings;
  Vec eta;
  size_t num_cells;
  size_t winning_count;
  bool init_winning;
};

struct RefineResult {
  bool success = false;
  std::vector<RefineIteration> iterations;
  Controller controller;      /* from the last instantiated level */
  Abstraction abstraction;
};

RefineResult refine_and_synthesize(const SystemModel& sys, const GrowthTable& table,
                                   ObjectiveKind kind,
                                   const std::vector<Box>& target_boxes,
                                   const std::vector<Box>& avoid_boxes,
                                   const Vec& x_init, size_t max_halvings,
                                   size_t max_cells, unsigned workers = 1);

}  // namespace dabs

#endif
