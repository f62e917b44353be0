#include "dabs/synthesis.hpp"

#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>

#include "dabs/errors.hpp"
#include "dabs/rng.hpp"

namespace dabs {

namespace {

constexpr uint32_t RANK_NONE = std::numeric_limits<uint32_t>::max();
constexpr uint64_t BLOCK_FRESH = std::numeric_limits<uint64_t>::max();
constexpr uint64_t BLOCK_DEAD = BLOCK_FRESH - 1;

bool rect_inside(const UniformGrid& g, const IndexRect& r, const Region& z) {
  if (r.empty) return false;
  std::vector<size_t> j(r.lo);
  for (;;) {
    if (!z.test(g.from_multi(j))) return false;
    size_t d = 0;
    while (d < j.size()) {
      if (j[d] < r.hi[d]) {
        ++j[d];
        break;
      }
      j[d] = r.lo[d];
      ++d;
    }
    if (d == j.size()) return true;
  }
}

/* first rect cell outside z, in odometer order */
std::optional<size_t> first_outside(const UniformGrid& g, const IndexRect& r,
                                    const Region& z) {
  if (r.empty) return std::nullopt;
  std::vector<size_t> j(r.lo);
  for (;;) {
    size_t flat = g.from_multi(j);
    if (!z.test(flat)) return flat;
    size_t d = 0;
    while (d < j.size()) {
      if (j[d] < r.hi[d]) {
        ++j[d];
        break;
      }
      j[d] = r.lo[d];
      ++d;
    }
    if (d == j.size()) return std::nullopt;
  }
}

void check_region_sizes(const Abstraction& abs, const Region& a, const char* what) {
  if (a.size() != abs.num_cells())
    throw NumericError(std::string(what) + " region size does not match the grid");
}

Controller blank_controller(ObjectiveKind kind, size_t n) {
  Controller c;
  c.kind = kind;
  c.winning = Region(n);
  c.choice.assign(n, -1);
  c.phase_choice.assign(n, -1);
  c.invariant = Region(n);
  c.rank.assign(n, RANK_NONE);
  return c;
}

bool in_any_box(const std::vector<Box>& boxes, const Vec& x) {
  for (const Box& b : boxes)
    if (b.contains(x)) return true;
  return false;
}

}  // namespace

size_t Region::count() const {
  size_t s = 0;
  for (uint8_t b : in) s += b;
  return s;
}

bool Region::subset_of(const Region& other) const {
  if (in.size() != other.in.size()) return false;
  for (size_t i = 0; i < in.size(); ++i)
    if (in[i] && !other.in[i]) return false;
  return true;
}

Region region_from_boxes_inner(const UniformGrid& grid, const std::vector<Box>& boxes) {
  Region r(grid.num_cells());
  for (size_t c = 0; c < grid.num_cells(); ++c) {
    Box cb = grid.cell_bounds(c);
    for (const Box& b : boxes)
      if (cb.inside(b)) {
        r.set(c);
        break;
      }
  }
  return r;
}

Region region_from_boxes_outer(const UniformGrid& grid, const std::vector<Box>& boxes) {
  Region r(grid.num_cells());
  for (size_t c = 0; c < grid.num_cells(); ++c) {
    Box cb = grid.cell_bounds(c);
    for (const Box& b : boxes)
      if (cb.intersects(b)) {
        r.set(c);
        break;
      }
  }
  return r;
}

const char* objective_name(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::Reach: return "reach";
    case ObjectiveKind::Safety: return "safety";
    case ObjectiveKind::ReachAvoid: return "reach_avoid";
    case ObjectiveKind::ReachStay: return "reach_stay";
  }
  return "reach";
}

ObjectiveKind objective_from_name(const std::string& name) {
  if (name == "reach") return ObjectiveKind::Reach;
  if (name == "safety") return ObjectiveKind::Safety;
  if (name == "reach_avoid") return ObjectiveKind::ReachAvoid;
  if (name == "reach_stay") return ObjectiveKind::ReachStay;
  throw ConfigError("unknown objective '" + name + "'");
}

Region cpre(const Abstraction& abs, const Region& z) {
  check_region_sizes(abs, z, "cpre");
  Region out(abs.num_cells());
  for (size_t c = 0; c < abs.num_cells(); ++c)
    for (size_t ui = 0; ui < abs.num_inputs(); ++ui) {
      auto r = abs.successors(c, ui);
      if (r && rect_inside(abs.grid(), *r, z)) {
        out.set(c);
        break;
      }
    }
  return out;
}

Controller solve_reach(const Abstraction& abs, const Region& target,
                       const Region& avoid) {
  check_region_sizes(abs, target, "target");
  check_region_sizes(abs, avoid, "avoid");
  const size_t n = abs.num_cells(), n_u = abs.num_inputs();
  Controller ctrl =
      blank_controller(avoid.count() ? ObjectiveKind::ReachAvoid : ObjectiveKind::Reach, n);

  for (size_t c = 0; c < n; ++c)
    if (target.test(c) && !avoid.test(c)) {
      ctrl.winning.set(c);
      ctrl.rank[c] = 0;
    }

  /* each pair remembers the successor cell that blocked it; a pair is only
   * rescanned after its blocker enters the winning set, and members of the
   * set never block again, so the total rescan work stays near the rect size */
  std::vector<uint64_t> blocker(n * n_u, BLOCK_FRESH);
  std::vector<size_t> added;
  uint32_t sweep = 0;
  for (;;) {
    added.clear();
    std::vector<int32_t> added_choice;
    for (size_t c = 0; c < n; ++c) {
      if (ctrl.winning.test(c) || avoid.test(c)) continue;
      for (size_t ui = 0; ui < n_u; ++ui) {
        size_t pi = abs.pair_index(c, ui);
        uint64_t b = blocker[pi];
        if (b == BLOCK_DEAD) continue;
        if (b != BLOCK_FRESH && !ctrl.winning.test(size_t(b))) continue;
        auto r = abs.successors(c, ui);
        if (!r) {
          blocker[pi] = BLOCK_DEAD;
          continue;
        }
        auto out = first_outside(abs.grid(), *r, ctrl.winning);
        if (out) {
          blocker[pi] = *out;
          continue;
        }
        added.push_back(c);
        added_choice.push_back(int32_t(ui));
        break;
      }
    }
    if (added.empty()) break;
    ++sweep;
    if (sweep > n + 1) throw NumericError("reach fixed point failed to close");
    for (size_t i = 0; i < added.size(); ++i) {
      ctrl.winning.set(added[i]);
      ctrl.choice[added[i]] = added_choice[i];
      ctrl.rank[added[i]] = sweep;
    }
  }
  ctrl.iterations = sweep;
  return ctrl;
}

Controller solve_safety(const Abstraction& abs, const Region& safe) {
  check_region_sizes(abs, safe, "safe");
  const size_t n = abs.num_cells(), n_u = abs.num_inputs();
  Controller ctrl = blank_controller(ObjectiveKind::Safety, n);
  Region z = safe;

  size_t sweep = 0;
  std::vector<size_t> removed;
  for (;;) {
    removed.clear();
    for (size_t c = 0; c < n; ++c) {
      if (!z.test(c)) continue;
      bool keep = false;
      for (size_t ui = 0; ui < n_u && !keep; ++ui) {
        auto r = abs.successors(c, ui);
        keep = r && rect_inside(abs.grid(), *r, z);
      }
      if (!keep) removed.push_back(c);
    }
    if (removed.empty()) break;
    ++sweep;
    if (sweep > n + 1) throw NumericError("safety fixed point failed to close");
    for (size_t c : removed) z.in[c] = 0;
  }

  ctrl.winning = z;
  ctrl.iterations = sweep;
  for (size_t c = 0; c < n; ++c) {
    if (!z.test(c)) continue;
    ctrl.rank[c] = 0;
    for (size_t ui = 0; ui < n_u; ++ui) {
      auto r = abs.successors(c, ui);
      if (r && rect_inside(abs.grid(), *r, z)) {
        ctrl.choice[c] = int32_t(ui);
        break;
      }
    }
  }
  return ctrl;
}

Controller solve_reach_stay(const Abstraction& abs, const Region& target,
                            const Region& avoid) {
  check_region_sizes(abs, target, "target");
  check_region_sizes(abs, avoid, "avoid");
  const size_t n = abs.num_cells();
  Region safe(n);
  for (size_t c = 0; c < n; ++c)
    if (target.test(c) && !avoid.test(c)) safe.set(c);

  Controller stay = solve_safety(abs, safe);
  Controller go = solve_reach(abs, stay.winning, avoid);

  Controller ctrl = blank_controller(ObjectiveKind::ReachStay, n);
  ctrl.winning = go.winning;
  ctrl.choice = go.choice;
  ctrl.rank = go.rank;
  ctrl.invariant = stay.winning;
  ctrl.phase_choice = stay.choice;
  ctrl.iterations = stay.iterations + go.iterations;
  return ctrl;
}

void validate_controller(const Abstraction& abs, const Controller& ctrl,
                         const Region& target, const Region& avoid) {
  check_region_sizes(abs, target, "target");
  check_region_sizes(abs, avoid, "avoid");
  const size_t n = abs.num_cells();
  if (ctrl.winning.size() != n || ctrl.choice.size() != n || ctrl.rank.size() != n)
    throw NumericError("controller tables do not match the grid");

  auto fail = [](size_t c, const char* why) {
    std::ostringstream os;
    os << "controller validation failed at cell " << c << ": " << why;
    throw NumericError(os.str());
  };
  auto check_descent = [&](size_t c, int32_t ui, const Region& within, bool strict) {
    if (ui < 0 || size_t(ui) >= abs.num_inputs()) fail(c, "missing input choice");
    auto r = abs.successors(c, size_t(ui));
    if (!r) fail(c, "chosen input leads out of the domain");
    bool ok = true;
    abs.grid().for_each_in_rect(*r, [&](size_t s) {
      if (!within.test(s)) ok = false;
      if (strict && ctrl.rank[s] >= ctrl.rank[c]) ok = false;
    });
    if (!ok) fail(c, strict ? "successor escapes or does not decrease the rank"
                            : "successor escapes the invariant set");
  };

  switch (ctrl.kind) {
    case ObjectiveKind::Reach:
    case ObjectiveKind::ReachAvoid:
      for (size_t c = 0; c < n; ++c) {
        if (!ctrl.winning.test(c)) continue;
        if (avoid.test(c)) fail(c, "winning cell lies in the avoid region");
        if (ctrl.rank[c] == 0) {
          if (!target.test(c)) fail(c, "rank zero outside the target");
        } else {
          check_descent(c, ctrl.choice[c], ctrl.winning, true);
        }
      }
      break;
    case ObjectiveKind::Safety:
      for (size_t c = 0; c < n; ++c) {
        if (!ctrl.winning.test(c)) continue;
        if (!target.test(c)) fail(c, "safe cell outside the safe region");
        check_descent(c, ctrl.choice[c], ctrl.winning, false);
      }
      break;
    case ObjectiveKind::ReachStay:
      if (ctrl.invariant.size() != n || ctrl.phase_choice.size() != n)
        throw NumericError("reach-stay controller is missing its invariance tables");
      for (size_t c = 0; c < n; ++c) {
        if (ctrl.invariant.test(c)) {
          if (!ctrl.winning.test(c)) fail(c, "invariant cell is not winning");
          if (!target.test(c) || avoid.test(c))
            fail(c, "invariant cell outside target or inside avoid");
          check_descent(c, ctrl.phase_choice[c], ctrl.invariant, false);
        }
        if (!ctrl.winning.test(c)) continue;
        if (avoid.test(c)) fail(c, "winning cell lies in the avoid region");
        if (ctrl.rank[c] == 0) {
          if (!ctrl.invariant.test(c)) fail(c, "rank zero outside the invariant set");
        } else {
          check_descent(c, ctrl.choice[c], ctrl.winning, true);
        }
      }
      break;
  }
}

std::pair<Vec, size_t> closed_loop_step(const Controller& ctrl, const Abstraction& abs,
                                        const SystemModel& sys, const Vec& x,
                                        const Vec& w, int& phase) {
  auto cell = abs.grid().point_to_cell(x);
  if (!cell) throw NumericError("closed loop: state left the domain");
  if (!ctrl.winning.test(*cell))
    throw NumericError("closed loop: state left the winning region");
  int32_t ui;
  if (ctrl.kind == ObjectiveKind::ReachStay) {
    if (phase == 0 && ctrl.invariant.test(*cell)) phase = 1;
    ui = phase == 1 ? ctrl.phase_choice[*cell] : ctrl.choice[*cell];
  } else {
    ui = ctrl.choice[*cell];
  }
  if (ui < 0) throw NumericError("closed loop: no input defined for the current cell");
  return {sys.step(x, abs.inputs()[size_t(ui)], w, sys.tau), size_t(ui)};
}

SimulationResult simulate_closed_loop(const Controller& ctrl, const Abstraction& abs,
                                      const SystemModel& sys, const Vec& x0,
                                      size_t horizon, DisturbancePolicy policy,
                                      uint64_t seed,
                                      const std::vector<Box>& target_boxes,
                                      const std::vector<Box>& avoid_boxes) {
  SimulationResult res;
  Vec x = x0;
  int phase = 0;
  const size_t q = sys.disturbance_box.dim();
  bool switched_ok = true;

  auto record = [&](size_t step, const Vec& u, size_t cell) {
    res.points.push_back({step, x, u, cell, phase});
  };
  auto finish = [&](bool ok, std::string verdict) {
    res.success = ok;
    res.verdict = std::move(verdict);
    return res;
  };

  for (size_t step = 0;; ++step) {
    auto cell = abs.grid().point_to_cell(x);
    if (!cell) {
      record(step, {}, size_t(-1));
      return finish(false, "state left the domain at step " + std::to_string(step));
    }
    if (in_any_box(avoid_boxes, x)) {
      record(step, {}, *cell);
      return finish(false, "entered an avoid box at step " + std::to_string(step));
    }
    bool in_target = in_any_box(target_boxes, x);
    switch (ctrl.kind) {
      case ObjectiveKind::Reach:
      case ObjectiveKind::ReachAvoid:
        if (in_target) {
          record(step, {}, *cell);
          return finish(true, "reached the target at step " + std::to_string(step));
        }
        break;
      case ObjectiveKind::Safety:
        if (!in_target) {
          record(step, {}, *cell);
          return finish(false, "left the safe set at step " + std::to_string(step));
        }
        break;
      case ObjectiveKind::ReachStay:
        if (phase == 1 && !in_target) switched_ok = false;
        break;
    }
    if (step == horizon) {
      record(step, {}, *cell);
      switch (ctrl.kind) {
        case ObjectiveKind::Reach:
        case ObjectiveKind::ReachAvoid:
          return finish(false, "horizon exhausted before reaching the target");
        case ObjectiveKind::Safety:
          return finish(true, "stayed safe for " + std::to_string(horizon) + " steps");
        case ObjectiveKind::ReachStay:
          if (phase != 1)
            return finish(false, "never entered the invariant set within the horizon");
          if (!switched_ok || !in_target)
            return finish(false, "left the target after the invariance switch");
          return finish(true, "holding the target since the invariance switch");
      }
    }

    Vec w(q, 0.0);
    if (policy != DisturbancePolicy::Zero && q > 0) {
      CounterRng rng(seed, {5, step});
      for (size_t i = 0; i < q; ++i) {
        double lo = sys.disturbance_box.lower[i], hi = sys.disturbance_box.upper[i];
        w[i] = policy == DisturbancePolicy::Uniform ? rng.uniform(lo, hi)
                                                    : ((rng.next() & 1) ? hi : lo);
      }
    }
    Vec u;
    try {
      auto [xn, uidx] = closed_loop_step(ctrl, abs, sys, x, w, phase);
      u = abs.inputs()[uidx];
      record(step, u, *cell);
      /* the switch happens while still at x: the anchor state must already
       * satisfy the hold condition */
      if (ctrl.kind == ObjectiveKind::ReachStay && phase == 1 && !in_target)
        switched_ok = false;
      x = xn;
    } catch (const NumericError& e) {
      record(step, {}, *cell);
      return finish(false, std::string(e.what()) + " at step " + std::to_string(step));
    }
  }
}

void save_controller(const Controller& ctrl, const UniformGrid& grid,
                     const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write controller file '" + path + "'");
  const size_t n = grid.num_cells();
  os << "dabs-controller 1\n";
  os << "dim " << grid.dim() << '\n';
  os << "box";
  for (double v : grid.box().lower) os << ' ' << format_real(v);
  for (double v : grid.box().upper) os << ' ' << format_real(v);
  os << '\n';
  os << "eta";
  for (double v : grid.radii()) os << ' ' << format_real(v);
  os << '\n';
  os << "kind " << objective_name(ctrl.kind) << '\n';
  os << "iterations " << ctrl.iterations << '\n';
  os << "cells " << n << '\n';
  for (size_t c = 0; c < n; ++c) {
    os << "c " << int(ctrl.winning.test(c)) << ' ' << ctrl.choice[c] << ' '
       << ctrl.phase_choice[c] << ' ' << ctrl.rank[c] << ' '
       << int(ctrl.invariant.size() ? ctrl.invariant.test(c) : 0) << '\n';
  }
  if (!os) throw ConfigError("write failed for controller file '" + path + "'");
}

std::pair<Controller, UniformGrid> load_controller(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open controller file '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || line != "dabs-controller 1")
    throw ConfigError("'" + path + "' is not a version-1 controller file");
  auto expect = [&](const char* key) {
    if (!std::getline(is, line))
      throw ConfigError(std::string("controller file truncated before '") + key + "'");
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok != key)
      throw ConfigError(std::string("controller file: expected '") + key + "'");
    return ls;
  };
  size_t dim = 0;
  {
    auto ls = expect("dim");
    if (!(ls >> dim) || dim == 0) throw ConfigError("controller file: bad dimension");
  }
  Box box;
  box.lower.resize(dim);
  box.upper.resize(dim);
  {
    auto ls = expect("box");
    for (double& v : box.lower)
      if (!(ls >> v)) throw ConfigError("controller file: short box row");
    for (double& v : box.upper)
      if (!(ls >> v)) throw ConfigError("controller file: short box row");
  }
  Vec eta(dim);
  {
    auto ls = expect("eta");
    for (double& v : eta)
      if (!(ls >> v)) throw ConfigError("controller file: short eta row");
  }
  Controller ctrl;
  {
    auto ls = expect("kind");
    std::string name;
    ls >> name;
    ctrl.kind = objective_from_name(name);
  }
  {
    auto ls = expect("iterations");
    if (!(ls >> ctrl.iterations)) throw ConfigError("controller file: bad iterations");
  }
  size_t n = 0;
  {
    auto ls = expect("cells");
    if (!(ls >> n)) throw ConfigError("controller file: bad cell count");
  }
  UniformGrid grid(box, eta);
  if (grid.num_cells() != n)
    throw ConfigError("controller file: cell count does not match the grid");
  ctrl.winning = Region(n);
  ctrl.invariant = Region(n);
  ctrl.choice.assign(n, -1);
  ctrl.phase_choice.assign(n, -1);
  ctrl.rank.assign(n, RANK_NONE);
  for (size_t c = 0; c < n; ++c) {
    auto ls = expect("c");
    int win = 0, inv = 0;
    if (!(ls >> win >> ctrl.choice[c] >> ctrl.phase_choice[c] >> ctrl.rank[c] >> inv))
      throw ConfigError("controller file: bad cell row");
    if (win) ctrl.winning.set(c);
    if (inv) ctrl.invariant.set(c);
  }
  return {std::move(ctrl), std::move(grid)};
}

RefineResult refine_and_synthesize(const SystemModel& sys, const GrowthTable& table,
                                   ObjectiveKind kind,
                                   const std::vector<Box>& target_boxes,
                                   const std::vector<Box>& avoid_boxes,
                                   const Vec& x_init, size_t max_halvings,
                                   size_t max_cells, unsigned workers) {
  if (!table.grid.box().contains(x_init))
    throw ConfigError("refinement start state lies outside the state box");

  std::vector<RefineIteration> log;
  UniformGrid grid = table.grid;
  std::optional<Abstraction> last_abs;
  Controller last_ctrl;
  bool success = false;

  for (size_t h = 0;; ++h) {
    if (h > 0) {
      UniformGrid next = grid.refine();
      if (next.num_cells() > max_cells) break;
      grid = next;
    }
    Abstraction abs = instantiate_refined(table, grid, sys, workers);
    Region target = region_from_boxes_inner(grid, target_boxes);
    Region avoid = region_from_boxes_outer(grid, avoid_boxes);
    Controller ctrl;
    switch (kind) {
      case ObjectiveKind::Reach:
      case ObjectiveKind::ReachAvoid:
        ctrl = solve_reach(abs, target, avoid);
        ctrl.kind = kind;
        break;
      case ObjectiveKind::Safety:
        ctrl = solve_safety(abs, target);
        break;
      case ObjectiveKind::ReachStay:
        ctrl = solve_reach_stay(abs, target, avoid);
        break;
    }
    auto cell = grid.point_to_cell(x_init);
    bool init_winning = cell && ctrl.winning.test(*cell);
    log.push_back({h, grid.radii(), grid.num_cells(), ctrl.winning.count(), init_winning});
    last_abs.emplace(std::move(abs));
    last_ctrl = std::move(ctrl);
    if (init_winning) {
      success = true;
      break;
    }
    if (h == max_halvings) break;
  }
  if (!last_abs)
    throw ConfigError("refinement could not instantiate any level under max_cells");
  return RefineResult{success, std::move(log), std::move(last_ctrl),
                      std::move(*last_abs)};
}

}  // namespace dabs
