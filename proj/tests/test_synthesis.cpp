#include <cmath>
#include <cstdio>
#include <set>

#include "dabs/errors.hpp"
#include "dabs/rng.hpp"
#include "dabs/synthesis.hpp"
#include "doctest.h"

using namespace dabs;

namespace {

/* hand-built abstraction: descriptors are set directly, so successor sets are
 * chosen exactly (radius-0 balls hit single cells) */
Abstraction hand_abs(const UniformGrid& grid, size_t n_inputs) {
  std::vector<Vec> inputs;
  for (size_t i = 0; i < n_inputs; ++i) inputs.push_back({double(i)});
  return Abstraction(grid, std::move(inputs));
}

void point_succ(Abstraction& abs, size_t cell, size_t input, size_t to) {
  PairDescriptor& d = abs.descriptor(cell, input);
  d.center = abs.grid().cell_center(to);
  d.radius.assign(abs.grid().dim(), 0.0);
  d.out_of_domain = false;
}

void ball_succ(Abstraction& abs, size_t cell, size_t input, Vec center, Vec radius) {
  PairDescriptor& d = abs.descriptor(cell, input);
  d.center = std::move(center);
  d.radius = std::move(radius);
  d.out_of_domain = false;
}

void sink(Abstraction& abs, size_t cell, size_t input) {
  PairDescriptor& d = abs.descriptor(cell, input);
  d.center.assign(abs.grid().dim(), 0.0);
  d.radius.assign(abs.grid().dim(), 0.0);
  d.out_of_domain = true;
}

Region make_region(size_t n, std::initializer_list<size_t> cells) {
  Region r(n);
  for (size_t c : cells) r.set(c);
  return r;
}

std::set<size_t> to_set(const Region& r) {
  std::set<size_t> s;
  for (size_t i = 0; i < r.size(); ++i)
    if (r.test(i)) s.insert(i);
  return s;
}

SystemModel identity_system(Box box) {
  SystemModel sys;
  sys.state_dim = box.dim();
  sys.state_box = box;
  sys.input_box = Box{{0.0}, {10.0}};
  sys.disturbance_box = Box{{0.0}, {0.0}};
  sys.tau = 1.0;
  sys.step = [](const Vec& x, const Vec&, const Vec&, double) { return x; };
  return sys;
}

}  // namespace

TEST_SUITE("synthesis") {

TEST_CASE("box regions: inner excludes straddlers, outer includes them") {
  UniformGrid grid(Box{{0.0, 0.0}, {1.0, 1.0}}, {0.25, 0.25});
  Region inner = region_from_boxes_inner(grid, {Box{{0.25, 0.25}, {0.75, 0.75}}});
  CHECK(inner.count() == 0);
  Region outer = region_from_boxes_outer(grid, {Box{{0.25, 0.25}, {0.75, 0.75}}});
  CHECK(outer.count() == 4);

  Region inner2 = region_from_boxes_inner(grid, {Box{{0.0, 0.0}, {0.5, 0.5}}});
  CHECK(to_set(inner2) == std::set<size_t>{0});
  /* the closed neighbour cells share a face, so the outer hull is everything */
  Region outer2 = region_from_boxes_outer(grid, {Box{{0.0, 0.0}, {0.5, 0.5}}});
  CHECK(outer2.count() == 4);

  CHECK(region_from_boxes_inner(grid, {}).count() == 0);
  Region both = region_from_boxes_inner(
      grid, {Box{{0.0, 0.0}, {0.5, 0.5}}, Box{{0.5, 0.5}, {1.0, 1.0}}});
  CHECK(to_set(both) == std::set<size_t>{0, 3});
}

TEST_CASE("controllable predecessors on a two-cell chain") {
  UniformGrid grid(Box{{0.0}, {1.0}}, {0.25});
  Abstraction abs = hand_abs(grid, 1);
  point_succ(abs, 0, 0, 1);                         /* 0 -> {1} */
  ball_succ(abs, 1, 0, {0.5}, {0.1});               /* 1 -> {0, 1} */

  Region z1 = make_region(2, {1});
  CHECK(to_set(cpre(abs, z1)) == std::set<size_t>{0});
  Region all = make_region(2, {0, 1});
  CHECK(to_set(cpre(abs, all)) == std::set<size_t>{0, 1});
  CHECK(cpre(abs, Region(2)).count() == 0);

  /* an out-of-domain pair cannot certify anything */
  sink(abs, 0, 0);
  CHECK(cpre(abs, all).count() == 1);
  CHECK(cpre(abs, all).test(1));
}

TEST_CASE("reach fixed point on the chain") {
  UniformGrid grid(Box{{0.0}, {1.0}}, {0.25});
  Abstraction abs = hand_abs(grid, 1);
  point_succ(abs, 0, 0, 1);
  ball_succ(abs, 1, 0, {0.5}, {0.1});

  Region target = make_region(2, {1});
  Controller ctrl = solve_reach(abs, target, Region(2));
  CHECK(ctrl.kind == ObjectiveKind::Reach);
  CHECK(ctrl.winning.count() == 2);
  CHECK(ctrl.choice[0] == 0);
  CHECK(ctrl.choice[1] == -1);
  CHECK(ctrl.rank[1] == 0);
  CHECK(ctrl.rank[0] == 1);
  validate_controller(abs, ctrl, target, Region(2));

  /* target everywhere: nothing to grow */
  Controller trivial = solve_reach(abs, make_region(2, {0, 1}), Region(2));
  CHECK(trivial.winning.count() == 2);
  CHECK(trivial.rank[0] == 0);
  CHECK(trivial.rank[1] == 0);

  /* unreachable target: cell 0 only reaches 1 */
  Controller none = solve_reach(abs, make_region(2, {0}), Region(2));
  CHECK(none.winning.count() == 1);
  CHECK_FALSE(none.winning.test(1));
}

TEST_CASE("avoid cells are never entered or used") {
  /* chain 0 -> 1 -> 2 with 2 as target and 1 avoidable only via input 1 */
  UniformGrid grid(Box{{0.0}, {0.75}}, {0.125});
  Abstraction abs = hand_abs(grid, 2);
  point_succ(abs, 0, 0, 1);   /* through the avoid cell */
  point_succ(abs, 0, 1, 2);   /* direct */
  point_succ(abs, 1, 0, 2);
  point_succ(abs, 1, 1, 2);
  point_succ(abs, 2, 0, 2);
  point_succ(abs, 2, 1, 2);

  Region target = make_region(3, {2});
  Region avoid = make_region(3, {1});
  Controller ctrl = solve_reach(abs, target, avoid);
  CHECK(ctrl.kind == ObjectiveKind::ReachAvoid);
  CHECK(ctrl.winning.test(0));
  CHECK_FALSE(ctrl.winning.test(1));
  /* input 0 still leads through cell 1; only input 1 certifies cell 0...
   * except that successors({1}) = {2} is inside the winning set, so input 0
   * would be sound only if cell 1 were winning, which it is not */
  CHECK(ctrl.choice[0] == 1);
  validate_controller(abs, ctrl, target, avoid);
}

TEST_CASE("safety fixed point drops the escaping cell") {
  UniformGrid grid(Box{{0.0}, {0.75}}, {0.125});
  Abstraction abs = hand_abs(grid, 1);
  point_succ(abs, 0, 0, 0);
  ball_succ(abs, 1, 0, {0.25}, {0.13});  /* {0, 1} */
  sink(abs, 2, 0);

  Region safe = make_region(3, {0, 1, 2});
  Controller ctrl = solve_safety(abs, safe);
  CHECK(ctrl.kind == ObjectiveKind::Safety);
  CHECK(to_set(ctrl.winning) == std::set<size_t>{0, 1});
  CHECK(ctrl.choice[0] == 0);
  CHECK(ctrl.choice[1] == 0);
  CHECK(ctrl.choice[2] == -1);
  CHECK(ctrl.rank[0] == 0);
  validate_controller(abs, ctrl, safe, Region(3));

  CHECK(solve_safety(abs, Region(3)).winning.count() == 0);
}

TEST_CASE("reach-stay composes invariance and attraction") {
  UniformGrid grid(Box{{0.0}, {1.0}}, {0.125});
  Abstraction abs = hand_abs(grid, 1);
  point_succ(abs, 0, 0, 1);
  point_succ(abs, 1, 0, 1);  /* absorbing */
  point_succ(abs, 2, 0, 2);  /* absorbing */
  point_succ(abs, 3, 0, 2);

  Region target = make_region(4, {1, 2});
  Controller ctrl = solve_reach_stay(abs, target, Region(4));
  CHECK(ctrl.kind == ObjectiveKind::ReachStay);
  CHECK(to_set(ctrl.invariant) == std::set<size_t>{1, 2});
  CHECK(ctrl.winning.count() == 4);
  CHECK(ctrl.phase_choice[1] == 0);
  CHECK(ctrl.phase_choice[2] == 0);
  CHECK(ctrl.phase_choice[0] == -1);
  CHECK(ctrl.rank[1] == 0);
  CHECK(ctrl.rank[0] == 1);
  validate_controller(abs, ctrl, target, Region(4));

  /* a target cell forced outside the target cannot be held, and nothing
   * funnels into what remains */
  point_succ(abs, 2, 0, 3);
  Controller drift = solve_reach_stay(abs, target, Region(4));
  CHECK(to_set(drift.invariant) == std::set<size_t>{1});
  CHECK(to_set(drift.winning) == std::set<size_t>{0, 1});
  CHECK(drift.choice[2] == -1);
  validate_controller(abs, drift, target, Region(4));
}

TEST_CASE("cpre is monotone in its argument") {
  UniformGrid grid(Box{{0.0}, {1.0}}, {0.0625});
  CounterRng rng(2718, {1});
  for (int trial = 0; trial < 50; ++trial) {
    Abstraction abs = hand_abs(grid, 2);
    for (size_t c = 0; c < 8; ++c)
      for (size_t ui = 0; ui < 2; ++ui) {
        if (rng.unit() < 0.15) {
          sink(abs, c, ui);
        } else {
          double center = rng.uniform(0.05, 0.95);
          double radius = rng.uniform(0.0, 0.2);
          ball_succ(abs, c, ui, {center}, {radius});
        }
      }
    Region small(8), large(8);
    for (size_t c = 0; c < 8; ++c) {
      bool in_small = rng.unit() < 0.4;
      if (in_small) small.set(c);
      if (in_small || rng.unit() < 0.4) large.set(c);
    }
    CHECK(small.subset_of(large));
    CHECK(cpre(abs, small).subset_of(cpre(abs, large)));
  }
}

TEST_CASE("tampered certificates are rejected") {
  UniformGrid grid(Box{{0.0}, {1.0}}, {0.25});
  Abstraction abs = hand_abs(grid, 2);
  point_succ(abs, 0, 0, 1);
  point_succ(abs, 0, 1, 0);  /* self loop: no progress toward the target */
  point_succ(abs, 1, 0, 1);
  point_succ(abs, 1, 1, 1);

  Region target = make_region(2, {1});
  Controller ctrl = solve_reach(abs, target, Region(2));
  validate_controller(abs, ctrl, target, Region(2));

  Controller bad_rank = ctrl;
  bad_rank.rank[0] = 0;  /* rank zero must lie inside the target */
  CHECK_THROWS_AS(validate_controller(abs, bad_rank, target, Region(2)), NumericError);

  Controller bad_choice = ctrl;
  bad_choice.choice[0] = 1;  /* self loop never descends */
  CHECK_THROWS_AS(validate_controller(abs, bad_choice, target, Region(2)),
                  NumericError);

  Controller bad_win = ctrl;
  bad_win.winning = make_region(2, {0, 1});
  bad_win.choice = {0, 0};
  bad_win.rank = {1, 0};
  /* cell 1 at rank 0 is in the target, fine; but claiming an avoid cell wins
   * must fail */
  Region avoid = make_region(2, {0});
  CHECK_THROWS_AS(validate_controller(abs, bad_win, target, avoid), NumericError);
}

TEST_CASE("closed-loop stepping follows the table and rejects strays") {
  UniformGrid grid(Box{{0.0}, {0.75}}, {0.125});
  Abstraction abs = hand_abs(grid, 1);
  point_succ(abs, 0, 0, 0);
  ball_succ(abs, 1, 0, {0.25}, {0.13});
  sink(abs, 2, 0);
  SystemModel sys = identity_system(Box{{0.0}, {0.75}});

  Controller ctrl = solve_safety(abs, make_region(3, {0, 1, 2}));
  int phase = 0;
  auto [xn, ui] = closed_loop_step(ctrl, abs, sys, {0.2}, {0.0}, phase);
  CHECK(ui == 0);
  CHECK(xn[0] == 0.2);
  CHECK_THROWS_AS(closed_loop_step(ctrl, abs, sys, {0.7}, {0.0}, phase),
                  NumericError);
  CHECK_THROWS_AS(closed_loop_step(ctrl, abs, sys, {5.0}, {0.0}, phase),
                  NumericError);
}

TEST_CASE("simulation verdicts") {
  UniformGrid grid(Box{{0.0}, {1.0}}, {0.25});
  Abstraction abs = hand_abs(grid, 1);
  point_succ(abs, 0, 0, 1);
  point_succ(abs, 1, 0, 1);
  SystemModel sys = identity_system(Box{{0.0}, {1.0}});
  Region target = make_region(2, {1});
  Controller ctrl = solve_reach(abs, target, Region(2));
  std::vector<Box> tboxes = {Box{{0.5}, {1.0}}};

  /* starting inside the target succeeds immediately, even at horizon zero */
  SimulationResult r0 = simulate_closed_loop(ctrl, abs, sys, {0.8}, 0,
                                             DisturbancePolicy::Zero, 1, tboxes, {});
  CHECK(r0.success);
  CHECK(r0.points.size() == 1);
  CHECK(r0.verdict.find("step 0") != std::string::npos);

  /* identity dynamics never move x = 0.2 into the target */
  SimulationResult stuck = simulate_closed_loop(ctrl, abs, sys, {0.2}, 5,
                                                DisturbancePolicy::Zero, 1, tboxes, {});
  CHECK_FALSE(stuck.success);
  CHECK(stuck.points.size() == 6);
  CHECK(stuck.verdict.find("horizon") != std::string::npos);

  /* an avoid box at the start loses immediately */
  SimulationResult hit = simulate_closed_loop(ctrl, abs, sys, {0.2}, 5,
                                              DisturbancePolicy::Zero, 1, tboxes,
                                              {Box{{0.0}, {0.3}}});
  CHECK_FALSE(hit.success);
  CHECK(hit.verdict.find("avoid") != std::string::npos);
}

TEST_CASE("controller files round-trip") {
  UniformGrid grid(Box{{0.0}, {1.0}}, {0.125});
  Abstraction abs = hand_abs(grid, 1);
  point_succ(abs, 0, 0, 1);
  point_succ(abs, 1, 0, 1);
  point_succ(abs, 2, 0, 2);
  point_succ(abs, 3, 0, 2);
  Region target = make_region(4, {1, 2});
  Controller ctrl = solve_reach_stay(abs, target, Region(4));

  save_controller(ctrl, grid, "ctrl_roundtrip.txt");
  auto [back, ggrid] = load_controller("ctrl_roundtrip.txt");
  CHECK(ggrid.radii() == grid.radii());
  CHECK(ggrid.box().lower == grid.box().lower);
  CHECK(back.kind == ctrl.kind);
  CHECK(back.iterations == ctrl.iterations);
  CHECK(to_set(back.winning) == to_set(ctrl.winning));
  CHECK(back.choice == ctrl.choice);
  CHECK(back.phase_choice == ctrl.phase_choice);
  CHECK(back.rank == ctrl.rank);
  CHECK(to_set(back.invariant) == to_set(ctrl.invariant));
  std::remove("ctrl_roundtrip.txt");

  CHECK_THROWS_AS(load_controller("missing_controller.txt"), ConfigError);
}

TEST_CASE("smaller successor balls only grow the winning set") {
  UniformGrid grid(Box{{0.0}, {1.0}}, {0.0625});
  CounterRng rng(99, {2});
  for (int trial = 0; trial < 20; ++trial) {
    Abstraction wide = hand_abs(grid, 1);
    Abstraction tight = hand_abs(grid, 1);
    for (size_t c = 0; c < 8; ++c) {
      double center = rng.uniform(0.1, 0.9);
      double radius = rng.uniform(0.05, 0.25);
      ball_succ(wide, c, 0, {center}, {radius});
      ball_succ(tight, c, 0, {center}, {radius * 0.5});
    }
    Region target = make_region(8, {3, 4});
    Controller vw = solve_reach(wide, target, Region(8));
    Controller vt = solve_reach(tight, target, Region(8));
    CHECK(vw.winning.subset_of(vt.winning));
  }
}

}  // TEST_SUITE
