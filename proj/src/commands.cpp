#include "dabs/commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dabs/errors.hpp"
#include "dabs/lipschitz.hpp"

namespace dabs {

namespace {

namespace fs = std::filesystem;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

unsigned effective_workers(const CommandOptions& opt) {
  return opt.workers ? opt.workers : default_workers();
}

void ensure_output_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec)
    throw ConfigError("cannot create output directory '" + cfg.output_dir +
                      "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  return os;
}

std::string out_path(const RunConfig& cfg, const char* name) {
  return (fs::path(cfg.output_dir) / name).string();
}

/* per-pair confidence split and constraint dimension of the growth program */
double beta_per_pair(const RunConfig& cfg) {
  return cfg.build.beta / (double(cfg.grid.num_cells()) * double(cfg.inputs.size()));
}

unsigned growth_q(const RunConfig& cfg) {
  size_t n = cfg.system.state_dim;
  return unsigned(n * n + n);
}

std::vector<double> lipschitz_for_build(const RunConfig& cfg, unsigned workers) {
  return resolve_lipschitz(cfg.system, cfg.inputs, cfg.lipschitz, cfg.build.seed,
                           workers);
}

bool grids_equal(const UniformGrid& a, const UniformGrid& b) {
  return a.box().lower == b.box().lower && a.box().upper == b.box().upper &&
         a.radii() == b.radii();
}

/* loads a previously saved abstraction when it matches the config, otherwise
 * builds (and saves) a fresh one */
Abstraction obtain_abstraction(const RunConfig& cfg, unsigned workers) {
  std::string path = abstraction_path(cfg);
  if (fs::exists(path)) {
    Abstraction abs = load_abstraction(path);
    if (!grids_equal(abs.grid(), cfg.grid) || abs.inputs() != cfg.inputs ||
        abs.meta.epsilon != cfg.build.epsilon || abs.meta.beta != cfg.build.beta ||
        abs.meta.seed != cfg.build.seed)
      throw ConfigError("'" + path + "' was built from different parameters; "
                        "delete it or re-run abstract");
    return abs;
  }
  RunConfig build_cfg = cfg;
  build_cfg.build.lipschitz = lipschitz_for_build(cfg, workers);
  ensure_output_dir(cfg);
  Abstraction abs = build_abstraction(build_cfg.system, build_cfg.grid,
                                      build_cfg.inputs, build_cfg.build, workers);
  save_abstraction(abs, path);
  return abs;
}

Controller synthesize_on(const Abstraction& abs, const ObjectiveConfig& obj) {
  Region target = region_from_boxes_inner(abs.grid(), obj.target_boxes);
  Region avoid = region_from_boxes_outer(abs.grid(), obj.avoid_boxes);
  Controller ctrl;
  switch (obj.kind) {
    case ObjectiveKind::Reach:
    case ObjectiveKind::ReachAvoid:
      ctrl = solve_reach(abs, target, avoid);
      ctrl.kind = obj.kind;
      break;
    case ObjectiveKind::Safety:
      ctrl = solve_safety(abs, target);
      break;
    case ObjectiveKind::ReachStay:
      ctrl = solve_reach_stay(abs, target, avoid);
      break;
  }
  validate_controller(abs, ctrl, target, avoid);
  return ctrl;
}

void require_objective(const RunConfig& cfg, const char* who) {
  if (cfg.objective.target_boxes.empty())
    throw ConfigError(std::string(who) + " needs an [objective] section");
}

}  // namespace

std::string abstraction_path(const RunConfig& cfg) {
  return (fs::path(cfg.output_dir) / "abstraction.txt").string();
}

std::string controller_path(const RunConfig& cfg) {
  return (fs::path(cfg.output_dir) / "controller.txt").string();
}

int cmd_estimate_lipschitz(const RunConfig& cfg, const CommandOptions&) {
  auto t0 = std::chrono::steady_clock::now();
  double delta = cfg.lipschitz.delta.value_or(default_slope_delta(cfg.system));
  LipschitzEstimate est =
      estimate_lipschitz(cfg.system, cfg.inputs, cfg.lipschitz.n_inner,
                         cfg.lipschitz.m_blocks, delta, cfg.build.seed,
                         cfg.lipschitz.safety);
  ensure_output_dir(cfg);
  std::ofstream os = open_out(out_path(cfg, "lipschitz.csv"));
  const size_t udim = cfg.inputs.empty() ? 0 : cfg.inputs[0].size();
  os << "input_index";
  for (size_t j = 0; j < udim; ++j) os << ",u" << j;
  os << ",L,location,scale,shape,log_likelihood,degenerate,n_inner,m_blocks,delta,"
        "safety,seed\n";
  for (size_t i = 0; i < cfg.inputs.size(); ++i) {
    os << i;
    for (double u : cfg.inputs[i]) os << ',' << format_real(u);
    const WeibullFit& w = est.fits[i];
    os << ',' << format_real(est.per_input[i]) << ',' << format_real(w.location) << ','
       << format_real(w.scale) << ',' << format_real(w.shape) << ','
       << format_real(w.log_likelihood) << ',' << int(w.degenerate) << ','
       << est.n_inner << ',' << est.m_blocks << ',' << format_real(est.delta) << ','
       << format_real(cfg.lipschitz.safety) << ',' << est.seed << '\n';
  }
  std::cout << "estimate-lipschitz: " << cfg.inputs.size() << " inputs, n_inner="
            << est.n_inner << ", m_blocks=" << est.m_blocks
            << ", delta=" << format_real(delta) << ", seed=" << est.seed << '\n';
  for (size_t i = 0; i < cfg.inputs.size(); ++i)
    std::cout << "  input " << i << ": L = " << format_real(est.per_input[i]) << '\n';
  std::cout << "  global max L = " << format_real(est.global_max) << '\n';
  std::printf("  wrote %s (%.2f s)\n", out_path(cfg, "lipschitz.csv").c_str(),
              seconds_since(t0));
  return kExitOk;
}

int cmd_sample_size(const RunConfig& cfg, const CommandOptions&) {
  unsigned q = growth_q(cfg);
  double bpp = beta_per_pair(cfg);
  uint64_t n_sc = sample_size(cfg.build.epsilon, bpp, q);
  uint64_t n_pac = pac_sample_size(cfg.build.epsilon, bpp, q);
  ensure_output_dir(cfg);
  std::ofstream os = open_out(out_path(cfg, "sample_size.csv"));
  os << "epsilon,beta,cells,inputs,beta_per_pair,q,n_scenario,n_pac\n";
  os << format_real(cfg.build.epsilon) << ',' << format_real(cfg.build.beta) << ','
     << cfg.grid.num_cells() << ',' << cfg.inputs.size() << ',' << format_real(bpp)
     << ',' << q << ',' << n_sc << ',' << n_pac << '\n';
  std::cout << "sample-size: epsilon=" << format_real(cfg.build.epsilon)
            << " beta=" << format_real(cfg.build.beta) << " cells="
            << cfg.grid.num_cells() << " inputs=" << cfg.inputs.size()
            << " beta_per_pair=" << format_real(bpp) << " q=" << q << '\n';
  std::cout << "  N_scenario = " << n_sc << "\n  N_pac      = " << n_pac << '\n';
  return kExitOk;
}

int cmd_abstract(const RunConfig& cfg, const CommandOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  unsigned workers = effective_workers(opt);
  RunConfig build_cfg = cfg;
  build_cfg.build.lipschitz = lipschitz_for_build(cfg, workers);
  ensure_output_dir(cfg);
  Abstraction abs = build_abstraction(build_cfg.system, build_cfg.grid,
                                      build_cfg.inputs, build_cfg.build, workers);
  save_abstraction(abs, abstraction_path(cfg));

  std::ofstream os = open_out(out_path(cfg, "abstract_summary.csv"));
  os << "input_index,gamma,lipschitz,cells,inputs,samples_per_pair,epsilon,beta,seed,"
        "gamma_mode,paired,permissive,out_of_domain_pairs\n";
  for (size_t i = 0; i < abs.num_inputs(); ++i) {
    os << i << ',' << format_real(abs.meta.gamma_per_input[i]) << ','
       << format_real(abs.meta.lipschitz_per_input[i]) << ',' << abs.num_cells() << ','
       << abs.num_inputs() << ',' << abs.meta.samples_per_pair << ','
       << format_real(abs.meta.epsilon) << ',' << format_real(abs.meta.beta) << ','
       << abs.meta.seed << ',' << gamma_mode_name(abs.meta.gamma_mode) << ','
       << int(abs.meta.paired) << ',' << int(abs.meta.permissive) << ','
       << abs.meta.out_of_domain_pairs << '\n';
  }
  std::cout << "abstract: " << abs.num_cells() << " cells x " << abs.num_inputs()
            << " inputs, N=" << abs.meta.samples_per_pair
            << " samples per pair, out-of-domain pairs "
            << abs.meta.out_of_domain_pairs << '\n';
  for (size_t i = 0; i < abs.num_inputs(); ++i)
    std::cout << "  input " << i << ": gamma = "
              << format_real(abs.meta.gamma_per_input[i])
              << ", L = " << format_real(abs.meta.lipschitz_per_input[i]) << '\n';
  std::printf("  wrote %s (%.2f s)\n", abstraction_path(cfg).c_str(), seconds_since(t0));
  return kExitOk;
}

int cmd_synthesize(const RunConfig& cfg, const CommandOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  require_objective(cfg, "synthesize");
  unsigned workers = effective_workers(opt);
  Abstraction abs = obtain_abstraction(cfg, workers);
  Controller ctrl = synthesize_on(abs, cfg.objective);

  size_t winning = ctrl.winning.count();
  std::optional<size_t> init_cell;
  bool init_winning = false;
  if (cfg.objective.has_x_init) {
    init_cell = abs.grid().point_to_cell(cfg.objective.x_init);
    init_winning = init_cell && ctrl.winning.test(*init_cell);
  }
  ensure_output_dir(cfg);
  save_controller(ctrl, abs.grid(), controller_path(cfg));
  std::ofstream os = open_out(out_path(cfg, "synthesize_summary.csv"));
  os << "objective,cells,inputs,winning,iterations,invariant,init_winning\n";
  os << objective_name(ctrl.kind) << ',' << abs.num_cells() << ',' << abs.num_inputs()
     << ',' << winning << ',' << ctrl.iterations << ',' << ctrl.invariant.count()
     << ',' << int(init_winning) << '\n';

  std::cout << "synthesize: objective " << objective_name(ctrl.kind) << ", |V| = "
            << winning << " of " << abs.num_cells() << " cells, "
            << ctrl.iterations << " iterations\n";
  if (cfg.objective.has_x_init)
    std::cout << "  x_init cell " << (init_cell ? std::to_string(*init_cell) : "outside")
              << (init_winning ? " wins\n" : " does not win\n");
  std::printf("  wrote %s (%.2f s)\n", controller_path(cfg).c_str(), seconds_since(t0));
  if (winning == 0)
    throw SynthesisEmptyError("the winning set is empty on this grid");
  return kExitOk;
}

int cmd_refine_synthesize(const RunConfig& cfg, const CommandOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  require_objective(cfg, "refine-synthesize");
  if (!cfg.refine) throw ConfigError("refine-synthesize needs a [refine] section");
  if (!cfg.objective.has_x_init)
    throw ConfigError("refine-synthesize needs [objective] x_init");
  unsigned workers = effective_workers(opt);

  RunConfig build_cfg = cfg;
  build_cfg.build.lipschitz = lipschitz_for_build(cfg, workers);
  UniformGrid coarse(cfg.system.state_box, cfg.refine->eta0);
  GrowthTable table = build_growth_table(build_cfg.system, coarse, build_cfg.inputs,
                                         build_cfg.build, workers);
  RefineResult res = refine_and_synthesize(
      build_cfg.system, table, cfg.objective.kind, cfg.objective.target_boxes,
      cfg.objective.avoid_boxes, cfg.objective.x_init, cfg.refine->max_halvings,
      cfg.refine->max_cells, workers);

  ensure_output_dir(cfg);
  std::ofstream os = open_out(out_path(cfg, "refine_report.csv"));
  os << "halvings";
  for (size_t d = 0; d < cfg.grid.dim(); ++d) os << ",eta" << d;
  os << ",cells,winning,init_winning\n";
  for (const RefineIteration& it : res.iterations) {
    os << it.halvings;
    for (double e : it.eta) os << ',' << format_real(e);
    os << ',' << it.num_cells << ',' << it.winning_count << ',' << int(it.init_winning)
       << '\n';
  }
  std::cout << "refine-synthesize: table on " << coarse.num_cells()
            << " coarse cells, 2N=" << table.meta.samples_per_pair
            << " paired samples per pair\n";
  for (const RefineIteration& it : res.iterations)
    std::cout << "  level " << it.halvings << ": " << it.num_cells << " cells, |V| = "
              << it.winning_count << (it.init_winning ? " (x_init wins)\n" : "\n");
  if (res.success) {
    save_controller(res.controller, res.abstraction.grid(), controller_path(cfg));
    save_abstraction(res.abstraction, abstraction_path(cfg));
    std::printf("  wrote %s (%.2f s)\n", controller_path(cfg).c_str(),
                seconds_since(t0));
    return kExitOk;
  }
  std::printf("  no level won x_init (%.2f s)\n", seconds_since(t0));
  throw SynthesisEmptyError("refinement exhausted without winning the start cell");
}

int cmd_simulate(const RunConfig& cfg, const CommandOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  require_objective(cfg, "simulate");
  if (!cfg.objective.has_x_init) throw ConfigError("simulate needs [objective] x_init");
  unsigned workers = effective_workers(opt);
  Abstraction abs = obtain_abstraction(cfg, workers);
  Controller ctrl;
  std::string cpath = controller_path(cfg);
  if (fs::exists(cpath)) {
    auto loaded = load_controller(cpath);
    if (!grids_equal(loaded.second, abs.grid()))
      throw ConfigError("'" + cpath + "' was synthesized on a different grid");
    ctrl = std::move(loaded.first);
  } else {
    ctrl = synthesize_on(abs, cfg.objective);
    ensure_output_dir(cfg);
    save_controller(ctrl, abs.grid(), cpath);
  }

  ensure_output_dir(cfg);
  std::ofstream traj = open_out(out_path(cfg, "trajectories.csv"));
  const size_t n = cfg.system.state_dim;
  const size_t udim = cfg.inputs.empty() ? 0 : cfg.inputs[0].size();
  traj << "run,step,phase,cell";
  for (size_t j = 0; j < n; ++j) traj << ",x" << j;
  for (size_t j = 0; j < udim; ++j) traj << ",u" << j;
  traj << '\n';
  std::ofstream tally = open_out(out_path(cfg, "verdicts.csv"));
  tally << "run,seed,success,steps,verdict\n";

  size_t successes = 0;
  for (size_t r = 0; r < cfg.simulate.runs; ++r) {
    uint64_t run_seed = cfg.simulate.seed + r;
    SimulationResult res = simulate_closed_loop(
        ctrl, abs, cfg.system, cfg.objective.x_init, cfg.simulate.horizon,
        cfg.simulate.policy, run_seed, cfg.objective.target_boxes,
        cfg.objective.avoid_boxes);
    successes += res.success ? 1 : 0;
    for (const TrajectoryPoint& p : res.points) {
      traj << r << ',' << p.step << ',' << p.phase << ',';
      if (p.cell == size_t(-1))
        traj << -1;
      else
        traj << p.cell;
      for (double x : p.x) traj << ',' << format_real(x);
      for (size_t j = 0; j < udim; ++j) {
        traj << ',';
        if (j < p.u.size()) traj << format_real(p.u[j]);
      }
      traj << '\n';
    }
    tally << r << ',' << run_seed << ',' << int(res.success) << ','
          << (res.points.empty() ? 0 : res.points.back().step) << ',' << res.verdict
          << '\n';
  }
  std::cout << "simulate: " << successes << "/" << cfg.simulate.runs
            << " runs satisfied the objective (horizon " << cfg.simulate.horizon
            << ")\n";
  std::printf("  wrote %s (%.2f s)\n", out_path(cfg, "trajectories.csv").c_str(),
              seconds_since(t0));
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, const CommandOptions& opt) {
  if (!cfg.sweep) throw ConfigError("sweep needs a [sweep] section");
  unsigned q = growth_q(cfg);
  ensure_output_dir(cfg);
  std::ofstream os = open_out(out_path(cfg, "sweep.csv"));
  switch (cfg.sweep->kind) {
    case SweepKind::BetaVsN: {
      os << "epsilon,beta,q,n\n";
      for (double b : cfg.sweep->values)
        os << format_real(cfg.build.epsilon) << ',' << format_real(b) << ',' << q
           << ',' << sample_size(cfg.build.epsilon, b, q) << '\n';
      break;
    }
    case SweepKind::EpsVsN: {
      os << "epsilon,beta,q,n\n";
      for (double e : cfg.sweep->values)
        os << format_real(e) << ',' << format_real(cfg.build.beta) << ',' << q << ','
           << sample_size(e, cfg.build.beta, q) << '\n';
      break;
    }
    case SweepKind::EpsVsGamma: {
      auto lips = lipschitz_for_build(cfg, effective_workers(opt));
      double lmax = 0;
      for (double l : lips) lmax = std::max(lmax, l);
      os << "epsilon,L,gamma\n";
      for (double e : cfg.sweep->values)
        os << format_real(e) << ',' << format_real(lmax) << ','
           << format_real(bias_gamma(lmax, e, cfg.grid.radii(), cfg.system.wbar(),
                                     cfg.build.gamma_mode))
           << '\n';
      break;
    }
  }
  std::cout << "sweep: " << cfg.sweep->values.size() << " rows -> "
            << out_path(cfg, "sweep.csv") << '\n';
  return kExitOk;
}

namespace {

void report_region_compare(std::ostream& os, std::ostream& con, const Region& a,
                           const Region& b, const char* name_a, const char* name_b) {
  size_t both = 0, only_a = 0, only_b = 0;
  for (size_t c = 0; c < a.size(); ++c) {
    bool ia = a.test(c), ib = b.test(c);
    both += ia && ib;
    only_a += ia && !ib;
    only_b += ib && !ia;
  }
  size_t ca = a.count(), cb = b.count();
  auto pct = [](size_t part, size_t whole) {
    return whole == 0 ? 0.0 : 100.0 * double(part) / double(whole);
  };
  os << name_a << ',' << name_b << ',' << ca << ',' << cb << ',' << both << ','
     << only_a << ',' << only_b << ',' << format_real(pct(both, ca)) << ','
     << format_real(pct(both, cb)) << '\n';
  con << "  |" << name_a << "| = " << ca << ", |" << name_b << "| = " << cb
      << ", intersection " << both << " (" << pct(both, ca) << "% of " << name_a
      << "), " << name_a << "\\" << name_b << " = " << only_a << ", " << name_b
      << "\\" << name_a << " = " << only_b << '\n';
}

}  // namespace

int cmd_pac_compare(const RunConfig& cfg, const CommandOptions& opt) {
  auto t0 = std::chrono::steady_clock::now();
  require_objective(cfg, "pac-compare");
  unsigned workers = effective_workers(opt);
  unsigned q = growth_q(cfg);
  double bpp = beta_per_pair(cfg);
  uint64_t n_sc = sample_size(cfg.build.epsilon, bpp, q);
  uint64_t n_pac = pac_sample_size(cfg.build.epsilon, bpp, q);

  RunConfig scen_cfg = cfg;
  scen_cfg.build.lipschitz = lipschitz_for_build(cfg, workers);
  Abstraction scen_abs = build_abstraction(scen_cfg.system, scen_cfg.grid,
                                           scen_cfg.inputs, scen_cfg.build, workers);
  Controller scen_ctrl = synthesize_on(scen_abs, cfg.objective);

  RunConfig pac_cfg = scen_cfg;
  pac_cfg.build.fixed_gamma = 0.0;
  pac_cfg.build.fixed_samples = n_pac;
  Abstraction pac_abs = build_abstraction(pac_cfg.system, pac_cfg.grid, pac_cfg.inputs,
                                          pac_cfg.build, workers);
  Controller pac_ctrl = synthesize_on(pac_abs, cfg.objective);

  ensure_output_dir(cfg);
  std::ofstream os = open_out(out_path(cfg, "pac_compare.csv"));
  os << "epsilon,beta,q,beta_per_pair,n_scenario,n_pac\n";
  os << format_real(cfg.build.epsilon) << ',' << format_real(cfg.build.beta) << ','
     << q << ',' << format_real(bpp) << ',' << n_sc << ',' << n_pac << '\n';
  os << "set_a,set_b,count_a,count_b,intersection,a_minus_b,b_minus_a,pct_of_a,"
        "pct_of_b\n";
  std::cout << "pac-compare: N_scenario = " << n_sc << ", N_pac = " << n_pac << '\n';
  report_region_compare(os, std::cout, scen_ctrl.winning, pac_ctrl.winning,
                        "scenario", "pac");
  std::printf("  wrote %s (%.2f s)\n", out_path(cfg, "pac_compare.csv").c_str(),
              seconds_since(t0));
  return kExitOk;
}

int cmd_compare_winning(const RunConfig& cfg, const CommandOptions& opt) {
  if (opt.controller_a.empty() || opt.controller_b.empty())
    throw ConfigError("compare-winning needs --controller-a and --controller-b");
  auto a = load_controller(opt.controller_a);
  auto b = load_controller(opt.controller_b);
  if (!grids_equal(a.second, b.second))
    throw ConfigError("the two controllers were synthesized on different grids");
  ensure_output_dir(cfg);
  std::ofstream os = open_out(out_path(cfg, "compare_winning.csv"));
  os << "set_a,set_b,count_a,count_b,intersection,a_minus_b,b_minus_a,pct_of_a,"
        "pct_of_b\n";
  std::cout << "compare-winning: " << opt.controller_a << " vs " << opt.controller_b
            << '\n';
  report_region_compare(os, std::cout, a.first.winning, b.first.winning, "a", "b");
  return kExitOk;
}

int run_command(const std::string& name, const std::string& config_path,
                const CommandOptions& opt) {
  try {
    RunConfig cfg = load_run_config(config_path);
    if (name == "estimate-lipschitz") return cmd_estimate_lipschitz(cfg, opt);
    if (name == "sample-size") return cmd_sample_size(cfg, opt);
    if (name == "abstract") return cmd_abstract(cfg, opt);
    if (name == "synthesize") return cmd_synthesize(cfg, opt);
    if (name == "refine-synthesize") return cmd_refine_synthesize(cfg, opt);
    if (name == "simulate") return cmd_simulate(cfg, opt);
    if (name == "sweep") return cmd_sweep(cfg, opt);
    if (name == "pac-compare") return cmd_pac_compare(cfg, opt);
    if (name == "compare-winning") return cmd_compare_winning(cfg, opt);
    throw ConfigError("unknown subcommand '" + name + "'");
  } catch (const SynthesisEmptyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEmpty;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace dabs
