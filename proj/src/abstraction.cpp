#include "dabs/abstraction.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dabs/errors.hpp"

namespace dabs {

double BuildConfig::lipschitz_for(size_t input_index) const {
  if (lipschitz.empty())
    throw ConfigError("no lipschitz constant configured; set one or estimate it");
  if (lipschitz.size() == 1) return lipschitz[0];
  if (input_index >= lipschitz.size())
    throw ConfigError("fewer lipschitz constants than inputs");
  return lipschitz[input_index];
}

double BuildConfig::theta_cap_for(size_t input_index) const {
  if (theta_cap_override) return *theta_cap_override;
  return theta_cap_scale * std::max(1.0, lipschitz_for(input_index));
}

namespace {

bool ball_inside(const Box& box, const Vec& z, const Vec& r) {
  for (size_t i = 0; i < box.dim(); ++i)
    if (z[i] - r[i] < box.lower[i] || z[i] + r[i] > box.upper[i]) return false;
  return true;
}

void check_build_inputs(const SystemModel& sys, const UniformGrid& grid,
                        const std::vector<Vec>& inputs, const BuildConfig& cfg) {
  if (grid.dim() != sys.state_dim)
    throw ConfigError("grid dimension does not match the system state dimension");
  if (inputs.empty()) throw ConfigError("abstraction needs at least one input value");
  for (const Vec& u : inputs)
    if (u.size() != sys.input_box.dim())
      throw ConfigError("input value dimension does not match the input box");
  if (!cfg.fixed_samples || !cfg.fixed_gamma) {
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
      throw ConfigError("epsilon must lie in (0,1)");
    if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) throw ConfigError("beta must lie in (0,1)");
  }
}

uint64_t resolve_sample_count(const UniformGrid& grid, const std::vector<Vec>& inputs,
                              const SystemModel& sys, const BuildConfig& cfg) {
  if (cfg.fixed_samples) return *cfg.fixed_samples;
  unsigned q = unsigned(sys.state_dim * sys.state_dim + sys.state_dim);
  double pairs = double(grid.num_cells()) * double(inputs.size());
  return sample_size(cfg.epsilon, cfg.beta / pairs, q);
}

std::vector<double> resolve_gammas(const UniformGrid& fit_grid,
                                   const std::vector<Vec>& inputs,
                                   const SystemModel& sys, const BuildConfig& cfg,
                                   GammaMode mode) {
  std::vector<double> g(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (cfg.fixed_gamma)
      g[i] = *cfg.fixed_gamma;
    else
      g[i] = bias_gamma(cfg.lipschitz_for(i), cfg.epsilon, fit_grid.radii(),
                        sys.wbar(), mode);
  }
  return g;
}

void fill_meta(AbstractionMeta& meta, const BuildConfig& cfg, uint64_t samples,
               GammaMode mode, bool paired, const std::vector<double>& gammas,
               size_t n_u) {
  meta.epsilon = cfg.epsilon;
  meta.beta = cfg.beta;
  meta.seed = cfg.seed;
  meta.samples_per_pair = samples;
  meta.gamma_mode = mode;
  meta.paired = paired;
  meta.permissive = cfg.permissive;
  meta.gamma_per_input = gammas;
  meta.lipschitz_per_input.resize(n_u);
  for (size_t i = 0; i < n_u; ++i) meta.lipschitz_per_input[i] = cfg.lipschitz_for(i);
}

}  // namespace

std::optional<IndexRect> Abstraction::successors(size_t cell, size_t input) const {
  const PairDescriptor& d = descriptor(cell, input);
  if (d.out_of_domain) return std::nullopt;
  IndexRect r = grid_.cells_overlapping_ball(d.center, d.radius);
  if (r.empty || r.clipped) return std::nullopt;
  return r;
}

Abstraction build_abstraction(const SystemModel& sys, const UniformGrid& grid,
                              const std::vector<Vec>& inputs, const BuildConfig& cfg,
                              unsigned workers) {
  check_build_inputs(sys, grid, inputs, cfg);
  if (cfg.gamma_mode == GammaMode::Paired4n)
    throw ConfigError("the paired gamma mode applies to growth tables only");
  GammaMode mode =
      cfg.gamma_mode == GammaMode::Auto ? auto_gamma_mode(sys.wbar()) : cfg.gamma_mode;
  const uint64_t n_samples = resolve_sample_count(grid, inputs, sys, cfg);
  std::vector<double> gammas = resolve_gammas(grid, inputs, sys, cfg, mode);

  Abstraction abs(grid, inputs);
  const size_t n_u = inputs.size();
  parallel_for(abs.num_cells() * n_u, workers, [&](size_t p) {
    size_t cell = p / n_u, ui = p % n_u;
    const Vec& u = abs.inputs()[ui];
    Vec x_hat = abs.grid().cell_center(cell);
    Vec x_nom = nominal_successor(sys, x_hat, u);
    PairDescriptor& d = abs.descriptor(cell, ui);
    d.center = x_nom;
    SampleBatch batch =
        sample_cell_batch(sys, abs.grid(), cell, u, ui, n_samples, cfg.seed);
    try {
      GrowthBound gb = solve_growth_lp(batch, x_hat, x_nom, gammas[ui],
                                       cfg.theta_cap_for(ui), cfg.weights);
      d.radius = eval_growth(gb, abs.grid().radii());
      for (double& r : d.radius) r += gammas[ui];
      if (!ball_inside(abs.grid().box(), d.center, d.radius)) d.out_of_domain = true;
    } catch (const InfeasibleError& e) {
      if (!cfg.permissive)
        throw InfeasibleError("pair (cell " + std::to_string(cell) + ", input " +
                                  std::to_string(ui) + "): " + e.what(),
                              e.worst_residual);
      d.radius.assign(abs.grid().dim(), 0.0);
      d.out_of_domain = true;
    }
  });

  fill_meta(abs.meta, cfg, n_samples, mode, false, gammas, n_u);
  for (size_t c = 0; c < abs.num_cells(); ++c)
    for (size_t ui = 0; ui < n_u; ++ui)
      if (abs.descriptor(c, ui).out_of_domain) ++abs.meta.out_of_domain_pairs;
  return abs;
}

GrowthTable build_growth_table(const SystemModel& sys, const UniformGrid& coarse,
                               const std::vector<Vec>& inputs, const BuildConfig& cfg,
                               unsigned workers) {
  check_build_inputs(sys, coarse, inputs, cfg);
  if (cfg.gamma_mode != GammaMode::Auto && cfg.gamma_mode != GammaMode::Paired4n)
    throw ConfigError("growth tables are fitted on paired batches; use the paired "
                      "gamma mode or auto");
  const uint64_t n_needed = resolve_sample_count(coarse, inputs, sys, cfg);
  const uint64_t n_pairs = (n_needed + 1) / 2;
  std::vector<double> gammas =
      resolve_gammas(coarse, inputs, sys, cfg, GammaMode::Paired4n);

  GrowthTable table{coarse, inputs, {}, {}, {}, {}};
  const size_t n_u = inputs.size();
  const size_t total = coarse.num_cells() * n_u;
  table.bounds.resize(total);
  table.anchors.resize(total);
  table.infeasible.assign(total, 0);

  parallel_for(total, workers, [&](size_t p) {
    size_t cell = p / n_u, ui = p % n_u;
    const Vec& u = inputs[ui];
    table.anchors[p] = nominal_successor(sys, coarse.cell_center(cell), u);
    SampleBatch batch =
        sample_paired_batch(sys, coarse, cell, u, ui, n_pairs, cfg.seed);
    try {
      table.bounds[p] = solve_growth_lp_paired(batch, gammas[ui],
                                               cfg.theta_cap_for(ui), cfg.weights);
    } catch (const InfeasibleError& e) {
      if (!cfg.permissive)
        throw InfeasibleError("pair (cell " + std::to_string(cell) + ", input " +
                                  std::to_string(ui) + "): " + e.what(),
                              e.worst_residual);
      table.infeasible[p] = 1;
    }
  });

  fill_meta(table.meta, cfg, 2 * n_pairs, GammaMode::Paired4n, true, gammas, n_u);
  for (uint8_t f : table.infeasible) table.meta.out_of_domain_pairs += f;
  return table;
}

Abstraction instantiate_refined(const GrowthTable& table, const UniformGrid& fine,
                                const SystemModel& sys, unsigned workers) {
  const UniformGrid& coarse = table.grid;
  if (fine.dim() != coarse.dim())
    throw ConfigError("refined grid dimension mismatch");
  for (size_t i = 0; i < fine.dim(); ++i) {
    double rel = std::fabs(fine.box().lower[i] - coarse.box().lower[i]) +
                 std::fabs(fine.box().upper[i] - coarse.box().upper[i]);
    if (rel > 1e-12 * std::max(1.0, std::fabs(coarse.box().upper[i])))
      throw ConfigError("refined grid covers a different box than the table grid");
  }
  size_t ratio = 0;
  for (size_t i = 0; i < fine.dim(); ++i) {
    size_t cf = fine.counts()[i], cc = coarse.counts()[i];
    if (cf % cc != 0) throw ConfigError("refined grid is not a halving of the table grid");
    size_t r = cf / cc;
    if ((r & (r - 1)) != 0)
      throw ConfigError("refined grid is not a halving of the table grid");
    if (i == 0)
      ratio = r;
    else if (r != ratio)
      throw ConfigError("refined grid halves dimensions unevenly");
  }

  Abstraction abs(fine, table.inputs);
  const size_t n_u = table.inputs.size();
  Vec twice_eta(fine.dim());
  for (size_t i = 0; i < fine.dim(); ++i) twice_eta[i] = 2.0 * fine.radii()[i];

  parallel_for(abs.num_cells() * n_u, workers, [&](size_t p) {
    size_t cell = p / n_u, ui = p % n_u;
    Vec center = abs.grid().cell_center(cell);
    size_t parent = parent_cell(coarse, center);
    size_t tp = table.pair_index(parent, ui);
    PairDescriptor& d = abs.descriptor(cell, ui);
    if (table.infeasible[tp]) {
      d.center = center;
      d.radius.assign(fine.dim(), 0.0);
      d.out_of_domain = true;
      return;
    }
    d.center = nominal_successor(sys, center, table.inputs[ui]);
    d.radius = eval_growth(table.bounds[tp], twice_eta);
    for (double& r : d.radius) r += table.meta.gamma_per_input[ui];
    if (!ball_inside(abs.grid().box(), d.center, d.radius)) d.out_of_domain = true;
  });

  abs.meta = table.meta;
  abs.meta.out_of_domain_pairs = 0;
  for (size_t c = 0; c < abs.num_cells(); ++c)
    for (size_t ui = 0; ui < n_u; ++ui)
      if (abs.descriptor(c, ui).out_of_domain) ++abs.meta.out_of_domain_pairs;
  return abs;
}

/* ---- serialization ---- */

const char* gamma_mode_name(GammaMode m) {
  switch (m) {
    case GammaMode::Auto: return "auto";
    case GammaMode::Full2n: return "full_2n";
    case GammaMode::NoDisturbanceN: return "no_disturbance_n";
    case GammaMode::PartialNPlusQ: return "partial_n_plus_q";
    case GammaMode::Paired4n: return "paired_4n";
  }
  return "auto";
}

GammaMode gamma_mode_from_name(const std::string& name) {
  if (name == "auto") return GammaMode::Auto;
  if (name == "full_2n") return GammaMode::Full2n;
  if (name == "no_disturbance_n") return GammaMode::NoDisturbanceN;
  if (name == "partial_n_plus_q") return GammaMode::PartialNPlusQ;
  if (name == "paired_4n") return GammaMode::Paired4n;
  throw ConfigError("unknown gamma mode '" + name + "'");
}

namespace {

void write_reals(std::ostream& os, const Vec& v) {
  for (double x : v) os << ' ' << format_real(x);
}

std::istringstream expect_line(std::istream& is, const char* key) {
  std::string line;
  if (!std::getline(is, line))
    throw ConfigError(std::string("abstraction file truncated before '") + key + "'");
  std::istringstream ls(line);
  std::string tok;
  ls >> tok;
  if (tok != key)
    throw ConfigError(std::string("abstraction file: expected '") + key + "', got '" +
                      tok + "'");
  return ls;
}

Vec read_reals(std::istringstream& ls, size_t n, const char* what) {
  Vec v(n);
  for (size_t i = 0; i < n; ++i)
    if (!(ls >> v[i]))
      throw ConfigError(std::string("abstraction file: short ") + what + " row");
  return v;
}

}  // namespace

void save_abstraction(const Abstraction& abs, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write abstraction file '" + path + "'");
  const UniformGrid& g = abs.grid();
  const size_t n = g.dim();
  os << "dabs-abstraction 1\n";
  os << "dim " << n << '\n';
  os << "box";
  write_reals(os, g.box().lower);
  write_reals(os, g.box().upper);
  os << '\n';
  os << "eta";
  write_reals(os, g.radii());
  os << '\n';
  const size_t n_u = abs.num_inputs();
  const size_t udim = n_u ? abs.inputs()[0].size() : 0;
  os << "inputs " << n_u << ' ' << udim << '\n';
  for (const Vec& u : abs.inputs()) {
    os << "u";
    write_reals(os, u);
    os << '\n';
  }
  const AbstractionMeta& m = abs.meta;
  os << "meta " << format_real(m.epsilon) << ' ' << format_real(m.beta) << ' '
     << m.seed << ' ' << m.samples_per_pair << ' ' << gamma_mode_name(m.gamma_mode)
     << ' ' << int(m.paired) << ' ' << int(m.permissive) << '\n';
  os << "gamma";
  write_reals(os, m.gamma_per_input);
  os << '\n';
  os << "lipschitz";
  write_reals(os, m.lipschitz_per_input);
  os << '\n';
  os << "pairs " << abs.num_cells() * n_u << '\n';
  for (size_t c = 0; c < abs.num_cells(); ++c)
    for (size_t ui = 0; ui < n_u; ++ui) {
      const PairDescriptor& d = abs.descriptor(c, ui);
      os << "p " << int(d.out_of_domain);
      Vec center = d.center.empty() ? Vec(n, 0.0) : d.center;
      Vec radius = d.radius.empty() ? Vec(n, 0.0) : d.radius;
      write_reals(os, center);
      write_reals(os, radius);
      os << '\n';
    }
  if (!os) throw ConfigError("write failed for abstraction file '" + path + "'");
}

Abstraction load_abstraction(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open abstraction file '" + path + "'");
  {
    std::string line;
    if (!std::getline(is, line) || line != "dabs-abstraction 1")
      throw ConfigError("'" + path + "' is not a version-1 abstraction file");
  }
  size_t n = 0;
  {
    auto ls = expect_line(is, "dim");
    if (!(ls >> n) || n == 0) throw ConfigError("abstraction file: bad dimension");
  }
  Box box;
  {
    auto ls = expect_line(is, "box");
    box.lower = read_reals(ls, n, "box");
    box.upper = read_reals(ls, n, "box");
  }
  Vec eta;
  {
    auto ls = expect_line(is, "eta");
    eta = read_reals(ls, n, "eta");
  }
  size_t n_u = 0, udim = 0;
  {
    auto ls = expect_line(is, "inputs");
    if (!(ls >> n_u >> udim) || n_u == 0)
      throw ConfigError("abstraction file: bad input count");
  }
  std::vector<Vec> inputs(n_u);
  for (size_t i = 0; i < n_u; ++i) {
    auto ls = expect_line(is, "u");
    inputs[i] = read_reals(ls, udim, "input");
  }
  Abstraction abs(UniformGrid(box, eta), inputs);
  {
    auto ls = expect_line(is, "meta");
    std::string mode;
    int paired = 0, permissive = 0;
    if (!(ls >> abs.meta.epsilon >> abs.meta.beta >> abs.meta.seed >>
          abs.meta.samples_per_pair >> mode >> paired >> permissive))
      throw ConfigError("abstraction file: bad meta row");
    abs.meta.gamma_mode = gamma_mode_from_name(mode);
    abs.meta.paired = paired != 0;
    abs.meta.permissive = permissive != 0;
  }
  {
    auto ls = expect_line(is, "gamma");
    abs.meta.gamma_per_input = read_reals(ls, n_u, "gamma");
  }
  {
    auto ls = expect_line(is, "lipschitz");
    abs.meta.lipschitz_per_input = read_reals(ls, n_u, "lipschitz");
  }
  size_t n_pairs = 0;
  {
    auto ls = expect_line(is, "pairs");
    if (!(ls >> n_pairs) || n_pairs != abs.num_cells() * n_u)
      throw ConfigError("abstraction file: pair count does not match the grid");
  }
  for (size_t p = 0; p < n_pairs; ++p) {
    auto ls = expect_line(is, "p");
    int ood = 0;
    if (!(ls >> ood)) throw ConfigError("abstraction file: bad pair row");
    PairDescriptor& d = abs.descriptor(p / n_u, p % n_u);
    d.out_of_domain = ood != 0;
    d.center = read_reals(ls, n, "pair");
    d.radius = read_reals(ls, n, "pair");
    if (d.out_of_domain) ++abs.meta.out_of_domain_pairs;
  }
  return abs;
}

}  // namespace dabs
