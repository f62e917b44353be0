#include "dabs/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "dabs/errors.hpp"
#include "dabs/lipschitz.hpp"

namespace dabs {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Vec parse_reals(const std::string& text, const std::string& what) {
  std::istringstream is(text);
  Vec v;
  double x;
  while (is >> x) v.push_back(x);
  std::string rest;
  if (is.clear(), is >> rest)
    throw ConfigError("cannot parse '" + what + "': junk after numbers");
  if (v.empty()) throw ConfigError("cannot parse '" + what + "': no numbers");
  return v;
}

bool parse_bool(const std::string& raw, const std::string& what) {
  std::string t = trim(raw);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError("cannot parse '" + what + "' as a boolean: '" + raw + "'");
}

}  // namespace

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile cf;
  cf.origin_ = origin;
  std::istringstream is(text);
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      cf.sections_[section];
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": key outside any [section]");
    cf.sections_[section][key] = val;
  }
  return cf;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_string(buf.str(), path);
}

const std::string& ConfigFile::raw(const std::string& section,
                                   const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end())
    throw ConfigError(origin_ + ": missing section [" + section + "]");
  auto k = s->second.find(key);
  if (k == s->second.end())
    throw ConfigError(origin_ + ": missing key '" + key + "' in [" + section + "]");
  return k->second;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get_string(const std::string& section,
                                   const std::string& key) const {
  return trim(raw(section, key));
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key) const {
  Vec v = parse_reals(raw(section, key), section + "." + key);
  if (v.size() != 1)
    throw ConfigError("'" + section + "." + key + "' must be a single number");
  return v[0];
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key) const {
  std::istringstream is(raw(section, key));
  int64_t signed_probe = 0;
  std::istringstream probe(raw(section, key));
  if (probe >> signed_probe && signed_probe < 0)
    throw ConfigError("'" + section + "." + key + "' must be nonnegative");
  uint64_t v = 0;
  std::string rest;
  if (!(is >> v) || (is >> rest))
    throw ConfigError("cannot parse '" + section + "." + key + "' as an integer");
  return v;
}

uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key,
                             uint64_t fallback) const {
  return has(section, key) ? get_u64(section, key) : fallback;
}

Vec ConfigFile::get_vec(const std::string& section, const std::string& key) const {
  return parse_reals(raw(section, key), section + "." + key);
}

Vec ConfigFile::get_vec(const std::string& section, const std::string& key,
                        const Vec& fallback) const {
  return has(section, key) ? get_vec(section, key) : fallback;
}

Mat ConfigFile::get_mat(const std::string& section, const std::string& key) const {
  auto rows = split(raw(section, key), ';');
  std::vector<Vec> parsed;
  for (const auto& r : rows) parsed.push_back(parse_reals(r, section + "." + key));
  Mat m(parsed.size(), parsed[0].size());
  for (size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].size() != m.cols)
      throw ConfigError("'" + section + "." + key + "' has ragged rows");
    for (size_t j = 0; j < m.cols; ++j) m(i, j) = parsed[i][j];
  }
  return m;
}

std::vector<Box> ConfigFile::get_boxes(const std::string& section,
                                       const std::string& key) const {
  std::vector<Box> boxes;
  for (const auto& part : split(raw(section, key), '|')) {
    auto halves = split(part, ';');
    if (halves.size() != 2)
      throw ConfigError("'" + section + "." + key +
                        "': each box needs exactly 'lo... ; hi...'");
    Box b;
    b.lower = parse_reals(halves[0], section + "." + key);
    b.upper = parse_reals(halves[1], section + "." + key);
    b.validate((section + "." + key).c_str());
    boxes.push_back(std::move(b));
  }
  return boxes;
}

std::vector<Vec> ConfigFile::get_vec_list(const std::string& section,
                                          const std::string& key) const {
  std::vector<Vec> out;
  for (const auto& part : split(raw(section, key), ';'))
    out.push_back(parse_reals(part, section + "." + key));
  return out;
}

namespace {

SystemModel build_system(const ConfigFile& f, std::optional<Vec> wbar_override) {
  std::string kind = f.get_string("system", "kind");
  if (kind == "dcdc") {
    DcdcParams p;
    p.A1 = f.get_mat("system", "A1");
    p.A2 = f.get_mat("system", "A2");
    p.b = f.get_vec("system", "b");
    p.c = f.get_vec("system", "c");
    p.tau = f.get_double("system", "tau", p.tau);
    if (wbar_override) p.wbar = *wbar_override;
    if (p.A1.rows != 2 || p.A1.cols != 2 || p.A2.rows != 2 || p.A2.cols != 2 ||
        p.b.size() != 2 || p.c.size() != 2 || p.wbar.size() != 2)
      throw ConfigError("dcdc system: A1, A2 must be 2x2 and b, c, wbar length 2");
    return make_dcdc_system(p);
  }
  if (kind == "vehicle") {
    double tau = f.get_double("system", "tau", 0.3);
    int substeps = int(f.get_u64("system", "substeps", 64));
    Vec wbar = wbar_override.value_or(Vec{0.01, 0.0, 0.0});
    if (wbar.size() != 3) throw ConfigError("vehicle system: wbar must have length 3");
    return make_vehicle_system(tau, wbar, substeps);
  }
  if (kind == "power3a3m") {
    const Power3a3mParams& p = power3a3m_params();
    double tau = f.get_double("system", "tau", p.tau);
    Vec wbar = wbar_override.value_or(p.wbar);
    if (wbar.size() != 2) throw ConfigError("power3a3m system: wbar must have length 2");
    if (tau == p.tau && !wbar_override) return make_power3a3m_system();
    return make_lti_system(p.A, p.B, p.E, p.state_box, p.input_box, wbar, tau);
  }
  if (kind == "lti") {
    Mat A = f.get_mat("system", "A");
    Mat B = f.get_mat("system", "B");
    Mat E = f.get_mat("system", "E");
    double tau = f.get_double("system", "tau");
    auto sb = f.get_boxes("state", "box");
    if (sb.size() != 1) throw ConfigError("[state] box must be a single box");
    auto ib = f.get_boxes("input", "box");
    if (ib.size() != 1) throw ConfigError("[input] box must be a single box");
    Vec wbar = wbar_override.value_or(Vec(E.cols, 0.0));
    if (wbar.size() != E.cols)
      throw ConfigError("lti system: wbar length must match the columns of E");
    return make_lti_system(A, B, E, sb[0], ib[0], wbar, tau);
  }
  throw ConfigError("unknown system kind '" + kind +
                    "' (expected dcdc, vehicle, power3a3m, or lti)");
}

std::vector<Vec> build_inputs(const ConfigFile& f, const SystemModel& sys,
                              const std::string& system_kind) {
  if (f.has("input", "levels")) {
    auto levels = f.get_vec_list("input", "levels");
    for (const Vec& u : levels) {
      if (u.size() != sys.input_box.dim())
        throw ConfigError("[input] levels: wrong input dimension");
      if (!sys.input_box.contains(u))
        throw ConfigError("[input] levels: a level lies outside the input box");
    }
    return levels;
  }
  if (f.has("input", "eta")) {
    UniformGrid ug(sys.input_box, f.get_vec("input", "eta"));
    std::vector<Vec> levels(ug.num_cells());
    for (size_t i = 0; i < ug.num_cells(); ++i) levels[i] = ug.cell_center(i);
    return levels;
  }
  if (system_kind == "dcdc") return {{1.0}, {2.0}};
  throw ConfigError("[input] needs either 'levels' or 'eta'");
}

DisturbancePolicy policy_from_name(const std::string& name) {
  if (name == "zero") return DisturbancePolicy::Zero;
  if (name == "uniform") return DisturbancePolicy::Uniform;
  if (name == "worst_corner") return DisturbancePolicy::WorstCorner;
  throw ConfigError("unknown disturbance policy '" + name + "'");
}

SweepKind sweep_from_name(const std::string& name) {
  if (name == "beta_vs_n") return SweepKind::BetaVsN;
  if (name == "eps_vs_n") return SweepKind::EpsVsN;
  if (name == "eps_vs_gamma") return SweepKind::EpsVsGamma;
  throw ConfigError("unknown sweep kind '" + name + "'");
}

void check_box_in_state(const Box& b, const Box& X, const char* what) {
  if (b.dim() != X.dim())
    throw ConfigError(std::string(what) + ": wrong dimension");
  if (!b.inside(X))
    throw ConfigError(std::string(what) + ": box sticks out of the state box");
}

}  // namespace

RunConfig run_config_from_file(const ConfigFile& f) {
  std::optional<Vec> wbar_override;
  if (f.has("disturbance", "wbar")) {
    wbar_override = f.get_vec("disturbance", "wbar");
    for (double w : *wbar_override)
      if (w < 0.0) throw ConfigError("[disturbance] wbar components must be >= 0");
  }
  std::string kind = f.get_string("system", "kind");
  SystemModel sys = build_system(f, wbar_override);

  if (f.has("state", "box")) {
    auto sb = f.get_boxes("state", "box");
    if (sb.size() != 1) throw ConfigError("[state] box must be a single box");
    if (sb[0].dim() != sys.state_dim)
      throw ConfigError("[state] box dimension does not match the system");
    sys.state_box = sb[0];
  }
  sys.state_box.validate("[state] box");
  if (f.has("input", "box")) {
    auto ib = f.get_boxes("input", "box");
    if (ib.size() != 1) throw ConfigError("[input] box must be a single box");
    sys.input_box = ib[0];
  }

  UniformGrid grid(sys.state_box, f.get_vec("state", "eta"));
  RunConfig cfg(std::move(sys), std::move(grid));
  cfg.inputs = build_inputs(f, cfg.system, kind);

  /* scenario parameters; the seed is mandatory so every randomized run is auditable */
  cfg.build.epsilon = f.get_double("scenario", "epsilon", 0.01);
  cfg.build.beta = f.get_double("scenario", "beta", 0.01);
  if (!(cfg.build.epsilon > 0.0 && cfg.build.epsilon < 1.0))
    throw ConfigError("[scenario] epsilon must lie in (0,1)");
  if (!(cfg.build.beta > 0.0 && cfg.build.beta < 1.0))
    throw ConfigError("[scenario] beta must lie in (0,1)");
  if (!f.has("scenario", "seed"))
    throw ConfigError("[scenario] seed is required (randomized runs must be auditable)");
  cfg.build.seed = f.get_u64("scenario", "seed");
  cfg.build.gamma_mode =
      gamma_mode_from_name(f.get_string("scenario", "gamma_mode", "auto"));
  cfg.build.weights.theta1 = f.get_double("scenario", "weight_theta1", 1.0);
  cfg.build.weights.theta2 = f.get_double("scenario", "weight_theta2", 1.0);
  cfg.build.theta_cap_scale = f.get_double("scenario", "theta_cap_scale", 10.0);
  if (f.has("scenario", "theta_cap"))
    cfg.build.theta_cap_override = f.get_double("scenario", "theta_cap");
  if (f.has("scenario", "permissive"))
    cfg.build.permissive = parse_bool(f.get_string("scenario", "permissive"),
                                      "scenario.permissive");
  if (f.has("scenario", "fixed_gamma"))
    cfg.build.fixed_gamma = f.get_double("scenario", "fixed_gamma");
  if (f.has("scenario", "fixed_samples"))
    cfg.build.fixed_samples = f.get_u64("scenario", "fixed_samples");

  if (f.has("lipschitz", "source")) {
    std::string src = f.get_string("lipschitz", "source");
    if (src == "fixed")
      cfg.lipschitz.source = LipschitzSource::Fixed;
    else if (src == "estimate")
      cfg.lipschitz.source = LipschitzSource::Estimate;
    else
      throw ConfigError("[lipschitz] source must be 'fixed' or 'estimate'");
  }
  cfg.lipschitz.fixed_value = f.get_double("lipschitz", "value", 1.0);
  cfg.lipschitz.n_inner = unsigned(f.get_u64("lipschitz", "n_inner", 100));
  cfg.lipschitz.m_blocks = unsigned(f.get_u64("lipschitz", "m_blocks", 200));
  if (f.has("lipschitz", "delta"))
    cfg.lipschitz.delta = f.get_double("lipschitz", "delta");
  cfg.lipschitz.safety = f.get_double("lipschitz", "safety", 1.0);
  if (cfg.lipschitz.source == LipschitzSource::Fixed && cfg.lipschitz.fixed_value <= 0.0)
    throw ConfigError("[lipschitz] value must be positive");

  if (f.sections().count("objective")) {
    cfg.objective.kind = objective_from_name(f.get_string("objective", "kind"));
    const char* target_key = f.has("objective", "target") ? "target" : "safe";
    cfg.objective.target_boxes = f.get_boxes("objective", target_key);
    for (const Box& b : cfg.objective.target_boxes)
      check_box_in_state(b, cfg.system.state_box, "[objective] target");
    if (f.has("objective", "avoid")) {
      cfg.objective.avoid_boxes = f.get_boxes("objective", "avoid");
      for (const Box& b : cfg.objective.avoid_boxes)
        check_box_in_state(b, cfg.system.state_box, "[objective] avoid");
    }
    if (f.has("objective", "x_init")) {
      cfg.objective.x_init = f.get_vec("objective", "x_init");
      cfg.objective.has_x_init = true;
      if (cfg.objective.x_init.size() != cfg.system.state_dim ||
          !cfg.system.state_box.contains(cfg.objective.x_init))
        throw ConfigError("[objective] x_init must lie inside the state box");
    }
  }

  cfg.simulate.horizon = f.get_u64("simulate", "horizon", 100);
  cfg.simulate.runs = f.get_u64("simulate", "runs", 1);
  cfg.simulate.policy =
      policy_from_name(f.get_string("simulate", "disturbance", "zero"));
  cfg.simulate.seed = f.get_u64("simulate", "seed", cfg.build.seed);
  if (cfg.simulate.runs == 0) throw ConfigError("[simulate] runs must be >= 1");

  if (f.sections().count("sweep")) {
    SweepConfig sw;
    sw.kind = sweep_from_name(f.get_string("sweep", "kind"));
    sw.values = f.get_vec("sweep", "values");
    for (double v : sw.values)
      if (!(v > 0.0 && v < 1.0))
        throw ConfigError("[sweep] values must lie in (0,1)");
    cfg.sweep = std::move(sw);
  }

  if (f.sections().count("refine")) {
    RefineConfig rf;
    rf.eta0 = f.get_vec("refine", "eta0");
    rf.max_halvings = f.get_u64("refine", "max_halvings", 4);
    rf.max_cells = f.get_u64("refine", "max_cells", 4000000);
    UniformGrid probe(cfg.system.state_box, rf.eta0); /* fail early on a bad eta0 */
    (void)probe;
    cfg.refine = std::move(rf);
  }

  cfg.output_dir = f.get_string("output", "dir", "out");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return run_config_from_file(ConfigFile::parse_file(path));
}

std::vector<double> resolve_lipschitz(const SystemModel& sys,
                                      const std::vector<Vec>& inputs,
                                      const LipschitzConfig& cfg, uint64_t seed,
                                      unsigned workers) {
  (void)workers;
  if (cfg.source == LipschitzSource::Fixed)
    return std::vector<double>(inputs.size(), cfg.fixed_value);
  double delta = cfg.delta.value_or(default_slope_delta(sys));
  LipschitzEstimate est = estimate_lipschitz(sys, inputs, cfg.n_inner, cfg.m_blocks,
                                             delta, seed, cfg.safety);
  for (size_t i = 0; i < est.per_input.size(); ++i)
    if (std::isnan(est.per_input[i]))
      throw FitError("lipschitz fit failed for input index " + std::to_string(i) +
                     "; increase m_blocks or adjust delta");
  return est.per_input;
}

}  // namespace dabs
