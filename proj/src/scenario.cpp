#include "dabs/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dabs/errors.hpp"
#include "dabs/lp.hpp"

namespace dabs {

namespace {

/* ln of sum_{i=0}^{q-1} C(N,i) eps^i (1-eps)^(N-i), max-factored */
double log_binom_tail(uint64_t n, double eps, unsigned q) {
  double le = std::log(eps);
  double l1 = std::log1p(-eps);
  std::vector<double> lt(q);
  double lc = 0.0; /* ln C(N,0) */
  for (unsigned i = 0; i < q; ++i) {
    lt[i] = lc + double(i) * le + double(n - i) * l1;
    lc += std::log(double(n - i)) - std::log(double(i) + 1.0);
  }
  double mx = *std::max_element(lt.begin(), lt.end());
  double s = 0.0, comp = 0.0;
  for (double v : lt) {
    double y = std::exp(v - mx) - comp;
    double tmp = s + y;
    comp = (tmp - s) - y;
    s = tmp;
  }
  return mx + std::log(s);
}

void check_eps_beta(double eps, double beta, unsigned q) {
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0,1)");
  if (q < 1) throw ConfigError("constraint dimension q must be >= 1");
}

}  // namespace

uint64_t sample_size(double eps, double beta, unsigned q) {
  check_eps_beta(eps, beta, q);
  const double lbeta = std::log(beta);
  auto ok = [&](uint64_t n) { return log_binom_tail(n, eps, q) <= lbeta; };
  uint64_t lo = q;
  if (ok(lo)) return lo;
  uint64_t hi = std::max<uint64_t>(2 * uint64_t(q), 16);
  while (!ok(hi)) {
    lo = hi;
    if (hi > (uint64_t(1) << 61))
      throw NumericError("sample size exceeds 2^62; relax epsilon or beta");
    hi *= 2;
  }
  while (hi - lo > 1) {
    uint64_t mid = lo + (hi - lo) / 2;
    if (ok(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

uint64_t pac_sample_size(double eps, double beta, unsigned q) {
  check_eps_beta(eps, beta, q);
  double v = (2.0 / eps) * (std::log(1.0 / beta) + double(q));
  if (v > 4.6e18) throw NumericError("sample size exceeds 2^62; relax epsilon or beta");
  return uint64_t(std::ceil(v - 1e-9));
}

GammaMode auto_gamma_mode(const Vec& wbar) {
  size_t pos = 0;
  for (double w : wbar) pos += w > 0.0 ? 1 : 0;
  if (pos == 0) return GammaMode::NoDisturbanceN;
  if (pos == wbar.size()) return GammaMode::Full2n;
  return GammaMode::PartialNPlusQ;
}

double bias_gamma(double L, double eps, const Vec& eta, const Vec& wbar,
                  GammaMode mode) {
  if (mode == GammaMode::Auto) mode = auto_gamma_mode(wbar);
  const size_t n = eta.size();
  if (n == 0) throw ConfigError("bias_gamma: empty eta");
  for (double e : eta)
    if (!(e > 0.0)) throw ConfigError("bias_gamma: eta components must be positive");
  size_t q_pos = 0;
  double wprod = 1.0;
  for (double w : wbar) {
    if (w < 0.0) throw ConfigError("bias_gamma: negative disturbance half-width");
    if (w > 0.0) {
      ++q_pos;
      wprod *= w;
    }
  }
  if (mode == GammaMode::Full2n && q_pos != wbar.size())
    throw ConfigError(
        "gamma mode full_2n needs every disturbance half-width positive; "
        "use partial_n_plus_q or auto");
  double eprod = 1.0;
  for (double e : eta) eprod *= e;

  size_t dim;
  double prod, factor;
  switch (mode) {
    case GammaMode::NoDisturbanceN:
      dim = n;
      prod = eprod;
      factor = 4.0 * L;
      break;
    case GammaMode::Full2n:
    case GammaMode::PartialNPlusQ:
      dim = n + q_pos;
      prod = eprod * wprod;
      factor = 4.0 * L;
      break;
    case GammaMode::Paired4n: {
      double base = eprod * wprod;
      dim = 2 * (n + q_pos);
      prod = base * base;
      factor = 8.0 * L;
      break;
    }
    default:
      throw ConfigError("bias_gamma: unresolved gamma mode");
  }
  return factor * std::pow(eps * prod, 1.0 / double(dim));
}

Vec eval_growth(const GrowthBound& gb, const Vec& r) {
  const size_t n = gb.theta2.size();
  if (r.size() != gb.theta1.cols)
    throw NumericError("eval_growth: radius dimension mismatch");
  Vec out(n, 0.0);
  for (size_t j = 0; j < n; ++j) {
    double s = gb.theta2[j];
    for (size_t k = 0; k < gb.theta1.cols; ++k) s += gb.theta1(j, k) * r[k];
    out[j] = s;
  }
  return out;
}

namespace {

/* one LP per output row over (theta1 row, theta2 scalar); the constraint
 * matrix is nonnegative, so the all-caps point maximizes every left side and
 * decides feasibility up front */
GrowthBound fit_rows(const std::vector<Vec>& a, const std::vector<Vec>& v,
                     size_t n, double gamma, double theta_cap,
                     const GrowthWeights& w, bool paired) {
  if (!(theta_cap > 0.0)) throw ConfigError("theta cap must be positive");
  if (!(w.theta1 > 0.0) || !(w.theta2 > 0.0))
    throw ConfigError("growth objective weights must be positive");
  const size_t m = a.size();
  GrowthBound gb;
  gb.theta1 = Mat(n, n);
  gb.theta2.assign(n, 0.0);
  gb.gamma = gamma;
  gb.paired = paired;
  if (m == 0) throw NumericError("growth fit: empty sample set");

  Vec col_scale(n, 0.0);
  for (const auto& ai : a)
    for (size_t k = 0; k < n; ++k) col_scale[k] = std::max(col_scale[k], ai[k]);

  for (size_t j = 0; j < n; ++j) {
    double vmax = 0.0;
    double cap_lhs_min_slack = std::numeric_limits<double>::infinity();
    size_t worst_i = 0;
    for (size_t i = 0; i < m; ++i) {
      vmax = std::max(vmax, v[i][j]);
      double lhs = theta_cap;
      for (size_t k = 0; k < n; ++k) lhs += a[i][k] * theta_cap;
      double slack = lhs - v[i][j];
      if (slack < cap_lhs_min_slack) {
        cap_lhs_min_slack = slack;
        worst_i = i;
      }
    }
    if (cap_lhs_min_slack < 0.0) {
      std::ostringstream os;
      os << "growth fit infeasible on output " << j << ": sample " << worst_i
         << " violates the cap point by " << -cap_lhs_min_slack
         << "; raise theta_cap or lower gamma/epsilon";
      throw InfeasibleError(os.str(), -cap_lhs_min_slack);
    }

    bool all_zero = true;
    for (size_t k = 0; k < n && all_zero; ++k)
      if (col_scale[k] > 0.0) all_zero = false;
    if (all_zero || vmax == 0.0) {
      /* slopes carry no information (or nothing to cover): pure offset */
      gb.theta2[j] = std::min(vmax, theta_cap);
      continue;
    }

    double vs = vmax;
    LinearProgram lp;
    lp.cost.assign(n + 1, 0.0);
    lp.upper.assign(n + 1, 0.0);
    for (size_t k = 0; k < n; ++k) {
      double cs = col_scale[k] > 0.0 ? col_scale[k] : 1.0;
      lp.cost[k] = w.theta1 / cs;
      lp.upper[k] = theta_cap * cs / vs;
    }
    lp.cost[n] = w.theta2;
    lp.upper[n] = theta_cap / vs;
    lp.rows.assign(m, Vec(n + 1, 0.0));
    lp.rhs.assign(m, 0.0);
    for (size_t i = 0; i < m; ++i) {
      for (size_t k = 0; k < n; ++k) {
        double cs = col_scale[k] > 0.0 ? col_scale[k] : 1.0;
        lp.rows[i][k] = a[i][k] / cs;
      }
      lp.rows[i][n] = 1.0;
      lp.rhs[i] = v[i][j] / vs;
    }
    LpSolution sol = solve_lp_rowgen(lp);
    if (sol.status != LpStatus::Optimal)
      throw NumericError("growth fit: simplex failed despite feasible cap point");
    for (size_t k = 0; k < n; ++k) {
      double cs = col_scale[k] > 0.0 ? col_scale[k] : 1.0;
      gb.theta1(j, k) = std::max(0.0, sol.x[k] * vs / cs);
    }
    gb.theta2[j] = std::max(0.0, sol.x[n] * vs);

    double tol = 1e-9 * std::max(1.0, vmax);
    for (size_t i = 0; i < m; ++i) {
      double lhs = gb.theta2[j];
      for (size_t k = 0; k < n; ++k) lhs += gb.theta1(j, k) * a[i][k];
      if (lhs < v[i][j] - tol)
        throw NumericError("growth fit: returned theta fails a residual check");
    }
  }
  return gb;
}

}  // namespace

GrowthBound solve_growth_lp(const SampleBatch& batch, const Vec& x_hat,
                            const Vec& x_nominal, double gamma, double theta_cap,
                            const GrowthWeights& w) {
  const size_t n = x_hat.size();
  const size_t m = batch.triples.size();
  std::vector<Vec> a(m), v(m);
  for (size_t i = 0; i < m; ++i) {
    a[i] = abs_diff(batch.triples[i].x, x_hat);
    v[i] = abs_diff(batch.triples[i].x_next, x_nominal);
    for (double& vv : v[i]) vv += gamma;
  }
  return fit_rows(a, v, n, gamma, theta_cap, w, false);
}

GrowthBound solve_growth_lp_paired(const SampleBatch& batch, double gamma,
                                   double theta_cap, const GrowthWeights& w) {
  const size_t m2 = batch.triples.size();
  if (m2 < 2 || m2 % 2 != 0)
    throw NumericError("paired growth fit needs an even, nonzero sample count");
  const size_t n = batch.triples[0].x.size();
  const size_t m = m2 / 2;
  std::vector<Vec> a(m), v(m);
  for (size_t p = 0; p < m; ++p) {
    const auto& s0 = batch.triples[2 * p];
    const auto& s1 = batch.triples[2 * p + 1];
    a[p] = abs_diff(s0.x, s1.x);
    v[p] = abs_diff(s0.x_next, s1.x_next);
    for (double& vv : v[p]) vv += gamma;
  }
  return fit_rows(a, v, n, gamma, theta_cap, w, true);
}

}  // namespace dabs
