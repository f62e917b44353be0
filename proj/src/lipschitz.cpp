#include "dabs/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dabs/errors.hpp"
#include "dabs/geometry.hpp"

namespace dabs {

namespace {

constexpr double NEG_INF = -std::numeric_limits<double>::infinity();
constexpr unsigned MAX_ITER = 200;

/* Weibull shape/scale MLE for fixed location, on y_i = location - s_i > 0.
 * Works on z_i = y_i / max(y) to keep z^c bounded. The profile equation
 *   psi(c) = 1/c + mean(ln z) - sum(z^c ln z)/sum(z^c)
 * is strictly decreasing, so a sign-bracketed Newton always converges. */
struct InnerFit {
  double shape = 0.0, scale = 0.0, log_likelihood = NEG_INF;
  bool ok = false;
};

InnerFit fit_shape_scale(const std::vector<double>& y) {
  const size_t m = y.size();
  double ymax = *std::max_element(y.begin(), y.end());
  std::vector<double> lz(m);
  double mean_lz = 0.0;
  for (size_t i = 0; i < m; ++i) {
    lz[i] = std::log(y[i] / ymax);
    mean_lz += lz[i];
  }
  mean_lz /= double(m);
  if (!(mean_lz < 0.0)) return {};

  auto psi = [&](double c, double* dpsi) {
    double s0 = 0, s1 = 0, s2 = 0;
    for (size_t i = 0; i < m; ++i) {
      double zc = std::exp(c * lz[i]);
      s0 += zc;
      s1 += zc * lz[i];
      s2 += zc * lz[i] * lz[i];
    }
    if (dpsi) *dpsi = -1.0 / (c * c) - (s2 * s0 - s1 * s1) / (s0 * s0);
    return 1.0 / c + mean_lz - s1 / s0;
  };

  double lo = 1.0, hi = 1.0;
  unsigned guard = 0;
  while (psi(lo, nullptr) <= 0.0) {
    lo *= 0.5;
    if (++guard > 80) return {};
  }
  guard = 0;
  while (psi(hi, nullptr) >= 0.0) {
    hi *= 2.0;
    if (hi > 1e12 || ++guard > 80) return {};
  }
  double c = std::clamp(-1.0 / mean_lz, lo, hi);
  for (unsigned it = 0; it < MAX_ITER; ++it) {
    double d, p = psi(c, &d);
    if (p > 0.0)
      lo = c;
    else
      hi = c;
    double step = p / d;
    double next = c - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - c) <= 1e-13 * c) {
      c = next;
      break;
    }
    c = next;
  }

  double s0 = 0;
  for (size_t i = 0; i < m; ++i) s0 += std::exp(c * lz[i]);
  double lnb = std::log(ymax) + std::log(s0 / double(m)) / c;
  double sum_ly = 0;
  for (size_t i = 0; i < m; ++i) sum_ly += lz[i] + std::log(ymax);
  InnerFit f;
  f.shape = c;
  f.scale = std::exp(lnb);
  /* sum (y/b)^c equals m at the stationary scale */
  f.log_likelihood =
      double(m) * (std::log(c) - c * lnb) + (c - 1.0) * sum_ly - double(m);
  f.ok = std::isfinite(f.log_likelihood);
  return f;
}

}  // namespace

WeibullFit fit_reverse_weibull(const std::vector<double>& maxima) {
  if (maxima.empty()) throw FitError("weibull fit: no block maxima");
  double smax = *std::max_element(maxima.begin(), maxima.end());
  double smin = *std::min_element(maxima.begin(), maxima.end());
  double range = smax - smin;
  if (range <= 1e-12 * std::max(1.0, std::fabs(smax))) {
    WeibullFit w;
    w.location = smax;
    w.degenerate = true;
    return w;
  }
  if (maxima.size() < 3)
    throw FitError("weibull fit: need at least 3 distinct block maxima");

  auto profile = [&](double a) {
    std::vector<double> y(maxima.size());
    for (size_t i = 0; i < maxima.size(); ++i) y[i] = a - maxima[i];
    return fit_shape_scale(y);
  };
  auto ll = [&](double a) { return profile(a).log_likelihood; };

  /* golden-section maximization of the profile likelihood over the location;
   * the tolerance is floored at a few ulps of the location magnitude so that
   * nearly constant samples (range just above the degeneracy cutoff) still
   * terminate instead of chasing sub-ulp intervals */
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  const double tol = std::max(1e-10 * range,
                              8.0 * std::numeric_limits<double>::epsilon() *
                                  std::max(1.0, std::fabs(smax)));
  double lo = smax + 1e-6 * range, hi = smax + 10.0 * range;
  double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
  double f1 = ll(x1), f2 = ll(x2);
  unsigned it = 0;
  while (hi - lo > tol) {
    if (++it > MAX_ITER) throw FitError("weibull fit: location search stalled");
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = ll(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = ll(x1);
    }
  }
  double a = 0.5 * (lo + hi);
  InnerFit inner = profile(a);
  if (!inner.ok) throw FitError("weibull fit: profile likelihood degenerate everywhere");
  WeibullFit w;
  w.location = a;
  w.scale = inner.scale;
  w.shape = inner.shape;
  w.log_likelihood = inner.log_likelihood;
  return w;
}

double slope_sample(const SystemModel& sys, const Vec& u, double delta,
                    CounterRng& rng) {
  const Box& X = sys.state_box;
  const Box& W = sys.disturbance_box;
  const size_t n = X.dim(), q = W.dim();
  for (unsigned attempt = 0; attempt < 1000; ++attempt) {
    Vec x(n), x2(n), w(q), w2(q);
    for (size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(X.lower[i], X.upper[i]);
      double lo = std::max(X.lower[i], x[i] - delta);
      double hi = std::min(X.upper[i], x[i] + delta);
      x2[i] = rng.uniform(lo, hi);
    }
    for (size_t i = 0; i < q; ++i) {
      w[i] = rng.uniform(W.lower[i], W.upper[i]);
      double lo = std::max(W.lower[i], w[i] - delta);
      double hi = std::min(W.upper[i], w[i] + delta);
      w2[i] = rng.uniform(lo, hi);
    }
    double den = std::max(linf_dist(x, x2), linf_dist(w, w2));
    if (den < 1e-12) continue;
    Vec y = sys.step(x, u, w, sys.tau);
    Vec y2 = sys.step(x2, u, w2, sys.tau);
    return linf_dist(y, y2) / den;
  }
  throw NumericError("slope sampling: degenerate draws persisted; check delta");
}

double default_slope_delta(const SystemModel& sys) {
  double wmin = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < sys.state_box.dim(); ++i)
    wmin = std::min(wmin, sys.state_box.width(i));
  return wmin / 100.0;
}

LipschitzEstimate estimate_lipschitz(const SystemModel& sys,
                                     const std::vector<Vec>& inputs,
                                     unsigned n_inner, unsigned m_blocks,
                                     double delta, uint64_t seed, double safety) {
  if (inputs.empty()) throw ConfigError("lipschitz estimation: no inputs");
  if (n_inner == 0 || m_blocks == 0)
    throw ConfigError("lipschitz estimation: n_inner and m_blocks must be positive");
  if (!(delta > 0.0)) throw ConfigError("lipschitz estimation: delta must be positive");

  LipschitzEstimate est;
  est.per_input.assign(inputs.size(), std::numeric_limits<double>::quiet_NaN());
  est.fits.assign(inputs.size(), WeibullFit{});
  est.n_inner = n_inner;
  est.m_blocks = m_blocks;
  est.delta = delta;
  est.seed = seed;

  size_t failures = 0;
  std::string last_error;
  for (size_t ui = 0; ui < inputs.size(); ++ui) {
    std::vector<double> maxima(m_blocks);
    for (unsigned b = 0; b < m_blocks; ++b) {
      double mx = 0.0;
      for (unsigned i = 0; i < n_inner; ++i) {
        CounterRng rng(seed, {3, ui, b, i});
        mx = std::max(mx, slope_sample(sys, inputs[ui], delta, rng));
      }
      maxima[b] = mx;
    }
    try {
      WeibullFit w = fit_reverse_weibull(maxima);
      est.fits[ui] = w;
      est.per_input[ui] = w.location * safety;
    } catch (const FitError& e) {
      ++failures;
      last_error = e.what();
    }
  }
  if (failures == inputs.size())
    throw FitError("lipschitz estimation failed for every input: " + last_error);
  est.global_max = 0.0;
  for (double v : est.per_input)
    if (!std::isnan(v)) est.global_max = std::max(est.global_max, v);
  return est;
}

}  // namespace dabs
