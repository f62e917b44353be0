#ifndef DABS_LIPSCHITZ_HPP_
#define DABS_LIPSCHITZ_HPP_

#include <cstdint>
#include <vector>

#include "dabs/rng.hpp"
#include "dabs/systems.hpp"
#include "dabs/util.hpp"

namespace dabs {

/* reverse Weibull (negative extreme value) fit
 *   G(s) = exp(-((location - s)/scale)^shape),  s < location */
struct WeibullFit {
  double location = 0.0;
  double scale = 0.0;
  double shape = 0.0;
  double log_likelihood = 0.0;
  bool degenerate = false;  /* all samples equal: location pinned, scale/shape invalid */
};

/* Maximum-likelihood fit to block maxima. The location is found by a bracketed
 * scalar search over (max sample, max sample + 10 * sample range]; for each
 * candidate location the scale/shape sub-problem is solved by safeguarded
 * Newton on the profile equation. Throws FitError after 200 outer iterations
 * without convergence. */
WeibullFit fit_reverse_weibull(const std::vector<double>& maxima);

/* one finite-difference slope of the step map: draws (x, w) uniformly over
 * X x W, a second point uniformly from the delta-ball around it intersected
 * with X x W, and returns |step(x) - step(x')|_inf / |(x,w) - (x',w')|_inf.
 * Degenerate draws (denominator < 1e-12) are redrawn from the same stream. */
double slope_sample(const SystemModel& sys, const Vec& u, double delta,
                    CounterRng& rng);

struct LipschitzEstimate {
  std::vector<double> per_input;     /* NaN where the fit failed */
  std::vector<WeibullFit> fits;
  double global_max = 0.0;
  unsigned n_inner = 0, m_blocks = 0;
  double delta = 0.0;
  uint64_t seed = 0;
};

/* Extreme-value estimate per input: m_blocks block maxima of n_inner slopes
 * each, reverse-Weibull fit, estimate = location * safety. Individual fit
 * failures are recorded as NaN; throws FitError only if every input fails. */
LipschitzEstimate estimate_lipschitz(const SystemModel& sys,
                                     const std::vector<Vec>& inputs,
                                     unsigned n_inner, unsigned m_blocks,
                                     double delta, uint64_t seed,
                                     double safety = 1.0);

/* default pair separation: smallest state-box width / 100 */
double default_slope_delta(const SystemModel& sys);

}  // namespace dabs

#endif
