#ifndef DABS_SCENARIO_HPP_
#define DABS_SCENARIO_HPP_

#include <cstdint>
#include <optional>

#include "dabs/linalg.hpp"
#include "dabs/sampling.hpp"
#include "dabs/util.hpp"

namespace dabs {

/**
 * @brief Smallest N with sum_{i=0}^{q-1} C(N,i) eps^i (1-eps)^(N-i) <= beta.
 *
 * The binomial tail is evaluated per term in log space and summed with
 * compensated addition; the search doubles N until feasible and then
 * bisects (the tail is nonincreasing in N). Requires eps, beta in (0,1)
 * and q >= 1; throws NumericError if N would exceed 2^62.
 */
uint64_t sample_size(double eps, double beta, unsigned q);

/* distribution-free bound ceil((2/eps) * (ln(1/beta) + q)) */
uint64_t pac_sample_size(double eps, double beta, unsigned q);

enum class GammaMode { Auto, Full2n, NoDisturbanceN, PartialNPlusQ, Paired4n };

/* constraint-tightening bias for the scenario program; eta are the cell
 * half-widths on the grid where the program is solved, wbar the disturbance
 * half-widths. Full2n requires every wbar component positive; Partial and
 * Paired use only the positive components and size the root to the sample
 * space dimension (n+q, or 2(n+q) for paired batches). */
double bias_gamma(double L, double eps, const Vec& eta, const Vec& wbar,
                  GammaMode mode);

GammaMode auto_gamma_mode(const Vec& wbar);

/* r |-> theta1 r + theta2, componentwise on infinity-ball radii */
struct GrowthBound {
  Mat theta1;  /* n x n, nonnegative */
  Vec theta2;  /* n, nonnegative */
  double gamma = 0.0;
  bool paired = false;
};

Vec eval_growth(const GrowthBound& gb, const Vec& r);

struct GrowthWeights {
  double theta1 = 1.0;
  double theta2 = 1.0;
};

/* Fits theta row by row: for output dimension j, minimize the weighted sum of
 * the row of theta1 plus theta2[j] subject to
 *     theta1_j . |x_i - x_hat| + theta2[j] >= |x'_i - x'_nom|_j + gamma
 * over all samples, 0 <= theta <= theta_cap. Throws InfeasibleError (with the
 * worst residual and a hint to raise theta_cap or lower gamma/eps) when even
 * the all-caps point violates a constraint; verifies the returned solution
 * against every constraint at 1e-9 before returning. */
GrowthBound solve_growth_lp(const SampleBatch& batch, const Vec& x_hat,
                            const Vec& x_nominal, double gamma, double theta_cap,
                            const GrowthWeights& w = {});

/* paired variant: constraints couple triples (2k, 2k+1):
 *     theta1_j . |x_{2k} - x_{2k+1}| + theta2[j] >= |x'_{2k} - x'_{2k+1}|_j + gamma */
GrowthBound solve_growth_lp_paired(const SampleBatch& batch, double gamma,
                                   double theta_cap, const GrowthWeights& w = {});

}  // namespace dabs

#endif
