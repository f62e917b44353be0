#ifndef DABS_LP_HPP_
#define DABS_LP_HPP_

#include <vector>

namespace dabs {

/* minimize cost^T x  subject to  rows[i] . x >= rhs[i],  0 <= x <= upper */
struct LinearProgram {
  std::vector<double> cost;
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  std::vector<double> upper;
};

enum class LpStatus { Optimal, Infeasible, IterationLimit };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
};

/* two-phase dense simplex with Bland's rule; exact same pivoting every run */
LpSolution solve_lp_simplex(const LinearProgram& lp);

/* same optimum as solve_lp_simplex, but scales to many rows: solves on a
 * growing active subset and keeps adding the most-violated row until every
 * row is satisfied within tolerance */
LpSolution solve_lp_rowgen(const LinearProgram& lp, double tol = 1e-10);

}  // namespace dabs

#endif
