#include "dabs/lp.hpp"

#include <cmath>
#include <limits>

#include "dabs/errors.hpp"

namespace dabs {

namespace {

constexpr double EPS_COST = 1e-9;
constexpr double EPS_PIVOT = 1e-10;

struct Tableau {
  size_t m = 0, ncols = 0;
  std::vector<std::vector<double>> row;  /* m x (ncols + 1), last column = rhs */
  std::vector<size_t> basis;             /* basic column per row */
  std::vector<double> obj;               /* reduced costs + objective in last slot */

  void pivot(size_t r, size_t col) {
    double p = row[r][col];
    for (double& v : row[r]) v /= p;
    for (size_t i = 0; i < m; ++i) {
      if (i == r || row[i][col] == 0.0) continue;
      double f = row[i][col];
      for (size_t j = 0; j <= ncols; ++j) row[i][j] -= f * row[r][j];
      row[i][col] = 0.0;
    }
    if (obj[col] != 0.0) {
      double f = obj[col];
      for (size_t j = 0; j <= ncols; ++j) obj[j] -= f * row[r][j];
      obj[col] = 0.0;
    }
    basis[r] = col;
  }

  /* rebuild reduced costs for the given objective coefficients */
  void set_objective(const std::vector<double>& cost) {
    obj.assign(ncols + 1, 0.0);
    for (size_t j = 0; j < cost.size() && j < ncols; ++j) obj[j] = cost[j];
    for (size_t r = 0; r < m; ++r) {
      double cb = basis[r] < cost.size() ? cost[basis[r]] : 0.0;
      if (cb == 0.0) continue;
      for (size_t j = 0; j <= ncols; ++j) obj[j] -= cb * row[r][j];
    }
  }

  /* Bland's rule: smallest eligible entering column, leaving row by min ratio
   * with ties broken toward the smallest basic column */
  LpStatus iterate(const std::vector<bool>& allowed, size_t max_iter) {
    for (size_t it = 0; it < max_iter; ++it) {
      size_t enter = ncols;
      for (size_t j = 0; j < ncols; ++j) {
        if (!allowed[j]) continue;
        if (obj[j] < -EPS_COST) {
          enter = j;
          break;
        }
      }
      if (enter == ncols) return LpStatus::Optimal;
      size_t leave = m;
      double best = std::numeric_limits<double>::infinity();
      for (size_t r = 0; r < m; ++r) {
        if (row[r][enter] <= EPS_PIVOT) continue;
        double ratio = row[r][ncols] / row[r][enter];
        if (ratio < best - 1e-15 ||
            (std::fabs(ratio - best) <= 1e-15 && (leave == m || basis[r] < basis[leave]))) {
          best = ratio;
          leave = r;
        }
      }
      if (leave == m)
        throw NumericError("simplex: unbounded direction in a box-bounded program");
      pivot(leave, enter);
    }
    return LpStatus::IterationLimit;
  }
};

}  // namespace

LpSolution solve_lp_simplex(const LinearProgram& lp) {
  const size_t n = lp.cost.size();
  const size_t m1 = lp.rows.size();
  for (const auto& r : lp.rows)
    if (r.size() != n) throw NumericError("simplex: row width mismatch");
  if (lp.rhs.size() != m1 || lp.upper.size() != n)
    throw NumericError("simplex: rhs/upper size mismatch");

  Tableau t;
  t.m = m1 + n;
  /* columns: x (n) | surplus (m1) | bound slacks (n) | artificials (appended) */
  const size_t col_s = n, col_t = n + m1;
  size_t ncols = n + m1 + n;
  std::vector<size_t> artificial_of(m1, SIZE_MAX);
  size_t n_art = 0;
  for (size_t i = 0; i < m1; ++i)
    if (lp.rhs[i] > 0.0) artificial_of[i] = ncols + n_art++;
  t.ncols = ncols + n_art;
  t.row.assign(t.m, std::vector<double>(t.ncols + 1, 0.0));
  t.basis.assign(t.m, SIZE_MAX);

  for (size_t i = 0; i < m1; ++i) {
    /* a.x - s = b; rows with b <= 0 are pre-satisfied at x = 0 with s basic
     * after negation, the rest get an artificial */
    double sign = lp.rhs[i] > 0.0 ? 1.0 : -1.0;
    for (size_t j = 0; j < n; ++j) t.row[i][j] = sign * lp.rows[i][j];
    t.row[i][col_s + i] = -sign;
    t.row[i][t.ncols] = sign * lp.rhs[i];
    if (artificial_of[i] != SIZE_MAX) {
      t.row[i][artificial_of[i]] = 1.0;
      t.basis[i] = artificial_of[i];
    } else {
      t.basis[i] = col_s + i;
    }
  }
  for (size_t j = 0; j < n; ++j) {
    size_t r = m1 + j;
    if (lp.upper[j] < 0) throw NumericError("simplex: negative upper bound");
    t.row[r][j] = 1.0;
    t.row[r][col_t + j] = 1.0;
    t.row[r][t.ncols] = lp.upper[j];
    t.basis[r] = col_t + j;
  }

  const size_t max_iter = 2000 + 50 * (t.m + t.ncols);
  std::vector<bool> allowed(t.ncols, true);

  if (n_art > 0) {
    std::vector<double> phase1(t.ncols, 0.0);
    for (size_t i = 0; i < m1; ++i)
      if (artificial_of[i] != SIZE_MAX) phase1[artificial_of[i]] = 1.0;
    t.set_objective(phase1);
    LpStatus st = t.iterate(allowed, max_iter);
    if (st == LpStatus::IterationLimit) return {LpStatus::IterationLimit, {}, 0.0};
    double infeas = -t.obj[t.ncols];
    if (infeas > 1e-8) return {LpStatus::Infeasible, {}, 0.0};
    /* pivot leftover artificials out of the basis where possible */
    for (size_t r = 0; r < t.m; ++r) {
      if (t.basis[r] < ncols) continue;
      for (size_t j = 0; j < ncols; ++j) {
        if (std::fabs(t.row[r][j]) > EPS_PIVOT) {
          t.pivot(r, j);
          break;
        }
      }
    }
    for (size_t j = ncols; j < t.ncols; ++j) allowed[j] = false;
  }

  t.set_objective(lp.cost);
  LpStatus st = t.iterate(allowed, max_iter);
  if (st != LpStatus::Optimal) return {st, {}, 0.0};

  LpSolution sol;
  sol.status = LpStatus::Optimal;
  sol.x.assign(n, 0.0);
  for (size_t r = 0; r < t.m; ++r)
    if (t.basis[r] < n) sol.x[t.basis[r]] = t.row[r][t.ncols];
  sol.objective = 0.0;
  for (size_t j = 0; j < n; ++j) sol.objective += lp.cost[j] * sol.x[j];
  return sol;
}

LpSolution solve_lp_rowgen(const LinearProgram& lp, double tol) {
  const size_t n = lp.cost.size();
  const size_t m1 = lp.rows.size();
  LinearProgram sub;
  sub.cost = lp.cost;
  sub.upper = lp.upper;
  std::vector<bool> active(m1, false);
  LpSolution sol;
  for (size_t round = 0; round <= m1; ++round) {
    sol = solve_lp_simplex(sub);
    if (sol.status != LpStatus::Optimal) return sol;
    /* most violated inactive row, smallest index on ties */
    size_t worst = m1;
    double worst_viol = tol;
    for (size_t i = 0; i < m1; ++i) {
      if (active[i]) continue;
      double lhs = 0;
      for (size_t j = 0; j < n; ++j) lhs += lp.rows[i][j] * sol.x[j];
      double viol = lp.rhs[i] - lhs;
      if (viol > worst_viol) {
        worst_viol = viol;
        worst = i;
      }
    }
    if (worst == m1) return sol;
    active[worst] = true;
    sub.rows.push_back(lp.rows[worst]);
    sub.rhs.push_back(lp.rhs[worst]);
  }
  return sol;
}

}  // namespace dabs
