#ifndef DABS_UTIL_HPP_
#define DABS_UTIL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace dabs {

using Vec = std::vector<double>;

inline double linf_norm(const Vec& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

inline Vec abs_diff(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = std::fabs(a[i] - b[i]);
  return r;
}

inline double linf_dist(const Vec& a, const Vec& b) {
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

/* 17 significant digits: round-trips any double exactly */
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string join_reals(const Vec& v, const std::string& sep = ",");

/* runs fn(i) for i in [0, n); exceptions are collected and the first one rethrown */
void parallel_for(size_t n, unsigned workers, const std::function<void(size_t)>& fn);

unsigned default_workers();

}  // namespace dabs

#endif
