#ifndef DABS_LINALG_HPP_
#define DABS_LINALG_HPP_

#include <cstddef>
#include <vector>

#include "dabs/util.hpp"

namespace dabs {

/* dense row-major matrix, sized for state dimensions (n <= 10 or so) */
struct Mat {
  size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(size_t i, size_t j) { return a[i * cols + j]; }
  double operator()(size_t i, size_t j) const { return a[i * cols + j]; }

  static Mat identity(size_t n) {
    Mat m(n, n);
    for (size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

Mat matmul(const Mat& A, const Mat& B);
Vec matvec(const Mat& A, const Vec& x);
Mat mat_add(const Mat& A, const Mat& B);
Mat mat_scale(const Mat& A, double s);

/* infinity norm (max absolute row sum) */
double mat_inf_norm(const Mat& A);

/* solves A X = B in place via LU with partial pivoting; throws NumericError if singular */
Mat lu_solve(Mat A, Mat B);

/* matrix exponential by scaling and squaring with a [6/6] Pade approximant */
Mat expm(const Mat& A);

/* e^{A tau} and the convolution integral int_0^tau e^{A s} ds, both from one
 * augmented exponential */
void expm_with_integral(const Mat& A, double tau, Mat& phi, Mat& integral);

}  // namespace dabs

#endif
