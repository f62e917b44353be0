#include "dabs/linalg.hpp"

#include <cmath>

#include "dabs/errors.hpp"

namespace dabs {

Mat matmul(const Mat& A, const Mat& B) {
  Mat C(A.rows, B.cols);
  for (size_t i = 0; i < A.rows; ++i)
    for (size_t k = 0; k < A.cols; ++k) {
      double aik = A(i, k);
      if (aik == 0.0) continue;
      for (size_t j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
    }
  return C;
}

Vec matvec(const Mat& A, const Vec& x) {
  Vec y(A.rows, 0.0);
  for (size_t i = 0; i < A.rows; ++i) {
    double s = 0;
    for (size_t j = 0; j < A.cols; ++j) s += A(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Mat mat_add(const Mat& A, const Mat& B) {
  Mat C = A;
  for (size_t i = 0; i < C.a.size(); ++i) C.a[i] += B.a[i];
  return C;
}

Mat mat_scale(const Mat& A, double s) {
  Mat C = A;
  for (double& v : C.a) v *= s;
  return C;
}

double mat_inf_norm(const Mat& A) {
  double m = 0;
  for (size_t i = 0; i < A.rows; ++i) {
    double s = 0;
    for (size_t j = 0; j < A.cols; ++j) s += std::fabs(A(i, j));
    m = std::max(m, s);
  }
  return m;
}

Mat lu_solve(Mat A, Mat B) {
  const size_t n = A.rows;
  for (size_t k = 0; k < n; ++k) {
    size_t piv = k;
    for (size_t i = k + 1; i < n; ++i)
      if (std::fabs(A(i, k)) > std::fabs(A(piv, k))) piv = i;
    if (std::fabs(A(piv, k)) < 1e-300)
      throw NumericError("lu_solve: singular matrix");
    if (piv != k) {
      for (size_t j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
      for (size_t j = 0; j < B.cols; ++j) std::swap(B(k, j), B(piv, j));
    }
    for (size_t i = k + 1; i < n; ++i) {
      double f = A(i, k) / A(k, k);
      if (f == 0.0) continue;
      for (size_t j = k; j < n; ++j) A(i, j) -= f * A(k, j);
      for (size_t j = 0; j < B.cols; ++j) B(i, j) -= f * B(k, j);
    }
  }
  for (size_t ki = n; ki-- > 0;) {
    for (size_t j = 0; j < B.cols; ++j) {
      double s = B(ki, j);
      for (size_t m = ki + 1; m < n; ++m) s -= A(ki, m) * B(m, j);
      B(ki, j) = s / A(ki, ki);
    }
  }
  return B;
}

Mat expm(const Mat& A) {
  const size_t n = A.rows;
  /* scale so the Pade approximant stays in its accuracy range */
  double norm = mat_inf_norm(A);
  int squarings = 0;
  Mat As = A;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    As = mat_scale(A, std::ldexp(1.0, -squarings));
  }
  /* [6/6] Pade: N = sum c_k A^k, D = sum (-1)^k c_k A^k */
  static const double c[7] = {1.0,       1.0 / 2.0,    5.0 / 44.0,  1.0 / 66.0,
                              1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0};
  Mat power = Mat::identity(n);
  Mat num = Mat::identity(n);
  Mat den = Mat::identity(n);
  double sign = 1.0;
  for (int k = 1; k <= 6; ++k) {
    power = matmul(power, As);
    sign = -sign;
    num = mat_add(num, mat_scale(power, c[k]));
    den = mat_add(den, mat_scale(power, sign * c[k]));
  }
  Mat F = lu_solve(den, num);
  for (int s = 0; s < squarings; ++s) F = matmul(F, F);
  return F;
}

void expm_with_integral(const Mat& A, double tau, Mat& phi, Mat& integral) {
  const size_t n = A.rows;
  /* exp of [[A, I],[0, 0]] tau = [[e^{A tau}, int_0^tau e^{A s} ds],[0, I]] */
  Mat aug(2 * n, 2 * n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) aug(i, j) = A(i, j) * tau;
    aug(i, n + i) = tau;
  }
  Mat E = expm(aug);
  phi = Mat(n, n);
  integral = Mat(n, n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      phi(i, j) = E(i, j);
      integral(i, j) = E(i, n + j);
    }
}

}  // namespace dabs
