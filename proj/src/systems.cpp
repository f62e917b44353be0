#include "dabs/systems.hpp"

#include <cmath>
#include <string>

#include "dabs/errors.hpp"

namespace dabs {

Vec integrate_rk4(const VectorField& f, const Vec& x, const Vec& u, const Vec& w,
                  double tau, int substeps) {
  if (substeps < 1) throw ConfigError("integrate_rk4: substeps must be >= 1");
  const size_t n = x.size();
  const double h = tau / substeps;
  Vec y = x, k1(n), k2(n), k3(n), k4(n), tmp(n);
  auto eval = [&](const Vec& at, Vec& k) {
    f(at, u, k);
    for (size_t i = 0; i < n; ++i) k[i] += w[i];
  };
  for (int s = 0; s < substeps; ++s) {
    eval(y, k1);
    for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    eval(tmp, k2);
    for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    eval(tmp, k3);
    for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    eval(tmp, k4);
    for (size_t i = 0; i < n; ++i)
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!all_finite(y))
      throw NumericError("integrate_rk4: state left IEEE range at substep " +
                         std::to_string(s));
  }
  return y;
}

Vec lti_exact_step(const Mat& A, const Mat& B, const Mat& E, const Vec& x,
                   const Vec& u, const Vec& w, double tau) {
  Mat phi, G;
  expm_with_integral(A, tau, phi, G);
  Vec drive(A.rows, 0.0);
  Vec bu = matvec(B, u);
  Vec ew = matvec(E, w);
  for (size_t i = 0; i < drive.size(); ++i) drive[i] = bu[i] + ew[i];
  Vec gd = matvec(G, drive);
  Vec y = matvec(phi, x);
  for (size_t i = 0; i < y.size(); ++i) y[i] += gd[i];
  if (!all_finite(y)) throw NumericError("lti_exact_step: non-finite result");
  return y;
}

namespace {

Box symmetric_box(const Vec& wbar) {
  Box b;
  b.lower.resize(wbar.size());
  b.upper.resize(wbar.size());
  for (size_t i = 0; i < wbar.size(); ++i) {
    b.lower[i] = -wbar[i];
    b.upper[i] = wbar[i];
  }
  return b;
}

/* cached exact discretization x' = phi x + G (drive + diag(c) w) */
struct AffineStep {
  Mat phi, G;
  Vec g_drive;  /* G * constant drive */
  Vec c;

  Vec apply(const Vec& x, const Vec& w) const {
    Vec y = matvec(phi, x);
    Vec cw(w.size());
    for (size_t i = 0; i < w.size(); ++i) cw[i] = c[i] * w[i];
    Vec gw = matvec(G, cw);
    for (size_t i = 0; i < y.size(); ++i) y[i] += g_drive[i] + gw[i];
    return y;
  }
};

AffineStep make_affine_step(const Mat& A, const Vec& b, const Vec& c, double tau) {
  AffineStep s;
  expm_with_integral(A, tau, s.phi, s.G);
  s.g_drive = matvec(s.G, b);
  s.c = c;
  return s;
}

}  // namespace

SystemModel make_dcdc_system(const DcdcParams& p) {
  if (p.A1.rows != 2 || p.A2.rows != 2 || p.b.size() != 2 || p.c.size() != 2)
    throw ConfigError("dcdc: expected 2-dimensional matrices");
  SystemModel sys;
  sys.state_dim = 2;
  sys.state_box = Box{{0.65, 4.95}, {1.65, 5.95}};
  sys.input_box = Box{{1.0}, {2.0}};
  sys.disturbance_box = symmetric_box(p.wbar);
  sys.tau = p.tau;
  AffineStep s1 = make_affine_step(p.A1, p.b, p.c, p.tau);
  AffineStep s2 = make_affine_step(p.A2, p.b, p.c, p.tau);
  Mat A1 = p.A1, A2 = p.A2;
  Vec b = p.b, c = p.c;
  double tau0 = p.tau;
  sys.step = [s1, s2, A1, A2, b, c, tau0](const Vec& x, const Vec& u, const Vec& w,
                                          double tau) -> Vec {
    long mode = std::lround(u.at(0));
    if (mode != 1 && mode != 2)
      throw ConfigError("dcdc: mode must be 1 or 2, got " + format_real(u[0]));
    if (tau == tau0) return mode == 1 ? s1.apply(x, w) : s2.apply(x, w);
    AffineStep s = make_affine_step(mode == 1 ? A1 : A2, b, c, tau);
    return s.apply(x, w);
  };
  return sys;
}

SystemModel make_vehicle_system(double tau, Vec wbar, int substeps) {
  SystemModel sys;
  sys.state_dim = 3;
  const double pi = 3.14159265358979323846;
  sys.state_box = Box{{0.0, 0.0, -pi - 0.4}, {10.0, 10.0, pi + 0.4}};
  sys.input_box = Box{{-1.0, -1.0}, {1.0, 1.0}};
  sys.disturbance_box = symmetric_box(wbar);
  sys.tau = tau;
  VectorField f = [](const Vec& x, const Vec& u, Vec& dx) {
    double alpha = std::atan(std::tan(u[1]) / 2.0);
    double ca = std::cos(alpha);
    dx[0] = u[0] * std::cos(alpha + x[2]) / ca;
    dx[1] = u[0] * std::sin(alpha + x[2]) / ca;
    dx[2] = u[0] * std::tan(u[1]);
  };
  sys.step = [f, substeps](const Vec& x, const Vec& u, const Vec& w, double tau) {
    return integrate_rk4(f, x, u, w, tau, substeps);
  };
  return sys;
}

const Power3a3mParams& power3a3m_params() {
  static const Power3a3mParams p = [] {
    Power3a3mParams q;
    q.A = Mat(3, 3);
    q.A(0, 0) = 0.00027563;
    q.A(1, 1) = -0.3951;
    q.A(1, 2) = 0.687;
    q.A(2, 1) = -0.6869;
    q.A(2, 2) = -0.016;
    q.B = Mat(3, 1);
    q.B(0, 0) = 0.00031166;
    q.B(1, 0) = 0.1359;
    q.B(2, 0) = 0.0230;
    q.E = Mat(3, 2);
    q.E(0, 0) = 0.00033103;
    q.E(0, 1) = 0.00031244;
    q.E(1, 0) = 0.1309;
    q.E(1, 1) = 0.1308;
    q.E(2, 0) = 0.0250;
    q.E(2, 1) = 0.0233;
    q.C = {-0.0115, -0.2296, 0.0412};
    q.tau = 0.4;
    q.state_box = Box{{-0.02, -0.05, -0.12}, {0.02, 0.05, 0.12}};
    q.input_box = Box{{0.0}, {0.5}};
    q.wbar = {0.2, 0.3};
    return q;
  }();
  return p;
}

double power3a3m_output(const Vec& x) {
  const auto& p = power3a3m_params();
  double y = 0;
  for (size_t i = 0; i < 3; ++i) y += p.C[i] * x[i];
  return y;
}

SystemModel make_power3a3m_system() {
  const auto& p = power3a3m_params();
  return make_lti_system(p.A, p.B, p.E, p.state_box, p.input_box, p.wbar, p.tau);
}

SystemModel make_lti_system(const Mat& A, const Mat& B, const Mat& E, Box state_box,
                            Box input_box, Vec wbar, double tau) {
  if (A.rows != A.cols || B.rows != A.rows || E.rows != A.rows)
    throw ConfigError("lti: matrix dimensions are inconsistent");
  if (E.cols != wbar.size())
    throw ConfigError("lti: disturbance bound does not match E");
  SystemModel sys;
  sys.state_dim = A.rows;
  sys.state_box = std::move(state_box);
  sys.input_box = std::move(input_box);
  sys.disturbance_box = symmetric_box(wbar);
  sys.tau = tau;
  Mat phi, G;
  expm_with_integral(A, tau, phi, G);
  Mat GB = matmul(G, B), GE = matmul(G, E);
  Mat A0 = A, B0 = B, E0 = E;
  double tau0 = tau;
  sys.step = [phi, GB, GE, A0, B0, E0, tau0](const Vec& x, const Vec& u, const Vec& w,
                                             double tau) -> Vec {
    if (tau != tau0) return lti_exact_step(A0, B0, E0, x, u, w, tau);
    Vec y = matvec(phi, x);
    Vec bu = matvec(GB, u), ew = matvec(GE, w);
    for (size_t i = 0; i < y.size(); ++i) y[i] += bu[i] + ew[i];
    if (!all_finite(y)) throw NumericError("lti step: non-finite result");
    return y;
  };
  return sys;
}

}  // namespace dabs
