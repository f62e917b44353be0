#ifndef DABS_SYSTEMS_HPP_
#define DABS_SYSTEMS_HPP_

#include <functional>

#include "dabs/geometry.hpp"
#include "dabs/linalg.hpp"
#include "dabs/util.hpp"

namespace dabs {

/* continuous-time right-hand side dx = f(x, u); disturbances are handled by
 * the integrator / step map, not by the field itself */
using VectorField = std::function<void(const Vec& x, const Vec& u, Vec& dx)>;

/* Sampled-time model. Everything downstream of this struct treats `step` as an
 * opaque trajectory oracle: state in, input in, disturbance in, state out. */
struct SystemModel {
  size_t state_dim = 0;
  Box state_box;        /* operating range X */
  Box input_box;        /* U, or the discrete mode range for switched systems */
  Box disturbance_box;  /* W, symmetric [-wbar, wbar]; dimension may differ from n */
  double tau = 0.0;     /* sampling period */
  std::function<Vec(const Vec& x, const Vec& u, const Vec& w, double tau)> step;

  Vec wbar() const {
    Vec w(disturbance_box.dim());
    for (size_t i = 0; i < w.size(); ++i) w[i] = disturbance_box.upper[i];
    return w;
  }
};

/* classic fixed-step RK4 over `substeps` equal slices of tau; w is an additive
 * state-dimension disturbance held constant over the step. Throws NumericError
 * (with the failing substep in the message) if the state leaves IEEE range. */
Vec integrate_rk4(const VectorField& f, const Vec& x, const Vec& u, const Vec& w,
                  double tau, int substeps = 64);

/* exact discretization of dx = A x + B u + E w for constant u, w over tau,
 * via the matrix exponential of the augmented system */
Vec lti_exact_step(const Mat& A, const Mat& B, const Mat& E, const Vec& x,
                   const Vec& u, const Vec& w, double tau);

/* ---- built-in benchmark systems ---- */

/* switched DC-DC boost converter: two modes, dx = A_mode x + b + diag(c) w;
 * the input is the mode index in {1, 2}. Matrices are supplied by the caller
 * (they come from the config file). */
struct DcdcParams {
  Mat A1, A2;
  Vec b;
  Vec c;          /* disturbance scaling per state */
  double tau = 0.5;
  Vec wbar = {0.01, 0.0};
};
SystemModel make_dcdc_system(const DcdcParams& p);

/* kinematic vehicle, 3 states (x, y, heading), 2 inputs (speed, steering),
 * additive disturbance on the first state equation only */
SystemModel make_vehicle_system(double tau = 0.3, Vec wbar = {0.01, 0.0, 0.0},
                                int substeps = 64);

/* three-area power system, 3 states, scalar input, 2 disturbance channels */
struct Power3a3mParams {
  Mat A, B, E;
  Vec C;          /* frequency output row, y = C x */
  double tau;
  Box state_box, input_box;
  Vec wbar;
};
const Power3a3mParams& power3a3m_params();
SystemModel make_power3a3m_system();
double power3a3m_output(const Vec& x);

/* generic LTI wrapper around lti_exact_step */
SystemModel make_lti_system(const Mat& A, const Mat& B, const Mat& E, Box state_box,
                            Box input_box, Vec wbar, double tau);

}  // namespace dabs

#endif
