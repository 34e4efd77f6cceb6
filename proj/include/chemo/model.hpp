#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "chemo/grid.hpp"

namespace chemo {

/// Parameters of the regularized two-species system with unit coefficients.
struct ModelParams {
  double theta = 2.0;  // competition exponent, > 1
  double eps = 0.0;    // source regularization in [0, 1); 0 is the limit system
  int dim_N = 2;       // analytic dimension used by the exponent formulas

  void validate() const;
};

/// Densities u, v and signal w at one time instant.
struct State {
  Field u;
  Field v;
  Field w;
  double time = 0.0;

  const Grid& grid() const { return u.grid(); }
  /// Throws if any component is negative or the grids disagree.
  void validate() const;
};

/// u (1 - u^(theta-1) - v).
template <typename Scalar>
Scalar reaction_u(Scalar u, Scalar v, Scalar theta) {
  using std::pow;
  if (u < Scalar(0) || v < Scalar(0))
    throw std::domain_error("reaction_u: negative density");
  if (u == Scalar(0)) return Scalar(0);
  return u * (Scalar(1) - pow(u, theta - Scalar(1)) - v);
}

/// v (1 - v - u).
template <typename Scalar>
Scalar reaction_v(Scalar u, Scalar v) {
  if (u < Scalar(0) || v < Scalar(0))
    throw std::domain_error("reaction_v: negative density");
  return v * (Scalar(1) - v - u);
}

/// (u + v) / (1 + eps (u + v)).
template <typename Scalar>
Scalar source_w(Scalar u, Scalar v, Scalar eps) {
  if (u < Scalar(0) || v < Scalar(0))
    throw std::domain_error("source_w: negative density");
  if (eps < Scalar(0) || !(eps < Scalar(1)))
    throw std::domain_error("source_w: eps must lie in [0, 1)");
  const Scalar s = u + v;
  return s / (Scalar(1) + eps * s);
}

struct SignSplit {
  double plus;
  double minus;
};

/// f = plus - minus with plus, minus >= 0 and plus * minus = 0.
inline SignSplit sign_split(double f) {
  return {f > 0.0 ? f : 0.0, f < 0.0 ? -f : 0.0};
}

/// (2N - 2) / N, the lower bound on theta for the w-L^p estimate.
double theta_threshold(int N);

/// Integrability exponent of w0: max{2, N(2 - theta) / (2(theta - 1))}.
double r_exponent(double theta, int N);

/// Upper end of the p-range on which ||w(t)||_p is bounded uniformly in eps.
double admissible_w_p(double theta, int N);

/// Bound on the u-mass: max{1 + ||u0||_1, (theta-1)(2/theta)^(theta/(theta-1)) |Omega|}.
double m1_bound(double u0_l1, double theta, double omega_measure);

/// Bound on the v-mass: max{1 + ||v0||_1, |Omega|}.
double m2_bound(double v0_l1, double omega_measure);

struct InitialData {
  Field u;
  Field v;
  Field w;

  State to_state() const { return State{u, v, w, 0.0}; }
};

/// Clips each field at 1/eps and applies one backward-Euler heat step of
/// pseudo-time eps. eps = 0 returns the base data unchanged.
InitialData regularize_initial(const InitialData& base, double eps,
                               double solver_tol = 1e-13, int solver_max_iter = 2000);

}  // namespace chemo
