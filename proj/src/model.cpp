#include "chemo/model.hpp"

#include <algorithm>

namespace chemo {

void ModelParams::validate() const {
  if (!(theta > 1.0) || !std::isfinite(theta))
    throw std::invalid_argument("theta must exceed 1 (got " + std::to_string(theta) + ")");
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::invalid_argument("eps must lie in [0, 1) (got " + std::to_string(eps) + ")");
  if (dim_N < 1) throw std::invalid_argument("dim_N must be at least 1");
}

void State::validate() const {
  if (!(u.grid() == v.grid()) || !(u.grid() == w.grid()))
    throw std::invalid_argument("state components live on different grids");
  const auto check = [](const Field& f, const char* name) {
    for (Eigen::Index k = 0; k < f.size(); ++k) {
      if (!std::isfinite(f[k]))
        throw NonFiniteValue(k);
      if (f[k] < 0.0)
        throw std::domain_error(std::string(name) + " is negative at cell " +
                                std::to_string(k));
    }
  };
  check(u, "u");
  check(v, "v");
  check(w, "w");
}

double theta_threshold(int N) {
  if (N < 1) throw std::invalid_argument("theta_threshold: N must be at least 1");
  return (2.0 * N - 2.0) / N;
}

double r_exponent(double theta, int N) {
  if (!(theta > 1.0)) throw std::invalid_argument("r_exponent: theta must exceed 1");
  if (N < 1) throw std::invalid_argument("r_exponent: N must be at least 1");
  return std::max(2.0, N * (2.0 - theta) / (2.0 * (theta - 1.0)));
}

double admissible_w_p(double theta, int N) {
  if (N < 1) throw std::invalid_argument("admissible_w_p: N must be at least 1");
  if (!(theta > theta_threshold(N)))
    throw std::invalid_argument("admissible_w_p: theta must exceed (2N-2)/N = " +
                                std::to_string(theta_threshold(N)));
  const double tail = N * (2.0 - theta) / (2.0 * (theta - 1.0));
  // N = 1 has no separate branch; it follows the low-dimensional rule.
  return N <= 3 ? std::max(2.0, tail) : std::max(1.0, tail);
}

double m1_bound(double u0_l1, double theta, double omega_measure) {
  if (!(u0_l1 >= 0.0)) throw std::invalid_argument("m1_bound: ||u0||_1 must be nonnegative");
  if (!(theta > 1.0)) throw std::invalid_argument("m1_bound: theta must exceed 1");
  if (!(omega_measure > 0.0)) throw std::invalid_argument("m1_bound: |Omega| must be positive");
  const double logistic =
      (theta - 1.0) * std::pow(2.0 / theta, theta / (theta - 1.0)) * omega_measure;
  return std::max(1.0 + u0_l1, logistic);
}

double m2_bound(double v0_l1, double omega_measure) {
  if (!(v0_l1 >= 0.0)) throw std::invalid_argument("m2_bound: ||v0||_1 must be nonnegative");
  if (!(omega_measure > 0.0)) throw std::invalid_argument("m2_bound: |Omega| must be positive");
  return std::max(1.0 + v0_l1, omega_measure);
}

InitialData regularize_initial(const InitialData& base, double eps, double solver_tol,
                               int solver_max_iter) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::invalid_argument("regularize_initial: eps must lie in [0, 1)");
  for (const Field* f : {&base.u, &base.v, &base.w})
    if ((f->values() < 0.0).any())
      throw std::domain_error("regularize_initial: base data must be nonnegative");
  if (eps == 0.0) return base;

  const double cap = 1.0 / eps;
  ImplicitDiffusion heat(base.u.grid(), solver_tol, solver_max_iter);
  const auto smooth = [&](const Field& f) {
    const Eigen::ArrayXd clipped = f.values().min(cap);
    Eigen::ArrayXd out = heat.solve(clipped, eps);
    // CG round-off can leave tiny negatives where the data vanish.
    out = out.max(0.0);
    return Field(f.grid(), std::move(out));
  };
  return InitialData{smooth(base.u), smooth(base.v), smooth(base.w)};
}

}  // namespace chemo
