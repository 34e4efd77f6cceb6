#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "chemo/grid.hpp"

namespace chemo {

/// Exponents of the entropy functional z = (u+1)^(-p) e^(-k w).
struct TestWeights {
  double p = 1.0;
  double k = 2.0;

  /// Throws unless p > 0 and k > sqrt(p)(p+1)/2.
  void validate() const;
  /// (4k^2 - p(p+1)^2) / (4(p+1)); positive exactly when the weights are admissible.
  double dissipation_constant() const;
};

/// sqrt(p)(p+1)/2, the admissibility threshold for k.
double weights_threshold(double p);

namespace detail {
inline void require_entropy_domain(bool ok, const char* what) {
  if (!ok) throw std::domain_error(what);
}
}  // namespace detail

// phi(s) = (s+1)^(-p), Phi(s) = -2 sqrt((p+1)/p) (s+1)^(-p/2), xi(s) = e^(-k s),
// together with their closed-form derivatives. Templated so that automatic
// differentiation types can be pushed through the base definitions.

template <typename Scalar>
Scalar phi(Scalar s, double p) {
  using std::pow;
  detail::require_entropy_domain(s >= 0.0 && p > 0.0, "phi: need s >= 0, p > 0");
  return pow(s + 1.0, -p);
}

template <typename Scalar>
Scalar phi_prime(Scalar s, double p) {
  using std::pow;
  detail::require_entropy_domain(s >= 0.0 && p > 0.0, "phi_prime: need s >= 0, p > 0");
  return -p * pow(s + 1.0, -p - 1.0);
}

template <typename Scalar>
Scalar phi_doubleprime(Scalar s, double p) {
  using std::pow;
  detail::require_entropy_domain(s >= 0.0 && p > 0.0, "phi_doubleprime: need s >= 0, p > 0");
  return p * (p + 1.0) * pow(s + 1.0, -p - 2.0);
}

template <typename Scalar>
Scalar Phi(Scalar s, double p) {
  using std::pow;
  detail::require_entropy_domain(s >= 0.0 && p > 0.0, "Phi: need s >= 0, p > 0");
  return -2.0 * std::sqrt((p + 1.0) / p) * pow(s + 1.0, -0.5 * p);
}

template <typename Scalar>
Scalar Phi_prime(Scalar s, double p) {
  using std::pow;
  detail::require_entropy_domain(s >= 0.0 && p > 0.0, "Phi_prime: need s >= 0, p > 0");
  return std::sqrt(p * (p + 1.0)) * pow(s + 1.0, -0.5 * p - 1.0);
}

template <typename Scalar>
Scalar xi(Scalar s, double k) {
  using std::exp;
  detail::require_entropy_domain(s >= 0.0 && k > 0.0, "xi: need s >= 0, k > 0");
  return exp(-k * s);
}

template <typename Scalar>
Scalar xi_prime(Scalar s, double k) {
  using std::exp;
  detail::require_entropy_domain(s >= 0.0 && k > 0.0, "xi_prime: need s >= 0, k > 0");
  return -k * exp(-k * s);
}

template <typename Scalar>
Scalar xi_doubleprime(Scalar s, double k) {
  using std::exp;
  detail::require_entropy_domain(s >= 0.0 && k > 0.0, "xi_doubleprime: need s >= 0, k > 0");
  return k * k * exp(-k * s);
}

// Simplified coefficients of the entropy identity for the (phi, Phi, xi)
// family above, as functions of s = u and st = w.

/// Coefficient of grad w inside the dissipation square.
double entropy_drift_coefficient(double s, double st, const TestWeights& wts);
/// Coefficient of |grad w|^2.
double entropy_second_order_coefficient(double s, double st, const TestWeights& wts);
/// phi'/sqrt(phi'') sqrt(xi), by direct differentiation.
double entropy_cross_coefficient(double s, double st, const TestWeights& wts);
/// The commonly quoted simplification (s+1)^(-p/2) e^(-k st/2) of the same quantity;
/// it differs from the direct one by the factor -sqrt(p/(p+1)).
double entropy_cross_coefficient_simplified(double s, double st, const TestWeights& wts);
/// Coefficient of grad w . grad psi.
double entropy_flux_coefficient(double s, double st, const TestWeights& wts);

enum class EntropyIdentity { PhiDerivative = 0, Drift, SecondOrder, Cross, Flux };
inline constexpr int kEntropyIdentityCount = 5;
const char* entropy_identity_name(EntropyIdentity id);

struct EntropyIdentityReport {
  TestWeights weights;
  int samples = 0;
  double tolerance = 0.0;
  std::array<double, kEntropyIdentityCount> max_relative_error{};
  std::array<bool, kEntropyIdentityCount> pass{};
  /// Largest relative gap between the assembled cross term and the simplified form.
  double cross_simplified_max_relative_error = 0.0;
  /// Ratio assembled / simplified at the first sample; -sqrt(p/(p+1)) is expected.
  double cross_simplified_ratio = 0.0;

  bool all_pass() const;
};

/// Evaluates both sides of each identity at `samples` points in [0,10]^2. The
/// assembled side uses only phi, Phi, xi and their derivative evaluators. The
/// first sample is (0, 0); the rest are drawn from `seed`.
EntropyIdentityReport check_entropy_identities(const TestWeights& weights, int samples, double tolerance = 1e-10,
                            std::uint64_t seed = 1);

/// (u+1)^(-p) e^(-k w), cellwise; values lie in (0, 1].
Field z_field(const Field& u, const Field& w, double p, double k);

/// Space-time bump A * B(|x - c| / rho) * B((t - tau) / sigma) with
/// B(y) = exp(1 / (y^2 - 1)) on |y| < 1 and 0 elsewhere.
struct TestFunction {
  int dim = 2;
  std::array<double, 2> center{0.5, 0.5};
  double radius = 0.25;
  double time_center = 0.5;
  double time_radius = 0.25;
  double amplitude = 1.0;

  double spatial(double x, double y) const;
  std::array<double, 2> spatial_gradient(double x, double y) const;
  double temporal(double t) const;
  double temporal_derivative(double t) const;

  double value(double x, double y, double t) const { return amplitude * spatial(x, y) * temporal(t); }
  double time_derivative(double x, double y, double t) const {
    return amplitude * spatial(x, y) * temporal_derivative(t);
  }
  std::array<double, 2> gradient(double x, double y, double t) const;

  double support_end() const { return time_center + time_radius; }
  /// Distance from the spatial support to the boundary of the grid's domain.
  double boundary_clearance(const Grid& grid) const;
};

/// Seeded family of interior bumps. Radii span [2h, diam/4] (capped so the
/// support fits), every fourth bump is active at t = 0, and temporal supports
/// end before T.
std::vector<TestFunction> sample_test_functions(const Grid& grid, double T, int count,
                                                std::uint64_t seed);

/// Uniform double in [0, 1) from a 64-bit engine, platform independent.
template <typename Engine>
double uniform01(Engine& engine) {
  return double(engine() >> 11) * 0x1.0p-53;
}

}  // namespace chemo
