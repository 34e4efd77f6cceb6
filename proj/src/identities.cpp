#include "chemo/identities.hpp"

#include <algorithm>
#include <random>
#include <string>

namespace chemo {

double weights_threshold(double p) {
  if (!(p > 0.0)) throw std::invalid_argument("weights_threshold: p must be positive");
  return std::sqrt(p) * (p + 1.0) / 2.0;
}

void TestWeights::validate() const {
  if (!(p > 0.0)) throw std::invalid_argument("test weights: p must be positive");
  const double bound = weights_threshold(p);
  if (!(k > bound))
    throw std::invalid_argument("test weights: need k > sqrt(p)(p+1)/2 = " +
                                std::to_string(bound) + " (got k = " + std::to_string(k) + ")");
}

double TestWeights::dissipation_constant() const {
  return (4.0 * k * k - p * (p + 1.0) * (p + 1.0)) / (4.0 * (p + 1.0));
}

double entropy_drift_coefficient(double s, double st, const TestWeights& w) {
  const double p = w.p;
  const double ratio = s / (s + 1.0);
  return -(2.0 * w.k + p * (p + 1.0) * ratio) / (2.0 * std::sqrt(p * (p + 1.0))) *
         std::pow(s + 1.0, -0.5 * p) * std::exp(-0.5 * w.k * st);
}

double entropy_second_order_coefficient(double s, double st, const TestWeights& w) {
  const double p = w.p;
  const double ratio = s / (s + 1.0);
  return (4.0 * w.k * w.k - p * (p + 1.0) * (p + 1.0) * ratio * ratio) / (4.0 * (p + 1.0)) *
         std::pow(s + 1.0, -p) * std::exp(-w.k * st);
}

double entropy_cross_coefficient(double s, double st, const TestWeights& w) {
  return -std::sqrt(w.p / (w.p + 1.0)) * entropy_cross_coefficient_simplified(s, st, w);
}

double entropy_cross_coefficient_simplified(double s, double st, const TestWeights& w) {
  return std::pow(s + 1.0, -0.5 * w.p) * std::exp(-0.5 * w.k * st);
}

double entropy_flux_coefficient(double s, double st, const TestWeights& w) {
  return -w.p * s * std::pow(s + 1.0, -w.p - 1.0) * std::exp(-w.k * st);
}

const char* entropy_identity_name(EntropyIdentity id) {
  switch (id) {
    case EntropyIdentity::PhiDerivative: return "Phi_prime_eq_sqrt_phi_doubleprime";
    case EntropyIdentity::Drift: return "drift_coefficient";
    case EntropyIdentity::SecondOrder: return "second_order_coefficient";
    case EntropyIdentity::Cross: return "cross_coefficient";
    case EntropyIdentity::Flux: return "flux_coefficient";
  }
  return "unknown";
}

bool EntropyIdentityReport::all_pass() const {
  return std::all_of(pass.begin(), pass.end(), [](bool b) { return b; });
}

namespace {

struct Sides {
  double assembled;
  double closed;
  double scale;  // magnitude of the largest summand, guards cancellation
};

double relative_gap(const Sides& sd) {
  const double scale = std::max({std::abs(sd.assembled), std::abs(sd.closed), sd.scale});
  return scale == 0.0 ? 0.0 : std::abs(sd.assembled - sd.closed) / scale;
}

}  // namespace

EntropyIdentityReport check_entropy_identities(const TestWeights& weights, int samples, double tolerance,
                            std::uint64_t seed) {
  weights.validate();
  if (samples < 1) throw std::invalid_argument("check_entropy_identities: samples must be positive");
  const double p = weights.p;
  const double k = weights.k;

  EntropyIdentityReport report;
  report.weights = weights;
  report.samples = samples;
  report.tolerance = tolerance;

  std::mt19937_64 rng(seed);
  for (int n = 0; n < samples; ++n) {
    const double s = n == 0 ? 0.0 : 10.0 * uniform01(rng);
    const double st = n == 0 ? 0.0 : 10.0 * uniform01(rng);

    const double f = phi(s, p);
    const double f1 = phi_prime(s, p);
    const double f2 = phi_doubleprime(s, p);
    const double F = Phi(s, p);
    const double g = xi(st, k);
    const double g1 = xi_prime(st, k);
    const double g2 = xi_doubleprime(st, k);
    const double root_f2 = std::sqrt(f2);
    const double root_g = std::sqrt(g);
    // phi'/sqrt(phi'') and xi'/sqrt(xi) are formed before squaring so that
    // e^(-2 k st) never underflows on its own.
    const double a = f1 / root_f2;
    const double b = g1 / root_g;

    std::array<Sides, kEntropyIdentityCount> sides;
    sides[0] = {Phi_prime(s, p), root_f2, 0.0};

    const double d1 = a * b, d2 = -0.5 * F * b, d3 = -0.5 * s * root_f2 * root_g;
    sides[1] = {d1 + d2 + d3, entropy_drift_coefficient(s, st, weights),
                std::max({std::abs(d1), std::abs(d2), std::abs(d3)})};

    const double e1 = f * g2, e2 = -(a * b) * (a * b), e3 = -0.25 * s * s * f2 * g;
    sides[2] = {e1 + e2 + e3, entropy_second_order_coefficient(s, st, weights),
                std::max({std::abs(e1), std::abs(e2), std::abs(e3)})};

    const double cross = a * root_g;
    sides[3] = {cross, entropy_cross_coefficient(s, st, weights), 0.0};

    const double v1 = s * f1 * g, v2 = -f * g1, v3 = 0.5 * F * a * g1;
    sides[4] = {v1 + v2 + v3, entropy_flux_coefficient(s, st, weights),
                std::max({std::abs(v1), std::abs(v2), std::abs(v3)})};

    for (int i = 0; i < kEntropyIdentityCount; ++i)
      report.max_relative_error[i] = std::max(report.max_relative_error[i], relative_gap(sides[i]));

    const double simplified = entropy_cross_coefficient_simplified(s, st, weights);
    report.cross_simplified_max_relative_error = std::max(
        report.cross_simplified_max_relative_error, relative_gap({cross, simplified, 0.0}));
    if (n == 0) report.cross_simplified_ratio = cross / simplified;
  }
  for (int i = 0; i < kEntropyIdentityCount; ++i)
    report.pass[i] = report.max_relative_error[i] < tolerance;
  return report;
}

Field z_field(const Field& u, const Field& w, double p, double k) {
  if (!(u.grid() == w.grid())) throw std::invalid_argument("z_field: grids differ");
  if (!(p > 0.0) || !(k > 0.0)) throw std::invalid_argument("z_field: need p > 0 and k > 0");
  if ((u.values() < 0.0).any() || (w.values() < 0.0).any())
    throw std::domain_error("z_field: u and w must be nonnegative");
  Eigen::ArrayXd z = (u.values() + 1.0).pow(-p) * (-k * w.values()).exp();
  return Field(u.grid(), std::move(z));
}

namespace {

// B(y) with y^2 given; zero outside the open unit ball.
double bump(double y2) { return y2 < 1.0 ? std::exp(1.0 / (y2 - 1.0)) : 0.0; }

// dB/d(y^2).
double bump_slope(double y2) {
  if (!(y2 < 1.0)) return 0.0;
  const double d = y2 - 1.0;
  return -std::exp(1.0 / d) / (d * d);
}

}  // namespace

double TestFunction::spatial(double x, double y) const {
  const double dx = x - center[0];
  const double dy = dim == 2 ? y - center[1] : 0.0;
  return bump((dx * dx + dy * dy) / (radius * radius));
}

std::array<double, 2> TestFunction::spatial_gradient(double x, double y) const {
  const double dx = x - center[0];
  const double dy = dim == 2 ? y - center[1] : 0.0;
  const double r2 = radius * radius;
  const double slope = bump_slope((dx * dx + dy * dy) / r2);
  return {slope * 2.0 * dx / r2, dim == 2 ? slope * 2.0 * dy / r2 : 0.0};
}

double TestFunction::temporal(double t) const {
  const double d = (t - time_center) / time_radius;
  return bump(d * d);
}

double TestFunction::temporal_derivative(double t) const {
  const double d = (t - time_center) / time_radius;
  return bump_slope(d * d) * 2.0 * d / time_radius;
}

std::array<double, 2> TestFunction::gradient(double x, double y, double t) const {
  const double scale = amplitude * temporal(t);
  const auto g = spatial_gradient(x, y);
  return {scale * g[0], scale * g[1]};
}

double TestFunction::boundary_clearance(const Grid& grid) const {
  double clearance = std::min(center[0], grid.length(0) - center[0]) - radius;
  if (dim == 2)
    clearance = std::min(clearance, std::min(center[1], grid.length(1) - center[1]) - radius);
  return clearance;
}

std::vector<TestFunction> sample_test_functions(const Grid& grid, double T, int count,
                                                std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_test_functions: count must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("sample_test_functions: T must be positive");
  for (int a = 0; a < grid.dim(); ++a)
    if (grid.cells(a) < 5)
      throw std::invalid_argument("sample_test_functions: need at least 5 cells per axis");

  const double h = grid.max_spacing();
  double half_width = grid.length(0) / 2.0;
  if (grid.dim() == 2) half_width = std::min(half_width, grid.length(1) / 2.0);
  const double r_min = 2.0 * h;
  const double r_max = std::min(grid.diameter() / 4.0, half_width - 1.5 * h);
  if (!(r_max >= r_min))
    throw std::invalid_argument("sample_test_functions: grid too coarse for interior bumps");

  std::mt19937_64 rng(seed);
  std::vector<TestFunction> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    TestFunction tf;
    tf.dim = grid.dim();
    tf.radius = r_min + (r_max - r_min) * uniform01(rng);
    for (int a = 0; a < grid.dim(); ++a) {
      const double lo = tf.radius + h;
      const double hi = grid.length(a) - tf.radius - h;
      tf.center[a] = lo + (hi - lo) * uniform01(rng);
    }
    if (grid.dim() == 1) tf.center[1] = 0.0;
    tf.time_radius = T * (0.15 + 0.25 * uniform01(rng));
    const double sigma = tf.time_radius;
    if (i % 4 == 0) {
      tf.time_center = sigma * (uniform01(rng) - 0.5);
    } else {
      const double hi = T - sigma * (1.0 + 1e-9);
      tf.time_center = sigma + (hi - sigma) * uniform01(rng);
    }
    tf.amplitude = 1.0;
    out.push_back(tf);
  }
  return out;
}

}  // namespace chemo
