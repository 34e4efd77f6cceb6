#include "chemo/cli/presets.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "chemo/identities.hpp"

namespace chemo::cli {

namespace {

double gaussian(const Grid& grid, double mass, const std::array<double, 2>& c, double sigma,
                double x, double y) {
  const double s2 = sigma * sigma;
  double r2 = (x - c[0]) * (x - c[0]);
  double norm = std::sqrt(2.0 * std::numbers::pi * s2);
  if (grid.dim() == 2) {
    r2 += (y - c[1]) * (y - c[1]);
    norm *= norm;
  }
  return mass / norm * std::exp(-r2 / (2.0 * s2));
}

}  // namespace

Field make_field(const Grid& grid, const FieldSpec& s, std::uint64_t seed) {
  switch (s.kind) {
    case FieldKind::Constant:
      return Field(grid, s.value);
    case FieldKind::GaussianBump:
      return Field::sample(grid, [&](double x, double y) {
        return s.value + gaussian(grid, s.mass, s.center, s.sigma, x, y);
      });
    case FieldKind::TwoBump:
      return Field::sample(grid, [&](double x, double y) {
        return s.value + gaussian(grid, s.mass, s.center, s.sigma, x, y) +
               gaussian(grid, s.mass2, s.center2, s.sigma, x, y);
      });
    case FieldKind::RandomSeeded: {
      std::mt19937_64 rng(seed);
      Eigen::ArrayXd values(grid.size());
      for (Eigen::Index k = 0; k < values.size(); ++k)
        values(k) = s.mean * (1.0 + s.amplitude * (2.0 * uniform01(rng) - 1.0));
      return Field(grid, std::move(values));
    }
  }
  throw std::invalid_argument("make_field: unknown profile");
}

InitialData make_base_data(const RunConfig& config, const Grid& grid) {
  // Distinct, fixed offsets keep the three random streams independent.
  const std::uint64_t s = config.seed * 0x9E3779B97F4A7C15ULL;
  return InitialData{make_field(grid, config.initial[0], s + 1),
                     make_field(grid, config.initial[1], s + 2),
                     make_field(grid, config.initial[2], s + 3)};
}

}  // namespace chemo::cli
