#include "chemo/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace chemo {

EstimateRecord make_record(std::string name, double value, double bound, double tolerance,
                           std::string note) {
  EstimateRecord r;
  r.name = std::move(name);
  r.value = value;
  r.bound = bound;
  r.slack = bound - value;
  r.tolerance = tolerance;
  r.pass = r.slack >= -tolerance;
  r.note = std::move(note);
  return r;
}

EstimateRecord info_record(std::string name, double value, std::string note) {
  EstimateRecord r;
  r.name = std::move(name);
  r.value = value;
  r.has_bound = false;
  r.note = std::move(note);
  return r;
}

bool EstimateReport::all_pass() const {
  return std::all_of(records.begin(), records.end(), [](const auto& r) { return r.pass; });
}

void EstimateReport::append(const EstimateReport& other) {
  records.insert(records.end(), other.records.begin(), other.records.end());
}

const EstimateRecord& EstimateReport::find(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return r;
  throw std::out_of_range("no estimate named " + name);
}

namespace {

void require_nonempty(const Trajectory& traj) {
  if (traj.snapshots.empty()) throw std::invalid_argument("trajectory has no snapshots");
}

EstimateRecord relative_bound(std::string name, double value, double bound, std::string note = {}) {
  return make_record(std::move(name), value, bound, kBoundRelativeTolerance * std::abs(bound),
                     std::move(note));
}

}  // namespace

EstimateReport check_mass_bounds(const Trajectory& traj, double u0_l1, double v0_l1) {
  require_nonempty(traj);
  const double omega = traj.grid().measure();
  double sup_u = 0.0, sup_v = 0.0;
  for (const auto& s : traj.snapshots) {
    sup_u = std::max(sup_u, integrate(s.u));
    sup_v = std::max(sup_v, integrate(s.v));
  }
  EstimateReport rep;
  rep.records.push_back(
      relative_bound("mass_u_sup", sup_u, m1_bound(u0_l1, traj.params.theta, omega)));
  rep.records.push_back(relative_bound("mass_v_sup", sup_v, m2_bound(v0_l1, omega)));
  return rep;
}

EstimateReport check_spacetime_bounds(const Trajectory& traj, double u0_l1, double v0_l1) {
  require_nonempty(traj);
  const double omega = traj.grid().measure();
  const double T = traj.final_time();
  const double m1 = m1_bound(u0_l1, traj.params.theta, omega);
  const double m2 = m2_bound(v0_l1, omega);
  EstimateReport rep;
  rep.records.push_back(
      relative_bound("spacetime_u_theta", traj.integrals.u_theta, m1 * T + 1.0 + u0_l1));
  rep.records.push_back(
      relative_bound("spacetime_v_squared", traj.integrals.v_squared, m2 * T + 1.0 + v0_l1));
  return rep;
}

EstimateReport check_reaction_l1(const Trajectory& traj, double u0_l1) {
  require_nonempty(traj);
  const double omega = traj.grid().measure();
  const double T = traj.final_time();
  const double bound = 2.0 * omega * T + 1.0 + u0_l1;
  const auto& I = traj.integrals;
  EstimateReport rep;
  rep.records.push_back(relative_bound("reaction_u_l1", I.abs_reaction_u, bound));
  rep.records.push_back(relative_bound("reaction_v_l1", I.abs_reaction_v, bound,
                                       "same bound with theta = 2"));
  auto split = [&](const char* name, double abs, double pos, double signed_value) {
    const double gap = std::abs(abs - (2.0 * pos - signed_value));
    return make_record(name, gap, 0.0, 1e-12 * std::max(1.0, abs), "|f| - (2 f+ - f)");
  };
  rep.records.push_back(
      split("sign_split_identity_u", I.abs_reaction_u, I.pos_reaction_u, I.reaction_u));
  rep.records.push_back(
      split("sign_split_identity_v", I.abs_reaction_v, I.pos_reaction_v, I.reaction_v));
  return rep;
}

EstimateRecord epsilon_uniformity(const std::string& name, const std::vector<double>& values,
                                  double band) {
  if (values.size() < 2)
    throw std::invalid_argument(name + ": eps-uniformity needs at least two levels");
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < values.size(); ++j) {
    const double a = values[j], b = values[j + 1];
    double ratio;
    if (a == 0.0)
      ratio = b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    else
      ratio = b / a;
    worst = std::max(worst, ratio);
  }
  return make_record(name, worst, 1.0 + band, 0.0, "largest successive ratio");
}

void validate_family(const TrajectoryFamily& family) {
  if (family.size() < 2) throw std::invalid_argument("eps family needs at least two levels");
  for (std::size_t j = 0; j < family.size(); ++j) {
    const auto& [eps, traj] = family[j];
    if (!traj) throw std::invalid_argument("eps family: missing trajectory");
    require_nonempty(*traj);
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps family: eps must lie in (0,1)");
    if (j > 0) {
      if (!(eps < family[j - 1].first))
        throw std::invalid_argument("eps family: eps must be strictly decreasing");
      if (!(traj->grid() == family[0].second->grid()))
        throw std::invalid_argument("eps family: grids differ");
      if (traj->final_time() != family[0].second->final_time())
        throw std::invalid_argument("eps family: final times differ");
    }
  }
}

EstimateReport check_dissipation_bounds(const TrajectoryFamily& family) {
  validate_family(family);
  const double scale = 1.0 + family.front().second->final_time();
  std::vector<double> log_v, grad_w, v_grad_w;
  for (const auto& [eps, traj] : family) {
    log_v.push_back(traj->integrals.grad_log_v_squared / scale);
    grad_w.push_back(traj->integrals.grad_w_squared / scale);
    v_grad_w.push_back(traj->integrals.v_grad_w_squared / scale);
  }
  EstimateReport rep;
  rep.records.push_back(epsilon_uniformity("uniformity_grad_log_v", log_v));
  rep.records.push_back(epsilon_uniformity("uniformity_grad_w", grad_w));
  rep.records.push_back(epsilon_uniformity("uniformity_v_grad_w", v_grad_w));
  return rep;
}

double sup_w_lp(const Trajectory& traj, double p) {
  require_nonempty(traj);
  double sup = 0.0;
  for (const auto& s : traj.snapshots) sup = std::max(sup, lp_norm(s.w, p));
  return sup;
}

EstimateReport check_w_lp(const TrajectoryFamily& family, double p) {
  validate_family(family);
  const ModelParams& params = family.front().second->params;
  const double p_max = admissible_w_p(params.theta, params.dim_N);  // throws below threshold
  if (!(p >= 1.0 && p <= p_max))
    throw std::invalid_argument("check_w_lp: p must lie in [1, " + std::to_string(p_max) + "]");
  std::vector<double> values;
  for (const auto& [eps, traj] : family) values.push_back(sup_w_lp(*traj, p));
  EstimateReport rep;
  rep.records.push_back(epsilon_uniformity("uniformity_w_lp", values));
  return rep;
}

double uniform_integrability_delta(double eta, double T, double theta, double m1, double u0_l1) {
  if (!(eta > 0.0)) throw std::invalid_argument("uniform_integrability_delta: eta must be positive");
  if (!(theta > 1.0)) throw std::invalid_argument("uniform_integrability_delta: theta must exceed 1");
  if (!(T >= 0.0) || !(m1 >= 0.0) || !(u0_l1 >= 0.0))
    throw std::invalid_argument("uniform_integrability_delta: T, m1, ||u0||_1 must be nonnegative");
  const double denom = m1 * T + 1.0 + u0_l1;
  return std::pow(std::pow(eta, theta) / denom, 1.0 / (theta - 1.0));
}

UniformIntegrabilityProbe probe_uniform_integrability(const Trajectory& traj, double eta,
                                                      double delta, int trials,
                                                      std::uint64_t seed) {
  require_nonempty(traj);
  if (!(eta > 0.0) || !(delta > 0.0))
    throw std::invalid_argument("probe_uniform_integrability: eta and delta must be positive");
  if (trials < 0) throw std::invalid_argument("probe_uniform_integrability: trials < 0");
  const double theta = traj.params.theta;

  UniformIntegrabilityProbe out;
  out.eta = eta;
  out.delta = delta;
  out.trials = trials;
  out.seed = seed;
  out.holder_bound =
      std::pow(traj.integrals.u_theta, 1.0 / theta) * std::pow(delta, (theta - 1.0) / theta);
  out.holder_pass = out.holder_bound <= eta;

  // Space-time cells: snapshot interval [t_n, t_{n+1}) times a grid cell, with
  // u taken from the left snapshot.
  const Grid& grid = traj.grid();
  const Eigen::Index ncell = grid.size();
  std::vector<double> value, measure;
  for (std::size_t n = 0; n + 1 < traj.snapshots.size(); ++n) {
    const double m = grid.cell_volume() * (traj.snapshots[n + 1].time - traj.snapshots[n].time);
    const auto& u = traj.snapshots[n].u.values();
    for (Eigen::Index c = 0; c < ncell; ++c) {
      value.push_back(u(c));
      measure.push_back(m);
    }
  }
  const std::size_t total = value.size();
  if (total == 0 || trials == 0) return out;

  // Discrete Hoelder on this partition is exact for any union of cells.
  double a_theta = 0.0;
  for (std::size_t i = 0; i < total; ++i) a_theta += pow_abs(value[i], theta) * measure[i];
  const double a_root = std::pow(a_theta, 1.0 / theta);

  std::vector<std::size_t> ranked(total);
  std::iota(ranked.begin(), ranked.end(), std::size_t{0});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return value[a] > value[b]; });

  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t bound) {
    return std::min(bound - 1, static_cast<std::size_t>(uniform01(rng) * double(bound)));
  };
  std::vector<char> used(total, 0);
  for (int trial = 0; trial < trials; ++trial) {
    const double target = delta * (0.05 + 0.95 * uniform01(rng));
    double integral = 0.0, mass = 0.0;
    std::vector<std::size_t> chosen;
    auto try_add = [&](std::size_t i) {
      if (used[i] || mass + measure[i] >= target) return false;
      used[i] = 1;
      chosen.push_back(i);
      mass += measure[i];
      integral += value[i] * measure[i];
      return true;
    };
    switch (trial % 3) {
      case 0: {  // uniform random cells
        int misses = 0;
        while (misses < 64) {
          if (!try_add(pick(total))) ++misses;
        }
        break;
      }
      case 1: {  // a window of the ranking
        for (std::size_t r = pick(total); r < total; ++r)
          if (!try_add(ranked[r])) break;
        break;
      }
      default: {  // the largest values
        for (std::size_t r = 0; r < total; ++r)
          if (!try_add(ranked[r])) break;
        break;
      }
    }
    for (std::size_t i : chosen) used[i] = 0;
    if (integral >= eta) ++out.violations;
    if (integral > a_root * std::pow(mass, (theta - 1.0) / theta) * (1.0 + 1e-12))
      ++out.holder_sample_violations;
    if (integral > out.max_integral) {
      out.max_integral = integral;
      out.max_integral_measure = mass;
    }
  }
  return out;
}

EntropyDissipationIntegrals entropy_dissipation_integrals(const Trajectory& traj, const TestWeights& weights) {
  require_nonempty(traj);
  weights.validate();
  const Grid& grid = traj.grid();
  EntropyDissipationIntegrals out;
  double prev_a = 0.0, prev_b = 0.0, prev_t = 0.0;
  for (std::size_t n = 0; n < traj.snapshots.size(); ++n) {
    const State& s = traj.snapshots[n];
    const Eigen::ArrayXd z = z_field(s.u, s.w, weights.p, weights.k).values();
    const Eigen::ArrayXXd gzh = gradient(grid, z.sqrt().eval());
    const Eigen::ArrayXXd gw = gradient(s.w);
    const double a = integrate(grid, gzh.square().rowwise().sum());
    const double b = integrate(grid, z * gw.square().rowwise().sum());
    if (n > 0) {
      const double dt = s.time - prev_t;
      out.grad_sqrt_z += 0.5 * (prev_a + a) * dt;
      out.z_grad_w += 0.5 * (prev_b + b) * dt;
      out.max_time_step = std::max(out.max_time_step, dt);
    }
    prev_a = a;
    prev_b = b;
    prev_t = s.time;
  }
  return out;
}

EstimateReport check_entropy_dissipation_bounds(const TrajectoryFamily& family, const TestWeights& weights) {
  weights.validate();
  validate_family(family);
  const double scale = 1.0 + family.front().second->final_time();
  std::vector<double> a, b;
  double step = 0.0;
  for (const auto& [eps, traj] : family) {
    const EntropyDissipationIntegrals li = entropy_dissipation_integrals(*traj, weights);
    a.push_back(li.grad_sqrt_z / scale);
    b.push_back(li.z_grad_w / scale);
    step = std::max(step, li.max_time_step);
  }
  EstimateReport rep;
  const double c = weights.dissipation_constant();
  EstimateRecord positivity = make_record("entropy_dissipation_constant", 0.0, c, 0.0,
                                          "slack is (4k^2 - p(p+1)^2)/(4(p+1))");
  positivity.pass = c > 0.0;
  rep.records.push_back(positivity);
  const std::string note = "time quadrature step " + std::to_string(step);
  EstimateRecord ra = epsilon_uniformity("uniformity_grad_sqrt_z", a);
  ra.note = note;
  EstimateRecord rb = epsilon_uniformity("uniformity_z_grad_w", b);
  rb.note = note;
  rep.records.push_back(ra);
  rep.records.push_back(rb);
  return rep;
}

}  // namespace chemo
