#include <gtest/gtest.h>

#include <cmath>

#include "chemo/estimates.hpp"

using namespace chemo;

namespace {

State constant_state(const Grid& g, double u, double v, double w) {
  return State{Field(g, u), Field(g, v), Field(g, w), 0.0};
}

Trajectory run(const State& s0, const ModelParams& params, double T, double max_dt = 0.01,
               int stride = 5) {
  SolverConfig cfg;
  cfg.max_dt = max_dt;
  SimulateOptions opt;
  opt.frame_stride = stride;
  return simulate(s0, params, cfg, T, opt);
}

State bump_state(const Grid& g) {
  auto bump = [&](double m, double cx, double cy) {
    return Field::sample(g, [=](double x, double y) {
      return m * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / 0.02);
    });
  };
  return State{bump(4.0, 0.4, 0.4), bump(2.0, 0.6, 0.6), Field(g, 0.1), 0.0};
}

}  // namespace

TEST(Records, MakeAndInfo) {
  const EstimateRecord r = make_record("x", 2.0, 1.5, 0.1);
  EXPECT_DOUBLE_EQ(r.slack, -0.5);
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(make_record("y", 1.55, 1.5, 0.1).pass);
  const EstimateRecord i = info_record("z", 42.0, "note");
  EXPECT_FALSE(i.has_bound);
  EXPECT_TRUE(i.pass);
  EstimateReport rep;
  rep.records = {r, i};
  EXPECT_FALSE(rep.all_pass());
  EXPECT_EQ(rep.find("z").value, 42.0);
  EXPECT_THROW(rep.find("missing"), std::out_of_range);
}

TEST(Bounds, ZeroDataPassesEverything) {
  Grid g(8, 8, 1.0, 1.0);
  const Trajectory t = run(constant_state(g, 0, 0, 0), ModelParams{2.0, 0.25, 2}, 1.0);
  EstimateReport rep = check_mass_bounds(t, 0.0, 0.0);
  rep.append(check_spacetime_bounds(t, 0.0, 0.0));
  rep.append(check_reaction_l1(t, 0.0));
  EXPECT_TRUE(rep.all_pass());
  EXPECT_EQ(rep.find("mass_u_sup").value, 0.0);
  EXPECT_EQ(rep.find("reaction_u_l1").value, 0.0);
}

TEST(Bounds, ConstantHalfArithmetic) {
  Grid g(8, 8, 1.0, 1.0);
  const Trajectory t = run(constant_state(g, 0.5, 0.5, 0.5), ModelParams{2.0, 0.0, 2}, 2.0);
  const EstimateReport mass = check_mass_bounds(t, 0.5, 0.5);
  EXPECT_NEAR(mass.find("mass_u_sup").value, 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(mass.find("mass_u_sup").bound, 1.5);
  EXPECT_TRUE(mass.all_pass());
  const EstimateReport st = check_spacetime_bounds(t, 0.5, 0.5);
  EXPECT_NEAR(st.find("spacetime_u_theta").value, 0.5, 1e-10);
  EXPECT_DOUBLE_EQ(st.find("spacetime_u_theta").bound, 4.5);
  EXPECT_TRUE(st.all_pass());
}

TEST(Bounds, CarryingCapacityHasNoReaction) {
  Grid g(6, 6, 1.0, 1.0);
  const Trajectory t = run(constant_state(g, 1.0, 0.0, 0.2), ModelParams{2.0, 0.0, 2}, 1.0);
  const EstimateReport rep = check_reaction_l1(t, 1.0);
  EXPECT_NEAR(rep.find("reaction_u_l1").value, 0.0, 1e-14);
  EXPECT_TRUE(rep.all_pass());
}

TEST(Bounds, LargeInitialMassDecaysBelowM1) {
  Grid g(16, 16, 1.0, 1.0);
  const Trajectory t = run(constant_state(g, 5.0, 0.0, 0.0), ModelParams{2.0, 0.0, 2}, 2.0, 0.002);
  const EstimateReport rep = check_mass_bounds(t, 5.0, 0.0);
  EXPECT_DOUBLE_EQ(rep.find("mass_u_sup").bound, 6.0);
  EXPECT_TRUE(rep.all_pass());
  EXPECT_LT(integrate(t.snapshots.back().u), 5.0);
}

TEST(Bounds, NonuniformRunPassesWithSignSplitIdentity) {
  Grid g(24, 24, 1.0, 1.0);
  const State s0 = bump_state(g);
  const Trajectory t = run(s0, ModelParams{1.6, 0.125, 2}, 0.5, 0.005);
  const double u0 = integrate(s0.u), v0 = integrate(s0.v);
  EstimateReport rep = check_mass_bounds(t, u0, v0);
  rep.append(check_spacetime_bounds(t, u0, v0));
  rep.append(check_reaction_l1(t, u0));
  for (const auto& r : rep.records) EXPECT_TRUE(r.pass) << r.name << " " << r.value << " " << r.bound;
  EXPECT_GT(t.integrals.abs_reaction_u, 0.0);
}

TEST(Uniformity, Ratios) {
  EXPECT_TRUE(epsilon_uniformity("a", {1.0, 1.0, 1.04}).pass);
  EXPECT_FALSE(epsilon_uniformity("a", {1.0, 1.06}).pass);
  EXPECT_TRUE(epsilon_uniformity("a", {2.0, 1.0, 0.5}).pass);
  EXPECT_DOUBLE_EQ(epsilon_uniformity("a", {2.0, 1.0, 0.5}).value, 0.5);
  EXPECT_TRUE(epsilon_uniformity("zeros", {0.0, 0.0, 0.0}).pass);
  EXPECT_FALSE(epsilon_uniformity("from_zero", {0.0, 1e-20}).pass);
  EXPECT_THROW(epsilon_uniformity("one", {1.0}), std::invalid_argument);
}

TEST(Family, Validation) {
  Grid g(6, 6, 1.0, 1.0);
  const Trajectory a = run(constant_state(g, 0, 0, 0), ModelParams{2.0, 0.5, 2}, 0.1);
  const Trajectory b = run(constant_state(g, 0, 0, 0), ModelParams{2.0, 0.25, 2}, 0.1);
  const Trajectory c = run(constant_state(g, 0, 0, 0), ModelParams{2.0, 0.25, 2}, 0.2);
  const Trajectory d = run(constant_state(Grid(8, 8, 1.0, 1.0), 0, 0, 0), ModelParams{2.0, 0.25, 2}, 0.1);
  EXPECT_NO_THROW(validate_family({{0.5, &a}, {0.25, &b}}));
  EXPECT_THROW(validate_family({{0.5, &a}}), std::invalid_argument);
  EXPECT_THROW(validate_family({{0.25, &b}, {0.5, &a}}), std::invalid_argument);
  EXPECT_THROW(validate_family({{0.5, &a}, {0.25, nullptr}}), std::invalid_argument);
  EXPECT_THROW(validate_family({{0.5, &a}, {0.25, &c}}), std::invalid_argument);
  EXPECT_THROW(validate_family({{0.5, &a}, {0.25, &d}}), std::invalid_argument);
  EXPECT_THROW(validate_family({{1.0, &a}, {0.25, &b}}), std::invalid_argument);
}

TEST(Family, ZeroAndConstantDataAreUniform) {
  Grid g(8, 8, 1.0, 1.0);
  std::vector<Trajectory> zeros, halves;
  const std::vector<double> eps{0.5, 0.25, 0.125};
  for (double e : eps) {
    zeros.push_back(run(constant_state(g, 0, 0, 0), ModelParams{2.0, e, 2}, 0.5));
    halves.push_back(run(constant_state(g, 0.5, 0.5, 0.1), ModelParams{2.0, e, 2}, 0.5));
  }
  TrajectoryFamily fz, fh;
  for (std::size_t j = 0; j < eps.size(); ++j) {
    fz.push_back({eps[j], &zeros[j]});
    fh.push_back({eps[j], &halves[j]});
  }
  for (const auto* f : {&fz, &fh}) {
    EstimateReport rep = check_dissipation_bounds(*f);
    rep.append(check_entropy_dissipation_bounds(*f, {1.0, 2.0}));
    for (const auto& r : rep.records) EXPECT_TRUE(r.pass) << r.name;
  }
  EXPECT_TRUE(check_w_lp(fz, 2.0).all_pass());
  EXPECT_EQ(sup_w_lp(zeros[0], 2.0), 0.0);
  // Constant data: w solves w' = -w + 1/(1+eps), so sup ||w||_2 is at most max(w0, 1/(1+eps)).
  for (std::size_t j = 0; j < eps.size(); ++j)
    EXPECT_LE(sup_w_lp(halves[j], 2.0), std::max(0.1, 1.0 / (1.0 + eps[j])) + 1e-12);
  EXPECT_THROW(check_w_lp(fz, 3.0), std::invalid_argument);
  EXPECT_THROW(check_entropy_dissipation_bounds(fz, {1.0, 1.0}), std::invalid_argument);
}

TEST(EntropyDissipation, ConstantAndThreshold) {
  Grid g(8, 8, 1.0, 1.0);
  std::vector<Trajectory> t;
  for (double e : {0.5, 0.25}) t.push_back(run(constant_state(g, 0, 0, 0), ModelParams{2.0, e, 2}, 0.2));
  const EstimateReport rep = check_entropy_dissipation_bounds({{0.5, &t[0]}, {0.25, &t[1]}}, {1.0, 2.0});
  EXPECT_DOUBLE_EQ(rep.find("entropy_dissipation_constant").bound, 1.5);
  EXPECT_TRUE(rep.all_pass());
  const EntropyDissipationIntegrals li = entropy_dissipation_integrals(t[0], {1.0, 2.0});
  EXPECT_EQ(li.grad_sqrt_z, 0.0);
  EXPECT_EQ(li.z_grad_w, 0.0);
  EXPECT_GT(li.max_time_step, 0.0);
}

TEST(UniformIntegrability, DeltaFormula) {
  // m1 T + 1 + ||u0||_1 = 4 with m1 = 1.5, T = 2, ||u0||_1 = 0.
  EXPECT_DOUBLE_EQ(uniform_integrability_delta(1.0, 2.0, 2.0, 1.5, 0.0), 0.25);
  // Denominator 4.5 = 1 * 3 + 1 + 0.5.
  EXPECT_NEAR(uniform_integrability_delta(0.5, 3.0, 1.5, 1.0, 0.5),
              std::pow(std::pow(0.5, 1.5) / 4.5, 2.0), 1e-16);
  EXPECT_NEAR(uniform_integrability_delta(0.5, 3.0, 1.5, 1.0, 0.5), 0.006173, 1e-6);
  double prev = 1.0;
  for (double eta : {0.5, 0.1, 0.01, 1e-4}) {
    const double d = uniform_integrability_delta(eta, 2.0, 2.0, 1.5, 0.0);
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_THROW(uniform_integrability_delta(0.0, 1.0, 2.0, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(uniform_integrability_delta(1.0, 1.0, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(UniformIntegrability, ZeroFieldAndEmptyProbe) {
  Grid g(8, 8, 1.0, 1.0);
  const Trajectory t = run(constant_state(g, 0, 0, 0), ModelParams{}, 0.5);
  const UniformIntegrabilityProbe p = probe_uniform_integrability(t, 0.25, 0.1, 50, 3);
  EXPECT_TRUE(p.pass());
  EXPECT_EQ(p.max_integral, 0.0);
  const UniformIntegrabilityProbe none = probe_uniform_integrability(t, 0.25, 0.1, 0, 3);
  EXPECT_TRUE(none.pass());
  EXPECT_THROW(probe_uniform_integrability(t, 0.0, 0.1, 5, 1), std::invalid_argument);
}

TEST(UniformIntegrability, NonuniformRunRespectsHolder) {
  Grid g(24, 24, 1.0, 1.0);
  const State s0 = bump_state(g);
  const Trajectory t = run(s0, ModelParams{2.0, 0.25, 2}, 1.0, 0.005);
  const double u0 = integrate(s0.u);
  const double m1 = m1_bound(u0, 2.0, 1.0);
  for (double eta : {0.25, 1.0}) {
    const double delta = uniform_integrability_delta(eta, 1.0, 2.0, m1, u0);
    const UniformIntegrabilityProbe p = probe_uniform_integrability(t, eta, delta, 200, 7);
    EXPECT_TRUE(p.pass()) << eta;
    EXPECT_EQ(p.trials, 200);
    EXPECT_LT(p.max_integral_measure, delta);
    EXPECT_LE(p.holder_bound, eta);
    EXPECT_LE(p.max_integral, p.holder_bound * (1 + 1e-12));
  }
  const auto a = probe_uniform_integrability(t, 0.25, 0.01, 40, 9);
  const auto b = probe_uniform_integrability(t, 0.25, 0.01, 40, 9);
  EXPECT_EQ(a.max_integral, b.max_integral);
}
