#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chemo/identities.hpp"
#include "chemo/model.hpp"
#include "chemo/solver.hpp"

namespace chemo {

/// One checked quantity. pass <=> slack >= -tolerance, slack = bound - value.
struct EstimateRecord {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool has_bound = true;  // false for purely informational rows
  double slack = 0.0;
  double tolerance = 0.0;
  bool pass = true;
  std::string note;
};

/// Fills slack and pass from value, bound and tolerance.
EstimateRecord make_record(std::string name, double value, double bound, double tolerance,
                           std::string note = {});
/// A row that only reports a value; it always passes.
EstimateRecord info_record(std::string name, double value, std::string note = {});

struct EstimateReport {
  std::vector<EstimateRecord> records;

  bool all_pass() const;
  void append(const EstimateReport& other);
  /// Throws std::out_of_range if absent.
  const EstimateRecord& find(const std::string& name) const;
};

/// Relative tolerance applied to the closed-form bounds.
inline constexpr double kBoundRelativeTolerance = 1e-3;
/// Allowed growth of a successive ratio in the eps-uniformity bands.
inline constexpr double kUniformityBand = 0.05;

/// sup_t int u against m1_bound and sup_t int v against m2_bound.
EstimateReport check_mass_bounds(const Trajectory& traj, double u0_l1, double v0_l1);

/// Accumulated int int u^theta and int int v^2 against m_i T + 1 + ||.||_1.
EstimateReport check_spacetime_bounds(const Trajectory& traj, double u0_l1, double v0_l1);

/// int int |reaction| against 2|Omega|T + 1 + ||u0||_1 for both species, and
/// the identity |f| = 2 f^+ - f on the accumulated integrals (to 1e-12 relative).
EstimateReport check_reaction_l1(const Trajectory& traj, double u0_l1);

/// Largest ratio of successive values along a decreasing eps ladder; passes
/// when no ratio exceeds 1 + band. Zero followed by zero counts as ratio 1.
EstimateRecord epsilon_uniformity(const std::string& name, const std::vector<double>& values,
                                  double band = kUniformityBand);

/// Ladder of trajectories sharing grid and horizon, ordered by decreasing eps.
using TrajectoryFamily = std::vector<std::pair<double, const Trajectory*>>;

/// Throws unless the family has at least two levels with strictly decreasing
/// eps in (0, 1) and a common grid and final time.
void validate_family(const TrajectoryFamily& family);

/// eps-uniformity of int int |grad ln(1+v)|^2, int int |grad w|^2 and
/// int int v^2/(1+v)^2 |grad w|^2, each divided by (1 + T).
EstimateReport check_dissipation_bounds(const TrajectoryFamily& family);

/// sup over snapshots of ||w||_p.
double sup_w_lp(const Trajectory& traj, double p);

/// eps-uniformity of sup_t ||w||_p. Throws unless theta exceeds the threshold
/// and p <= admissible_w_p.
EstimateReport check_w_lp(const TrajectoryFamily& family, double p);

/// (eta^theta / (m1 T + 1 + ||u0||_1))^(1/(theta-1)).
double uniform_integrability_delta(double eta, double T, double theta, double m1, double u0_l1);

struct UniformIntegrabilityProbe {
  double eta = 0.0;
  double delta = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
  int violations = 0;
  /// Largest int int_E u seen, and the measure of that E.
  double max_integral = 0.0;
  double max_integral_measure = 0.0;
  /// Sampled subsets whose integral exceeded the discrete Hoelder bound.
  int holder_sample_violations = 0;
  /// (int int u^theta)^(1/theta) delta^((theta-1)/theta) from the accumulator.
  double holder_bound = 0.0;
  bool holder_pass = false;

  bool pass() const { return violations == 0 && holder_sample_violations == 0 && holder_pass; }
};

/// Samples `trials` unions of space-time cells (snapshot intervals times grid
/// cells) of measure < delta and checks int int_E u < eta. Subsets cycle
/// through uniform random cells, random windows of the cells ranked by u, and
/// the top-ranked cells. The Hoelder bound from the accumulated int int u^theta
/// is asserted independently of the samples.
UniformIntegrabilityProbe probe_uniform_integrability(const Trajectory& traj, double eta,
                                                      double delta, int trials,
                                                      std::uint64_t seed);

/// Post-hoc trapezoid integrals over snapshots.
struct EntropyDissipationIntegrals {
  double grad_sqrt_z = 0.0;  // int int |grad (u+1)^(-p/2) e^(-kw/2)|^2
  double z_grad_w = 0.0;     // int int (u+1)^(-p) e^(-kw) |grad w|^2
  double max_time_step = 0.0;
};

EntropyDissipationIntegrals entropy_dissipation_integrals(const Trajectory& traj, const TestWeights& weights);

/// eps-uniformity of both integrals divided by (1 + T) and the positivity of
/// the dissipation constant. Throws for inadmissible weights.
EstimateReport check_entropy_dissipation_bounds(const TrajectoryFamily& family, const TestWeights& weights);

}  // namespace chemo
