#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "chemo/grid.hpp"
#include "chemo/model.hpp"

namespace chemo {

struct SolverConfig {
  double cfl_safety = 0.5;
  double max_dt = 2e-3;
  double linear_solver_tol = 1e-12;
  int linear_solver_max_iter = 1000;

  void validate() const;
};

/// A value below the clamping window, i.e. a genuine loss of positivity.
class SchemeViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Values in [-kClampWindow, 0) are round-off and are set to zero.
inline constexpr double kClampWindow = 1e-13;

/// Space-time integrals accumulated by the rectangle rule while stepping.
/// State integrands use the state at the start of each step; reaction
/// integrands use the post-advection values the step actually applied.
struct SpaceTimeIntegrals {
  double u_theta = 0.0;           // int int u^theta
  double v_squared = 0.0;         // int int v^2
  double grad_w_squared = 0.0;    // int int |grad w|^2
  double grad_log_v_squared = 0.0;  // int int |grad ln(1+v)|^2
  double v_grad_w_squared = 0.0;  // int int v^2/(1+v)^2 |grad w|^2
  double abs_reaction_u = 0.0;    // int int |u(1 - u^(theta-1) - v)|
  double abs_reaction_v = 0.0;    // int int |v(1 - v - u)|
  double pos_reaction_u = 0.0;    // int int (reaction_u)^+
  double pos_reaction_v = 0.0;
  double reaction_u = 0.0;        // signed
  double reaction_v = 0.0;
};

struct DiagnosticRow {
  long step = 0;
  double time = 0.0;
  double dt = 0.0;
  double mass_u = 0.0;
  double mass_v = 0.0;
  double mass_w = 0.0;
  double u_theta = 0.0;  // ||u||_theta^theta
  double v_l2_squared = 0.0;
  double grad_w_l2_squared = 0.0;
  double min_u = 0.0, max_u = 0.0;
  double min_v = 0.0, max_v = 0.0;
  double min_w = 0.0, max_w = 0.0;
  long linear_iterations = 0;
};

/// Time-indexed snapshots of one run plus its accumulated integrals.
struct Trajectory {
  ModelParams params;
  std::vector<State> snapshots;
  std::vector<SpaceTimeIntegrals> integrals_at_snapshot;
  SpaceTimeIntegrals integrals;
  std::vector<DiagnosticRow> diagnostics;
  long steps = 0;
  double max_step = 0.0;
  /// Smallest value seen in u, v or w before clamping.
  double min_raw_value = 0.0;
  long clamped_values = 0;

  const Grid& grid() const { return snapshots.front().grid(); }
  double final_time() const { return snapshots.back().time; }
};

/// Cellwise terms produced while advancing one step.
struct StepOutcome {
  State next;
  Eigen::ArrayXd reaction_u;  // evaluated on post-advection u, v
  Eigen::ArrayXd reaction_v;
  Eigen::ArrayXd source_w;
  long linear_iterations = 0;
  double min_raw_value = 0.0;
  long clamped_values = 0;
};

/// Reusable IMEX stepper: explicit upwind transport, explicit reaction,
/// backward-Euler diffusion. Caches the Laplacian of its grid.
class Stepper {
 public:
  Stepper(const Grid& grid, const ModelParams& params, const SolverConfig& cfg);

  double stable_dt(const State& state) const;
  StepOutcome advance(const State& state, double dt);

  const ModelParams& params() const { return params_; }
  const SolverConfig& config() const { return cfg_; }

 private:
  Grid grid_;
  ModelParams params_;
  SolverConfig cfg_;
  ImplicitDiffusion diffusion_;
};

double stable_dt(const State& state, const ModelParams& params, const SolverConfig& cfg);
State step(const State& state, const ModelParams& params, const SolverConfig& cfg, double dt);

struct SimulateOptions {
  /// Snapshot times in [0, T]; 0 and T are always included. Steps are
  /// shortened so that every requested time is hit exactly.
  std::vector<double> output_times;
  /// Also keep a snapshot every `frame_stride` steps (0 disables).
  int frame_stride = 0;
  /// Called with every state, starting with the initial one.
  std::function<void(const State&)> observer;
  bool record_diagnostics = true;
};

Trajectory simulate(const State& initial, const ModelParams& params, const SolverConfig& cfg,
                    double T, const SimulateOptions& options = {});

/// Per-state diagnostics row (dt and step left for the caller).
DiagnosticRow diagnose(const State& state, double theta);

}  // namespace chemo
