#include "chemo/solver.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace chemo {

void SolverConfig::validate() const {
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
    throw std::invalid_argument("solver.cfl_safety must lie in (0, 1]");
  if (!(max_dt > 0.0)) throw std::invalid_argument("solver.max_dt must be positive");
  if (!(linear_solver_tol > 0.0))
    throw std::invalid_argument("solver.linear_solver_tol must be positive");
  if (linear_solver_max_iter < 1)
    throw std::invalid_argument("solver.linear_solver_max_iter must be positive");
}

namespace {

// First-order upwind transport of `density` along the drift grad w, given
// as face gradients. Fluxes cancel pairwise, so the update is conservative.
Eigen::ArrayXd advect(const Grid& grid, const Eigen::ArrayXd& density,
                      const Eigen::ArrayXXd& face_grad_w, double dt) {
  Eigen::ArrayXd change = Eigen::ArrayXd::Zero(density.size());
  const int nx = grid.cells(0);
  const int ny = grid.cells(1);
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const Eigen::Index offset = axis == 0 ? 1 : nx;
    const double inv_h = 1.0 / grid.spacing(axis);
    const int last_i = axis == 0 ? nx - 1 : nx;
    const int last_j = axis == 0 ? ny : ny - 1;
    for (int j = 0; j < last_j; ++j)
      for (int i = 0; i < last_i; ++i) {
        const Eigen::Index k = grid.index(i, j);
        const double g = face_grad_w(k, axis);
        if (g == 0.0) continue;
        const double flux = g * (g > 0.0 ? density(k) : density(k + offset)) * inv_h;
        change(k) -= flux;
        change(k + offset) += flux;
      }
  }
  return density + dt * change;
}

void enforce_nonnegative(Eigen::ArrayXd& values, const char* name, double time,
                         double& min_raw, long& clamped) {
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    const double x = values(k);
    min_raw = std::min(min_raw, x);
    if (x >= 0.0) continue;
    if (x < -kClampWindow || !std::isfinite(x)) {
      std::ostringstream msg;
      msg << "positivity lost in " << name << " at cell " << k << ", t = " << time
          << ": value " << x;
      throw SchemeViolation(msg.str());
    }
    values(k) = 0.0;
    ++clamped;
  }
}

// Integral of v^2/(1+v)^2 |grad w|^2 with the weight averaged onto faces.
double weighted_dirichlet(const Grid& grid, const Eigen::ArrayXd& v, const Eigen::ArrayXXd& gw) {
  const Eigen::ArrayXd q = v / (1.0 + v);
  const int nx = grid.cells(0);
  double sum = 0.0;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const Eigen::Index offset = axis == 0 ? 1 : nx;
    for (int j = 0; j < grid.cells(1); ++j)
      for (int i = 0; i < nx; ++i) {
        const Eigen::Index k = grid.index(i, j);
        const bool interior = axis == 0 ? i + 1 < nx : j + 1 < grid.cells(1);
        if (!interior) continue;
        const double qf = 0.5 * (q(k) + q(k + offset));
        sum += qf * qf * gw(k, axis) * gw(k, axis);
      }
  }
  return sum * grid.cell_volume();
}

void require_finite(const SpaceTimeIntegrals& acc, const State& s, long step) {
  const double all[] = {acc.u_theta, acc.v_squared, acc.grad_w_squared,
                        acc.grad_log_v_squared, acc.v_grad_w_squared, acc.abs_reaction_u,
                        acc.abs_reaction_v, acc.reaction_u, acc.reaction_v};
  for (double x : all) {
    if (std::isfinite(x)) continue;
    std::ostringstream msg;
    msg << "non-finite space-time accumulator at step " << step << ", t = " << s.time
        << "; max u = " << s.u.values().maxCoeff() << ", max v = " << s.v.values().maxCoeff()
        << ", max w = " << s.w.values().maxCoeff();
    throw std::runtime_error(msg.str());
  }
}

}  // namespace

Stepper::Stepper(const Grid& grid, const ModelParams& params, const SolverConfig& cfg)
    : grid_(grid),
      params_(params),
      cfg_(cfg),
      diffusion_(grid, cfg.linear_solver_tol, cfg.linear_solver_max_iter) {
  params_.validate();
  cfg_.validate();
}

double Stepper::stable_dt(const State& state) const {
  if (state.u.size() == 0) throw std::invalid_argument("stable_dt: empty state");
  const Eigen::ArrayXXd g = face_gradient(grid_, state.w.values());
  const double max_g = g.abs().maxCoeff();
  const double transport = max_g > 0.0
                               ? grid_.min_spacing() / (2.0 * grid_.dim() * max_g)
                               : std::numeric_limits<double>::infinity();
  const double max_u = state.u.values().maxCoeff();
  const double max_v = state.v.values().maxCoeff();
  const double lipschitz = 1.0 + params_.theta * pow_abs(max_u, params_.theta - 1.0) + max_u +
                           2.0 * max_v;
  return cfg_.cfl_safety * std::min({transport, 1.0 / lipschitz, cfg_.max_dt});
}

StepOutcome Stepper::advance(const State& state, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const double t_new = state.time + dt;
  StepOutcome out{state, {}, {}, {}, 0, std::numeric_limits<double>::infinity(), 0};

  const Eigen::ArrayXXd gw = face_gradient(grid_, state.w.values());
  Eigen::ArrayXd ua = advect(grid_, state.u.values(), gw, dt);
  Eigen::ArrayXd va = advect(grid_, state.v.values(), gw, dt);
  enforce_nonnegative(ua, "u (transport)", t_new, out.min_raw_value, out.clamped_values);
  enforce_nonnegative(va, "v (transport)", t_new, out.min_raw_value, out.clamped_values);

  const double theta = params_.theta;
  const double eps = params_.eps;
  out.reaction_u = ua.binaryExpr(va, [theta](double a, double b) { return reaction_u(a, b, theta); });
  out.reaction_v = ua.binaryExpr(va, [](double a, double b) { return reaction_v(a, b); });
  out.source_w = ua.binaryExpr(va, [eps](double a, double b) { return source_w(a, b, eps); });

  Eigen::ArrayXd ur = ua + dt * out.reaction_u;
  Eigen::ArrayXd vr = va + dt * out.reaction_v;
  Eigen::ArrayXd wr = state.w.values() + dt * (out.source_w - state.w.values());
  enforce_nonnegative(ur, "u (reaction)", t_new, out.min_raw_value, out.clamped_values);
  enforce_nonnegative(vr, "v (reaction)", t_new, out.min_raw_value, out.clamped_values);
  enforce_nonnegative(wr, "w (reaction)", t_new, out.min_raw_value, out.clamped_values);

  Eigen::ArrayXd un = diffusion_.solve(ur, dt);
  out.linear_iterations += diffusion_.last_iterations();
  Eigen::ArrayXd vn = diffusion_.solve(vr, dt);
  out.linear_iterations += diffusion_.last_iterations();
  Eigen::ArrayXd wn = diffusion_.solve(wr, dt);
  out.linear_iterations += diffusion_.last_iterations();
  enforce_nonnegative(un, "u", t_new, out.min_raw_value, out.clamped_values);
  enforce_nonnegative(vn, "v", t_new, out.min_raw_value, out.clamped_values);
  enforce_nonnegative(wn, "w", t_new, out.min_raw_value, out.clamped_values);

  out.next = State{Field(grid_, std::move(un)), Field(grid_, std::move(vn)),
                   Field(grid_, std::move(wn)), t_new};
  return out;
}

double stable_dt(const State& state, const ModelParams& params, const SolverConfig& cfg) {
  return Stepper(state.grid(), params, cfg).stable_dt(state);
}

State step(const State& state, const ModelParams& params, const SolverConfig& cfg, double dt) {
  state.validate();
  return Stepper(state.grid(), params, cfg).advance(state, dt).next;
}

DiagnosticRow diagnose(const State& s, double theta) {
  const Grid& grid = s.grid();
  const auto& u = s.u.values();
  const auto& v = s.v.values();
  const auto& w = s.w.values();
  DiagnosticRow row;
  row.time = s.time;
  row.mass_u = integrate(grid, u);
  row.mass_v = integrate(grid, v);
  row.mass_w = integrate(grid, w);
  row.u_theta = integrate(grid, u.unaryExpr([theta](double x) { return pow_abs(x, theta); }));
  row.v_l2_squared = integrate(grid, v.square());
  row.grad_w_l2_squared = dirichlet_energy(grid, w);
  row.min_u = u.minCoeff();
  row.max_u = u.maxCoeff();
  row.min_v = v.minCoeff();
  row.max_v = v.maxCoeff();
  row.min_w = w.minCoeff();
  row.max_w = w.maxCoeff();
  return row;
}

Trajectory simulate(const State& initial, const ModelParams& params, const SolverConfig& cfg,
                    double T, const SimulateOptions& options) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("simulate: T must be >= 0");
  initial.validate();
  const Grid& grid = initial.grid();
  Stepper stepper(grid, params, cfg);

  std::vector<double> targets;
  for (double t : options.output_times) {
    if (!(t >= 0.0 && t <= T)) throw std::invalid_argument("simulate: output time outside [0, T]");
    if (t > 0.0) targets.push_back(t);
  }
  if (T > 0.0) targets.push_back(T);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  Trajectory traj;
  traj.params = params;
  State s = initial;
  s.time = 0.0;
  traj.snapshots.push_back(s);
  traj.integrals_at_snapshot.push_back({});
  if (options.record_diagnostics) traj.diagnostics.push_back(diagnose(s, params.theta));
  traj.min_raw_value = std::min({s.u.values().minCoeff(), s.v.values().minCoeff(),
                                 s.w.values().minCoeff()});
  if (options.observer) options.observer(s);

  const double theta = params.theta;
  SpaceTimeIntegrals& acc = traj.integrals;
  std::size_t next = 0;
  while (next < targets.size()) {
    const double target = targets[next];
    double dt = stepper.stable_dt(s);
    const double remaining = target - s.time;
    const bool hits = dt >= remaining * (1.0 - 1e-9);
    if (hits) dt = remaining;

    const auto& u = s.u.values();
    const auto& v = s.v.values();
    acc.u_theta += dt * integrate(grid, u.unaryExpr([theta](double x) { return pow_abs(x, theta); }));
    acc.v_squared += dt * integrate(grid, v.square());
    const Eigen::ArrayXXd gw = face_gradient(grid, s.w.values());
    acc.grad_w_squared += dt * integrate(grid, gw.square().rowwise().sum());
    acc.grad_log_v_squared += dt * dirichlet_energy(grid, v.log1p());
    acc.v_grad_w_squared += dt * weighted_dirichlet(grid, v, gw);

    StepOutcome outcome = stepper.advance(s, dt);
    const auto& ru = outcome.reaction_u;
    const auto& rv = outcome.reaction_v;
    acc.abs_reaction_u += dt * integrate(grid, ru.abs());
    acc.abs_reaction_v += dt * integrate(grid, rv.abs());
    acc.pos_reaction_u += dt * integrate(grid, ru.max(0.0));
    acc.pos_reaction_v += dt * integrate(grid, rv.max(0.0));
    acc.reaction_u += dt * integrate(grid, ru);
    acc.reaction_v += dt * integrate(grid, rv);

    s = std::move(outcome.next);
    if (hits) s.time = target;
    ++traj.steps;
    traj.max_step = std::max(traj.max_step, dt);
    traj.min_raw_value = std::min(traj.min_raw_value, outcome.min_raw_value);
    traj.clamped_values += outcome.clamped_values;
    require_finite(acc, s, traj.steps);

    if (options.record_diagnostics) {
      DiagnosticRow row = diagnose(s, theta);
      row.step = traj.steps;
      row.dt = dt;
      row.linear_iterations = outcome.linear_iterations;
      traj.diagnostics.push_back(row);
    }
    if (options.observer) options.observer(s);
    const bool strided = options.frame_stride > 0 && traj.steps % options.frame_stride == 0;
    if (hits || strided) {
      traj.snapshots.push_back(s);
      traj.integrals_at_snapshot.push_back(acc);
    }
    if (hits) ++next;
  }
  return traj;
}

}  // namespace chemo
