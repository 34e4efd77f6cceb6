#include "chemo/cli/runs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <thread>

#include <Eigen/Core>

#include "chemo/cli/csv.hpp"
#include "chemo/cli/presets.hpp"

namespace chemo::cli {

namespace fs = std::filesystem;

int worker_count(int jobs) {
  if (jobs < 1) return 1;
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CHEMO_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1) cap = static_cast<int>(std::min<long>(n, 1024));
  }
  return std::clamp(cap, 1, jobs);
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int workers = worker_count(n);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::optional<double> fitted_order(const std::vector<double>& h, const std::vector<double>& y,
                                   double floor) {
  if (h.size() != y.size() || h.size() < 2)
    throw std::invalid_argument("fitted_order: need at least two matching points");
  // h is ordered coarse to fine; the finest value decides saturation.
  if (std::abs(y.back()) <= floor) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(std::abs(y[i]) > 0.0)) continue;
    const double lx = std::log(h[i]), ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

std::string time_label(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", t);
  return buf;
}

std::string weights_label(const TestWeights& w) {
  return "p" + time_label(w.p) + "_k" + time_label(w.k);
}

// Output times plus every multiple of the frame interval below T.
std::vector<double> frame_times(const RunConfig& c, bool include_outputs) {
  std::vector<double> t;
  if (include_outputs) t = c.output_times;
  if (c.T > 0.0) {
    const long n = static_cast<long>(std::floor(c.T / c.frame_interval * (1.0 + 1e-12)));
    for (long k = 1; k <= n; ++k) {
      const double tk = k * c.frame_interval;
      if (tk < c.T * (1.0 - 1e-12)) t.push_back(tk);
    }
  }
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

void write_estimates(const std::string& path,
                     const std::vector<std::pair<std::string, const EstimateReport*>>& reports) {
  CsvWriter csv(path, {"scope", "name", "value", "bound", "slack", "tolerance", "pass", "note"});
  for (const auto& [scope, rep] : reports) {
    for (const auto& r : rep->records) {
      csv.cell(scope).cell(r.name).cell(r.value);
      if (r.has_bound)
        csv.cell(r.bound).cell(r.slack).cell(r.tolerance);
      else
        csv.empty().empty().empty();
      csv.cell(r.pass).cell(r.note);
      csv.end_row();
    }
  }
}

void report_failures(const EstimateReport& rep, const std::string& scope) {
  for (const auto& r : rep.records)
    if (!r.pass)
      std::cerr << "FAIL " << scope << " " << r.name << ": value " << format_real(r.value)
                << ", bound " << format_real(r.bound) << "\n";
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '"') c = ';';
  return s;
}

InitialData regularized(const RunConfig& config, const InitialData& base, double eps) {
  return regularize_initial(base, eps, 1e-13, 4 * config.solver.linear_solver_max_iter);
}

}  // namespace

void write_manifest(const RunConfig& config, const std::string& command) {
  fs::create_directories(config.out_dir);
  std::ofstream out(fs::path(config.out_dir) / "manifest.cfg");
  if (!out) throw std::runtime_error("cannot write manifest in " + config.out_dir);
  out << "# chemo " << kVersion << " " << command << "\n";
  out << "# eigen " << EIGEN_WORLD_VERSION << "." << EIGEN_MAJOR_VERSION << "."
      << EIGEN_MINOR_VERSION << "\n";
  out << "# compiler " << __VERSION__ << "\n";
  out << echo_config(config);
}

// --- simulate ---------------------------------------------------------------

SimulateResult simulate_run(const RunConfig& config) {
  config.validate();
  const Grid grid = config.grid.make();
  InitialData base = make_base_data(config, grid);
  InitialData init = regularized(config, base, config.model.eps);
  SimulateResult res{std::move(base), std::move(init), {}, {}, {}};

  double min_value = std::numeric_limits<double>::infinity();
  double min_z = 1.0, max_z = 0.0, max_fplus = 0.0;
  const double theta = config.model.theta;
  SimulateOptions opts;
  opts.output_times = frame_times(config, true);
  opts.observer = [&](const State& s) {
    min_value = std::min({min_value, s.u.values().minCoeff(), s.v.values().minCoeff(),
                          s.w.values().minCoeff()});
    for (const auto& w : config.weights) {
      const Field z = z_field(s.u, s.w, w.p, w.k);
      min_z = std::min(min_z, z.values().minCoeff());
      max_z = std::max(max_z, z.values().maxCoeff());
    }
    const auto& u = s.u.values();
    const auto& v = s.v.values();
    for (Eigen::Index c = 0; c < u.size(); ++c)
      max_fplus = std::max(max_fplus, reaction_u(u(c), v(c), theta));
  };
  res.traj = simulate(res.initial.to_state(), config.model, config.solver, config.T, opts);
  res.min_value = min_value;
  res.min_z = min_z;
  res.max_z = max_z;
  res.max_positive_reaction_u = max_fplus;

  if (!config.estimates) return res;
  const double u0 = integrate(res.base.u);
  const double v0 = integrate(res.base.v);
  EstimateReport& rep = res.estimates;
  rep.append(check_mass_bounds(res.traj, u0, v0));
  rep.append(check_spacetime_bounds(res.traj, u0, v0));
  rep.append(check_reaction_l1(res.traj, u0));
  rep.records.push_back(make_record("positivity_min_value", -min_value, 0.0, 0.0,
                                    "pass when every state is nonnegative"));
  rep.records.push_back(make_record("raw_min_value", -res.traj.min_raw_value, kClampWindow, 0.0,
                                    "most negative value before clamping"));
  EstimateRecord zmin = info_record("z_min", min_z, "must be positive");
  zmin.pass = min_z > 0.0;
  rep.records.push_back(zmin);
  rep.records.push_back(make_record("z_max", max_z, 1.0, 0.0));
  rep.records.push_back(make_record("reaction_u_positive_part_max", max_fplus, 1.0, 0.0));
  if (config.w_lp_p > 0.0)
    rep.records.push_back(info_record("sup_w_lp", sup_w_lp(res.traj, config.w_lp_p),
                                      "p = " + time_label(config.w_lp_p)));

  const double m1 = m1_bound(u0, theta, grid.measure());
  for (std::size_t i = 0; i < config.probe_eta.size(); ++i) {
    const double eta = config.probe_eta[i];
    const double delta = uniform_integrability_delta(eta, config.T, theta, m1, u0);
    const auto probe = probe_uniform_integrability(res.traj, eta, delta, config.probe_trials,
                                                   config.seed + 17 * (i + 1));
    res.probes.push_back(probe);
    const std::string tag = "_eta" + time_label(eta);
    rep.records.push_back(info_record("ui_delta" + tag, delta));
    rep.records.push_back(make_record("ui_probe_violations" + tag,
                                      probe.violations + probe.holder_sample_violations, 0.0, 0.0,
                                      std::to_string(probe.trials) + " subsets; seed " +
                                          std::to_string(probe.seed)));
    rep.records.push_back(info_record("ui_probe_max_integral" + tag, probe.max_integral));
    rep.records.push_back(make_record("ui_holder_bound" + tag, probe.holder_bound, eta, 0.0,
                                      "(int int u^theta)^(1/theta) delta^((theta-1)/theta)"));
  }
  return res;
}

int run_simulate(const RunConfig& config) {
  SimulateResult res = simulate_run(config);
  write_manifest(config, "simulate");
  const fs::path dir(config.out_dir);
  const Grid& grid = res.traj.grid();

  {
    CsvWriter csv((dir / "diagnostics.csv").string(),
                  {"step", "time", "dt", "mass_u", "mass_v", "mass_w", "u_theta_norm",
                   "v_l2_squared", "grad_w_l2_squared", "min_u", "max_u", "min_v", "max_v",
                   "min_w", "max_w", "linear_iterations"});
    for (const auto& r : res.traj.diagnostics) {
      csv.cell(r.step).cell(r.time).cell(r.dt).cell(r.mass_u).cell(r.mass_v).cell(r.mass_w);
      csv.cell(r.u_theta).cell(r.v_l2_squared).cell(r.grad_w_l2_squared);
      csv.cell(r.min_u).cell(r.max_u).cell(r.min_v).cell(r.max_v).cell(r.min_w).cell(r.max_w);
      csv.cell(r.linear_iterations);
      csv.end_row();
    }
  }

  std::vector<double> wanted = config.output_times;
  wanted.push_back(0.0);
  wanted.push_back(config.T);
  for (const auto& s : res.traj.snapshots) {
    if (std::find(wanted.begin(), wanted.end(), s.time) == wanted.end()) continue;
    std::vector<std::string> header{"x"};
    if (grid.dim() == 2) header.push_back("y");
    header.insert(header.end(), {"u", "v", "w"});
    CsvWriter csv((dir / ("fields_" + time_label(s.time) + ".csv")).string(), header);
    for (int j = 0; j < grid.cells(1); ++j)
      for (int i = 0; i < grid.cells(0); ++i) {
        csv.cell(grid.center(0, i));
        if (grid.dim() == 2) csv.cell(grid.center(1, j));
        csv.cell(s.u(i, j)).cell(s.v(i, j)).cell(s.w(i, j));
        csv.end_row();
      }
  }

  write_estimates((dir / "estimates.csv").string(), {{"run", &res.estimates}});
  report_failures(res.estimates, "run");
  return res.estimates.all_pass() ? kExitPass : kExitCheckFailed;
}

// --- ladder -----------------------------------------------------------------

std::vector<LadderLevel> make_ladder(const RunConfig& config, int levels) {
  config.validate_ladder(levels);
  const Grid finest = config.grid.make();
  std::vector<LadderLevel> out;
  for (int l = 0; l < levels; ++l) {
    const int shift = levels - 1 - l;
    LadderLevel level{shift == 0 ? finest : finest.coarsened(1 << shift), config.solver};
    level.solver.max_dt = config.solver.max_dt * std::pow(4.0, shift);
    out.push_back(level);
  }
  return out;
}

CertifyResult certify_run(const RunConfig& config, int levels) {
  config.validate();
  if (!(config.T > 0.0)) throw ConfigError("time.T", "certificates need T > 0");
  const std::vector<LadderLevel> ladder = make_ladder(config, levels);

  CertifyResult res;
  res.tests = sample_test_functions(ladder.front().grid, config.T, config.test_count, config.seed);
  CertificateSpec spec;
  spec.weights = config.weights;
  spec.tests = res.tests;

  std::vector<std::optional<LadderRun>> runs(ladder.size());
  parallel_for(static_cast<int>(ladder.size()), [&](int l) {
    const LadderLevel& level = ladder[l];
    const InitialData init =
        regularized(config, make_base_data(config, level.grid), config.model.eps);
    CertificateEngine engine(level.grid, config.model, spec);
    SimulateOptions opts;
    opts.output_times = config.output_times;
    opts.record_diagnostics = false;
    opts.observer = [&engine](const State& s) { engine.observe(s); };
    Trajectory traj = simulate(init.to_state(), config.model, level.solver, config.T, opts);
    LadderRun run{level.grid, 0.0, 0.0, 0, 0.0, {}, {}};
    run.h = level.grid.max_spacing();
    run.dt = traj.max_step;
    run.steps = traj.steps;
    run.min_raw_value = traj.min_raw_value;
    run.report = engine.finish();
    run.snapshots = std::move(traj.snapshots);
    runs[l] = std::move(run);
  });
  for (auto& r : runs) res.levels.push_back(std::move(*r));

  const std::size_t finest = res.levels.size() - 1;
  std::vector<double> hs;
  for (const auto& r : res.levels) hs.push_back(r.h);
  res.orders_pass = true;
  for (int k = 0; k < kCertificateKinds; ++k) {
    const auto kind = static_cast<CertificateKind>(k);
    KindCalibration& cal = res.calibration[k];
    cal.kind = kind;
    double c = 0.0;
    for (std::size_t l = 0; l < res.levels.size(); ++l) {
      const double m = res.levels[l].report.max_abs_residual(kind);
      cal.max_abs_residual.push_back(m);
      if (l < finest) c = std::max(c, m / (res.levels[l].h + res.levels[l].dt));
    }
    cal.model = ToleranceModel{2.0 * c, res.levels[finest].h, res.levels[finest].dt, kRoundoffFloor};
    res.levels[finest].report.apply(kind, cal.model);
    cal.order = fitted_order(hs, cal.max_abs_residual);
    cal.order_pass = !cal.order || *cal.order >= kRequiredOrder;
    res.orders_pass = res.orders_pass && cal.order_pass;
  }
  res.certificates_pass = res.levels[finest].report.all_pass();
  return res;
}

namespace {

void write_certificates(const RunConfig& config, const CertifyResult& res) {
  const fs::path dir(config.out_dir);
  {
    CsvWriter csv((dir / "certificates.csv").string(),
                  {"level", "cells", "h", "dt", "kind", "test_function", "p", "k", "lhs", "rhs",
                   "residual", "eps_discrepancy", "C", "tolerance", "checked", "pass"});
    for (std::size_t l = 0; l < res.levels.size(); ++l) {
      const LadderRun& run = res.levels[l];
      const bool checked = l + 1 == res.levels.size();
      for (const auto& e : run.report.entries) {
        csv.cell(static_cast<long long>(l)).cell(run.grid.cells(0)).cell(run.h).cell(run.dt);
        csv.cell(certificate_name(e.kind)).cell(e.test_function).cell(e.p).cell(e.k);
        csv.cell(e.lhs).cell(e.rhs).cell(e.residual).cell(e.eps_discrepancy);
        if (checked) {
          csv.cell(res.calibration[static_cast<int>(e.kind)].model.C).cell(e.tolerance);
          csv.cell(true).cell(e.pass);
        } else {
          csv.empty().empty().cell(false).empty();
        }
        csv.end_row();
      }
    }
  }
  CsvWriter csv((dir / "calibration.csv").string(),
                {"kind", "C", "h", "dt", "tolerance", "max_abs_residual_finest", "order",
                 "saturated", "order_pass"});
  for (const auto& cal : res.calibration) {
    csv.cell(certificate_name(cal.kind)).cell(cal.model.C).cell(cal.model.h).cell(cal.model.dt);
    csv.cell(cal.model.tolerance()).cell(cal.max_abs_residual.back());
    if (cal.order)
      csv.cell(*cal.order);
    else
      csv.empty();
    csv.cell(!cal.order).cell(cal.order_pass);
    csv.end_row();
  }
}

}  // namespace

int run_certify(const RunConfig& config, int levels) {
  const CertifyResult res = certify_run(config, levels);
  write_manifest(config, "certify");
  write_certificates(config, res);
  for (const auto& e : res.levels.back().report.entries)
    if (!e.pass)
      std::cerr << "FAIL " << certificate_name(e.kind) << " test " << e.test_function
                << ": residual " << format_real(e.residual) << ", tolerance "
                << format_real(e.tolerance) << "\n";
  for (const auto& cal : res.calibration)
    if (!cal.order_pass)
      std::cerr << "FAIL " << certificate_name(cal.kind) << " residual order "
                << format_real(*cal.order) << " < " << kRequiredOrder << "\n";
  return res.pass() ? kExitPass : kExitCheckFailed;
}

RefineResult refine_run(const RunConfig& config, int levels) {
  RefineResult res;
  res.ladder = certify_run(config, levels);
  const auto& runs = res.ladder.levels;
  std::vector<double> hs;
  for (std::size_t l = 0; l + 1 < runs.size(); ++l) {
    const LadderRun& coarse = runs[l];
    const LadderRun& fine = runs[l + 1];
    if (coarse.snapshots.size() != fine.snapshots.size())
      throw std::runtime_error("refine: snapshot counts differ between levels");
    std::array<double, 3> d{0.0, 0.0, 0.0};
    for (std::size_t n = 0; n < coarse.snapshots.size(); ++n) {
      const State& a = coarse.snapshots[n];
      const State& b = fine.snapshots[n];
      if (a.time != b.time) throw std::runtime_error("refine: snapshot times differ between levels");
      const Field* fa[3] = {&a.u, &a.v, &a.w};
      const Field* fb[3] = {&b.u, &b.v, &b.w};
      for (int f = 0; f < 3; ++f) {
        const Eigen::ArrayXd r = restrict_to(coarse.grid, fine.grid, fb[f]->values());
        d[f] = std::max(d[f], integrate(coarse.grid, (fa[f]->values() - r).abs()));
      }
    }
    res.differences.push_back(d);
    hs.push_back(coarse.h);
  }
  res.pass = res.ladder.orders_pass;
  for (int f = 0; f < 3; ++f) {
    if (hs.size() < 2) {
      // Two levels give one difference: no slope, report saturation only.
      res.solution_order[f] = std::nullopt;
      continue;
    }
    std::vector<double> y;
    for (const auto& d : res.differences) y.push_back(d[f]);
    res.solution_order[f] = fitted_order(hs, y);
    if (res.solution_order[f] && *res.solution_order[f] < kRequiredOrder) res.pass = false;
  }
  return res;
}

int run_refine(const RunConfig& config, int levels) {
  const RefineResult res = refine_run(config, levels);
  write_manifest(config, "refine");
  const fs::path dir(config.out_dir);
  std::vector<std::string> header{"level", "cells", "h", "dt", "steps",
                                  "diff_u", "diff_v", "diff_w"};
  for (int k = 0; k < kCertificateKinds; ++k)
    header.push_back(std::string("residual_") + certificate_name(static_cast<CertificateKind>(k)));
  CsvWriter csv((dir / "refine.csv").string(), header);
  const auto& runs = res.ladder.levels;
  for (std::size_t l = 0; l < runs.size(); ++l) {
    csv.cell(std::to_string(l)).cell(runs[l].grid.cells(0)).cell(runs[l].h).cell(runs[l].dt);
    csv.cell(runs[l].steps);
    for (int f = 0; f < 3; ++f) {
      if (l < res.differences.size())
        csv.cell(res.differences[l][f]);
      else
        csv.empty();
    }
    for (const auto& cal : res.ladder.calibration) csv.cell(cal.max_abs_residual[l]);
    csv.end_row();
  }
  auto order_cell = [&csv](const std::optional<double>& o) {
    if (o)
      csv.cell(*o);
    else
      csv.cell("saturated");
  };
  csv.cell("order").empty().empty().empty().empty();
  for (const auto& o : res.solution_order) order_cell(o);
  for (const auto& cal : res.ladder.calibration) order_cell(cal.order);
  csv.end_row();

  for (int f = 0; f < 3; ++f)
    if (res.solution_order[f] && *res.solution_order[f] < kRequiredOrder)
      std::cerr << "FAIL solution order of " << "uvw"[f] << ": "
                << format_real(*res.solution_order[f]) << "\n";
  for (const auto& cal : res.ladder.calibration)
    if (!cal.order_pass)
      std::cerr << "FAIL residual order of " << certificate_name(cal.kind) << ": "
                << format_real(*cal.order) << "\n";
  return res.pass ? kExitPass : kExitCheckFailed;
}

// --- sweep ------------------------------------------------------------------

std::array<double, 3> spacetime_l1_gap(const Trajectory& a, const Trajectory& b) {
  if (a.snapshots.size() != b.snapshots.size())
    throw std::invalid_argument("spacetime_l1_gap: snapshot counts differ");
  const Grid& grid = a.grid();
  std::array<double, 3> gap{0.0, 0.0, 0.0}, prev{0.0, 0.0, 0.0};
  for (std::size_t n = 0; n < a.snapshots.size(); ++n) {
    const State& x = a.snapshots[n];
    const State& y = b.snapshots[n];
    if (x.time != y.time) throw std::invalid_argument("spacetime_l1_gap: snapshot times differ");
    const std::array<double, 3> cur{integrate(grid, (x.u.values() - y.u.values()).abs()),
                                    integrate(grid, (x.v.values() - y.v.values()).abs()),
                                    integrate(grid, (x.w.values() - y.w.values()).abs())};
    if (n > 0) {
      const double dt = x.time - a.snapshots[n - 1].time;
      for (int f = 0; f < 3; ++f) gap[f] += 0.5 * (prev[f] + cur[f]) * dt;
    }
    prev = cur;
  }
  return gap;
}

SweepResult sweep_run(const RunConfig& config) {
  config.validate();
  config.validate_sweep();
  const Grid grid = config.grid.make();
  const InitialData base = make_base_data(config, grid);
  const double u0 = integrate(base.u);
  const double v0 = integrate(base.v);
  const double scale = 1.0 + config.T;

  SweepResult res;
  const int n = static_cast<int>(config.sweep_eps.size());
  res.levels.resize(n);
  res.level_estimates.resize(n);
  parallel_for(n, [&](int j) {
    SweepLevel& level = res.levels[j];
    level.eps = config.sweep_eps[j];
    try {
      ModelParams params = config.model;
      params.eps = level.eps;
      const InitialData init = regularized(config, base, level.eps);
      SimulateOptions opts;
      opts.output_times = frame_times(config, false);
      opts.record_diagnostics = false;
      level.traj = simulate(init.to_state(), params, config.solver, config.T, opts);
      const auto& I = level.traj.integrals;
      level.grad_log_v = I.grad_log_v_squared / scale;
      level.grad_w = I.grad_w_squared / scale;
      level.v_grad_w = I.v_grad_w_squared / scale;
      if (config.w_lp_p > 0.0) level.sup_w_lp = sup_w_lp(level.traj, config.w_lp_p);
      for (const auto& w : config.weights) level.entropy_dissipation.push_back(entropy_dissipation_integrals(level.traj, w));
      EstimateReport& rep = res.level_estimates[j];
      rep.append(check_mass_bounds(level.traj, u0, v0));
      rep.append(check_spacetime_bounds(level.traj, u0, v0));
      rep.append(check_reaction_l1(level.traj, u0));
      level.ok = true;
    } catch (const std::exception& e) {
      level.ok = false;
      level.error = e.what();
    }
  });

  bool all_ok = true;
  for (const auto& l : res.levels) all_ok = all_ok && l.ok;
  for (int j = 0; j + 1 < n; ++j) {
    if (res.levels[j].ok && res.levels[j + 1].ok)
      res.gaps.push_back(spacetime_l1_gap(res.levels[j].traj, res.levels[j + 1].traj));
    else
      res.gaps.push_back({NAN, NAN, NAN});
  }

  EstimateReport& checks = res.checks;
  if (all_ok) {
    TrajectoryFamily family;
    for (const auto& l : res.levels) family.push_back({l.eps, &l.traj});
    checks.append(check_dissipation_bounds(family));
    if (config.w_lp_p > 0.0) checks.append(check_w_lp(family, config.w_lp_p));
    for (const auto& w : config.weights) {
      EstimateReport r = check_entropy_dissipation_bounds(family, w);
      for (auto& rec : r.records) rec.name += "_" + weights_label(w);
      checks.append(r);
    }
    for (int f = 0; f < 3; ++f) {
      const std::string name(1, "uvw"[f]);
      double worst = 0.0;
      for (std::size_t j = 0; j + 1 < res.gaps.size(); ++j) {
        const double a = res.gaps[j][f], b = res.gaps[j + 1][f];
        const double ratio = a == 0.0 ? (b == 0.0 ? 1.0 : INFINITY) : b / a;
        worst = std::max(worst, ratio);
      }
      if (res.gaps.size() >= 2)
        checks.records.push_back(make_record("gaps_nonincreasing_" + name, worst, 1.0, 0.0,
                                             "largest ratio of successive gaps"));
      const double first = res.gaps.front()[f], last = res.gaps.back()[f];
      const double fraction = first == 0.0 ? (last == 0.0 ? 0.0 : INFINITY) : last / first;
      checks.records.push_back(
          make_record("final_gap_fraction_" + name, fraction, 0.1, 0.0, "last gap / first gap"));
    }
  } else {
    EstimateRecord r = info_record("levels_completed", 0.0, "a sweep level failed");
    r.pass = false;
    checks.records.push_back(r);
  }
  res.pass = all_ok && checks.all_pass();
  for (const auto& rep : res.level_estimates) res.pass = res.pass && rep.all_pass();
  return res;
}

int run_sweep(const RunConfig& config) {
  const SweepResult res = sweep_run(config);
  write_manifest(config, "sweep");
  const fs::path dir(config.out_dir);
  std::vector<std::string> header{"eps",    "status",     "gap_u",  "gap_v",   "gap_w",
                                  "grad_log_v", "grad_w", "v_grad_w", "sup_w_lp"};
  for (const auto& w : config.weights) {
    header.push_back("grad_sqrt_z_" + weights_label(w));
    header.push_back("z_grad_w_" + weights_label(w));
  }
  CsvWriter csv((dir / "sweep.csv").string(), header);
  const double scale = 1.0 + config.T;
  for (std::size_t j = 0; j < res.levels.size(); ++j) {
    const SweepLevel& l = res.levels[j];
    csv.cell(l.eps).cell(l.ok ? std::string("ok") : sanitize("error: " + l.error));
    for (int f = 0; f < 3; ++f) {
      if (j < res.gaps.size())
        csv.cell(res.gaps[j][f]);
      else
        csv.empty();
    }
    if (l.ok) {
      csv.cell(l.grad_log_v).cell(l.grad_w).cell(l.v_grad_w);
      if (config.w_lp_p > 0.0)
        csv.cell(l.sup_w_lp);
      else
        csv.empty();
      for (const auto& li : l.entropy_dissipation) csv.cell(li.grad_sqrt_z / scale).cell(li.z_grad_w / scale);
    } else {
      for (std::size_t c = 5; c < header.size(); ++c) csv.empty();
    }
    csv.end_row();
  }

  std::vector<std::pair<std::string, const EstimateReport*>> reports;
  std::vector<std::string> scopes;
  for (const auto& l : res.levels) scopes.push_back("eps=" + time_label(l.eps));
  for (std::size_t j = 0; j < res.levels.size(); ++j)
    reports.push_back({scopes[j], &res.level_estimates[j]});
  reports.push_back({"family", &res.checks});
  write_estimates((dir / "estimates.csv").string(), reports);

  for (std::size_t j = 0; j < res.levels.size(); ++j) {
    if (!res.levels[j].ok) std::cerr << "FAIL level " << scopes[j] << ": " << res.levels[j].error << "\n";
    report_failures(res.level_estimates[j], scopes[j]);
  }
  report_failures(res.checks, "family");
  return res.pass ? kExitPass : kExitCheckFailed;
}

// --- identities -------------------------------------------------------------

IdentitiesResult verify_identities_run(int samples, std::uint64_t seed) {
  if (samples < 1) throw ConfigError("identities.samples", "must be positive");
  IdentitiesResult res;
  res.pass = true;
  for (double p : {0.5, 1.0, 2.0, 4.0})
    for (double m : {1.1, 2.0, 10.0}) {
      const TestWeights w{p, weights_threshold(p) * m};
      res.reports.push_back(check_entropy_identities(w, samples, 1e-10, seed));
      res.pass = res.pass && res.reports.back().all_pass();
    }
  return res;
}

int run_verify_identities(const RunConfig& config, const std::optional<std::string>& out_dir) {
  const IdentitiesResult res = verify_identities_run(config.identity_samples, config.seed);
  for (const auto& r : res.reports) {
    for (int i = 0; i < kEntropyIdentityCount; ++i)
      if (!r.pass[i])
        std::cerr << "FAIL p=" << format_real(r.weights.p) << " k=" << format_real(r.weights.k)
                  << " " << entropy_identity_name(static_cast<EntropyIdentity>(i)) << ": "
                  << format_real(r.max_relative_error[i]) << "\n";
  }
  if (out_dir) {
    RunConfig echo = config;
    echo.out_dir = *out_dir;
    write_manifest(echo, "verify-identities");
    CsvWriter csv((fs::path(*out_dir) / "identities.csv").string(),
                  {"p", "k", "identity", "max_relative_error", "tolerance", "pass", "note"});
    for (const auto& r : res.reports) {
      for (int i = 0; i < kEntropyIdentityCount; ++i) {
        csv.cell(r.weights.p).cell(r.weights.k);
        csv.cell(entropy_identity_name(static_cast<EntropyIdentity>(i)));
        csv.cell(r.max_relative_error[i]).cell(r.tolerance).cell(r.pass[i]);
        csv.cell(i == static_cast<int>(EntropyIdentity::Cross) ? "oracle form" : "");
        csv.end_row();
      }
      csv.cell(r.weights.p).cell(r.weights.k).cell("cross_coefficient_simplified_form");
      csv.cell(r.cross_simplified_max_relative_error).empty().empty();
      csv.cell("informational; assembled/simplified = " + format_real(r.cross_simplified_ratio));
      csv.end_row();
    }
  }
  std::cout << res.reports.size() << " weight pairs x " << config.identity_samples
            << " samples: " << (res.pass ? "all identities hold" : "identity failures") << "\n";
  return res.pass ? kExitPass : kExitCheckFailed;
}

}  // namespace chemo::cli
