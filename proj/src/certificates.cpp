#include "chemo/certificates.hpp"

#include <algorithm>
#include <limits>

namespace chemo {

const char* certificate_name(CertificateKind kind) {
  switch (kind) {
    case CertificateKind::MassSuperinequality: return "mass_superinequality";
    case CertificateKind::WeakFormW: return "weakform_w";
    case CertificateKind::WeakFormV: return "weakform_v";
    case CertificateKind::EntropySuperinequality: return "entropy_superinequality";
    case CertificateKind::ZEvolution: return "z_evolution";
  }
  return "unknown";
}

bool is_equality(CertificateKind kind) {
  return kind == CertificateKind::WeakFormW || kind == CertificateKind::ZEvolution;
}

void CertificateReport::apply(CertificateKind kind, const ToleranceModel& model) {
  tolerance_models[static_cast<int>(kind)] = model;
  const double tol = model.tolerance();
  for (auto& e : entries) {
    if (e.kind != kind) continue;
    e.tolerance = tol;
    e.pass = e.defect() <= tol;
  }
}

bool CertificateReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
}

double CertificateReport::max_abs_residual(CertificateKind kind) const {
  double m = 0.0;
  for (const auto& e : entries)
    if (e.kind == kind) m = std::max(m, std::abs(e.residual));
  return m;
}

double CertificateReport::min_residual(CertificateKind kind) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& e : entries)
    if (e.kind == kind) m = std::min(m, e.residual);
  return m;
}

std::size_t CertificateReport::count(CertificateKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [kind](const auto& e) { return e.kind == kind; }));
}

namespace {

// Test-function samples on the cells of its support, premultiplied by the
// amplitude and the cell volume.
struct Stencil {
  std::vector<Eigen::Index> cells;
  std::vector<double> value;
  std::vector<std::array<double, 2>> grad;
};

Stencil make_stencil(const Grid& grid, const TestFunction& tf) {
  Stencil st;
  const double scale = tf.amplitude * grid.cell_volume();
  for (int j = 0; j < grid.cells(1); ++j) {
    const double y = grid.dim() == 2 ? grid.center(1, j) : 0.0;
    for (int i = 0; i < grid.cells(0); ++i) {
      const double x = grid.center(0, i);
      const double s = tf.spatial(x, y);
      if (s == 0.0) continue;
      const auto g = tf.spatial_gradient(x, y);
      st.cells.push_back(grid.index(i, j));
      st.value.push_back(scale * s);
      st.grad.push_back({scale * g[0], scale * g[1]});
    }
  }
  return st;
}

double dot(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b, Eigen::Index k) {
  double s = a(k, 0) * b(k, 0);
  if (a.cols() > 1) s += a(k, 1) * b(k, 1);
  return s;
}

double dot(const Eigen::ArrayXXd& a, Eigen::Index k, const std::array<double, 2>& g) {
  double s = a(k, 0) * g[0];
  if (a.cols() > 1) s += a(k, 1) * g[1];
  return s;
}

struct EntropyFields {
  TestWeights weights;
  Eigen::ArrayXd z, z_half, G, B, C2, X, D, source_term, discrepancy_term, drift323, mobility;
  Eigen::ArrayXXd grad_z_half, grad_G;
};

struct Frame {
  double time = 0.0;
  Eigen::ArrayXd u, v, w, source, limit_source, reaction_u, growth_u;
  Eigen::ArrayXXd grad_w;
  Eigen::ArrayXd log_v, q, growth_v;
  Eigen::ArrayXXd grad_log_v;
  std::vector<EntropyFields> entropy;
};

// Moment layout per test function: signal form, v form, then a block per
// entropy weight. Entries flagged as time moments are integrated against
// psi_t exactly; the rest against psi by the trapezoid rule.
enum BaseMoment { kWTime = 0, kWGrad, kW, kWSrc, kWDisc, kVTime, kV1, kV2, kV3, kV4, kV5, kBase };
enum EntropyMoment { kETime = 0, kE1, kE2, kE3, kE4, kE5, kEDisc, kEntropyMoments };

}  // namespace

struct CertificateEngine::Impl {
  Grid grid;
  ModelParams params;
  CertificateSpec spec;
  std::vector<Stencil> stencils;

  std::size_t frame_count = 0;
  double max_gap = 0.0;

  // Mass superinequality.
  double mass0 = 0.0, prev_time = 0.0, prev_reaction = 0.0, cumulative_reaction = 0.0;
  double mass_min_slack = std::numeric_limits<double>::infinity(), mass_lhs = 0.0, mass_rhs = 0.0;

  // Trapezoid accumulators, one row per test function.
  std::vector<std::vector<double>> totals, prev_moments;
  std::vector<double> prev_temporal;
  std::vector<bool> is_time_moment;
  // prev_moments[b] is only kept up to date while bump b is active; the last
  // frame lets a bump that switches on recover its moments there.
  std::vector<char> moments_fresh;
  std::optional<Frame> last_frame;

  // z evolution: window of the two most recent frames.
  std::optional<Frame> previous;
  std::vector<Eigen::ArrayXd> z_before_previous;
  double time_before_previous = 0.0;
  bool have_before_previous = false;
  // [test function][weight] -> {L1 residual, lhs, rhs}
  std::vector<std::vector<std::array<double, 3>>> z_totals;

  Impl(const Grid& g, const ModelParams& p, CertificateSpec s)
      : grid(g), params(p), spec(std::move(s)) {
    params.validate();
    for (const auto& wts : spec.weights) wts.validate();
    if ((spec.entropy || spec.z_evolution) && spec.weights.empty())
      throw std::invalid_argument("entropy certificates need at least one TestWeights");
    for (const auto& tf : spec.tests) {
      if (tf.dim != grid.dim()) throw std::invalid_argument("test function dimension mismatch");
      if (!(tf.amplitude >= 0.0))
        throw std::invalid_argument("certificates require nonnegative test functions");
      if (!(tf.boundary_clearance(grid) > 0.0))
        throw std::invalid_argument("test function support touches the boundary");
      stencils.push_back(make_stencil(grid, tf));
    }
    const std::size_t n_moments = kBase + kEntropyMoments * spec.weights.size();
    totals.assign(spec.tests.size(), std::vector<double>(n_moments, 0.0));
    prev_moments = totals;
    prev_temporal.assign(spec.tests.size(), 0.0);
    moments_fresh.assign(spec.tests.size(), 0);
    is_time_moment.assign(n_moments, false);
    is_time_moment[kWTime] = is_time_moment[kVTime] = true;
    for (std::size_t a = 0; a < spec.weights.size(); ++a)
      is_time_moment[kBase + kEntropyMoments * a + kETime] = true;
    z_totals.assign(spec.tests.size(),
                    std::vector<std::array<double, 3>>(spec.weights.size(), {0.0, 0.0, 0.0}));
  }

  bool need_base() const { return spec.weak_w || spec.weak_v; }
  bool need_entropy() const { return spec.entropy || spec.z_evolution; }

  Frame make_frame(const State& s) const {
    Frame f;
    f.time = s.time;
    f.u = s.u.values();
    f.v = s.v.values();
    f.w = s.w.values();
    const double theta = params.theta;
    const double eps = params.eps;
    f.source = f.u.binaryExpr(f.v, [eps](double a, double b) { return source_w(a, b, eps); });
    f.limit_source = f.u + f.v;
    f.reaction_u = f.u.binaryExpr(f.v, [theta](double a, double b) { return reaction_u(a, b, theta); });
    f.growth_u = 1.0 - f.u.unaryExpr([theta](double a) { return pow_abs(a, theta - 1.0); }) - f.v;
    if (need_base() || need_entropy()) f.grad_w = gradient(grid, f.w);
    if (spec.weak_v) {
      f.log_v = f.v.log1p();
      f.q = f.v / (f.v + 1.0);
      f.growth_v = 1.0 - f.v - f.u;
      f.grad_log_v = gradient(grid, f.log_v);
    }
    if (need_entropy()) {
      for (const auto& wts : spec.weights) {
        EntropyFields e;
        e.weights = wts;
        const double p = wts.p, k = wts.k;
        const Eigen::Index n = f.u.size();
        e.z.resize(n);
        e.G.resize(n);
        e.B.resize(n);
        e.C2.resize(n);
        e.X.resize(n);
        e.D.resize(n);
        e.source_term.resize(n);
        e.discrepancy_term.resize(n);
        e.drift323.resize(n);
        e.mobility.resize(n);
        for (Eigen::Index c = 0; c < n; ++c) {
          const double uc = f.u(c), wc = f.w(c);
          const double ph = phi(uc, p), xw = xi(wc, k), xw1 = xi_prime(wc, k);
          e.z(c) = ph * xw;
          e.G(c) = Phi(uc, p) * std::sqrt(xw);
          e.B(c) = entropy_drift_coefficient(uc, wc, wts);
          e.C2(c) = entropy_second_order_coefficient(uc, wc, wts);
          e.X(c) = entropy_cross_coefficient(uc, wc, wts);
          e.D(c) = entropy_flux_coefficient(uc, wc, wts);
          e.source_term(c) = f.reaction_u(c) * phi_prime(uc, p) * xw + (f.source(c) - wc) * ph * xw1;
          e.discrepancy_term(c) = (f.limit_source(c) - f.source(c)) * ph * xw1;
          e.drift323(c) = (2.0 * k + p * (p + 1.0) * uc / (uc + 1.0)) / (4.0 * (p + 1.0));
          e.mobility(c) = p * uc * e.z(c) / (uc + 1.0);
        }
        e.z_half = e.z.sqrt();
        e.grad_z_half = gradient(grid, e.z_half);
        e.grad_G = gradient(grid, e.G);
        f.entropy.push_back(std::move(e));
      }
    }
    return f;
  }

  std::vector<double> moments(const Frame& f, const Stencil& st) const {
    std::vector<double> m(kBase + kEntropyMoments * spec.weights.size(), 0.0);
    for (std::size_t i = 0; i < st.cells.size(); ++i) {
      const Eigen::Index c = st.cells[i];
      const double s = st.value[i];
      const auto& gs = st.grad[i];
      if (spec.weak_w) {
        m[kWTime] += f.w(c) * s;
        m[kWGrad] += dot(f.grad_w, c, gs);
        m[kW] += f.w(c) * s;
        m[kWSrc] += f.source(c) * s;
        m[kWDisc] += std::abs(f.source(c) - f.limit_source(c)) * s;
      }
      if (spec.weak_v) {
        m[kVTime] += f.log_v(c) * s;
        m[kV1] += dot(f.grad_log_v, f.grad_log_v, c) * s;
        m[kV2] += dot(f.grad_log_v, c, gs);
        m[kV3] += f.q(c) * dot(f.grad_w, c, gs);
        m[kV4] += f.q(c) * s * dot(f.grad_w, f.grad_log_v, c);
        m[kV5] += f.q(c) * f.growth_v(c) * s;
      }
      if (spec.entropy) {
        for (std::size_t a = 0; a < f.entropy.size(); ++a) {
          const EntropyFields& e = f.entropy[a];
          double* me = m.data() + kBase + kEntropyMoments * a;
          double sq = 0.0;
          for (int d = 0; d < grid.dim(); ++d) {
            const double comp = e.grad_G(c, d) + e.B(c) * f.grad_w(c, d);
            sq += comp * comp;
          }
          me[kETime] += e.z(c) * s;
          me[kE1] += sq * s;
          me[kE2] += e.C2(c) * dot(f.grad_w, f.grad_w, c) * s;
          me[kE3] += e.X(c) * dot(e.grad_G, c, gs);
          me[kE4] += e.D(c) * dot(f.grad_w, c, gs);
          me[kE5] += e.source_term(c) * s;
          me[kEDisc] += e.discrepancy_term(c) * s;
        }
      }
    }
    return m;
  }

  // Pointwise residual of the z identity at frame `f`, tested with the
  // spatial profile of stencil `st` (the temporal factor is applied by the caller).
  std::array<double, 2> z_sides(const Frame& f, std::size_t a, const Eigen::ArrayXd& z_rate,
                                const Stencil& st) const {
    const EntropyFields& e = f.entropy[a];
    const double p = e.weights.p, k = e.weights.k;
    const double square_weight = 4.0 * (p + 1.0) / p;
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < st.cells.size(); ++i) {
      const Eigen::Index c = st.cells[i];
      const double s = st.value[i];
      const auto& gs = st.grad[i];
      double sq = 0.0, zz_dot_psi = 0.0, w_dot_psi = 0.0;
      for (int d = 0; d < grid.dim(); ++d) {
        const double comp = e.grad_z_half(c, d) + e.drift323(c) * e.z_half(c) * f.grad_w(c, d);
        sq += comp * comp;
        zz_dot_psi += e.z_half(c) * e.grad_z_half(c, d) * gs[d];
        w_dot_psi += f.grad_w(c, d) * gs[d];
      }
      lhs += (z_rate(c) + square_weight * sq) * s;
      rhs += (-e.C2(c) * dot(f.grad_w, f.grad_w, c) - e.mobility(c) * f.growth_u(c) +
              k * f.w(c) * e.z(c) - k * f.source(c) * e.z(c)) * s;
      rhs += -2.0 * zz_dot_psi - e.mobility(c) * w_dot_psi;
    }
    return {lhs, rhs};
  }

  void observe(const State& state) {
    if (!(state.grid() == grid)) throw std::invalid_argument("certificate engine: grid mismatch");
    if (frame_count > 0 && !(state.time > prev_time))
      throw std::invalid_argument("certificate engine: frames must advance in time");
    Frame f = make_frame(state);
    const double t = f.time;
    const double dt = frame_count > 0 ? t - prev_time : 0.0;
    max_gap = std::max(max_gap, dt);

    if (spec.mass) {
      const double mass = integrate(grid, f.u);
      const double react = integrate(grid, f.reaction_u);
      if (frame_count == 0) {
        mass0 = mass;
      } else {
        cumulative_reaction += 0.5 * (prev_reaction + react) * dt;
      }
      const double rhs = mass0 + cumulative_reaction;
      const double slack = rhs - mass;
      if (slack < mass_min_slack) {
        mass_min_slack = slack;
        mass_lhs = mass;
        mass_rhs = rhs;
      }
      prev_reaction = react;
    }

    if (need_base() || spec.entropy) {
      for (std::size_t b = 0; b < stencils.size(); ++b) {
        const double temporal = spec.tests[b].temporal(t);
        const double temporal_prev = prev_temporal[b];
        if (temporal == 0.0 && temporal_prev == 0.0) {
          prev_temporal[b] = 0.0;
          moments_fresh[b] = 0;
          continue;
        }
        if (frame_count > 0 && !moments_fresh[b])
          prev_moments[b] = moments(*last_frame, stencils[b]);
        std::vector<double> m = moments(f, stencils[b]);
        auto& tot = totals[b];
        const auto& pm = prev_moments[b];
        for (std::size_t i = 0; i < m.size(); ++i) {
          if (is_time_moment[i]) {
            tot[i] -= frame_count == 0 ? m[i] * temporal
                                       : 0.5 * (pm[i] + m[i]) * (temporal - temporal_prev);
          } else if (frame_count > 0) {
            tot[i] += 0.5 * (temporal_prev * pm[i] + temporal * m[i]) * dt;
          }
        }
        prev_moments[b] = std::move(m);
        prev_temporal[b] = temporal;
        moments_fresh[b] = 1;
      }
      last_frame = f;
    }

    if (spec.z_evolution) {
      if (previous && have_before_previous) {
        const Frame& mid = *previous;
        const double span = t - time_before_previous;
        const double weight = 0.5 * span;
        for (std::size_t a = 0; a < spec.weights.size(); ++a) {
          const Eigen::ArrayXd rate = (f.entropy[a].z - z_before_previous[a]) / span;
          for (std::size_t b = 0; b < stencils.size(); ++b) {
            const double temporal = spec.tests[b].temporal(mid.time);
            if (temporal == 0.0) continue;
            const auto sides = z_sides(mid, a, rate, stencils[b]);
            auto& zt = z_totals[b][a];
            zt[0] += std::abs(temporal * (sides[0] - sides[1])) * weight;
            zt[1] += temporal * sides[0] * weight;
            zt[2] += temporal * sides[1] * weight;
          }
        }
      }
      if (previous) {
        z_before_previous.clear();
        for (const auto& e : previous->entropy) z_before_previous.push_back(e.z);
        time_before_previous = previous->time;
        have_before_previous = true;
      }
      previous = std::move(f);
    }

    prev_time = t;
    ++frame_count;
  }

  CertificateReport finish() const {
    CertificateReport report;
    if (spec.mass && frame_count > 0) {
      CertificateEntry e;
      e.kind = CertificateKind::MassSuperinequality;
      e.lhs = mass_lhs;
      e.rhs = mass_rhs;
      e.residual = mass_min_slack;
      e.pass = e.defect() <= 0.0;
      report.entries.push_back(e);
    }
    for (std::size_t b = 0; b < stencils.size(); ++b) {
      const auto& tot = totals[b];
      if (spec.weak_w) {
        CertificateEntry e;
        e.kind = CertificateKind::WeakFormW;
        e.test_function = int(b);
        e.lhs = tot[kWTime];
        e.rhs = -tot[kWGrad] - tot[kW] + tot[kWSrc];
        e.residual = e.lhs - e.rhs;
        e.eps_discrepancy = tot[kWDisc];
        e.pass = e.defect() <= 0.0;
        report.entries.push_back(e);
      }
      if (spec.weak_v) {
        CertificateEntry e;
        e.kind = CertificateKind::WeakFormV;
        e.test_function = int(b);
        e.lhs = tot[kVTime];
        e.rhs = tot[kV1] - tot[kV2] + tot[kV3] - tot[kV4] + tot[kV5];
        e.residual = e.lhs - e.rhs;
        e.pass = e.defect() <= 0.0;
        report.entries.push_back(e);
      }
      for (std::size_t a = 0; a < spec.weights.size(); ++a) {
        if (spec.entropy) {
          const double* me = tot.data() + kBase + kEntropyMoments * a;
          CertificateEntry e;
          e.kind = CertificateKind::EntropySuperinequality;
          e.test_function = int(b);
          e.p = spec.weights[a].p;
          e.k = spec.weights[a].k;
          e.lhs = me[kETime];
          e.rhs = -me[kE1] - me[kE2] - me[kE3] + me[kE4] + me[kE5];
          e.residual = e.rhs - e.lhs;
          e.eps_discrepancy = me[kEDisc];
          e.pass = e.defect() <= 0.0;
          report.entries.push_back(e);
        }
        if (spec.z_evolution) {
          const auto& zt = z_totals[b][a];
          CertificateEntry e;
          e.kind = CertificateKind::ZEvolution;
          e.test_function = int(b);
          e.p = spec.weights[a].p;
          e.k = spec.weights[a].k;
          e.lhs = zt[1];
          e.rhs = zt[2];
          e.residual = zt[0];
          e.pass = e.defect() <= 0.0;
          report.entries.push_back(e);
        }
      }
    }
    return report;
  }
};

CertificateEngine::CertificateEngine(const Grid& grid, const ModelParams& params,
                                     CertificateSpec spec)
    : impl_(std::make_unique<Impl>(grid, params, std::move(spec))) {}
CertificateEngine::~CertificateEngine() = default;
CertificateEngine::CertificateEngine(CertificateEngine&&) noexcept = default;
CertificateEngine& CertificateEngine::operator=(CertificateEngine&&) noexcept = default;

void CertificateEngine::observe(const State& state) { impl_->observe(state); }
CertificateReport CertificateEngine::finish() const { return impl_->finish(); }
std::size_t CertificateEngine::frames() const { return impl_->frame_count; }
double CertificateEngine::max_frame_gap() const { return impl_->max_gap; }

CertificateReport certify(const Trajectory& traj, const CertificateSpec& spec) {
  CertificateEngine engine(traj.grid(), traj.params, spec);
  for (const auto& s : traj.snapshots) engine.observe(s);
  return engine.finish();
}

namespace {

CertificateSpec only(bool mass, bool w, bool v, bool entropy, bool z) {
  CertificateSpec spec;
  spec.mass = mass;
  spec.weak_w = w;
  spec.weak_v = v;
  spec.entropy = entropy;
  spec.z_evolution = z;
  return spec;
}

}  // namespace

CertificateReport certify_mass_superinequality(const Trajectory& traj) {
  return certify(traj, only(true, false, false, false, false));
}

CertificateReport certify_weakform_w(const Trajectory& traj, const TestFunction& psi) {
  CertificateSpec spec = only(false, true, false, false, false);
  spec.tests = {psi};
  return certify(traj, spec);
}

CertificateReport certify_weakform_v(const Trajectory& traj, const TestFunction& psi) {
  if (!(psi.amplitude >= 0.0))
    throw std::invalid_argument("certify_weakform_v: psi must be nonnegative");
  CertificateSpec spec = only(false, false, true, false, false);
  spec.tests = {psi};
  return certify(traj, spec);
}

CertificateReport certify_entropy_superinequality(const Trajectory& traj,
                                                  const TestWeights& weights,
                                                  const TestFunction& psi) {
  weights.validate();
  if (!(psi.amplitude >= 0.0))
    throw std::invalid_argument("certify_entropy_superinequality: psi must be nonnegative");
  CertificateSpec spec = only(false, false, false, true, false);
  spec.weights = {weights};
  spec.tests = {psi};
  return certify(traj, spec);
}

CertificateReport z_evolution_residual(const Trajectory& traj, const TestWeights& weights,
                                       const TestFunction& psi) {
  weights.validate();
  double gap = 0.0;
  for (std::size_t n = 1; n < traj.snapshots.size(); ++n)
    gap = std::max(gap, traj.snapshots[n].time - traj.snapshots[n - 1].time);
  if (gap > 2.0 * traj.max_step * (1.0 + 1e-9))
    throw std::invalid_argument("z_evolution_residual: snapshot cadence " + std::to_string(gap) +
                                " exceeds twice the step " + std::to_string(traj.max_step));
  CertificateSpec spec = only(false, false, false, false, true);
  spec.weights = {weights};
  spec.tests = {psi};
  return certify(traj, spec);
}

}  // namespace chemo
