#pragma once

#include <algorithm>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chemo/identities.hpp"
#include "chemo/model.hpp"
#include "chemo/solver.hpp"

namespace chemo {

enum class CertificateKind {
  MassSuperinequality,     // int u(t) <= int u0 + int_0^t int reaction_u
  WeakFormW,               // weak form of the signal equation (equality)
  WeakFormV,               // ln(v+1) super-solution inequality
  EntropySuperinequality,  // inequality for phi(u) xi(w) tested with psi >= 0
  ZEvolution,              // pointwise-in-time identity for z = (u+1)^-p e^-kw
};
inline constexpr int kCertificateKinds = 5;

const char* certificate_name(CertificateKind kind);
/// Equality certificates pass on |residual| <= tol, the rest on slack >= -tol.
bool is_equality(CertificateKind kind);

/// tol = max(C (h + dt), floor); the floor absorbs summation round-off.
struct ToleranceModel {
  double C = 0.0;
  double h = 0.0;
  double dt = 0.0;
  double floor = 0.0;
  double tolerance() const { return std::max(C * (h + dt), floor); }
};

struct CertificateEntry {
  CertificateKind kind = CertificateKind::MassSuperinequality;
  int test_function = -1;  // -1 when the certificate uses no test function
  double p = 0.0;          // entropy weights, 0 when unused
  double k = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  /// Equality: lhs - rhs (ZEvolution: L1-in-time norm of the pointwise
  /// residual). Inequality: the slack, nonnegative when the inequality holds.
  double residual = 0.0;
  /// Difference between the eps-source and the limit source u + v, weighted
  /// as in the certificate (absolute for the w form, signed for the entropy).
  double eps_discrepancy = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  /// Size of the defect measured against the tolerance.
  double defect() const { return is_equality(kind) ? std::abs(residual) : std::max(0.0, -residual); }
};

struct CertificateReport {
  std::vector<CertificateEntry> entries;
  std::array<std::optional<ToleranceModel>, kCertificateKinds> tolerance_models{};

  /// Sets tolerances of every entry of `kind` and recomputes pass flags.
  void apply(CertificateKind kind, const ToleranceModel& model);
  bool all_pass() const;
  /// Largest |residual| among entries of `kind` (0 if none).
  double max_abs_residual(CertificateKind kind) const;
  /// Most negative residual among entries of `kind` (+inf if none).
  double min_residual(CertificateKind kind) const;
  std::size_t count(CertificateKind kind) const;
};

struct CertificateSpec {
  bool mass = true;
  bool weak_w = true;
  bool weak_v = true;
  bool entropy = true;
  bool z_evolution = true;
  std::vector<TestWeights> weights;
  std::vector<TestFunction> tests;
};

/// Streams states in increasing time and accumulates every enabled
/// certificate. Time-derivative terms integrate psi_t exactly between frames
/// (so constants are reproduced exactly); other space-time integrals use the
/// trapezoid rule over frames; spatial integrals use the midpoint rule with
/// centered-difference gradients. The z identity is evaluated at interior
/// frames with a centered time difference.
class CertificateEngine {
 public:
  CertificateEngine(const Grid& grid, const ModelParams& params, CertificateSpec spec);
  ~CertificateEngine();
  CertificateEngine(CertificateEngine&&) noexcept;
  CertificateEngine& operator=(CertificateEngine&&) noexcept;

  void observe(const State& state);
  /// Raw residuals; tolerances are zero until `CertificateReport::apply`.
  CertificateReport finish() const;
  std::size_t frames() const;
  /// Largest time gap between consecutive frames.
  double max_frame_gap() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Runs an engine over the stored snapshots of `traj`.
CertificateReport certify(const Trajectory& traj, const CertificateSpec& spec);

CertificateReport certify_mass_superinequality(const Trajectory& traj);
CertificateReport certify_weakform_w(const Trajectory& traj, const TestFunction& psi);
/// Throws if psi has a negative amplitude.
CertificateReport certify_weakform_v(const Trajectory& traj, const TestFunction& psi);
/// Throws if the weights are inadmissible or psi is negative.
CertificateReport certify_entropy_superinequality(const Trajectory& traj,
                                                  const TestWeights& weights,
                                                  const TestFunction& psi);
/// Throws if the snapshot cadence exceeds twice the largest step.
CertificateReport z_evolution_residual(const Trajectory& traj, const TestWeights& weights,
                                       const TestFunction& psi);

}  // namespace chemo
