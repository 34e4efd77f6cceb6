#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chemo/certificates.hpp"
#include "chemo/cli/config.hpp"
#include "chemo/estimates.hpp"

namespace chemo::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Exit statuses of the subcommands.
enum ExitStatus : int { kExitPass = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitRuntime = 3 };

/// Worker count for `jobs` independent tasks: CHEMO_THREADS if set (>= 1),
/// otherwise the hardware concurrency, never more than `jobs`.
int worker_count(int jobs);

/// Runs fn(0..n-1) on worker_count(n) threads; rethrows the first exception
/// by index after all tasks finish.
void parallel_for(int n, const std::function<void(int)>& fn);

/// Residuals at or below this are treated as round-off when fitting orders.
inline constexpr double kRoundoffFloor = 1e-12;
/// Required empirical order of refinement studies.
inline constexpr double kRequiredOrder = 0.9;

/// Least-squares slope of log(y) against log(h); nullopt (saturated) when
/// the finest value is at round-off. Throws if fewer than two points.
std::optional<double> fitted_order(const std::vector<double>& h, const std::vector<double>& y,
                                   double floor = kRoundoffFloor);

// --- simulate -------------------------------------------------------------

struct SimulateResult {
  InitialData base;
  InitialData initial;  // regularized at model.eps
  Trajectory traj;
  EstimateReport estimates;
  std::vector<UniformIntegrabilityProbe> probes;
  // Over every state the stepper produced; z over all configured weights.
  double min_value = 0.0;
  double min_z = 1.0;
  double max_z = 0.0;
  double max_positive_reaction_u = 0.0;
};

/// Regularizes the configured data, integrates to T with snapshots at the
/// output times and every frame_interval, and evaluates every estimate.
SimulateResult simulate_run(const RunConfig& config);
int run_simulate(const RunConfig& config);

// --- certify / refine ladder ---------------------------------------------

/// Levels coarse to fine; the last one is the configured grid and step cap.
/// Each coarser level halves the cells per axis and multiplies max_dt by 4.
struct LadderLevel {
  Grid grid;
  SolverConfig solver;
};
std::vector<LadderLevel> make_ladder(const RunConfig& config, int levels);

struct LadderRun {
  Grid grid;
  double h = 0.0;
  double dt = 0.0;  // largest step taken
  long steps = 0;
  double min_raw_value = 0.0;
  CertificateReport report;
  std::vector<State> snapshots;  // at the output times
};

struct KindCalibration {
  CertificateKind kind = CertificateKind::MassSuperinequality;
  ToleranceModel model;
  std::vector<double> max_abs_residual;  // per level
  std::optional<double> order;           // nullopt when saturated
  bool order_pass = false;
};

struct CertifyResult {
  std::vector<LadderRun> levels;
  std::vector<TestFunction> tests;
  std::array<KindCalibration, kCertificateKinds> calibration;
  bool certificates_pass = false;
  bool orders_pass = false;
  bool pass() const { return certificates_pass && orders_pass; }
};

/// Runs the ladder with streaming certificates on every step, calibrates
/// C = 2 max over the coarser levels of max|residual| / (h + dt), applies it
/// to the finest level and fits residual orders.
CertifyResult certify_run(const RunConfig& config, int levels);
int run_certify(const RunConfig& config, int levels);

struct RefineResult {
  CertifyResult ladder;
  /// L1 differences of u, v, w between level l and l+1 (restricted to the
  /// coarse grid), maximum over output times; one entry per coarse level.
  std::vector<std::array<double, 3>> differences;
  std::array<std::optional<double>, 3> solution_order{};
  bool pass = false;
};

RefineResult refine_run(const RunConfig& config, int levels);
int run_refine(const RunConfig& config, int levels);

// --- sweep ----------------------------------------------------------------

struct SweepLevel {
  double eps = 0.0;
  bool ok = false;
  std::string error;
  Trajectory traj;
  double grad_log_v = 0.0;  // dissipation integrals over (1 + T)
  double grad_w = 0.0;
  double v_grad_w = 0.0;
  double sup_w_lp = 0.0;
  std::vector<EntropyDissipationIntegrals> entropy_dissipation;  // one per weight, unscaled
};

struct SweepResult {
  std::vector<SweepLevel> levels;
  /// ||f_{j+1} - f_j||_{L1(Omega x (0,T))} for u, v, w.
  std::vector<std::array<double, 3>> gaps;
  EstimateReport checks;  // family-level rows
  std::vector<EstimateReport> level_estimates;
  bool pass = false;
};

SweepResult sweep_run(const RunConfig& config);
int run_sweep(const RunConfig& config);

/// Trapezoid L1(Omega x (0,T)) distance of two trajectories with identical
/// snapshot times.
std::array<double, 3> spacetime_l1_gap(const Trajectory& a, const Trajectory& b);

// --- identities -----------------------------------------------------------

struct IdentitiesResult {
  std::vector<EntropyIdentityReport> reports;
  bool pass = false;
};

/// p in {0.5, 1, 2, 4}, k = sqrt(p)(p+1)/2 times {1.1, 2, 10}.
IdentitiesResult verify_identities_run(int samples, std::uint64_t seed);
/// Writes identities.csv when `out_dir` is given.
int run_verify_identities(const RunConfig& config, const std::optional<std::string>& out_dir);

/// manifest.cfg: version comments followed by the config echo.
void write_manifest(const RunConfig& config, const std::string& command);

}  // namespace chemo::cli
