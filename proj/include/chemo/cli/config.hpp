#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "chemo/identities.hpp"
#include "chemo/model.hpp"
#include "chemo/solver.hpp"

namespace chemo::cli {

/// Invalid or unreadable configuration; `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& problem)
      : std::runtime_error("config: " + field + ": " + problem), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Flat `key = value` pairs; `#` starts a comment, keys may be dotted.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap parse_config_file(const std::string& path);

struct GridSpec {
  int dim = 2;
  std::array<int, 2> cells{64, 64};
  std::array<double, 2> length{1.0, 1.0};

  Grid make() const;
};

enum class FieldKind { Constant, GaussianBump, TwoBump, RandomSeeded };
const char* field_kind_name(FieldKind kind);

/// Initial profile of one component.
///   constant       value
///   gaussian-bump  mass / (2 pi sigma^2) exp(-|x - center|^2 / (2 sigma^2)) (+ value)
///   two-bump       the same with a second (mass2, center2) bump
///   random-seeded  mean (1 + amplitude (2U - 1)), U uniform per cell
struct FieldSpec {
  FieldKind kind = FieldKind::Constant;
  double value = 0.0;
  double mass = 0.0;
  std::array<double, 2> center{0.5, 0.5};
  double sigma = 0.1;
  double mass2 = 0.0;
  std::array<double, 2> center2{0.5, 0.5};
  double mean = 0.0;
  double amplitude = 0.0;
};

struct RunConfig {
  std::uint64_t seed = 1;
  GridSpec grid;
  ModelParams model{2.0, 0.25, 2};
  SolverConfig solver;
  double T = 2.0;
  /// Extra snapshot times; 0 and T are always written.
  std::vector<double> output_times{0.5, 1.0, 1.5};
  /// Frame spacing of sweep trajectories and the post-hoc integrals.
  double frame_interval = 0.02;
  std::string out_dir = "out";

  std::string preset = "canonical";
  std::array<FieldSpec, 3> initial;  // u, v, w

  bool estimates = true;
  bool certificates = true;
  /// Exponent of the w-L^p band; 0 disables it.
  double w_lp_p = 2.0;

  std::vector<TestWeights> weights{TestWeights{1.0, 2.0}};
  int test_count = 20;
  int levels = 3;

  std::vector<double> probe_eta{0.25, 1.0};
  int probe_trials = 200;

  std::vector<double> sweep_eps{0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125};
  int identity_samples = 100;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
  /// Ladder checks used by certify and refine.
  void validate_ladder(int levels) const;
  /// Sweep ladder checks.
  void validate_sweep() const;
};

/// Sets the three field specs from a named preset: zero, constant-half,
/// canonical. Throws ConfigError for an unknown name.
void apply_preset(RunConfig& config, const std::string& name);

/// Builds a RunConfig from defaults, the preset, then the given keys.
RunConfig load_run_config(const ConfigMap& map);
RunConfig load_run_config_file(const std::string& path);

/// Every key of `config` in a fixed order; parsing the result reproduces it.
std::string echo_config(const RunConfig& config);

// Scalar parsers used by the loader; throw ConfigError naming `field`.
double parse_real(const std::string& field, const std::string& text);
std::int64_t parse_integer(const std::string& field, const std::string& text);
std::uint64_t parse_u64(const std::string& field, const std::string& text);
bool parse_bool(const std::string& field, const std::string& text);
std::vector<double> parse_real_list(const std::string& field, const std::string& text);

}  // namespace chemo::cli
