#include "chemo/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "chemo/cli/csv.hpp"

namespace chemo::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-'))
      return false;
  return true;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap map;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(number);
    if (eq == std::string::npos) throw ConfigError(where, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where, "invalid key '" + key + "'");
    if (!map.emplace(key, value).second) throw ConfigError(key, "duplicate key");
  }
  return map;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

double parse_real(const std::string& field, const std::string& text) {
  double x = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, x);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(field, "expected a real number, got '" + text + "'");
  if (!std::isfinite(x)) throw ConfigError(field, "must be finite");
  return x;
}

std::int64_t parse_integer(const std::string& field, const std::string& text) {
  std::int64_t x = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, x);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(field, "expected an integer, got '" + text + "'");
  return x;
}

std::uint64_t parse_u64(const std::string& field, const std::string& text) {
  std::uint64_t x = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, x);
  if (ec != std::errc() || ptr != end || text.empty())
    throw ConfigError(field, "expected an unsigned 64-bit integer, got '" + text + "'");
  return x;
}

bool parse_bool(const std::string& field, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(field, "expected true or false, got '" + text + "'");
}

std::vector<double> parse_real_list(const std::string& field, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_real(field, item));
  return out;
}

namespace {

int parse_int(const std::string& field, const std::string& text) {
  const std::int64_t x = parse_integer(field, text);
  if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(field, "out of range");
  return static_cast<int>(x);
}

std::vector<TestWeights> parse_weights(const std::string& field, const std::string& text) {
  std::vector<TestWeights> out;
  for (const auto& item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError(field, "expected p:k pairs, got '" + item + "'");
    TestWeights w;
    w.p = parse_real(field, trim(item.substr(0, colon)));
    w.k = parse_real(field, trim(item.substr(colon + 1)));
    out.push_back(w);
  }
  return out;
}

FieldKind parse_kind(const std::string& field, const std::string& text) {
  if (text == "constant") return FieldKind::Constant;
  if (text == "gaussian-bump") return FieldKind::GaussianBump;
  if (text == "two-bump") return FieldKind::TwoBump;
  if (text == "random-seeded") return FieldKind::RandomSeeded;
  throw ConfigError(field,
                    "unknown profile '" + text +
                        "' (constant, gaussian-bump, two-bump, random-seeded)");
}

std::array<double, 2> parse_point(const std::string& field, const std::string& text) {
  const auto v = parse_real_list(field, text);
  if (v.size() == 1) return {v[0], 0.5};
  if (v.size() == 2) return {v[0], v[1]};
  throw ConfigError(field, "expected x or x, y");
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_real(v[i]);
  }
  return s;
}

const char* kFieldNames[3] = {"u", "v", "w"};

}  // namespace

const char* field_kind_name(FieldKind kind) {
  switch (kind) {
    case FieldKind::Constant: return "constant";
    case FieldKind::GaussianBump: return "gaussian-bump";
    case FieldKind::TwoBump: return "two-bump";
    case FieldKind::RandomSeeded: return "random-seeded";
  }
  return "unknown";
}

Grid GridSpec::make() const {
  if (dim == 1) return Grid(cells[0], length[0]);
  return Grid(cells[0], cells[1], length[0], length[1]);
}

void apply_preset(RunConfig& config, const std::string& name) {
  auto constant = [](double c) {
    FieldSpec f;
    f.kind = FieldKind::Constant;
    f.value = c;
    return f;
  };
  if (name == "zero") {
    config.initial = {constant(0.0), constant(0.0), constant(0.0)};
  } else if (name == "constant-half") {
    config.initial = {constant(0.5), constant(0.5), constant(0.5)};
  } else if (name == "canonical") {
    FieldSpec u;
    u.kind = FieldKind::GaussianBump;
    u.mass = 0.5;
    u.center = {0.35, 0.4};
    u.sigma = 0.15;
    FieldSpec v = u;
    v.mass = 0.3;
    v.center = {0.65, 0.6};
    config.initial = {u, v, constant(0.1)};
  } else {
    throw ConfigError("initial.preset",
                      "unknown preset '" + name + "' (zero, constant-half, canonical)");
  }
  config.preset = name;
}

void RunConfig::validate() const {
  if (grid.dim != 1 && grid.dim != 2) throw ConfigError("grid.dim", "must be 1 or 2");
  for (int a = 0; a < grid.dim; ++a) {
    if (grid.cells[a] < 1) throw ConfigError("grid.cells", "must be positive");
    if (!(grid.length[a] > 0.0)) throw ConfigError("grid.length", "must be positive");
  }
  if (!(model.theta > 1.0)) throw ConfigError("model.theta", "must exceed 1");
  if (!(model.eps >= 0.0 && model.eps < 1.0)) throw ConfigError("model.eps", "must lie in [0, 1)");
  if (model.dim_N < 1) throw ConfigError("model.dim_N", "must be at least 1");
  if (!(solver.cfl_safety > 0.0 && solver.cfl_safety <= 1.0))
    throw ConfigError("solver.cfl_safety", "must lie in (0, 1]");
  if (!(solver.max_dt > 0.0)) throw ConfigError("solver.max_dt", "must be positive");
  if (!(solver.linear_solver_tol > 0.0)) throw ConfigError("solver.linear_tol", "must be positive");
  if (solver.linear_solver_max_iter < 1)
    throw ConfigError("solver.linear_max_iter", "must be positive");
  if (!(T >= 0.0)) throw ConfigError("time.T", "must be nonnegative");
  for (double t : output_times)
    if (!(t >= 0.0 && t <= T)) throw ConfigError("output.times", "every time must lie in [0, T]");
  if (!(frame_interval > 0.0)) throw ConfigError("output.frame_interval", "must be positive");
  if (out_dir.empty()) throw ConfigError("output.dir", "must not be empty");

  for (int f = 0; f < 3; ++f) {
    const FieldSpec& s = initial[f];
    const std::string key = std::string("initial.") + kFieldNames[f];
    if (s.value < 0.0) throw ConfigError(key + ".value", "must be nonnegative");
    if (s.kind == FieldKind::GaussianBump || s.kind == FieldKind::TwoBump) {
      if (!(s.sigma > 0.0)) throw ConfigError(key + ".sigma", "must be positive");
      if (s.mass < 0.0) throw ConfigError(key + ".mass", "must be nonnegative");
      if (s.mass2 < 0.0) throw ConfigError(key + ".mass2", "must be nonnegative");
    }
    if (s.kind == FieldKind::RandomSeeded) {
      if (s.mean < 0.0) throw ConfigError(key + ".mean", "must be nonnegative");
      if (!(s.amplitude >= 0.0 && s.amplitude <= 1.0))
        throw ConfigError(key + ".amplitude", "must lie in [0, 1]");
    }
  }

  if (w_lp_p < 0.0) throw ConfigError("checks.w_lp_p", "must be nonnegative (0 disables)");
  if (w_lp_p > 0.0) {
    const double threshold = theta_threshold(model.dim_N);
    if (!(model.theta > threshold))
      throw ConfigError("model.theta", "the w-L^p check needs theta > (2N-2)/N = " +
                                           format_real(threshold));
    const double p_max = admissible_w_p(model.theta, model.dim_N);
    if (w_lp_p < 1.0 || w_lp_p > p_max)
      throw ConfigError("checks.w_lp_p", "must lie in [1, " + format_real(p_max) + "]");
  }
  if (weights.empty()) throw ConfigError("certify.weights", "need at least one p:k pair");
  for (const auto& w : weights) {
    try {
      w.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("certify.weights", e.what());
    }
  }
  if (test_count < 1) throw ConfigError("certify.tests", "must be positive");
  if (levels < 1) throw ConfigError("certify.levels", "must be positive");
  for (double e : probe_eta)
    if (!(e > 0.0)) throw ConfigError("probe.eta", "must be positive");
  if (probe_trials < 0) throw ConfigError("probe.trials", "must be nonnegative");
  if (identity_samples < 1) throw ConfigError("identities.samples", "must be positive");
}

void RunConfig::validate_ladder(int n_levels) const {
  if (n_levels < 2) throw ConfigError("levels", "a refinement ladder needs at least 2 levels");
  if (n_levels > 8) throw ConfigError("levels", "at most 8 levels");
  const int factor = 1 << (n_levels - 1);
  for (int a = 0; a < grid.dim; ++a) {
    if (grid.cells[a] % factor != 0)
      throw ConfigError("grid.cells", "must be divisible by 2^(levels-1) = " + std::to_string(factor));
    if (grid.cells[a] / factor < 5)
      throw ConfigError("grid.cells", "coarsest ladder level needs at least 5 cells per axis");
  }
}

void RunConfig::validate_sweep() const {
  if (sweep_eps.size() < 2) throw ConfigError("sweep.eps", "need at least two levels");
  for (std::size_t j = 0; j < sweep_eps.size(); ++j) {
    if (!(sweep_eps[j] > 0.0 && sweep_eps[j] < 1.0))
      throw ConfigError("sweep.eps", "every value must lie in (0, 1)");
    if (j > 0 && !(sweep_eps[j] < sweep_eps[j - 1]))
      throw ConfigError("sweep.eps", "must be strictly decreasing");
  }
}

RunConfig load_run_config(const ConfigMap& map) {
  RunConfig c;
  const auto preset = map.find("initial.preset");
  apply_preset(c, preset != map.end() ? preset->second : c.preset);

  using Setter = std::function<void(const std::string&, const std::string&)>;
  std::map<std::string, Setter> setters;
  setters["seed"] = [&](auto& k, auto& v) { c.seed = parse_u64(k, v); };
  setters["grid.dim"] = [&](auto& k, auto& v) { c.grid.dim = parse_int(k, v); };
  setters["grid.cells"] = [&](auto& k, auto& v) {
    const auto items = split_list(v);
    if (items.empty() || items.size() > 2) throw ConfigError(k, "expected n or nx, ny");
    c.grid.cells[0] = parse_int(k, items[0]);
    c.grid.cells[1] = items.size() == 2 ? parse_int(k, items[1]) : c.grid.cells[0];
  };
  setters["grid.length"] = [&](auto& k, auto& v) {
    const auto items = parse_real_list(k, v);
    if (items.empty() || items.size() > 2) throw ConfigError(k, "expected L or Lx, Ly");
    c.grid.length[0] = items[0];
    c.grid.length[1] = items.size() == 2 ? items[1] : items[0];
  };
  setters["model.theta"] = [&](auto& k, auto& v) { c.model.theta = parse_real(k, v); };
  setters["model.eps"] = [&](auto& k, auto& v) { c.model.eps = parse_real(k, v); };
  setters["model.dim_N"] = [&](auto& k, auto& v) { c.model.dim_N = parse_int(k, v); };
  setters["solver.cfl_safety"] = [&](auto& k, auto& v) { c.solver.cfl_safety = parse_real(k, v); };
  setters["solver.max_dt"] = [&](auto& k, auto& v) { c.solver.max_dt = parse_real(k, v); };
  setters["solver.linear_tol"] = [&](auto& k, auto& v) {
    c.solver.linear_solver_tol = parse_real(k, v);
  };
  setters["solver.linear_max_iter"] = [&](auto& k, auto& v) {
    c.solver.linear_solver_max_iter = parse_int(k, v);
  };
  setters["time.T"] = [&](auto& k, auto& v) { c.T = parse_real(k, v); };
  setters["output.times"] = [&](auto& k, auto& v) { c.output_times = parse_real_list(k, v); };
  setters["output.frame_interval"] = [&](auto& k, auto& v) { c.frame_interval = parse_real(k, v); };
  setters["output.dir"] = [&](auto&, auto& v) { c.out_dir = v; };
  setters["initial.preset"] = [](auto&, auto&) {};
  for (int f = 0; f < 3; ++f) {
    const std::string base = std::string("initial.") + kFieldNames[f];
    FieldSpec& s = c.initial[f];
    setters[base] = [&s](auto& k, auto& v) { s.kind = parse_kind(k, v); };
    setters[base + ".value"] = [&s](auto& k, auto& v) { s.value = parse_real(k, v); };
    setters[base + ".mass"] = [&s](auto& k, auto& v) { s.mass = parse_real(k, v); };
    setters[base + ".center"] = [&s](auto& k, auto& v) { s.center = parse_point(k, v); };
    setters[base + ".sigma"] = [&s](auto& k, auto& v) { s.sigma = parse_real(k, v); };
    setters[base + ".mass2"] = [&s](auto& k, auto& v) { s.mass2 = parse_real(k, v); };
    setters[base + ".center2"] = [&s](auto& k, auto& v) { s.center2 = parse_point(k, v); };
    setters[base + ".mean"] = [&s](auto& k, auto& v) { s.mean = parse_real(k, v); };
    setters[base + ".amplitude"] = [&s](auto& k, auto& v) { s.amplitude = parse_real(k, v); };
  }
  setters["checks.estimates"] = [&](auto& k, auto& v) { c.estimates = parse_bool(k, v); };
  setters["checks.certificates"] = [&](auto& k, auto& v) { c.certificates = parse_bool(k, v); };
  setters["checks.w_lp_p"] = [&](auto& k, auto& v) { c.w_lp_p = parse_real(k, v); };
  setters["certify.weights"] = [&](auto& k, auto& v) { c.weights = parse_weights(k, v); };
  setters["certify.tests"] = [&](auto& k, auto& v) { c.test_count = parse_int(k, v); };
  setters["certify.levels"] = [&](auto& k, auto& v) { c.levels = parse_int(k, v); };
  setters["probe.eta"] = [&](auto& k, auto& v) { c.probe_eta = parse_real_list(k, v); };
  setters["probe.trials"] = [&](auto& k, auto& v) { c.probe_trials = parse_int(k, v); };
  setters["sweep.eps"] = [&](auto& k, auto& v) { c.sweep_eps = parse_real_list(k, v); };
  setters["identities.samples"] = [&](auto& k, auto& v) { c.identity_samples = parse_int(k, v); };

  for (const auto& [key, value] : map) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(key, "unknown key");
    it->second(key, value);
  }
  c.validate();
  return c;
}

RunConfig load_run_config_file(const std::string& path) {
  return load_run_config(parse_config_file(path));
}

std::string echo_config(const RunConfig& c) {
  std::ostringstream o;
  auto line = [&o](const std::string& k, const std::string& v) { o << k << " = " << v << '\n'; };
  auto real = [](double x) { return format_real(x); };
  line("seed", std::to_string(c.seed));
  line("grid.dim", std::to_string(c.grid.dim));
  if (c.grid.dim == 1) {
    line("grid.cells", std::to_string(c.grid.cells[0]));
    line("grid.length", real(c.grid.length[0]));
  } else {
    line("grid.cells", std::to_string(c.grid.cells[0]) + ", " + std::to_string(c.grid.cells[1]));
    line("grid.length", real(c.grid.length[0]) + ", " + real(c.grid.length[1]));
  }
  line("model.theta", real(c.model.theta));
  line("model.eps", real(c.model.eps));
  line("model.dim_N", std::to_string(c.model.dim_N));
  line("solver.cfl_safety", real(c.solver.cfl_safety));
  line("solver.max_dt", real(c.solver.max_dt));
  line("solver.linear_tol", real(c.solver.linear_solver_tol));
  line("solver.linear_max_iter", std::to_string(c.solver.linear_solver_max_iter));
  line("time.T", real(c.T));
  line("output.times", join(c.output_times));
  line("output.frame_interval", real(c.frame_interval));
  line("output.dir", c.out_dir);
  line("initial.preset", c.preset);
  for (int f = 0; f < 3; ++f) {
    const FieldSpec& s = c.initial[f];
    const std::string base = std::string("initial.") + kFieldNames[f];
    line(base, field_kind_name(s.kind));
    line(base + ".value", real(s.value));
    line(base + ".mass", real(s.mass));
    line(base + ".center", real(s.center[0]) + ", " + real(s.center[1]));
    line(base + ".sigma", real(s.sigma));
    line(base + ".mass2", real(s.mass2));
    line(base + ".center2", real(s.center2[0]) + ", " + real(s.center2[1]));
    line(base + ".mean", real(s.mean));
    line(base + ".amplitude", real(s.amplitude));
  }
  line("checks.estimates", c.estimates ? "true" : "false");
  line("checks.certificates", c.certificates ? "true" : "false");
  line("checks.w_lp_p", real(c.w_lp_p));
  std::string weights;
  for (std::size_t i = 0; i < c.weights.size(); ++i) {
    if (i) weights += ", ";
    weights += real(c.weights[i].p) + ":" + real(c.weights[i].k);
  }
  line("certify.weights", weights);
  line("certify.tests", std::to_string(c.test_count));
  line("certify.levels", std::to_string(c.levels));
  line("probe.eta", join(c.probe_eta));
  line("probe.trials", std::to_string(c.probe_trials));
  line("sweep.eps", join(c.sweep_eps));
  line("identities.samples", std::to_string(c.identity_samples));
  return o.str();
}

}  // namespace chemo::cli
