#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cfseq/error.hpp"
#include "cfseq/experiment.hpp"

namespace cfseq {

using json = nlohmann::json;

namespace {

constexpr std::string_view kKeys[] = {
    "system",          "theta_true",      "x0",           "horizon",         "delta",
    "process_std",     "observation_std", "prior_bounds", "outer_particles", "inner_particles",
    "jitter_scale",    "inner_resampling", "intervention", "regime",          "n_cf",
    "rmse_window",     "seed",            "output_dir",   "smoother_stride",
};

[[noreturn]] void fail(std::string_view field, const std::string& message) {
  throw ConfigError("config." + std::string(field) + ": " + message);
}

const json& require(const json& doc, std::string_view key) {
  const auto it = doc.find(std::string(key));
  if (it == doc.end()) fail(key, "missing");
  return *it;
}

double get_double(const json& doc, std::string_view key) {
  const json& v = require(doc, key);
  if (!v.is_number()) fail(key, "expected a number");
  return v.get<double>();
}

std::size_t get_count(const json& doc, std::string_view key) {
  const json& v = require(doc, key);
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer()) fail(key, "must not be negative, got " + v.dump());
  fail(key, "expected a non-negative integer");
}

std::vector<double> get_vector(const json& doc, std::string_view key) {
  const json& v = require(doc, key);
  if (!v.is_array()) fail(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) fail(key, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::string get_string(const json& doc, std::string_view key) {
  const json& v = require(doc, key);
  if (!v.is_string()) fail(key, "expected a string");
  return v.get<std::string>();
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

json to_json(const ExperimentConfig& c) {
  json bounds = json::array();
  for (const auto& b : c.prior_bounds) bounds.push_back({b.low, b.high});
  json intervention = json::object();
  if (c.intervention_absolute) {
    intervention["absolute"] = *c.intervention_absolute;
  } else {
    intervention["component"] = c.intervention_component;
    intervention["delta"] = c.intervention_delta;
  }
  json doc = json::object();
  doc["system"] = std::string(to_string(c.system));
  doc["theta_true"] = c.theta_true;
  doc["x0"] = c.x0;
  doc["horizon"] = c.horizon;
  doc["delta"] = c.delta;
  doc["process_std"] = c.process_std;
  doc["observation_std"] = c.observation_std;
  doc["prior_bounds"] = std::move(bounds);
  doc["outer_particles"] = c.outer_particles;
  doc["inner_particles"] = c.inner_particles;
  doc["jitter_scale"] = c.jitter_scale;
  doc["inner_resampling"] = c.inner_resampling;
  doc["intervention"] = std::move(intervention);
  doc["regime"] = std::string(to_string(c.regime));
  doc["n_cf"] = c.n_cf;
  doc["rmse_window"] = c.rmse_window;
  doc["seed"] = c.seed;
  doc["output_dir"] = c.output_dir;
  doc["smoother_stride"] = c.smoother_stride;
  return doc;
}

ExperimentConfig from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (auto k : kKeys) known = known || k == key;
    if (!known) fail(key, "unknown key");
  }

  ExperimentConfig c;
  try {
    c.system = parse_system_id(get_string(doc, "system"));
  } catch (const ConfigError& e) {
    fail("system", e.what());
  }
  c.theta_true = get_vector(doc, "theta_true");
  c.x0 = get_vector(doc, "x0");
  {
    const json& h = require(doc, "horizon");
    if (h.is_number_integer() && !h.is_number_unsigned()) {
      fail("horizon", "must be >= 1, got " + h.dump());
    }
    c.horizon = get_count(doc, "horizon");
  }
  c.delta = get_double(doc, "delta");
  c.process_std = get_double(doc, "process_std");
  c.observation_std = get_double(doc, "observation_std");

  const json& bounds = require(doc, "prior_bounds");
  if (!bounds.is_array()) fail("prior_bounds", "expected an array of [low, high] pairs");
  for (const auto& b : bounds) {
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
      fail("prior_bounds", "expected an array of [low, high] pairs");
    }
    c.prior_bounds.push_back({b[0].get<double>(), b[1].get<double>()});
  }

  c.outer_particles = get_count(doc, "outer_particles");
  c.inner_particles = get_count(doc, "inner_particles");
  if (doc.contains("jitter_scale")) c.jitter_scale = get_double(doc, "jitter_scale");
  if (doc.contains("inner_resampling")) {
    const json& v = doc["inner_resampling"];
    if (!v.is_boolean()) fail("inner_resampling", "expected true or false");
    c.inner_resampling = v.get<bool>();
  }

  const json& iv = require(doc, "intervention");
  if (!iv.is_object()) fail("intervention", "expected an object");
  for (const auto& [key, value] : iv.items()) {
    if (key != "component" && key != "delta" && key != "absolute") {
      fail("intervention." + key, "unknown key");
    }
  }
  if (iv.contains("absolute")) {
    if (iv.contains("delta") || iv.contains("component")) {
      fail("intervention", "use either {component, delta} or {absolute}");
    }
    c.intervention_absolute = get_vector(iv, "absolute");
  } else {
    try {
      c.intervention_component = get_count(iv, "component");
      c.intervention_delta = get_double(iv, "delta");
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()).replace(0, 7, "config.intervention."));
    }
  }

  try {
    c.regime = parse_theta_mode(get_string(doc, "regime"));
  } catch (const ConfigError& e) {
    fail("regime", e.what());
  }
  c.n_cf = get_count(doc, "n_cf");
  if (doc.contains("rmse_window")) c.rmse_window = get_count(doc, "rmse_window");
  {
    const json& s = require(doc, "seed");
    if (!s.is_number_unsigned()) fail("seed", "expected an unsigned 64-bit integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("output_dir")) c.output_dir = get_string(doc, "output_dir");
  if (doc.contains("smoother_stride")) c.smoother_stride = get_count(doc, "smoother_stride");

  c.validate();
  return c;
}

ExperimentConfig base_preset(SystemId system) {
  ExperimentConfig c;
  c.system = system;
  c.delta = 0.05;
  c.process_std = 0.01;
  c.observation_std = 4.0;
  c.jitter_scale = 0.05;
  c.inner_resampling = true;
  c.intervention_component = 1;
  c.regime = ThetaMode::TrueTheta;
  c.rmse_window = 200;
  c.seed = 1;
  switch (system) {
    case SystemId::Lorenz:
      c.theta_true = {10.0, 28.0, 8.0 / 3.0};
      c.x0 = {1.0, 1.0, 1.0};
      c.intervention_delta = 1e-4;
      break;
    case SystemId::Rossler:
      c.theta_true = {0.2, 0.2, 5.7};
      c.x0 = {1.0, 1.0, 0.0};
      c.intervention_delta = 1e-4;
      break;
    case SystemId::LogisticGrowth:
      c.theta_true = {0.5, 100.0};
      c.x0 = {10.0};
      c.intervention_delta = 10.0;
      break;
    case SystemId::LinearDecay:
      c.theta_true = {1.0};
      c.x0 = {1.0};
      c.intervention_delta = 0.1;
      break;
  }
  return c;
}

void full_scale(ExperimentConfig& c) {
  c.horizon = 2000;
  c.outer_particles = 200;
  c.inner_particles = 200;
  c.n_cf = 30;
}

void desk_scale(ExperimentConfig& c) {
  c.horizon = 500;
  c.outer_particles = 50;
  c.inner_particles = 50;
  c.n_cf = 20;
}

}  // namespace

void ExperimentConfig::validate() const {
  const SystemSpec& s = spec();
  if (theta_true.size() != s.parameter_count()) {
    fail("theta_true", "expected " + std::to_string(s.parameter_count()) + " values for " + s.name);
  }
  if (!all_finite(theta_true)) fail("theta_true", "values must be finite");
  if (x0.size() != s.dimension) {
    fail("x0", "expected " + std::to_string(s.dimension) + " values for " + s.name);
  }
  if (!all_finite(x0)) fail("x0", "values must be finite");
  if (horizon < 1) fail("horizon", "must be >= 1");
  if (!(delta > 0.0) || !std::isfinite(delta)) fail("delta", "must be positive and finite");
  if (!(process_std >= 0.0) || !std::isfinite(process_std)) {
    fail("process_std", "must be >= 0 and finite");
  }
  if (!(observation_std > 0.0) || !std::isfinite(observation_std)) {
    fail("observation_std", "must be positive and finite");
  }
  if (prior_bounds.size() != s.parameter_count()) {
    fail("prior_bounds", "expected " + std::to_string(s.parameter_count()) + " [low, high] pairs");
  }
  for (std::size_t i = 0; i < prior_bounds.size(); ++i) {
    const auto& b = prior_bounds[i];
    if (!std::isfinite(b.low) || !std::isfinite(b.high) || !(b.low < b.high)) {
      fail("prior_bounds[" + std::to_string(i) + "]", "requires finite low < high");
    }
  }
  if (outer_particles < 1) fail("outer_particles", "must be >= 1");
  if (inner_particles < 1) fail("inner_particles", "must be >= 1");
  if (!(jitter_scale >= 0.0) || !std::isfinite(jitter_scale)) {
    fail("jitter_scale", "must be >= 0 and finite");
  }
  if (intervention_absolute) {
    if (intervention_absolute->size() != s.dimension) {
      fail("intervention.absolute", "expected " + std::to_string(s.dimension) + " values");
    }
    if (!all_finite(*intervention_absolute)) fail("intervention.absolute", "values must be finite");
  } else {
    if (intervention_component < 1 || intervention_component > s.dimension) {
      fail("intervention.component", "must be in [1, " + std::to_string(s.dimension) + "]");
    }
    if (!std::isfinite(intervention_delta)) fail("intervention.delta", "must be finite");
  }
  if (n_cf < 1) fail("n_cf", "must be >= 1");
  if (rmse_window < 1) fail("rmse_window", "must be >= 1");
  if (smoother_stride < 1) fail("smoother_stride", "must be >= 1");
}

Intervention ExperimentConfig::intervention() const {
  if (intervention_absolute) return Intervention::absolute(StateVector(*intervention_absolute));
  return Intervention::additive(intervention_component - 1, intervention_delta);
}

FilterConfig ExperimentConfig::filter_config() const {
  FilterConfig f;
  f.outer_count = outer_particles;
  f.inner_count = inner_particles;
  f.delta = delta;
  f.process_std = process_std;
  f.observation_std = observation_std;
  f.kernel = JitterKernel::shrinking(prior(), outer_particles, jitter_scale);
  f.inner_resampling = inner_resampling;
  return f;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return to_json(a) == to_json(b);
}

std::string config_to_json(const ExperimentConfig& config, int indent) {
  return to_json(config).dump(indent);
}

ExperimentConfig parse_config(std::string_view json_text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  // A run manifest embeds the config it was produced from.
  if (doc.is_object() && doc.contains("config") && doc.contains("config_hash")) {
    ExperimentConfig c = from_json(doc["config"]);
    if (doc["config_hash"] != config_hash(c)) {
      throw ConfigError(std::string(source) + ": manifest config_hash does not match its config");
    }
    return c;
  }
  try {
    return from_json(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << config_to_json(config) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::string config_hash(const ExperimentConfig& config) {
  json doc = to_json(config);
  doc.erase("output_dir");
  const std::string canonical = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

ExperimentConfig preset(std::string_view name) {
  const auto dash = name.find('-');
  if (dash == std::string_view::npos) throw ConfigError("unknown preset '" + std::string(name) + "'");
  const std::string_view system = name.substr(0, dash);
  const std::string_view variant = name.substr(dash + 1);

  ExperimentConfig c;
  if (system == "lorenz") {
    c = base_preset(SystemId::Lorenz);
    c.prior_bounds = variant == "wide" ? std::vector<ParameterBounds>{{5, 20}, {15, 50}, {1, 8}}
                                       : std::vector<ParameterBounds>{{5, 15}, {20, 35}, {2, 4}};
  } else if (system == "rossler") {
    c = base_preset(SystemId::Rossler);
    const double c_high = variant == "wide" ? 8.0 : 7.0;
    c.prior_bounds = {{0.1, 0.3}, {0.1, 0.3}, {4.0, c_high}};
  } else if (system == "logistic") {
    c = base_preset(SystemId::LogisticGrowth);
    if (variant == "fast") {
      c.theta_true = {3.9, 1.0};
      c.prior_bounds = {{2.0, 4.0}, {0.8, 1.2}};
    } else {
      c.prior_bounds = {{0.0, 1.0}, {85.0, 110.0}};
    }
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }

  const bool known = system == "logistic" ? (variant == "full" || variant == "fast")
                                         : (variant == "full" || variant == "wide");
  if (known) {
    full_scale(c);
  } else if (variant == "desk") {
    desk_scale(c);
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  c.output_dir = "runs/" + std::string(name);
  c.validate();
  return c;
}

std::vector<std::string> preset_names() {
  return {"lorenz-full",   "lorenz-wide",   "lorenz-desk",  "rossler-full", "rossler-wide",
          "rossler-desk",  "logistic-full", "logistic-fast", "logistic-desk"};
}

std::vector<std::pair<double, double>> noise_grid_pairs(bool include_swapped) {
  std::vector<std::pair<double, double>> pairs{{0.01, 4.0}, {0.01, 9.0}, {1.0, 2.0}, {4.0, 1.0}};
  if (include_swapped) {
    for (std::size_t i = 0, n = pairs.size(); i < n; ++i) {
      pairs.emplace_back(pairs[i].second, pairs[i].first);
    }
  }
  return pairs;
}

}  // namespace cfseq
