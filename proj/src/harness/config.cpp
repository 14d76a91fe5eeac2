#include "driftlab/harness/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "driftlab/errors.hpp"
#include "driftlab/geometry.hpp"

namespace driftlab::harness {

using nlohmann::json;

std::string to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::exp1: return "exp1";
    case ExperimentId::exp2: return "exp2";
    case ExperimentId::exp3: return "exp3";
    case ExperimentId::exp4: return "exp4";
  }
  return "unknown";
}

ExperimentId parse_experiment_id(const std::string& s) {
  if (s == "exp1") return ExperimentId::exp1;
  if (s == "exp2") return ExperimentId::exp2;
  if (s == "exp3") return ExperimentId::exp3;
  if (s == "exp4") return ExperimentId::exp4;
  throw ConfigError("unknown experiment '" + s + "' (expected exp1|exp2|exp3|exp4)");
}

namespace {

std::vector<std::uint64_t> iota_seeds(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::uint64_t i = 0; i < n; ++i) s[i] = i;
  return s;
}

const std::vector<std::string> kCommonKeys = {"experiment", "seed", "seeds", "num_seeds", "out",
                                              "workers"};

}  // namespace

std::vector<std::string> allowed_keys(ExperimentId id) {
  std::vector<std::string> keys = kCommonKeys;
  auto add = [&](std::initializer_list<const char*> more) {
    for (const char* k : more) keys.emplace_back(k);
  };
  switch (id) {
    case ExperimentId::exp1:
      add({"horizons", "dimension", "sigma", "drift_rate"});
      break;
    case ExperimentId::exp2:
      add({"horizons", "dimension", "sigma", "exo_amplitudes", "feedback_gains", "persistent_exo",
           "permutations"});
      break;
    case ExperimentId::exp3:
      add({"dimension", "sigma", "num_inits", "condition_number", "rho", "target_ratio",
           "max_steps"});
      break;
    case ExperimentId::exp4:
      add({"horizons", "exo_amplitudes", "feedback_gains", "persistent_exo", "input_dim",
           "feature_dim", "hidden_width", "feature_scale", "teacher_scale", "output_init_scale",
           "learning_rate", "noise_sd", "probe_size", "refresh_interval", "population_batch",
           "final_population_batch"});
      break;
  }
  return keys;
}

ExperimentConfig default_config(ExperimentId id) {
  ExperimentConfig c;
  c.experiment = id;
  c.out = "out/" + to_string(id);
  switch (id) {
    case ExperimentId::exp1:
      c.seeds = iota_seeds(200);
      c.horizons = {400, 800, 1600, 3200, 6400};
      c.dimension = 2;
      c.sigma = Eigen::Vector2d(1.0, 0.5).asDiagonal();
      break;
    case ExperimentId::exp2:
      c.seeds = iota_seeds(40);
      c.horizons = {1000};
      c.dimension = 2;
      c.sigma = Eigen::Vector2d(1.0, 0.5).asDiagonal();
      c.exo_amplitudes = {0.0, 0.02, 0.05};
      c.feedback_gains = {0.0, 0.02, 0.05};
      break;
    case ExperimentId::exp3:
      c.seeds = {0};
      c.dimension = 10;
      break;
    case ExperimentId::exp4:
      c.seeds = iota_seeds(24);
      c.horizons = {400, 800, 1600, 3200};
      c.exo_amplitudes = {0.0, 2.0, 4.0};
      c.feedback_gains = {0.0, 3.0, 6.0};
      c.persistent_exo = true;
      break;
  }
  return c;
}

Eigen::MatrixXd ExperimentConfig::sigma_matrix() const {
  if (sigma.size() == 0) return Eigen::MatrixXd::Identity(dimension, dimension);
  return sigma;
}

void ExperimentConfig::validate() const {
  const std::string ctx = to_string(experiment) + " config: ";
  if (seeds.empty()) throw ConfigError(ctx + "at least one seed is required");
  if (workers < 1) throw ConfigError(ctx + "workers must be >= 1");
  if (out.empty()) throw ConfigError(ctx + "out must be non-empty");
  if (experiment != ExperimentId::exp3) {
    if (horizons.empty()) throw ConfigError(ctx + "at least one horizon is required");
    if (!std::is_sorted(horizons.begin(), horizons.end()) ||
        std::adjacent_find(horizons.begin(), horizons.end()) != horizons.end()) {
      throw ConfigError(ctx + "horizons must be strictly ascending");
    }
    if (horizons.front() < 2) throw ConfigError(ctx + "horizons must be >= 2");
  }
  auto nonneg = [&](const std::vector<double>& v, const char* name) {
    for (double a : v) {
      if (!std::isfinite(a) || a < 0.0) throw ConfigError(ctx + name + " must be finite and >= 0");
    }
  };
  nonneg(exo_amplitudes, "exo_amplitudes");
  nonneg(feedback_gains, "feedback_gains");
  if (!std::isfinite(drift_rate) || drift_rate < 0.0) {
    throw ConfigError(ctx + "drift_rate must be finite and >= 0");
  }
  if (dimension < 1) throw ConfigError(ctx + "dimension must be >= 1");
  if (sigma.size() != 0) {
    if (sigma.rows() != dimension || sigma.cols() != dimension) {
      throw ConfigError(ctx + "sigma is " + shape_string(sigma.rows(), sigma.cols()) +
                        " but dimension is " + std::to_string(dimension));
    }
    try {
      MetricTensor check(sigma);
    } catch (const std::exception& e) {
      throw ConfigError(ctx + "sigma is not a valid covariance: " + e.what());
    }
  }
  switch (experiment) {
    case ExperimentId::exp1:
      if (horizons.size() < 2) throw ConfigError(ctx + "exp1 needs at least two horizons");
      break;
    case ExperimentId::exp2:
      if (exo_amplitudes.empty() || feedback_gains.empty()) {
        throw ConfigError(ctx + "exo_amplitudes and feedback_gains must be non-empty");
      }
      if (permutations < 1) throw ConfigError(ctx + "permutations must be >= 1");
      break;
    case ExperimentId::exp3:
      if (num_inits < 1) throw ConfigError(ctx + "num_inits must be >= 1");
      if (!(condition_number >= 1.0)) throw ConfigError(ctx + "condition_number must be >= 1");
      if (!(rho > 0.0 && rho < 1.0)) throw ConfigError(ctx + "rho must be in (0, 1)");
      if (!(target_ratio > 0.0 && target_ratio < 1.0)) {
        throw ConfigError(ctx + "target_ratio must be in (0, 1)");
      }
      if (max_steps < 1) throw ConfigError(ctx + "max_steps must be >= 1");
      break;
    case ExperimentId::exp4:
      if (horizons.size() < 3) {
        throw ConfigError(ctx + "exp4 needs at least two calibration horizons and one held-out");
      }
      if (exo_amplitudes.empty() || feedback_gains.empty()) {
        throw ConfigError(ctx + "exo_amplitudes and feedback_gains must be non-empty");
      }
      if (input_dim < 1 || feature_dim < 1 || hidden_width < 1) {
        throw ConfigError(ctx + "input_dim, feature_dim, hidden_width must be >= 1");
      }
      if (!(learning_rate > 0.0)) throw ConfigError(ctx + "learning_rate must be > 0");
      if (!(noise_sd > 0.0)) throw ConfigError(ctx + "noise_sd must be > 0");
      if (!(feature_scale > 0.0) || !(teacher_scale >= 0.0) || !(output_init_scale >= 0.0)) {
        throw ConfigError(ctx + "feature_scale must be > 0; teacher and init scales >= 0");
      }
      if (probe_size < 1 || refresh_interval < 1 || population_batch < 1 ||
          final_population_batch < 1) {
        throw ConfigError(ctx + "probe, refresh and population sizes must be >= 1");
      }
      break;
  }
}

namespace {

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

Eigen::MatrixXd parse_sigma(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("config key 'sigma': expected a non-empty array");
  const auto n = static_cast<Eigen::Index>(j.size());
  if (j.front().is_number()) {
    Eigen::VectorXd diag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!j[static_cast<std::size_t>(i)].is_number()) {
        throw ConfigError("config key 'sigma': mixed entries");
      }
      diag(i) = j[static_cast<std::size_t>(i)].get<double>();
    }
    return diag.asDiagonal();
  }
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ConfigError("config key 'sigma': expected a square matrix");
    }
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace

ExperimentConfig parse_config(const json& j, ExperimentId id) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const auto keys = allowed_keys(id);
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) {
      throw ConfigError("unknown config key '" + k + "' for " + to_string(id));
    }
  }
  ExperimentConfig c = default_config(id);
  if (j.contains("experiment")) {
    const auto named = parse_experiment_id(get_as<std::string>(j, "experiment"));
    if (named != id) {
      throw ConfigError("config names experiment '" + to_string(named) + "' but '" +
                        to_string(id) + "' was requested");
    }
  }
  if (j.contains("seeds") && j.contains("num_seeds")) {
    throw ConfigError("config sets both 'seeds' and 'num_seeds'");
  }
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed");
  if (j.contains("seeds")) c.seeds = get_as<std::vector<std::uint64_t>>(j, "seeds");
  if (j.contains("num_seeds")) c.seeds = iota_seeds(get_as<std::uint64_t>(j, "num_seeds"));
  if (j.contains("out")) c.out = get_as<std::string>(j, "out");
  if (j.contains("workers")) c.workers = get_as<int>(j, "workers");
  if (j.contains("horizons")) c.horizons = get_as<std::vector<int>>(j, "horizons");
  if (j.contains("dimension")) {
    c.dimension = get_as<int>(j, "dimension");
    if (!j.contains("sigma")) c.sigma.resize(0, 0);
  }
  if (j.contains("sigma")) {
    c.sigma = parse_sigma(j.at("sigma"));
    if (!j.contains("dimension")) c.dimension = static_cast<int>(c.sigma.rows());
  }
  if (j.contains("drift_rate")) c.drift_rate = get_as<double>(j, "drift_rate");
  if (j.contains("exo_amplitudes")) c.exo_amplitudes = get_as<std::vector<double>>(j, "exo_amplitudes");
  if (j.contains("feedback_gains")) c.feedback_gains = get_as<std::vector<double>>(j, "feedback_gains");
  if (j.contains("persistent_exo")) c.persistent_exo = get_as<bool>(j, "persistent_exo");
  if (j.contains("permutations")) c.permutations = get_as<int>(j, "permutations");
  if (j.contains("num_inits")) c.num_inits = get_as<int>(j, "num_inits");
  if (j.contains("condition_number")) c.condition_number = get_as<double>(j, "condition_number");
  if (j.contains("rho")) c.rho = get_as<double>(j, "rho");
  if (j.contains("target_ratio")) c.target_ratio = get_as<double>(j, "target_ratio");
  if (j.contains("max_steps")) c.max_steps = get_as<int>(j, "max_steps");
  if (j.contains("input_dim")) c.input_dim = get_as<int>(j, "input_dim");
  if (j.contains("feature_dim")) c.feature_dim = get_as<int>(j, "feature_dim");
  if (j.contains("hidden_width")) c.hidden_width = get_as<int>(j, "hidden_width");
  if (j.contains("feature_scale")) c.feature_scale = get_as<double>(j, "feature_scale");
  if (j.contains("teacher_scale")) c.teacher_scale = get_as<double>(j, "teacher_scale");
  if (j.contains("output_init_scale")) c.output_init_scale = get_as<double>(j, "output_init_scale");
  if (j.contains("learning_rate")) c.learning_rate = get_as<double>(j, "learning_rate");
  if (j.contains("noise_sd")) c.noise_sd = get_as<double>(j, "noise_sd");
  if (j.contains("probe_size")) c.probe_size = get_as<int>(j, "probe_size");
  if (j.contains("refresh_interval")) c.refresh_interval = get_as<int>(j, "refresh_interval");
  if (j.contains("population_batch")) c.population_batch = get_as<int>(j, "population_batch");
  if (j.contains("final_population_batch")) {
    c.final_population_batch = get_as<int>(j, "final_population_batch");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentId id) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, id);
}

void apply_seed_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> cli_seed) {
  if (const char* env = std::getenv("DRIFTLAB_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
      throw ConfigError(std::string("DRIFTLAB_SEED is not an unsigned integer: '") + env + "'");
    }
    cfg.seed = v;
  }
  if (cli_seed) cfg.seed = *cli_seed;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["seed"] = c.seed;
  j["seeds"] = c.seeds;
  if (c.experiment != ExperimentId::exp3) j["horizons"] = c.horizons;
  if (c.experiment != ExperimentId::exp4) {
    j["dimension"] = c.dimension;
    // An unset sigma is left out: its meaning depends on the experiment.
    if (c.sigma.size() != 0) {
      json rows = json::array();
      for (Eigen::Index r = 0; r < c.sigma.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index k = 0; k < c.sigma.cols(); ++k) row.push_back(c.sigma(r, k));
        rows.push_back(row);
      }
      j["sigma"] = rows;
    }
  }
  switch (c.experiment) {
    case ExperimentId::exp1:
      j["drift_rate"] = c.drift_rate;
      break;
    case ExperimentId::exp2:
      j["exo_amplitudes"] = c.exo_amplitudes;
      j["feedback_gains"] = c.feedback_gains;
      j["persistent_exo"] = c.persistent_exo;
      j["permutations"] = c.permutations;
      break;
    case ExperimentId::exp3:
      j["num_inits"] = c.num_inits;
      j["condition_number"] = c.condition_number;
      j["rho"] = c.rho;
      j["target_ratio"] = c.target_ratio;
      j["max_steps"] = c.max_steps;
      break;
    case ExperimentId::exp4:
      j["exo_amplitudes"] = c.exo_amplitudes;
      j["feedback_gains"] = c.feedback_gains;
      j["persistent_exo"] = c.persistent_exo;
      j["input_dim"] = c.input_dim;
      j["feature_dim"] = c.feature_dim;
      j["hidden_width"] = c.hidden_width;
      j["feature_scale"] = c.feature_scale;
      j["teacher_scale"] = c.teacher_scale;
      j["output_init_scale"] = c.output_init_scale;
      j["learning_rate"] = c.learning_rate;
      j["noise_sd"] = c.noise_sd;
      j["probe_size"] = c.probe_size;
      j["refresh_interval"] = c.refresh_interval;
      j["population_batch"] = c.population_batch;
      j["final_population_batch"] = c.final_population_batch;
      break;
  }
  return j;
}

}  // namespace driftlab::harness
