#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace driftlab::harness {

enum class ExperimentId { exp1, exp2, exp3, exp4 };

std::string to_string(ExperimentId id);
ExperimentId parse_experiment_id(const std::string& s);

/// All experiment settings. Which keys a config file may set depends on the
/// experiment; see allowed_keys().
struct ExperimentConfig {
  ExperimentId experiment = ExperimentId::exp1;
  std::uint64_t seed = 20240601;       // master seed for all streams
  std::vector<std::uint64_t> seeds;    // replicate ids
  std::vector<int> horizons;
  std::string out = "out";
  int workers = 1;

  // Linear-Gaussian environment (exp1, exp2) and exp3 geometry.
  int dimension = 2;
  Eigen::MatrixXd sigma;  // empty means identity of `dimension`

  // exp1: per-step Fisher drift of the drifting arms.
  double drift_rate = 0.05;

  // exp2: per-step Fisher lengths; exp4: totals C_exo and gamma per run.
  std::vector<double> exo_amplitudes;
  std::vector<double> feedback_gains;
  bool persistent_exo = true;
  int permutations = 200;

  // exp3
  int num_inits = 100;
  double condition_number = 10.0;
  double rho = 0.81;
  double target_ratio = 1e-4;
  int max_steps = 100000;

  // exp4
  int input_dim = 8;
  int feature_dim = 32;
  int hidden_width = 32;
  double feature_scale = 1.0;
  double teacher_scale = 1.0;
  double output_init_scale = 0.1;
  double learning_rate = 0.05;
  double noise_sd = 0.3;
  int probe_size = 256;
  int refresh_interval = 1;
  int population_batch = 40;
  int final_population_batch = 2000;

  /// Largest horizon, used only for validation in exp4.
  int heldout_horizon() const { return horizons.empty() ? 0 : horizons.back(); }

  /// Sigma as a matrix, defaulting to the identity.
  Eigen::MatrixXd sigma_matrix() const;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

/// Built-in desk-scale defaults for an experiment.
ExperimentConfig default_config(ExperimentId id);

/// Keys accepted in a config file for the given experiment.
std::vector<std::string> allowed_keys(ExperimentId id);

/// Parses a config on top of the defaults of `id`. Unknown keys, a mismatching
/// "experiment" field, and type errors throw ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j, ExperimentId id);

/// Reads and parses a config file. A missing or unreadable file throws
/// ConfigError naming the path.
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentId id);

/// Applies the DRIFTLAB_SEED environment variable, then `cli_seed`, to the master seed.
void apply_seed_overrides(ExperimentConfig& cfg, std::optional<std::uint64_t> cli_seed);

nlohmann::json config_to_json(const ExperimentConfig& cfg);

}  // namespace driftlab::harness
