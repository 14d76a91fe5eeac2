#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftlab/geometry.hpp"
#include "driftlab/harness/config.hpp"

namespace driftlab::harness {

/// One row of runs.csv.
struct RunResult {
  std::string run_id;
  std::uint64_t seed = 0;
  int T = 0;
  std::string variant;
  double sum_d = 0.0;
  double sum_kappa = 0.0;
  double c_t = 0.0;
  double empirical_risk = 0.0;
  double population_risk = 0.0;
  double gap = 0.0;
  double aux1 = 0.0;
  double aux2 = 0.0;
  bool diverged = false;
  // Drift settings of the run (not written to the CSV).
  double exo_setting = 0.0;
  double feedback_setting = 0.0;
};

struct ExperimentOutput {
  ExperimentId experiment = ExperimentId::exp1;
  std::vector<RunResult> runs;
  nlohmann::json summary;
};

/// Key of the random streams shared by every run of one replicate. Runs that
/// differ only in drift settings see the same observation and initialization
/// noise.
std::uint64_t replicate_key(ExperimentId id, std::uint64_t seed);

/// Linear-Gaussian trajectory with a running-mean learner. `exo_rate` and
/// `feedback_rate` are per-step Fisher lengths of the exogenous and endogenous
/// increments. The endogenous increment pushes theta away from the learner's
/// estimate.
struct LinearRunParams {
  int T = 0;
  double exo_rate = 0.0;
  double feedback_rate = 0.0;
  bool persistent_exo = true;
  std::uint64_t seed = 0;
};

RunResult run_linear(const GaussianLocationFamily& fam, const LinearRunParams& params,
                     std::uint64_t master_seed, ExperimentId id);

/// Teacher-student trajectory. `exo_total` and `feedback_total` are the
/// expected Fisher lengths over the whole run (C_exo and gamma).
struct TeacherRunParams {
  int T = 0;
  double exo_total = 0.0;
  double feedback_total = 0.0;
  std::uint64_t seed = 0;
};

RunResult run_teacher_student(const ExperimentConfig& cfg, const TeacherRunParams& params);

ExperimentOutput run_exp1(const ExperimentConfig& cfg);
ExperimentOutput run_exp2(const ExperimentConfig& cfg);
ExperimentOutput run_exp3(const ExperimentConfig& cfg);
ExperimentOutput run_exp4(const ExperimentConfig& cfg);
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

/// Variant label for a drift configuration, e.g. "exo0.02_fb0.05".
std::string drift_variant(double exo, double feedback);

/// Diagonal covariance with log-spaced variances from 1 down to 1 / condition_number.
Eigen::MatrixXd log_spaced_covariance(int dim, double condition_number);

}  // namespace driftlab::harness
