#pragma once

// Drift-feedback environments theta_{t+1} = F(theta_t, u_t, eta_t) and the
// split of each step's Fisher motion into exogenous and policy-driven parts.

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "driftlab/geometry.hpp"
#include "driftlab/learners.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

/// Per-step Fisher magnitudes: exogenous d_t and policy-sensitive kappa_t.
struct DriftRecord {
  double d = 0.0;
  double kappa = 0.0;

  DriftRecord() = default;
  DriftRecord(double d_, double kappa_);
  bool operator==(const DriftRecord&) const = default;
};

/// theta' = theta + A u + B eta with observations x ~ N(theta, Sigma).
class LinearGaussianEnv {
 public:
  LinearGaussianEnv(Eigen::MatrixXd control_gain, Eigen::MatrixXd exo_gain,
                    GaussianLocationFamily fam, ParamPoint theta0);

  /// A = I (d x d), B = I (d x d).
  static LinearGaussianEnv identity_gains(GaussianLocationFamily fam, ParamPoint theta0);

  const Eigen::MatrixXd& control_gain() const noexcept { return a_; }
  const Eigen::MatrixXd& exo_gain() const noexcept { return b_; }
  const GaussianLocationFamily& family() const noexcept { return fam_; }
  const ParamPoint& theta0() const noexcept { return theta0_; }
  Eigen::Index dim() const noexcept { return fam_.dim(); }
  Eigen::Index control_dim() const noexcept { return a_.cols(); }
  Eigen::Index exo_dim() const noexcept { return b_.cols(); }

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd b_;
  GaussianLocationFamily fam_;
  ParamPoint theta0_;
};

ParamPoint env_step_linear(const LinearGaussianEnv& env, const ParamPoint& theta,
                           const TangentVector& u, const TangentVector& eta);

/// theta + L z with L L^T = Sigma and z standard normal.
Eigen::VectorXd sample_observation(const LinearGaussianEnv& env, const ParamPoint& theta,
                                   RngStream& rng);

/// d_t = ||B eta||_{Sigma^{-1}}, kappa_t = ||A u||_{Sigma^{-1}}; exact for a
/// linear transition.
DriftRecord drift_decompose_linear(const LinearGaussianEnv& env, const TangentVector& u,
                                   const TangentVector& eta);

/// Everything recorded along one simulated trajectory.
struct TrajectoryLog {
  std::vector<ParamPoint> states;  // T + 1 entries
  std::vector<TangentVector> controls;
  std::vector<Eigen::VectorXd> observations;
  std::vector<double> losses;
  std::vector<DriftRecord> drifts;

  std::size_t horizon() const noexcept { return losses.size(); }
  /// Throws std::logic_error if the sequence lengths or loss values are inconsistent.
  void validate() const;
  bool operator==(const TrajectoryLog&) const = default;
};

/// Radial projection onto a Fisher ball of radius `per_step_budget`.
class BudgetManager {
 public:
  explicit BudgetManager(double per_step_budget);

  double per_step_budget() const noexcept { return budget_; }
  TangentVector truncate(const TangentVector& proposed, const MetricTensor& g) const;

 private:
  double budget_;
};

TangentVector truncate_increment(const BudgetManager& mgr, const TangentVector& proposed,
                                 const MetricTensor& g);

/// y = <phi(x), theta> + noise_sd * xi with x ~ N(0, I).
class TeacherEnv {
 public:
  TeacherEnv(RandomFeatureMap features, ParamPoint theta, double noise_sd,
             int fisher_probe_size = 256);

  const RandomFeatureMap& features() const noexcept { return features_; }
  const ParamPoint& theta() const noexcept { return theta_; }
  void set_theta(ParamPoint theta);
  double noise_sd() const noexcept { return noise_sd_; }
  int fisher_probe_size() const noexcept { return probe_size_; }
  Eigen::Index input_dim() const noexcept { return features_.input_dim(); }
  Eigen::Index dim() const noexcept { return features_.feature_dim(); }

  double mean_response(const Eigen::VectorXd& x) const;
  /// Probe/input batch with rows x_i ~ N(0, I).
  Eigen::MatrixXd sample_inputs(Eigen::Index n, RngStream& rng) const;
  /// One labelled draw (x, y).
  std::pair<Eigen::VectorXd, double> sample(RngStream& rng) const;

 private:
  RandomFeatureMap features_;
  ParamPoint theta_;
  double noise_sd_;
  int probe_size_;
};

inline constexpr double kTeacherFisherRidge = 1e-8;

/// (1 / (n sigma^2)) sum_i phi(x_i) phi(x_i)^T + ridge I over the given probe.
MetricTensor teacher_fisher(const TeacherEnv& env, const Eigen::MatrixXd& probe);
/// Same, over a fresh probe of env.fisher_probe_size() inputs.
MetricTensor teacher_fisher(const TeacherEnv& env, RngStream& rng);

struct TeacherStep {
  ParamPoint theta;
  DriftRecord drift;
};

/// Exogenous increment: `exo_direction` rescaled to the exogenous budget.
/// Endogenous increment: `endo_direction` truncated by the endogenous manager.
/// Both are measured in `fisher`.
TeacherStep teacher_drift_step(const TeacherEnv& env, const BudgetManager& exo_mgr,
                               const BudgetManager& endo_mgr, const TangentVector& exo_direction,
                               const TangentVector& endo_direction, const MetricTensor& fisher);

/// Exogenous increment: a random direction at unit Fisher length scaled to the
/// exogenous budget. Endogenous increment: `endo_direction` truncated by the
/// endogenous manager. Both are measured in `fisher`.
TeacherStep teacher_drift_step(const TeacherEnv& env, const BudgetManager& exo_mgr,
                               const BudgetManager& endo_mgr, const TangentVector& endo_direction,
                               const MetricTensor& fisher, RngStream& rng);

/// Estimates the Fisher metric from `rng` first, then steps as above.
TeacherStep teacher_drift_step(const TeacherEnv& env, const BudgetManager& exo_mgr,
                               const BudgetManager& endo_mgr, const TangentVector& endo_direction,
                               RngStream& rng);

}  // namespace driftlab
