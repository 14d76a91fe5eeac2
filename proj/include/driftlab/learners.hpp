#pragma once

#include <cmath>

#include <Eigen/Core>

#include "driftlab/geometry.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

class TeacherEnv;

/// tanh computed through expm1; used by the feature map and the network.
inline double activation(double z) {
  const double e = std::expm1(-2.0 * std::abs(z));
  return std::copysign(-e / (2.0 + e), z);
}

/// Running arithmetic mean of every observation consumed so far.
class OnlineMeanEstimator {
 public:
  explicit OnlineMeanEstimator(Eigen::Index dim) : mean_(ParamPoint::zero(dim)) {}

  const ParamPoint& mean() const noexcept { return mean_; }
  long count() const noexcept { return count_; }
  Eigen::Index dim() const noexcept { return mean_.dim(); }

  void observe(const Eigen::VectorXd& x);

 private:
  ParamPoint mean_;
  long count_ = 0;
};

OnlineMeanEstimator mean_update(OnlineMeanEstimator est, const Eigen::VectorXd& x);

/// phi(x) = scale * tanh(W x), frozen for the lifetime of a run.
class RandomFeatureMap {
 public:
  RandomFeatureMap(Eigen::MatrixXd weights, double scale);

  /// W has i.i.d. N(0, 1/input_dim) entries so that W x is O(1) for x ~ N(0, I).
  static RandomFeatureMap sample(Eigen::Index input_dim, Eigen::Index feature_dim, double scale,
                                 RngStream& rng);

  Eigen::Index input_dim() const noexcept { return w_.cols(); }
  Eigen::Index feature_dim() const noexcept { return w_.rows(); }
  const Eigen::MatrixXd& weights() const noexcept { return w_; }
  double scale() const noexcept { return scale_; }

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
  /// Row i of the result is phi(row i of xs).
  Eigen::MatrixXd batch(const Eigen::MatrixXd& xs) const;

 private:
  Eigen::MatrixXd w_;
  double scale_;
};

Eigen::VectorXd rf_features(const RandomFeatureMap& map, const Eigen::VectorXd& x);

/// Scalar-output perceptron  w2 . tanh(W1 x + b1) + b2.
struct TwoLayerNet {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;

  static TwoLayerNet zeros(Eigen::Index input_dim, Eigen::Index hidden);
  /// Fan-in scaled Gaussian hidden layer; output layer scaled by `output_scale`.
  static TwoLayerNet sample(Eigen::Index input_dim, Eigen::Index hidden, double output_scale,
                            RngStream& rng);

  Eigen::Index input_dim() const noexcept { return w1.cols(); }
  Eigen::Index hidden() const noexcept { return w1.rows(); }
  bool all_finite() const;
};

double net_forward(const TwoLayerNet& net, const Eigen::VectorXd& x);
Eigen::VectorXd net_forward_batch(const TwoLayerNet& net, const Eigen::MatrixXd& xs);

/// Gradient of 0.5 (net(x) - y)^2 with respect to every parameter.
struct NetGradient {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;
};

NetGradient net_loss_gradient(const TwoLayerNet& net, const Eigen::VectorXd& x, double y);

/// One SGD step on 0.5 (net(x) - y)^2. Throws Divergence on a non-finite
/// gradient or update.
TwoLayerNet net_sgd_step(const TwoLayerNet& net, const Eigen::VectorXd& x, double y, double lr);

/// Direction in teacher-weight space that increases the mean squared
/// disagreement between teacher and learner on `probe` (rows are inputs),
/// scaled to unit length under `fisher`. Zero when the gradient vanishes.
TangentVector disagreement_direction(const TwoLayerNet& net, const TeacherEnv& env,
                                     const Eigen::MatrixXd& probe, const MetricTensor& fisher);
/// Same, with the teacher features of the probe precomputed (phi = features.batch(probe)).
TangentVector disagreement_direction(const TwoLayerNet& net, const TeacherEnv& env,
                                     const Eigen::MatrixXd& probe, const Eigen::MatrixXd& phi,
                                     const MetricTensor& fisher);

/// State of the matched-decrease comparison on J(theta) = 0.5 ||theta||^2.
struct QuadOptState {
  ParamPoint theta;
  GaussianLocationFamily fam;
  double rho;           // per-step factor J(theta') = rho J(theta)
  double target_ratio;  // stop once J <= target_ratio * J(theta_0)

  QuadOptState(ParamPoint theta, GaussianLocationFamily fam, double rho, double target_ratio);

  double objective() const { return 0.5 * theta.coords.squaredNorm(); }
};

/// theta' = sqrt(rho) theta.
QuadOptState euclidean_step_matched(const QuadOptState& s);

/// theta' = theta - eta Sigma theta with the smallest eta > 0 reaching
/// J(theta') = rho J(theta); falls back to the ray minimizer when no such eta
/// exists.
QuadOptState natural_step_matched(const QuadOptState& s);

enum class DescentMethod { euclidean, natural };

struct MatchedDescentResult {
  int steps = 0;
  double fisher_length = 0.0;
  double final_ratio = 1.0;  // J(final) / J(theta_0)
};

/// Iterates the matched step until J <= target_ratio * J_0 (or `max_steps`).
MatchedDescentResult run_matched_descent(QuadOptState s, DescentMethod method,
                                         int max_steps = 100000);

/// ceil(ln(target_ratio) / ln(rho)).
int euclidean_step_count(double rho, double target_ratio);

}  // namespace driftlab
