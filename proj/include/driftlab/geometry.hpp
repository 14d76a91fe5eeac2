#pragma once

// Fisher-Rao geometry for the closed-form families used by the simulators:
// Gaussian location models (constant metric) and one-parameter exponential
// families (metric A''(theta)).

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace driftlab {

/// Environment parameter theta.
struct ParamPoint {
  Eigen::VectorXd coords;

  ParamPoint() = default;
  explicit ParamPoint(Eigen::VectorXd c) : coords(std::move(c)) {}
  static ParamPoint zero(Eigen::Index dim) { return ParamPoint(Eigen::VectorXd::Zero(dim)); }

  Eigen::Index dim() const noexcept { return coords.size(); }
  bool operator==(const ParamPoint&) const = default;
};

/// Increment attached to a ParamPoint (a control, a drift step, a gradient).
struct TangentVector {
  Eigen::VectorXd components;

  TangentVector() = default;
  explicit TangentVector(Eigen::VectorXd c) : components(std::move(c)) {}
  static TangentVector zero(Eigen::Index dim) {
    return TangentVector(Eigen::VectorXd::Zero(dim));
  }

  Eigen::Index dim() const noexcept { return components.size(); }
  bool operator==(const TangentVector&) const = default;
};

ParamPoint operator+(const ParamPoint& p, const TangentVector& v);
TangentVector operator-(const ParamPoint& b, const ParamPoint& a);
TangentVector operator*(double s, const TangentVector& v);
TangentVector operator+(const TangentVector& a, const TangentVector& b);

/// Symmetric positive-definite matrix g(theta). Construction validates both
/// properties; a MetricTensor that exists is always usable.
class MetricTensor {
 public:
  /// Symmetry is checked to 1e-12 relative to the largest entry; definiteness
  /// requires lambda_min > 1e-12 * lambda_max.
  explicit MetricTensor(Eigen::MatrixXd g);

  static MetricTensor identity(Eigen::Index dim);

  const Eigen::MatrixXd& matrix() const noexcept { return g_; }
  Eigen::Index dim() const noexcept { return g_.rows(); }

 private:
  Eigen::MatrixXd g_;
};

/// sqrt(v^T g v).
double fisher_norm(const MetricTensor& g, const TangentVector& v);

/// N(theta, Sigma) with Sigma fixed; the Fisher metric is Sigma^{-1} everywhere.
class GaussianLocationFamily {
 public:
  explicit GaussianLocationFamily(Eigen::MatrixXd sigma);

  static GaussianLocationFamily isotropic(Eigen::Index dim, double variance = 1.0);
  static GaussianLocationFamily diagonal(const Eigen::VectorXd& variances);

  Eigen::Index dim() const noexcept { return sigma_.rows(); }
  const Eigen::MatrixXd& covariance() const noexcept { return sigma_; }
  const Eigen::MatrixXd& precision() const noexcept { return precision_; }
  /// Lower Cholesky factor L with L L^T = Sigma.
  const Eigen::MatrixXd& covariance_factor() const noexcept { return factor_; }
  const MetricTensor& metric() const noexcept { return metric_; }

 private:
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd factor_;
  Eigen::MatrixXd precision_;
  MetricTensor metric_;
};

/// Geodesic distance; geodesics are straight lines under a constant metric.
double fisher_distance_gaussian(const GaussianLocationFamily& fam, const ParamPoint& a,
                                const ParamPoint& b);

/// KL(N(theta + delta, Sigma) || N(theta, Sigma)) = 0.5 delta^T Sigma^{-1} delta.
double kl_gaussian_location(const GaussianLocationFamily& fam, const TangentVector& delta);

/// p_theta(x) = h(x) exp(theta x - A(theta)) on a working interval of theta.
class ExpFamily1D {
 public:
  using ScalarFn = std::function<double(double)>;

  ExpFamily1D(std::string name, ScalarFn log_partition, ScalarFn mean, ScalarFn fisher,
              double lower, double upper);

  /// Unit-variance Gaussian in its natural parameter, A(theta) = theta^2 / 2.
  static ExpFamily1D gaussian_unit(double half_width = 1e3);
  /// Bernoulli in its logit, A(theta) = log(1 + e^theta).
  static ExpFamily1D bernoulli(double half_width = 30.0);
  /// Poisson in its log-rate, A(theta) = e^theta.
  static ExpFamily1D poisson(double lower = -20.0, double upper = 20.0);

  const std::string& name() const noexcept { return name_; }
  double log_partition(double theta) const { return a_(theta); }
  /// A'(theta): the mean of the sufficient statistic.
  double mean(double theta) const { return da_(theta); }
  /// A''(theta): Fisher information.
  double fisher(double theta) const { return d2a_(theta); }
  bool contains(double theta) const noexcept { return theta >= lower_ && theta <= upper_; }

  /// Exact KL(p_to || p_from) = A(from) - A(to) + (to - from) A'(to).
  double kl(double to, double from) const;

 private:
  std::string name_;
  ScalarFn a_, da_, d2a_;
  double lower_, upper_;
};

/// |KL(p_{theta+delta} || p_theta) - 0.5 A''(theta) delta^2| / delta^2.
double kl_expansion_remainder(const ExpFamily1D& fam, double theta, double delta);

using MetricField = std::function<MetricTensor(const ParamPoint&)>;

/// Discrete Fisher path length: sum of ||theta_{t+1} - theta_t|| with the
/// metric evaluated at the start of each segment.
double path_length(std::span<const ParamPoint> points, const MetricField& metric_at);

/// Convenience for constant metrics.
double path_length(std::span<const ParamPoint> points, const MetricTensor& metric);

}  // namespace driftlab
