#include "driftlab/geometry.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a) +
                            " vs " + std::to_string(b));
  }
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

ParamPoint operator+(const ParamPoint& p, const TangentVector& v) {
  require_same_dim(p.dim(), v.dim(), "point + tangent");
  return ParamPoint(p.coords + v.components);
}

TangentVector operator-(const ParamPoint& b, const ParamPoint& a) {
  require_same_dim(b.dim(), a.dim(), "point - point");
  return TangentVector(b.coords - a.coords);
}

TangentVector operator*(double s, const TangentVector& v) {
  return TangentVector(s * v.components);
}

TangentVector operator+(const TangentVector& a, const TangentVector& b) {
  require_same_dim(a.dim(), b.dim(), "tangent + tangent");
  return TangentVector(a.components + b.components);
}

MetricTensor::MetricTensor(Eigen::MatrixXd g) : g_(std::move(g)) {
  if (g_.rows() != g_.cols() || g_.rows() == 0) {
    throw DimensionMismatch("metric tensor must be square and non-empty, got " +
                            shape_string(g_.rows(), g_.cols()));
  }
  if (!g_.allFinite()) throw NotPositiveDefinite("metric tensor has non-finite entries");
  const double scale = std::max(1.0, g_.cwiseAbs().maxCoeff());
  if ((g_ - g_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw NotPositiveDefinite("metric tensor is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g_, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > 1e-12 * hi)) {
    throw NotPositiveDefinite("metric tensor is not positive definite (eigenvalues in [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "])");
  }
}

MetricTensor MetricTensor::identity(Eigen::Index dim) {
  return MetricTensor(Eigen::MatrixXd::Identity(dim, dim));
}

double fisher_norm(const MetricTensor& g, const TangentVector& v) {
  require_same_dim(g.dim(), v.dim(), "fisher_norm");
  const double q = v.components.dot(g.matrix() * v.components);
  // q >= 0 for SPD g; clamp rounding for v near zero.
  return std::sqrt(std::max(q, 0.0));
}

GaussianLocationFamily::GaussianLocationFamily(Eigen::MatrixXd sigma)
    : sigma_(std::move(sigma)), metric_(MetricTensor::identity(1)) {
  // Validates symmetry and definiteness with the same rule as the metric.
  const MetricTensor checked(sigma_);
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("covariance is not positive definite");
  factor_ = llt.matrixL();
  precision_ = llt.solve(Eigen::MatrixXd::Identity(sigma_.rows(), sigma_.cols()));
  precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
  metric_ = MetricTensor(precision_);
}

GaussianLocationFamily GaussianLocationFamily::isotropic(Eigen::Index dim, double variance) {
  return GaussianLocationFamily(variance * Eigen::MatrixXd::Identity(dim, dim));
}

GaussianLocationFamily GaussianLocationFamily::diagonal(const Eigen::VectorXd& variances) {
  return GaussianLocationFamily(variances.asDiagonal().toDenseMatrix());
}

double fisher_distance_gaussian(const GaussianLocationFamily& fam, const ParamPoint& a,
                                const ParamPoint& b) {
  require_same_dim(fam.dim(), a.dim(), "fisher_distance_gaussian");
  return fisher_norm(fam.metric(), b - a);
}

double kl_gaussian_location(const GaussianLocationFamily& fam, const TangentVector& delta) {
  require_same_dim(fam.dim(), delta.dim(), "kl_gaussian_location");
  const double n = fisher_norm(fam.metric(), delta);
  return 0.5 * n * n;
}

ExpFamily1D::ExpFamily1D(std::string name, ScalarFn log_partition, ScalarFn mean,
                         ScalarFn fisher, double lower, double upper)
    : name_(std::move(name)),
      a_(std::move(log_partition)),
      da_(std::move(mean)),
      d2a_(std::move(fisher)),
      lower_(lower),
      upper_(upper) {
  if (!(lower_ < upper_)) throw std::invalid_argument("empty working interval for " + name_);
}

ExpFamily1D ExpFamily1D::gaussian_unit(double half_width) {
  return ExpFamily1D(
      "gaussian", [](double t) { return 0.5 * t * t; }, [](double t) { return t; },
      [](double) { return 1.0; }, -half_width, half_width);
}

ExpFamily1D ExpFamily1D::bernoulli(double half_width) {
  return ExpFamily1D(
      "bernoulli", softplus, logistic,
      [](double t) {
        const double p = logistic(t);
        return p * (1.0 - p);
      },
      -half_width, half_width);
}

ExpFamily1D ExpFamily1D::poisson(double lower, double upper) {
  return ExpFamily1D(
      "poisson", [](double t) { return std::exp(t); }, [](double t) { return std::exp(t); },
      [](double t) { return std::exp(t); }, lower, upper);
}

double ExpFamily1D::kl(double to, double from) const {
  return a_(from) - a_(to) + (to - from) * da_(to);
}

double kl_expansion_remainder(const ExpFamily1D& fam, double theta, double delta) {
  if (delta == 0.0) throw std::invalid_argument("kl_expansion_remainder: delta must be nonzero");
  if (!fam.contains(theta) || !fam.contains(theta + delta)) {
    throw std::domain_error("kl_expansion_remainder: theta outside the working interval of " +
                            fam.name());
  }
  const double exact = fam.kl(theta + delta, theta);
  const double quadratic = 0.5 * fam.fisher(theta) * delta * delta;
  if (!std::isfinite(exact) || !std::isfinite(quadratic)) {
    throw std::domain_error("kl_expansion_remainder: non-finite log-partition values");
  }
  return std::abs(exact - quadratic) / (delta * delta);
}

double path_length(std::span<const ParamPoint> points, const MetricField& metric_at) {
  if (points.empty()) throw std::invalid_argument("path_length: empty point sequence");
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < points.size(); ++t) {
    require_same_dim(points[t].dim(), points[t + 1].dim(), "path_length");
    total += fisher_norm(metric_at(points[t]), points[t + 1] - points[t]);
  }
  return total;
}

double path_length(std::span<const ParamPoint> points, const MetricTensor& metric) {
  return path_length(points, [&metric](const ParamPoint&) { return metric; });
}

}  // namespace driftlab
