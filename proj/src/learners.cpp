#include "driftlab/learners.hpp"

#include <cmath>
#include <limits>

#include "driftlab/errors.hpp"
#include "driftlab/processes.hpp"

namespace driftlab {

namespace {
constexpr auto act = [](double z) { return activation(z); };
}  // namespace

void OnlineMeanEstimator::observe(const Eigen::VectorXd& x) {
  if (x.size() != mean_.dim()) {
    throw DimensionMismatch("mean_update: observation dimension " + std::to_string(x.size()) +
                            " vs estimator dimension " + std::to_string(mean_.dim()));
  }
  ++count_;
  mean_.coords += (x - mean_.coords) / static_cast<double>(count_);
}

OnlineMeanEstimator mean_update(OnlineMeanEstimator est, const Eigen::VectorXd& x) {
  est.observe(x);
  return est;
}

RandomFeatureMap::RandomFeatureMap(Eigen::MatrixXd weights, double scale)
    : w_(std::move(weights)), scale_(scale) {
  if (w_.size() == 0) throw DimensionMismatch("random feature map needs a non-empty weight matrix");
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
    throw std::invalid_argument("random feature map scale must be positive and finite");
  }
}

RandomFeatureMap RandomFeatureMap::sample(Eigen::Index input_dim, Eigen::Index feature_dim,
                                          double scale, RngStream& rng) {
  Eigen::MatrixXd w = rng.normal_matrix(feature_dim, input_dim) /
                      std::sqrt(static_cast<double>(input_dim));
  return RandomFeatureMap(std::move(w), scale);
}

Eigen::VectorXd RandomFeatureMap::operator()(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim()) {
    throw DimensionMismatch("rf_features: input dimension " + std::to_string(x.size()) +
                            " vs " + std::to_string(input_dim()));
  }
  return scale_ * (w_ * x).unaryExpr(act);
}

Eigen::MatrixXd RandomFeatureMap::batch(const Eigen::MatrixXd& xs) const {
  if (xs.cols() != input_dim()) {
    throw DimensionMismatch("rf_features: batch has " + std::to_string(xs.cols()) +
                            " columns, map expects " + std::to_string(input_dim()));
  }
  return scale_ * (xs * w_.transpose()).unaryExpr(act);
}

Eigen::VectorXd rf_features(const RandomFeatureMap& map, const Eigen::VectorXd& x) {
  return map(x);
}

TwoLayerNet TwoLayerNet::zeros(Eigen::Index input_dim, Eigen::Index hidden) {
  TwoLayerNet net;
  net.w1 = Eigen::MatrixXd::Zero(hidden, input_dim);
  net.b1 = Eigen::VectorXd::Zero(hidden);
  net.w2 = Eigen::VectorXd::Zero(hidden);
  net.b2 = 0.0;
  return net;
}

TwoLayerNet TwoLayerNet::sample(Eigen::Index input_dim, Eigen::Index hidden,
                                double output_scale, RngStream& rng) {
  TwoLayerNet net = zeros(input_dim, hidden);
  net.w1 = rng.normal_matrix(hidden, input_dim) / std::sqrt(static_cast<double>(input_dim));
  net.w2 = output_scale * rng.normal_vector(hidden) / std::sqrt(static_cast<double>(hidden));
  return net;
}

bool TwoLayerNet::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && std::isfinite(b2);
}

namespace {

void check_input(const TwoLayerNet& net, Eigen::Index n) {
  if (n != net.input_dim()) {
    throw DimensionMismatch("net_forward: input dimension " + std::to_string(n) + " vs " +
                            std::to_string(net.input_dim()));
  }
}

}  // namespace

double net_forward(const TwoLayerNet& net, const Eigen::VectorXd& x) {
  check_input(net, x.size());
  return net.w2.dot((net.w1 * x + net.b1).unaryExpr(act)) + net.b2;
}

Eigen::VectorXd net_forward_batch(const TwoLayerNet& net, const Eigen::MatrixXd& xs) {
  check_input(net, xs.cols());
  Eigen::MatrixXd pre = xs * net.w1.transpose();
  pre.rowwise() += net.b1.transpose();
  return (pre.unaryExpr(act) * net.w2).array() + net.b2;
}

NetGradient net_loss_gradient(const TwoLayerNet& net, const Eigen::VectorXd& x, double y) {
  check_input(net, x.size());
  const Eigen::VectorXd hidden = (net.w1 * x + net.b1).unaryExpr(act);
  const double residual = net.w2.dot(hidden) + net.b2 - y;
  NetGradient g;
  g.w2 = residual * hidden;
  g.b2 = residual;
  // d tanh(z)/dz = 1 - tanh(z)^2
  g.b1 = residual * net.w2.cwiseProduct((1.0 - hidden.array().square()).matrix());
  g.w1 = g.b1 * x.transpose();
  return g;
}

TwoLayerNet net_sgd_step(const TwoLayerNet& net, const Eigen::VectorXd& x, double y, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("net_sgd_step: learning rate must be positive");
  const NetGradient g = net_loss_gradient(net, x, y);
  if (!g.w1.allFinite() || !g.b1.allFinite() || !g.w2.allFinite() || !std::isfinite(g.b2)) {
    throw Divergence("net_sgd_step: non-finite gradient");
  }
  TwoLayerNet out = net;
  out.w1 -= lr * g.w1;
  out.b1 -= lr * g.b1;
  out.w2 -= lr * g.w2;
  out.b2 -= lr * g.b2;
  if (!out.all_finite()) throw Divergence("net_sgd_step: non-finite parameters after update");
  return out;
}

TangentVector disagreement_direction(const TwoLayerNet& net, const TeacherEnv& env,
                                     const Eigen::MatrixXd& probe, const MetricTensor& fisher) {
  if (probe.rows() == 0) throw std::invalid_argument("disagreement_direction: empty probe batch");
  return disagreement_direction(net, env, probe, env.features().batch(probe), fisher);
}

TangentVector disagreement_direction(const TwoLayerNet& net, const TeacherEnv& env,
                                     const Eigen::MatrixXd& probe, const Eigen::MatrixXd& phi,
                                     const MetricTensor& fisher) {
  if (probe.rows() == 0) throw std::invalid_argument("disagreement_direction: empty probe batch");
  if (phi.rows() != probe.rows() || phi.cols() != env.dim()) {
    throw DimensionMismatch("disagreement_direction: feature batch is " +
                            shape_string(phi.rows(), phi.cols()));
  }
  const Eigen::VectorXd disagreement = phi * env.theta().coords - net_forward_batch(net, probe);
  // d/dtheta of mean (phi.theta - net)^2; ascending it pushes the teacher away.
  Eigen::VectorXd grad = (2.0 / static_cast<double>(probe.rows())) * (phi.transpose() * disagreement);
  TangentVector dir(std::move(grad));
  const double len = fisher_norm(fisher, dir);
  if (!(len > 0.0) || !std::isfinite(len)) return TangentVector::zero(dir.dim());
  return (1.0 / len) * dir;
}

QuadOptState::QuadOptState(ParamPoint theta_, GaussianLocationFamily fam_, double rho_,
                           double target_ratio_)
    : theta(std::move(theta_)), fam(std::move(fam_)), rho(rho_), target_ratio(target_ratio_) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("QuadOptState: rho must lie in (0,1)");
  if (!(target_ratio > 0.0 && target_ratio < 1.0)) {
    throw std::invalid_argument("QuadOptState: target ratio must lie in (0,1)");
  }
  if (theta.dim() != fam.dim()) throw DimensionMismatch("QuadOptState: theta/family dimension");
}

namespace {

void require_nonzero(const ParamPoint& theta, const char* who) {
  if (theta.coords.squaredNorm() == 0.0) {
    throw std::domain_error(std::string(who) + ": theta is already at the optimum");
  }
}

}  // namespace

QuadOptState euclidean_step_matched(const QuadOptState& s) {
  require_nonzero(s.theta, "euclidean_step_matched");
  QuadOptState next = s;
  next.theta.coords *= std::sqrt(s.rho);
  return next;
}

QuadOptState natural_step_matched(const QuadOptState& s) {
  require_nonzero(s.theta, "natural_step_matched");
  const Eigen::VectorXd dir = s.fam.covariance() * s.theta.coords;
  // ||theta - eta dir||^2 = rho ||theta||^2  <=>  a eta^2 - 2 b eta + (1 - rho) c = 0
  const double a = dir.squaredNorm();
  const double b = s.theta.coords.dot(dir);
  const double c = s.theta.coords.squaredNorm();
  const double disc = b * b - a * (1.0 - s.rho) * c;
  double eta;
  if (disc >= 0.0) {
    eta = (1.0 - s.rho) * c / (b + std::sqrt(disc));  // smaller root, cancellation-free
  } else {
    eta = b / a;
  }
  QuadOptState next = s;
  next.theta.coords -= eta * dir;
  return next;
}

MatchedDescentResult run_matched_descent(QuadOptState s, DescentMethod method, int max_steps) {
  const double j0 = s.objective();
  const MetricTensor& g = s.fam.metric();
  MatchedDescentResult out;
  while (s.objective() > s.target_ratio * j0 && out.steps < max_steps) {
    QuadOptState next =
        method == DescentMethod::euclidean ? euclidean_step_matched(s) : natural_step_matched(s);
    out.fisher_length += fisher_norm(g, next.theta - s.theta);
    s = std::move(next);
    ++out.steps;
  }
  out.final_ratio = s.objective() / j0;
  return out;
}

int euclidean_step_count(double rho, double target_ratio) {
  return static_cast<int>(std::ceil(std::log(target_ratio) / std::log(rho)));
}

}  // namespace driftlab
