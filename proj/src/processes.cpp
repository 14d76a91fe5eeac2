#include "driftlab/processes.hpp"

#include <cmath>
#include <stdexcept>

#include "driftlab/errors.hpp"

namespace driftlab {

DriftRecord::DriftRecord(double d_, double kappa_) : d(d_), kappa(kappa_) {
  if (!(d >= 0.0) || !(kappa >= 0.0) || !std::isfinite(d) || !std::isfinite(kappa)) {
    throw std::invalid_argument("DriftRecord: magnitudes must be finite and nonnegative");
  }
}

LinearGaussianEnv::LinearGaussianEnv(Eigen::MatrixXd control_gain, Eigen::MatrixXd exo_gain,
                                     GaussianLocationFamily fam, ParamPoint theta0)
    : a_(std::move(control_gain)),
      b_(std::move(exo_gain)),
      fam_(std::move(fam)),
      theta0_(std::move(theta0)) {
  const Eigen::Index d = fam_.dim();
  if (a_.rows() != d || b_.rows() != d || theta0_.dim() != d) {
    throw DimensionMismatch("LinearGaussianEnv: A is " + shape_string(a_.rows(), a_.cols()) +
                            ", B is " + shape_string(b_.rows(), b_.cols()) + ", theta0 has " +
                            std::to_string(theta0_.dim()) + " entries, Sigma is " +
                            shape_string(d, d));
  }
}

LinearGaussianEnv LinearGaussianEnv::identity_gains(GaussianLocationFamily fam,
                                                    ParamPoint theta0) {
  const Eigen::Index d = fam.dim();
  return LinearGaussianEnv(Eigen::MatrixXd::Identity(d, d), Eigen::MatrixXd::Identity(d, d),
                           std::move(fam), std::move(theta0));
}

namespace {

void check_controls(const LinearGaussianEnv& env, const TangentVector& u, const TangentVector& eta) {
  if (u.dim() != env.control_dim() || eta.dim() != env.exo_dim()) {
    throw DimensionMismatch("linear env: control has " + std::to_string(u.dim()) +
                            " entries (A expects " + std::to_string(env.control_dim()) +
                            "), exogenous input has " + std::to_string(eta.dim()) +
                            " (B expects " + std::to_string(env.exo_dim()) + ")");
  }
}

}  // namespace

ParamPoint env_step_linear(const LinearGaussianEnv& env, const ParamPoint& theta,
                           const TangentVector& u, const TangentVector& eta) {
  check_controls(env, u, eta);
  if (theta.dim() != env.dim()) throw DimensionMismatch("env_step_linear: theta dimension");
  return ParamPoint(theta.coords + env.control_gain() * u.components +
                    env.exo_gain() * eta.components);
}

Eigen::VectorXd sample_observation(const LinearGaussianEnv& env, const ParamPoint& theta,
                                   RngStream& rng) {
  if (theta.dim() != env.dim()) throw DimensionMismatch("sample_observation: theta dimension");
  return theta.coords + env.family().covariance_factor() * rng.normal_vector(env.dim());
}

DriftRecord drift_decompose_linear(const LinearGaussianEnv& env, const TangentVector& u,
                                   const TangentVector& eta) {
  check_controls(env, u, eta);
  const MetricTensor& g = env.family().metric();
  return DriftRecord(fisher_norm(g, TangentVector(env.exo_gain() * eta.components)),
                     fisher_norm(g, TangentVector(env.control_gain() * u.components)));
}

void TrajectoryLog::validate() const {
  const std::size_t t = losses.size();
  if (states.size() != t + 1 || controls.size() != t || observations.size() != t ||
      drifts.size() != t) {
    throw std::logic_error("TrajectoryLog: inconsistent sequence lengths");
  }
  for (double l : losses) {
    if (!std::isfinite(l)) throw std::logic_error("TrajectoryLog: non-finite loss");
  }
}

BudgetManager::BudgetManager(double per_step_budget) : budget_(per_step_budget) {
  if (!(budget_ >= 0.0) || !std::isfinite(budget_)) {
    throw std::invalid_argument("BudgetManager: per-step budget must be finite and >= 0");
  }
}

TangentVector BudgetManager::truncate(const TangentVector& proposed, const MetricTensor& g) const {
  const double len = fisher_norm(g, proposed);
  if (len <= budget_) return proposed;
  return (budget_ / len) * proposed;
}

TangentVector truncate_increment(const BudgetManager& mgr, const TangentVector& proposed,
                                 const MetricTensor& g) {
  return mgr.truncate(proposed, g);
}

TeacherEnv::TeacherEnv(RandomFeatureMap features, ParamPoint theta, double noise_sd,
                       int fisher_probe_size)
    : features_(std::move(features)),
      theta_(std::move(theta)),
      noise_sd_(noise_sd),
      probe_size_(fisher_probe_size) {
  if (!(noise_sd_ > 0.0)) throw std::invalid_argument("TeacherEnv: noise_sd must be positive");
  if (probe_size_ < 2) throw std::invalid_argument("TeacherEnv: probe size must be >= 2");
  if (theta_.dim() != features_.feature_dim()) {
    throw DimensionMismatch("TeacherEnv: theta has " + std::to_string(theta_.dim()) +
                            " entries, feature map produces " +
                            std::to_string(features_.feature_dim()));
  }
}

void TeacherEnv::set_theta(ParamPoint theta) {
  if (theta.dim() != theta_.dim()) throw DimensionMismatch("TeacherEnv::set_theta: dimension");
  theta_ = std::move(theta);
}

double TeacherEnv::mean_response(const Eigen::VectorXd& x) const {
  return features_(x).dot(theta_.coords);
}

Eigen::MatrixXd TeacherEnv::sample_inputs(Eigen::Index n, RngStream& rng) const {
  return rng.normal_matrix(n, input_dim());
}

std::pair<Eigen::VectorXd, double> TeacherEnv::sample(RngStream& rng) const {
  Eigen::VectorXd x = rng.normal_vector(input_dim());
  const double y = mean_response(x) + noise_sd_ * rng.normal();
  return {std::move(x), y};
}

MetricTensor teacher_fisher(const TeacherEnv& env, const Eigen::MatrixXd& probe) {
  if (probe.rows() < 2) throw std::invalid_argument("teacher_fisher: probe needs >= 2 inputs");
  const Eigen::MatrixXd phi = env.features().batch(probe);
  const double scale =
      1.0 / (static_cast<double>(probe.rows()) * env.noise_sd() * env.noise_sd());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(env.dim(), env.dim());
  g.selfadjointView<Eigen::Lower>().rankUpdate(phi.transpose(), scale);
  g = g.selfadjointView<Eigen::Lower>();
  g.diagonal().array() += kTeacherFisherRidge;
  return MetricTensor(std::move(g));
}

MetricTensor teacher_fisher(const TeacherEnv& env, RngStream& rng) {
  return teacher_fisher(env, env.sample_inputs(env.fisher_probe_size(), rng));
}

TeacherStep teacher_drift_step(const TeacherEnv& env, const BudgetManager& exo_mgr,
                               const BudgetManager& endo_mgr, const TangentVector& exo_direction,
                               const TangentVector& endo_direction, const MetricTensor& fisher) {
  if (exo_direction.dim() != env.dim() || endo_direction.dim() != env.dim()) {
    throw DimensionMismatch("teacher_drift_step: direction dimension");
  }
  if (!exo_direction.components.allFinite() || !endo_direction.components.allFinite()) {
    throw std::invalid_argument("teacher_drift_step: non-finite direction");
  }
  TangentVector exo = TangentVector::zero(env.dim());
  const double len = fisher_norm(fisher, exo_direction);
  if (exo_mgr.per_step_budget() > 0.0 && len > 0.0) {
    exo = (exo_mgr.per_step_budget() / len) * exo_direction;
  }
  const TangentVector endo = endo_mgr.truncate(endo_direction, fisher);
  const double d = fisher_norm(fisher, exo);
  const double kappa = fisher_norm(fisher, endo);
  return TeacherStep{env.theta() + exo + endo, DriftRecord(d, kappa)};
}

TeacherStep teacher_drift_step(const TeacherEnv& env, const BudgetManager& exo_mgr,
                               const BudgetManager& endo_mgr, const TangentVector& endo_direction,
                               const MetricTensor& fisher, RngStream& rng) {
  const TangentVector z(rng.normal_vector(env.dim()));
  return teacher_drift_step(env, exo_mgr, endo_mgr, z, endo_direction, fisher);
}

TeacherStep teacher_drift_step(const TeacherEnv& env, const BudgetManager& exo_mgr,
                               const BudgetManager& endo_mgr, const TangentVector& endo_direction,
                               RngStream& rng) {
  RngStream probe_rng = rng.split(rng.next_u64());
  const MetricTensor g = teacher_fisher(env, probe_rng);
  return teacher_drift_step(env, exo_mgr, endo_mgr, endo_direction, g, rng);
}

}  // namespace driftlab
