#include "driftlab/risk.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "driftlab/errors.hpp"

namespace driftlab {

RiskRecord RiskRecord::from(double empirical, double population) {
  return RiskRecord{empirical, population, driftlab::gap(empirical, population)};
}

double empirical_risk(std::span<const double> losses) {
  if (losses.empty()) throw std::invalid_argument("empirical_risk: empty loss sequence");
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(losses.size());
}

double population_risk_gaussian_mean(const GaussianLocationFamily& fam, const ParamPoint& theta,
                                     const ParamPoint& mu_hat) {
  if (theta.dim() != fam.dim() || mu_hat.dim() != fam.dim()) {
    throw DimensionMismatch("population_risk_gaussian_mean: dimension mismatch");
  }
  return fam.covariance().trace() + (theta.coords - mu_hat.coords).squaredNorm();
}

double population_risk_mc(const TeacherEnv& env, const TwoLayerNet& net, int n, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("population_risk_mc: n must be >= 1");
  const Eigen::MatrixXd xs = env.sample_inputs(n, rng);
  const Eigen::VectorXd mean = env.features().batch(xs) * env.theta().coords;
  const Eigen::VectorXd pred = net_forward_batch(net, xs);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = pred(i) - (mean(i) + env.noise_sd() * rng.normal());
    sum += r * r;
  }
  return sum / n;
}

double gap(double empirical, double population) {
  if (!std::isfinite(empirical) || !std::isfinite(population)) {
    throw std::invalid_argument("gap: non-finite risk");
  }
  return std::abs(empirical - population);
}

MartingaleCheck martingale_bound_check(double sigma, int T, int reps, RngStream& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("martingale_bound_check: sigma must be >= 0");
  if (T < 1 || reps < 1) throw std::invalid_argument("martingale_bound_check: T, reps must be >= 1");
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    double s = 0.0;
    for (int t = 0; t < T; ++t) s += sigma * rng.normal();
    total += std::abs(s);
  }
  MartingaleCheck out;
  out.empirical_mean_abs = total / reps;
  out.bound = sigma * std::sqrt(2.0 * std::numbers::pi * T);
  out.ok = out.empirical_mean_abs <= out.bound;
  return out;
}

}  // namespace driftlab
