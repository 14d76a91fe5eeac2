#pragma once

#include <span>

#include "driftlab/geometry.hpp"
#include "driftlab/learners.hpp"
#include "driftlab/processes.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

struct RiskRecord {
  double empirical = 0.0;
  double population = 0.0;
  double gap = 0.0;

  static RiskRecord from(double empirical, double population);
};

/// Time-averaged loss (1/T) sum_t loss_t.
double empirical_risk(std::span<const double> losses);

/// Squared-error risk of predictor mu_hat on x ~ N(theta, Sigma):
/// tr(Sigma) + ||theta - mu_hat||^2.
double population_risk_gaussian_mean(const GaussianLocationFamily& fam, const ParamPoint& theta,
                                     const ParamPoint& mu_hat);

/// Monte Carlo estimate of E (net(x) - y)^2 under the current teacher.
double population_risk_mc(const TeacherEnv& env, const TwoLayerNet& net, int n, RngStream& rng);

/// |empirical - population|.
double gap(double empirical, double population);

struct MartingaleCheck {
  double empirical_mean_abs = 0.0;  // Monte Carlo E|S_T|
  double bound = 0.0;               // sigma sqrt(2 pi T)
  bool ok = false;
};

/// Simulates `reps` sums S_T of T i.i.d. N(0, sigma^2) increments and compares
/// the mean |S_T| with the sub-Gaussian bound sqrt(2 pi V_T), V_T = T sigma^2.
MartingaleCheck martingale_bound_check(double sigma, int T, int reps, RngStream& rng);

}  // namespace driftlab
