#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "driftlab/processes.hpp"

namespace driftlab {

/// C_T = sum_t (d_t + alpha kappa_t).
double compute_budget(std::span<const DriftRecord> drifts, double alpha);

struct OlsFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd residuals;
  double r2 = 0.0;
  double sigma2 = 0.0;  // residual variance, SS_res / (n - p); 0 when n == p
};

/// Ordinary least squares through a column-pivoted QR. Throws RankDeficient when
/// the design is numerically rank deficient.
OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Coefficient of determination. A constant target gives 1 if it is fitted exactly
/// and 0 otherwise.
double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& residuals);

/// Named regressor block: column labels must match X.
struct LabeledDesign {
  std::vector<std::string> labels;
  Eigen::MatrixXd X;

  Eigen::Index column(const std::string& label) const;
};

struct Calibration {
  OlsFit fit;
  double alpha = 0.0;
};

/// Fits y on the labeled design and returns alpha* = b_kappa / b_d.
/// Throws CalibrationError if either drift column is identically zero or b_d <= 0.
Calibration calibrate_alpha(const LabeledDesign& design, const Eigen::VectorXd& y,
                            const std::string& d_label = "sum_d",
                            const std::string& kappa_label = "sum_kappa");

/// y on [1, x].
OlsFit simple_regression(std::span<const double> x, std::span<const double> y);

/// Reduced model gap ~ 1 + T^{-1/2} + C_T/T. When every horizon is equal the
/// T^{-1/2} column duplicates the intercept and is left out.
OlsFit collapse_fit(std::span<const double> gaps, std::span<const double> budget_rates,
                    std::span<const double> horizons);

struct AblationResult {
  double r2_full = 0.0;
  double r2_no_budget = 0.0;
  double r2_no_variance = 0.0;
  double r2_decomposed = 0.0;  // 1 + T^{-1/2} + d_bar + kappa_bar
  bool full_beats_both() const { return r2_full > r2_no_budget && r2_full > r2_no_variance; }
};

/// Fits gap ~ 1 + T^{-1/2} + C_T/T and the two ablations that drop one of the
/// non-intercept regressors, plus the model with d_bar and kappa_bar separate.
AblationResult ablation_compare(std::span<const double> gaps, std::span<const double> d_rates,
                                std::span<const double> kappa_rates,
                                std::span<const double> budget_rates,
                                std::span<const double> horizons);

/// Least-squares slope of log y on log x.
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace driftlab
