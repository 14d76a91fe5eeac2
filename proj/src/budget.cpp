#include "driftlab/budget.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "driftlab/errors.hpp"

namespace driftlab {

double compute_budget(std::span<const DriftRecord> drifts, double alpha) {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw std::invalid_argument("compute_budget: alpha must be finite and >= 0");
  }
  double c = 0.0;
  for (const auto& r : drifts) c += r.d + alpha * r.kappa;
  return c;
}

double r_squared(const Eigen::VectorXd& y, const Eigen::VectorXd& residuals) {
  if (y.size() != residuals.size() || y.size() == 0) {
    throw DimensionMismatch("r_squared: size mismatch");
  }
  const double ss_res = residuals.squaredNorm();
  const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  const double scale = std::max(1.0, y.squaredNorm());
  if (ss_tot <= 1e-24 * scale) return ss_res <= 1e-20 * scale ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size()) {
    throw DimensionMismatch("ols_fit: X is " + shape_string(X.rows(), X.cols()) +
                            " but y has " + std::to_string(y.size()) + " rows");
  }
  if (X.cols() == 0 || X.rows() < X.cols()) {
    throw RankDeficient("ols_fit: need at least as many rows as columns, got " +
                        shape_string(X.rows(), X.cols()));
  }
  if (!X.allFinite() || !y.allFinite()) throw std::invalid_argument("ols_fit: non-finite input");

  // Scale-free rank test on the column-normalized design.
  Eigen::VectorXd norms = X.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < norms.size(); ++j) {
    if (norms(j) == 0.0) throw RankDeficient("ols_fit: column " + std::to_string(j) + " is zero");
  }
  const Eigen::MatrixXd Xn = X * norms.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xn);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-10 * sv(0)) {
    throw RankDeficient("ols_fit: design is rank deficient (condition " +
                        std::to_string(sv(0) / sv(sv.size() - 1)) + ")");
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  OlsFit out;
  out.coef = qr.solve(y);
  out.residuals = y - X * out.coef;
  out.r2 = r_squared(y, out.residuals);
  const auto dof = X.rows() - X.cols();
  out.sigma2 = dof > 0 ? out.residuals.squaredNorm() / static_cast<double>(dof) : 0.0;
  return out;
}

Eigen::Index LabeledDesign::column(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw std::invalid_argument("LabeledDesign: no column '" + label + "'");
  return static_cast<Eigen::Index>(it - labels.begin());
}

Calibration calibrate_alpha(const LabeledDesign& design, const Eigen::VectorXd& y,
                            const std::string& d_label, const std::string& kappa_label) {
  if (static_cast<Eigen::Index>(design.labels.size()) != design.X.cols()) {
    throw DimensionMismatch("calibrate_alpha: label count does not match design columns");
  }
  const Eigen::Index jd = design.column(d_label);
  const Eigen::Index jk = design.column(kappa_label);
  if (design.X.col(jd).cwiseAbs().maxCoeff() == 0.0) {
    throw CalibrationError("calibrate_alpha: no exogenous signal (column " + d_label +
                           " is identically zero)");
  }
  if (design.X.col(jk).cwiseAbs().maxCoeff() == 0.0) {
    throw CalibrationError("calibrate_alpha: no endogenous signal (column " + kappa_label +
                           " is identically zero)");
  }
  Calibration out;
  out.fit = ols_fit(design.X, y);
  const double bd = out.fit.coef(jd);
  const double bk = out.fit.coef(jk);
  if (!(bd > 0.0)) {
    throw CalibrationError("calibrate_alpha: coefficient on " + d_label +
                           " is not positive (" + std::to_string(bd) + ")");
  }
  out.alpha = bk / bd;
  return out;
}

namespace {

Eigen::VectorXd to_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

OlsFit simple_regression(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("simple_regression: size mismatch");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(x.size()), 2);
  X.col(0).setOnes();
  X.col(1) = to_vector(x);
  return ols_fit(X, to_vector(y));
}

namespace {

Eigen::VectorXd inverse_sqrt(std::span<const double> horizons) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(horizons.size()));
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (!(horizons[i] > 0.0)) throw std::invalid_argument("horizons must be > 0");
    v(static_cast<Eigen::Index>(i)) = 1.0 / std::sqrt(horizons[i]);
  }
  return v;
}

bool varies(std::span<const double> v) {
  return std::any_of(v.begin(), v.end(), [&](double x) { return x != v.front(); });
}

}  // namespace

OlsFit collapse_fit(std::span<const double> gaps, std::span<const double> budget_rates,
                    std::span<const double> horizons) {
  if (gaps.size() != budget_rates.size() || gaps.size() != horizons.size()) {
    throw DimensionMismatch("collapse_fit: size mismatch");
  }
  if (gaps.size() < 3) throw std::invalid_argument("collapse_fit: need at least 3 points");
  const auto n = static_cast<Eigen::Index>(gaps.size());
  if (!varies(horizons)) return simple_regression(budget_rates, gaps);
  Eigen::MatrixXd X(n, 3);
  X << Eigen::VectorXd::Ones(n), inverse_sqrt(horizons), to_vector(budget_rates);
  return ols_fit(X, to_vector(gaps));
}

AblationResult ablation_compare(std::span<const double> gaps, std::span<const double> d_rates,
                                std::span<const double> kappa_rates,
                                std::span<const double> budget_rates,
                                std::span<const double> horizons) {
  const std::size_t n_ = gaps.size();
  if (d_rates.size() != n_ || kappa_rates.size() != n_ || budget_rates.size() != n_ ||
      horizons.size() != n_) {
    throw DimensionMismatch("ablation_compare: size mismatch");
  }
  const auto n = static_cast<Eigen::Index>(n_);
  const Eigen::VectorXd inv_sqrt = inverse_sqrt(horizons);
  const Eigen::VectorXd c = to_vector(budget_rates);
  const Eigen::VectorXd y = to_vector(gaps);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);

  Eigen::MatrixXd full(n, 3), no_budget(n, 2), no_variance(n, 2), decomposed(n, 4);
  full << ones, inv_sqrt, c;
  no_budget << ones, inv_sqrt;
  no_variance << ones, c;
  decomposed << ones, inv_sqrt, to_vector(d_rates), to_vector(kappa_rates);
  return AblationResult{ols_fit(full, y).r2, ols_fit(no_budget, y).r2, ols_fit(no_variance, y).r2,
                        ols_fit(decomposed, y).r2};
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("log_log_slope: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw std::domain_error("log_log_slope: values must be positive");
    }
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return simple_regression(lx, ly).coef(1);
}

}  // namespace driftlab
