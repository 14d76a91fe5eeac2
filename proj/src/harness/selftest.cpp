#include "driftlab/harness/selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "driftlab/budget.hpp"
#include "driftlab/geometry.hpp"
#include "driftlab/learners.hpp"
#include "driftlab/lowerbound.hpp"
#include "driftlab/processes.hpp"
#include "driftlab/risk.hpp"
#include "driftlab/rng.hpp"

namespace driftlab::harness {

namespace {

struct Outcome {
  bool ok;
  double value;
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

using Check = std::pair<std::string, std::function<Outcome()>>;

std::vector<Check> checks() {
  using Eigen::Vector2d;
  std::vector<Check> c;
  c.emplace_back("fisher_norm identity (3,4) = 5", [] {
    const double v = fisher_norm(MetricTensor::identity(2), TangentVector(Vector2d(3, 4)));
    return Outcome{near(v, 5.0, 1e-14), v};
  });
  c.emplace_back("fisher_norm diag(1/4,1) (2,0) = 1", [] {
    const double v = fisher_norm(MetricTensor(Vector2d(0.25, 1).asDiagonal()),
                                 TangentVector(Vector2d(2, 0)));
    return Outcome{near(v, 1.0, 1e-14), v};
  });
  c.emplace_back("fisher_distance Sigma=diag(4,1) (0,0)->(2,0) = 1", [] {
    const auto fam = GaussianLocationFamily::diagonal(Vector2d(4, 1));
    const double v = fisher_distance_gaussian(fam, ParamPoint(Vector2d(0, 0)), ParamPoint(Vector2d(2, 0)));
    return Outcome{near(v, 1.0, 1e-14), v};
  });
  c.emplace_back("kl_gaussian_location Sigma=diag(4,1) delta=(2,0) = 0.5", [] {
    const auto fam = GaussianLocationFamily::diagonal(Vector2d(4, 1));
    const double v = kl_gaussian_location(fam, TangentVector(Vector2d(2, 0)));
    return Outcome{near(v, 0.5, 1e-14), v};
  });
  c.emplace_back("gaussian kl remainder = 0", [] {
    const double v = kl_expansion_remainder(ExpFamily1D::gaussian_unit(), 0.7, 0.3);
    return Outcome{near(v, 0.0, 1e-12), v};
  });
  c.emplace_back("bernoulli kl remainder theta=0 delta=0.1 < 0.05", [] {
    const double v = kl_expansion_remainder(ExpFamily1D::bernoulli(), 0.0, 0.1);
    return Outcome{v < 0.05, v};
  });
  c.emplace_back("path_length 10 steps of 0.2 = 2", [] {
    std::vector<ParamPoint> pts;
    for (int i = 0; i <= 10; ++i) pts.emplace_back(Vector2d(0.12 * i, 0.16 * i));
    const double v = path_length(pts, MetricTensor::identity(2));
    return Outcome{near(v, 2.0, 1e-12), v};
  });
  c.emplace_back("drift_decompose_linear kappa = 5", [] {
    const auto env = LinearGaussianEnv::identity_gains(GaussianLocationFamily::isotropic(2),
                                                       ParamPoint::zero(2));
    const auto r = drift_decompose_linear(env, TangentVector(Vector2d(3, 4)), TangentVector::zero(2));
    return Outcome{near(r.kappa, 5.0, 1e-14) && r.d == 0.0, r.kappa};
  });
  c.emplace_back("truncate_increment 0.2 -> 0.1", [] {
    const auto g = MetricTensor::identity(2);
    const auto out = truncate_increment(BudgetManager(0.1), TangentVector(Vector2d(0.12, 0.16)), g);
    const double v = fisher_norm(g, out);
    return Outcome{near(v, 0.1, 1e-15), v};
  });
  c.emplace_back("mean_update (0),(2) -> 1", [] {
    OnlineMeanEstimator e(1);
    e = mean_update(e, Eigen::VectorXd::Constant(1, 0.0));
    e = mean_update(e, Eigen::VectorXd::Constant(1, 2.0));
    return Outcome{e.mean().coords(0) == 1.0, e.mean().coords(0)};
  });
  c.emplace_back("euclidean step count rho=0.81 target=1e-4 = 44", [] {
    const int v = euclidean_step_count(0.81, 1e-4);
    return Outcome{v == 44, static_cast<double>(v)};
  });
  c.emplace_back("population_risk_gaussian_mean offset (1,0) = 3", [] {
    const double v = population_risk_gaussian_mean(GaussianLocationFamily::isotropic(2),
                                                   ParamPoint(Vector2d(1, 0)), ParamPoint::zero(2));
    return Outcome{near(v, 3.0, 1e-14), v};
  });
  c.emplace_back("martingale bound sigma=1 T=100", [] {
    RngStream rng(7);
    const auto r = martingale_bound_check(1.0, 100, 2000, rng);
    return Outcome{r.ok && near(r.bound, std::sqrt(200.0 * M_PI), 1e-12), r.empirical_mean_abs};
  });
  c.emplace_back("compute_budget d=(1,1) kappa=(2,2) alpha=0.5 = 4", [] {
    const std::vector<DriftRecord> recs = {{1, 2}, {1, 2}};
    const double v = compute_budget(recs, 0.5);
    return Outcome{near(v, 4.0, 1e-15), v};
  });
  c.emplace_back("calibrate_alpha planted 0.3/0.2 -> 2/3", [] {
    LabeledDesign des;
    des.labels = {"intercept", "inv_sqrt_T", "sum_d", "sum_kappa"};
    des.X.resize(8, 4);
    Eigen::VectorXd y(8);
    RngStream rng(11);
    for (int i = 0; i < 8; ++i) {
      const double T = 100.0 * (1 + i % 4), d = rng.uniform(), k = rng.uniform();
      des.X.row(i) << 1.0, 1.0 / std::sqrt(T), d, k;
      y(i) = 0.1 / std::sqrt(T) + 0.3 * d + 0.2 * k;
    }
    const double v = calibrate_alpha(des, y).alpha;
    return Outcome{near(v, 2.0 / 3.0, 1e-6), v};
  });
  c.emplace_back("pairwise_kl k=3 delta=0.1 = 0.06", [] {
    const auto v = Codeword::from_signs({1, 1, 1, 1});
    const auto w = Codeword::from_signs({-1, -1, -1, 1});
    const double kl = pairwise_kl(v, w, 0.1);
    return Outcome{near(kl, 0.06, 1e-15), kl};
  });
  c.emplace_back("fano_condition m=64 |V|=2^32 alpha=0.5 threshold", [] {
    const double thr = std::sqrt(0.5 / 4.0 * 32.0 * std::log(2.0) / 128.0);
    const bool ok = fano_condition(64, thr * 0.999, std::size_t{1} << 32, 0.5) &&
                    !fano_condition(64, thr * 1.001, std::size_t{1} << 32, 0.5);
    return Outcome{ok && near(thr, 0.147, 1e-3), thr};
  });
  c.emplace_back("greedy_gv_codebook m=4 d_min=2 size >= 4", [] {
    RngStream rng(3);
    const auto book = greedy_gv_codebook(4, 2, rng);
    return Outcome{book.size() >= 4 && book.min_pairwise_distance() >= 2,
                   static_cast<double>(book.size())};
  });
  return c;
}

}  // namespace

std::vector<SelfCheck> run_selftest() {
  std::vector<SelfCheck> out;
  for (const auto& [name, fn] : checks()) {
    SelfCheck r{name, false, ""};
    try {
      const Outcome o = fn();
      r.passed = o.ok;
      std::ostringstream os;
      os.precision(17);
      os << "value " << o.value;
      r.detail = os.str();
    } catch (const std::exception& e) {
      r.detail = std::string("threw: ") + e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace driftlab::harness
