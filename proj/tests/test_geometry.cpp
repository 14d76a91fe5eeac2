#include <gtest/gtest.h>

#include <cmath>

#include "driftlab/errors.hpp"
#include "driftlab/geometry.hpp"
#include "test_support.hpp"

using namespace driftlab;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

TEST(FisherNorm, EuclideanCase) {
  EXPECT_DOUBLE_EQ(fisher_norm(MetricTensor::identity(2), TangentVector(Vector2d(3, 4))), 5.0);
}

TEST(FisherNorm, DiagonalScaling) {
  const MetricTensor g(Vector2d(0.25, 1.0).asDiagonal());
  EXPECT_DOUBLE_EQ(fisher_norm(g, TangentVector(Vector2d(2, 0))), 1.0);
}

TEST(FisherNorm, MatchesCholeskyOracleOnRandomSpd) {
  RngStream rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(6));
    const MatrixXd g = testsupport::random_spd(rng, n);
    const VectorXd v = rng.normal_vector(n);
    const auto l = testsupport::naive_cholesky(g);
    // v^T g v = || L^T v ||^2
    double q = 0.0;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = j; i < n; ++i) s += l[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * v(i);
      q += s * s;
    }
    EXPECT_NEAR(fisher_norm(MetricTensor(g), TangentVector(v)), std::sqrt(q), 1e-10);
  }
}

TEST(FisherNorm, AbsoluteHomogeneity) {
  RngStream rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const MetricTensor g(testsupport::random_spd(rng, 3));
    const TangentVector v(rng.normal_vector(3));
    const double c = 4.0 * rng.normal();
    EXPECT_NEAR(fisher_norm(g, c * v), std::abs(c) * fisher_norm(g, v), 1e-12 * (1 + std::abs(c)));
  }
}

TEST(FisherNorm, ZeroOnlyForZeroVector) {
  const MetricTensor g(Vector2d(2.0, 3.0).asDiagonal());
  EXPECT_EQ(fisher_norm(g, TangentVector::zero(2)), 0.0);
  EXPECT_GT(fisher_norm(g, TangentVector(Vector2d(1e-8, 0))), 0.0);
}

TEST(FisherNorm, DimensionMismatchThrows) {
  EXPECT_THROW(fisher_norm(MetricTensor::identity(2), TangentVector(VectorXd::Ones(3))),
               DimensionMismatch);
}

TEST(MetricTensor, RejectsIndefiniteAndAsymmetric) {
  EXPECT_THROW(MetricTensor(Vector2d(1.0, -1.0).asDiagonal()), NotPositiveDefinite);
  EXPECT_THROW(MetricTensor(Vector2d(1.0, 0.0).asDiagonal()), NotPositiveDefinite);
  MatrixXd a(2, 2);
  a << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(MetricTensor{a}, NotPositiveDefinite);
  EXPECT_THROW(MetricTensor(MatrixXd(2, 3)), DimensionMismatch);
}

TEST(MetricTensor, AcceptsRoundingLevelAsymmetry) {
  MatrixXd a(2, 2);
  a << 2.0, 0.5, 0.5 + 1e-15, 1.0;
  EXPECT_NO_THROW(MetricTensor{a});
}

TEST(GaussianDistance, ClosedFormExamples) {
  const auto iso = GaussianLocationFamily::isotropic(2);
  const ParamPoint o = ParamPoint::zero(2);
  EXPECT_EQ(fisher_distance_gaussian(iso, o, o), 0.0);
  EXPECT_DOUBLE_EQ(fisher_distance_gaussian(iso, o, ParamPoint(Vector2d(3, 4))), 5.0);
  const auto fam = GaussianLocationFamily::diagonal(Vector2d(4, 1));
  EXPECT_DOUBLE_EQ(fisher_distance_gaussian(fam, o, ParamPoint(Vector2d(2, 0))), 1.0);
}

TEST(GaussianDistance, SymmetricAndTriangleOnRandomTriples) {
  RngStream rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const GaussianLocationFamily fam(testsupport::random_spd(rng, 3));
    const ParamPoint a(rng.normal_vector(3)), b(rng.normal_vector(3)), c(rng.normal_vector(3));
    const double ab = fisher_distance_gaussian(fam, a, b);
    EXPECT_NEAR(ab, fisher_distance_gaussian(fam, b, a), 1e-13);
    EXPECT_LE(fisher_distance_gaussian(fam, a, c),
              ab + fisher_distance_gaussian(fam, b, c) + 1e-12);
  }
}

TEST(GaussianDistance, InvariantUnderLinearReparameterization) {
  RngStream rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const MatrixXd sigma = testsupport::random_spd(rng, 3);
    MatrixXd L = rng.normal_matrix(3, 3) + 3.0 * MatrixXd::Identity(3, 3);
    if (std::abs(L.determinant()) < 0.1) continue;
    const ParamPoint a(rng.normal_vector(3)), b(rng.normal_vector(3));
    const GaussianLocationFamily fam(sigma);
    const GaussianLocationFamily mapped(L * sigma * L.transpose());
    const double before = fisher_distance_gaussian(fam, a, b);
    const double after =
        fisher_distance_gaussian(mapped, ParamPoint(L * a.coords), ParamPoint(L * b.coords));
    EXPECT_NEAR(before, after, 1e-10);
  }
}

TEST(GaussianKl, ClosedFormExamples) {
  const auto iso = GaussianLocationFamily::isotropic(2);
  EXPECT_EQ(kl_gaussian_location(iso, TangentVector::zero(2)), 0.0);
  EXPECT_DOUBLE_EQ(kl_gaussian_location(iso, TangentVector(Vector2d(1, 0))), 0.5);
  const auto fam = GaussianLocationFamily::diagonal(Vector2d(4, 1));
  EXPECT_DOUBLE_EQ(kl_gaussian_location(fam, TangentVector(Vector2d(2, 0))), 0.5);
}

TEST(GaussianKl, MatchesGeneralGaussianKlFormula) {
  // KL(N(m1,S)||N(m0,S)) = 0.5 [tr(S^-1 S) + d^T S^-1 d - k + ln(det S / det S)]
  RngStream rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd s = testsupport::random_spd(rng, 4);
    const VectorXd d = rng.normal_vector(4);
    const auto x = testsupport::naive_solve(s, d);
    double quad = 0.0;
    for (int i = 0; i < 4; ++i) quad += d(i) * x[static_cast<std::size_t>(i)];
    const double oracle = 0.5 * (4.0 + quad - 4.0);
    EXPECT_NEAR(kl_gaussian_location(GaussianLocationFamily(s), TangentVector(d)), oracle,
                1e-10 * (1 + oracle));
  }
}

TEST(GaussianKl, EqualsHalfSquaredFisherNorm) {
  RngStream rng(9);
  const GaussianLocationFamily fam(testsupport::random_spd(rng, 3));
  const TangentVector d(rng.normal_vector(3));
  const double n = fisher_norm(fam.metric(), d);
  EXPECT_NEAR(kl_gaussian_location(fam, d), 0.5 * n * n, 1e-12);
}

namespace {

double bernoulli_kl_oracle(double theta_p, double theta_q) {
  const double p = 1.0 / (1.0 + std::exp(-theta_p));
  const double q = 1.0 / (1.0 + std::exp(-theta_q));
  return p * std::log(p / q) + (1 - p) * std::log((1 - p) / (1 - q));
}

double poisson_kl_oracle(double theta_p, double theta_q) {
  const double lp = std::exp(theta_p), lq = std::exp(theta_q);
  return lp * std::log(lp / lq) - lp + lq;
}

}  // namespace

TEST(ExpFamily, BernoulliKlMatchesDistributionFormula) {
  const auto fam = ExpFamily1D::bernoulli();
  for (double a : {-2.0, -0.3, 0.0, 0.4, 1.7}) {
    for (double b : {-1.0, 0.0, 0.25, 2.0}) {
      EXPECT_NEAR(fam.kl(a, b), bernoulli_kl_oracle(a, b), 1e-12) << a << " " << b;
    }
  }
}

TEST(ExpFamily, PoissonKlMatchesDistributionFormula) {
  const auto fam = ExpFamily1D::poisson();
  for (double a : {-1.0, 0.0, 0.7}) {
    for (double b : {-0.5, 0.3, 1.2}) {
      EXPECT_NEAR(fam.kl(a, b), poisson_kl_oracle(a, b), 1e-12);
    }
  }
}

TEST(KlRemainder, VanishesForUnitGaussian) {
  const auto fam = ExpFamily1D::gaussian_unit();
  for (double theta : {-3.0, 0.0, 1.5}) {
    for (double delta : {1.0, 0.1, -0.37}) {
      EXPECT_NEAR(kl_expansion_remainder(fam, theta, delta), 0.0, 1e-12);
    }
  }
}

TEST(KlRemainder, BernoulliSmallAtOrigin) {
  EXPECT_LT(kl_expansion_remainder(ExpFamily1D::bernoulli(), 0.0, 0.1), 0.05);
}

TEST(KlRemainder, FirstOrderDecayAwayFromSymmetryPoint) {
  // The remainder ratio is (A'''(theta)/6) delta + O(delta^2), so halving delta
  // halves it wherever A''' is nonzero.
  const auto bern = ExpFamily1D::bernoulli();
  const auto pois = ExpFamily1D::poisson();
  for (double theta : {-1.5, -0.5, 0.5, 1.0, 2.0}) {
    for (double delta : {0.1, 0.05, 0.02}) {
      const double r = kl_expansion_remainder(bern, theta, delta) /
                       kl_expansion_remainder(bern, theta, delta / 2);
      EXPECT_GE(r, 1.5) << theta << " " << delta;
      EXPECT_LE(r, 2.5) << theta << " " << delta;
      const double rp = kl_expansion_remainder(pois, theta, delta) /
                        kl_expansion_remainder(pois, theta, delta / 2);
      EXPECT_NEAR(rp, 2.0, 0.5);
    }
  }
}

TEST(KlRemainder, BernoulliAtOriginDecaysQuadratically) {
  // A'''(0) = 0 for the logistic log-partition, so the leading remainder term
  // is of order delta^2 there and halving delta quarters the ratio.
  const auto fam = ExpFamily1D::bernoulli();
  const double r = kl_expansion_remainder(fam, 0.0, 0.1) / kl_expansion_remainder(fam, 0.0, 0.05);
  EXPECT_NEAR(r, 4.0, 0.1);
}

TEST(KlRemainder, Errors) {
  const auto fam = ExpFamily1D::bernoulli(5.0);
  EXPECT_THROW(kl_expansion_remainder(fam, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(kl_expansion_remainder(fam, 6.0, 0.1), std::domain_error);
  EXPECT_THROW(kl_expansion_remainder(fam, 4.95, 0.1), std::domain_error);
}

TEST(PathLength, SinglePointIsZero) {
  const std::vector<ParamPoint> one = {ParamPoint(Vector2d(1, 2))};
  EXPECT_EQ(path_length(one, MetricTensor::identity(2)), 0.0);
  EXPECT_THROW(path_length(std::vector<ParamPoint>{}, MetricTensor::identity(2)),
               std::invalid_argument);
}

TEST(PathLength, EqualStepsAddUp) {
  std::vector<ParamPoint> pts;
  for (int i = 0; i <= 10; ++i) pts.emplace_back(Vector2d(0.12 * i, 0.16 * i));
  EXPECT_NEAR(path_length(pts, MetricTensor::identity(2)), 2.0, 1e-12);
}

TEST(PathLength, MatchesSegmentLoopOracle) {
  RngStream rng(21);
  const MatrixXd sigma = testsupport::random_spd(rng, 3);
  const GaussianLocationFamily fam(sigma);
  std::vector<ParamPoint> pts;
  for (int i = 0; i < 60; ++i) pts.emplace_back(rng.normal_vector(3));
  double oracle = 0.0;
  const MatrixXd prec = sigma.inverse();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const VectorXd d = pts[i + 1].coords - pts[i].coords;
    oracle += std::sqrt(d.dot(prec * d));
  }
  EXPECT_NEAR(path_length(pts, fam.metric()), oracle, 1e-12 * oracle);
}

TEST(PathLength, AdditiveUnderConcatenation) {
  // Dyadic coordinates under the identity metric make every segment length and
  // partial sum exact, so the split sums must agree bit for bit.
  std::vector<ParamPoint> all;
  for (int i = 0; i <= 16; ++i) all.emplace_back(Vector2d(0.75 * i, 0.0));
  const std::span<const ParamPoint> s(all);
  const auto g = MetricTensor::identity(2);
  EXPECT_EQ(path_length(s, g), path_length(s.subspan(0, 7), g) + path_length(s.subspan(6), g));

  RngStream rng(4);
  std::vector<ParamPoint> rnd;
  for (int i = 0; i < 40; ++i) rnd.emplace_back(rng.normal_vector(2));
  const std::span<const ParamPoint> r(rnd);
  const MetricTensor gr(testsupport::random_spd(rng, 2));
  const double whole = path_length(r, gr);
  EXPECT_NEAR(whole, path_length(r.subspan(0, 21), gr) + path_length(r.subspan(20), gr),
              1e-12 * whole);
}

TEST(PathLength, AtLeastEndpointDistance) {
  RngStream rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const GaussianLocationFamily fam(testsupport::random_spd(rng, 2));
    std::vector<ParamPoint> pts;
    for (int i = 0; i < 8; ++i) pts.emplace_back(rng.normal_vector(2));
    EXPECT_GE(path_length(pts, fam.metric()) + 1e-12,
              fisher_distance_gaussian(fam, pts.front(), pts.back()));
  }
}

TEST(PathLength, MetricFieldUsesSegmentStart) {
  // g(theta) = (1 + theta_0^2) I; the metric at the start of each segment decides its length.
  const MetricField field = [](const ParamPoint& p) {
    return MetricTensor((1.0 + p.coords(0) * p.coords(0)) * MatrixXd::Identity(1, 1));
  };
  const std::vector<ParamPoint> pts = {ParamPoint(VectorXd::Constant(1, 0.0)),
                                       ParamPoint(VectorXd::Constant(1, 1.0)),
                                       ParamPoint(VectorXd::Constant(1, 3.0))};
  EXPECT_NEAR(path_length(pts, field), 1.0 * 1.0 + std::sqrt(2.0) * 2.0, 1e-14);
}

TEST(PathLength, DimensionMismatchAlongSequenceThrows) {
  const std::vector<ParamPoint> pts = {ParamPoint(Vector2d(0, 0)), ParamPoint(VectorXd::Zero(3))};
  EXPECT_THROW(path_length(pts, MetricTensor::identity(2)), DimensionMismatch);
}
