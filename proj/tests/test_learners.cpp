#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "driftlab/errors.hpp"
#include "driftlab/learners.hpp"
#include "driftlab/processes.hpp"
#include "test_support.hpp"

using namespace driftlab;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

TEST(Activation, MatchesStdTanh) {
  for (double z = -25.0; z <= 25.0; z += 0.01) {
    EXPECT_NEAR(activation(z), std::tanh(z), 4e-16 * (1.0 + std::abs(std::tanh(z))));
  }
  EXPECT_EQ(activation(0.0), 0.0);
  EXPECT_EQ(activation(800.0), 1.0);
  EXPECT_EQ(activation(-800.0), -1.0);
}

TEST(MeanUpdate, WorkedExamples) {
  OnlineMeanEstimator est(2);
  est = mean_update(est, Vector2d(2, 4));
  EXPECT_EQ(est.mean().coords, Vector2d(2, 4));
  est = mean_update(est, Vector2d(4, 0));
  EXPECT_EQ(est.mean().coords, Vector2d(3, 2));
  EXPECT_EQ(est.count(), 2);
  EXPECT_THROW(mean_update(est, VectorXd::Ones(3)), DimensionMismatch);
}

TEST(MeanUpdate, MatchesBatchMeanAndIsOrderInvariant) {
  RngStream rng(21);
  std::vector<VectorXd> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(rng.normal_vector(3) * 5.0);
  OnlineMeanEstimator fwd(3), rev(3);
  for (const auto& x : xs) fwd.observe(x);
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) rev.observe(*it);
  // Oracle: Kahan-free plain summation in long double.
  for (int j = 0; j < 3; ++j) {
    long double s = 0.0L;
    for (const auto& x : xs) s += x(j);
    const double batch = static_cast<double>(s / xs.size());
    EXPECT_NEAR(fwd.mean().coords(j), batch, 1e-12);
    EXPECT_NEAR(rev.mean().coords(j), batch, 1e-12);
  }
}

TEST(RandomFeatures, ElementwiseOracleAndBatchConsistency) {
  RngStream rng(22);
  const auto map = RandomFeatureMap::sample(5, 7, 2.5, rng);
  const MatrixXd xs = rng.normal_matrix(10, 5);
  const MatrixXd batch = map.batch(xs);
  for (int i = 0; i < 10; ++i) {
    const VectorXd phi = rf_features(map, xs.row(i).transpose());
    for (int k = 0; k < 7; ++k) {
      double z = 0.0;
      for (int j = 0; j < 5; ++j) z += map.weights()(k, j) * xs(i, j);
      EXPECT_NEAR(phi(k), 2.5 * std::tanh(z), 1e-14);
      EXPECT_NEAR(batch(i, k), phi(k), 1e-14);
    }
  }
  EXPECT_THROW(rf_features(map, VectorXd::Ones(4)), DimensionMismatch);
  EXPECT_THROW(RandomFeatureMap(MatrixXd::Ones(2, 2), 0.0), std::invalid_argument);
}

TEST(RandomFeatures, BoundedByScale) {
  RngStream rng(23);
  const auto map = RandomFeatureMap::sample(3, 20, 1.5, rng);
  for (int i = 0; i < 100; ++i) {
    EXPECT_LE(map(100.0 * rng.normal_vector(3)).cwiseAbs().maxCoeff(), 1.5);
  }
}

TEST(NetForward, ZeroNetAndOutputBias) {
  auto net = TwoLayerNet::zeros(3, 4);
  EXPECT_EQ(net_forward(net, Eigen::Vector3d(1, 2, 3)), 0.0);
  net.b2 = 0.7;
  EXPECT_EQ(net_forward(net, Eigen::Vector3d(-1, 5, 0)), 0.7);
}

TEST(NetForward, DuplicatedHiddenUnitOracle) {
  // Two identical hidden units with output weights a and b act as one unit with weight a + b.
  RngStream rng(24);
  for (int trial = 0; trial < 20; ++trial) {
    auto net = TwoLayerNet::zeros(3, 2);
    const VectorXd w = rng.normal_vector(3);
    net.w1.row(0) = net.w1.row(1) = w.transpose();
    net.b1.setConstant(rng.normal());
    net.w2 << rng.normal(), rng.normal();
    net.b2 = rng.normal();
    const VectorXd x = rng.normal_vector(3);
    const double expect = (net.w2(0) + net.w2(1)) * std::tanh(w.dot(x) + net.b1(0)) + net.b2;
    EXPECT_NEAR(net_forward(net, x), expect, 1e-14);
  }
}

TEST(NetForward, BatchMatchesSingle) {
  RngStream rng(25);
  const auto net = TwoLayerNet::sample(4, 6, 1.0, rng);
  const MatrixXd xs = rng.normal_matrix(12, 4);
  const VectorXd out = net_forward_batch(net, xs);
  for (int i = 0; i < 12; ++i) EXPECT_NEAR(out(i), net_forward(net, xs.row(i).transpose()), 1e-14);
  EXPECT_THROW(net_forward(net, VectorXd::Ones(3)), DimensionMismatch);
}

namespace {

double half_sq_loss(const TwoLayerNet& net, const VectorXd& x, double y) {
  const double r = net_forward(net, x) - y;
  return 0.5 * r * r;
}

template <class Get>
double central_difference(TwoLayerNet net, const VectorXd& x, double y, Get get) {
  const double h = 1e-6;
  double& p = get(net);
  const double orig = p;
  p = orig + h;
  const double up = half_sq_loss(net, x, y);
  p = orig - h;
  const double dn = half_sq_loss(net, x, y);
  return (up - dn) / (2.0 * h);
}

}  // namespace

TEST(NetGradient, MatchesCentralDifferences) {
  RngStream rng(26);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    auto net = TwoLayerNet::sample(3, 5, 1.0, rng);
    net.b1 = 0.3 * rng.normal_vector(5);
    net.b2 = rng.normal();
    const VectorXd x = rng.normal_vector(3);
    const double y = rng.normal();
    const NetGradient g = net_loss_gradient(net, x, y);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double fd = central_difference(net, x, y, [&](TwoLayerNet& n) -> double& { return n.w1(i, j); });
        worst = std::max(worst, std::abs(fd - g.w1(i, j)));
      }
      worst = std::max(worst, std::abs(central_difference(net, x, y, [&](TwoLayerNet& n) -> double& { return n.b1(i); }) - g.b1(i)));
      worst = std::max(worst, std::abs(central_difference(net, x, y, [&](TwoLayerNet& n) -> double& { return n.w2(i); }) - g.w2(i)));
    }
    worst = std::max(worst, std::abs(central_difference(net, x, y, [](TwoLayerNet& n) -> double& { return n.b2; }) - g.b2));
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(NetSgd, SmallStepDecreasesLoss) {
  RngStream rng(27);
  int decreased = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const auto net = TwoLayerNet::sample(3, 5, 1.0, rng);
    const VectorXd x = rng.normal_vector(3);
    const double y = rng.normal();
    if (half_sq_loss(net, x, y) < 1e-12) continue;
    decreased += half_sq_loss(net_sgd_step(net, x, y, 1e-3), x, y) < half_sq_loss(net, x, y);
  }
  EXPECT_EQ(decreased, 100);
}

TEST(NetSgd, RejectsBadLearningRateAndDiverges) {
  RngStream rng(28);
  auto net = TwoLayerNet::sample(2, 3, 1.0, rng);
  EXPECT_THROW(net_sgd_step(net, Vector2d(1, 1), 0.0, 0.0), std::invalid_argument);
  net.w2(0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(net_sgd_step(net, Vector2d(1, 1), 0.0, 0.1), Divergence);
}

namespace {

TeacherEnv teacher(std::uint64_t seed) {
  RngStream rng(seed);
  auto map = RandomFeatureMap::sample(3, 5, 1.0, rng);
  return TeacherEnv(map, ParamPoint(rng.normal_vector(5)), 0.1, 64);
}

}  // namespace

TEST(Disagreement, ZeroWhenLearnerMatchesTeacherOnProbe) {
  // Teacher theta = 0 and a zero net agree everywhere.
  RngStream rng(29);
  auto env = teacher(29);
  env.set_theta(ParamPoint::zero(5));
  const MatrixXd probe = env.sample_inputs(32, rng);
  const auto dir = disagreement_direction(TwoLayerNet::zeros(3, 4), env, probe, teacher_fisher(env, probe));
  EXPECT_EQ(dir, TangentVector::zero(5));
}

TEST(Disagreement, UnitFisherLengthAndAscent) {
  RngStream rng(30);
  for (int trial = 0; trial < 20; ++trial) {
    auto env = teacher(100 + trial);
    const auto net = TwoLayerNet::sample(3, 4, 1.0, rng);
    const MatrixXd probe = env.sample_inputs(64, rng);
    const MetricTensor g = teacher_fisher(env, probe);
    const auto dir = disagreement_direction(net, env, probe, g);
    EXPECT_NEAR(fisher_norm(g, dir), 1.0, 1e-12);
    auto mse = [&](const TeacherEnv& e) {
      return (env.features().batch(probe) * e.theta().coords - net_forward_batch(net, probe))
          .squaredNorm() / 64.0;
    };
    const double before = mse(env);
    env.set_theta(env.theta() + 1e-4 * dir);
    EXPECT_GT(mse(env), before);
  }
}

TEST(Disagreement, PrecomputedFeaturesGiveSameDirection) {
  RngStream rng(31);
  const auto env = teacher(31);
  const auto net = TwoLayerNet::sample(3, 4, 1.0, rng);
  const MatrixXd probe = env.sample_inputs(40, rng);
  const MetricTensor g = teacher_fisher(env, probe);
  EXPECT_EQ(disagreement_direction(net, env, probe, g),
            disagreement_direction(net, env, probe, env.features().batch(probe), g));
  EXPECT_THROW(disagreement_direction(net, env, MatrixXd(0, 3), g), std::invalid_argument);
}

TEST(MatchedSteps, EuclideanStepScalesBySqrtRho) {
  const QuadOptState s(ParamPoint(Vector2d(3, 4)), GaussianLocationFamily::isotropic(2), 0.81, 1e-4);
  const auto next = euclidean_step_matched(s);
  EXPECT_NEAR(next.theta.coords(0), 2.7, 1e-15);
  EXPECT_NEAR(next.theta.coords(1), 3.6, 1e-15);
  EXPECT_NEAR(next.objective(), 0.81 * s.objective(), 1e-12);
}

TEST(MatchedSteps, NaturalReducesToEuclideanWhenIsotropic) {
  RngStream rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const QuadOptState s(ParamPoint(rng.normal_vector(4)), GaussianLocationFamily::isotropic(4), 0.81, 1e-4);
    EXPECT_LT((natural_step_matched(s).theta.coords - euclidean_step_matched(s).theta.coords).norm(),
              1e-13 * s.theta.coords.norm());
  }
}

TEST(MatchedSteps, NaturalStepMatchesDecreaseWhenReachable) {
  RngStream rng(33);
  int reachable = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const GaussianLocationFamily fam(testsupport::random_spd(rng, 3, 0.1, 1.0));
    const QuadOptState s(ParamPoint(rng.normal_vector(3)), fam, 0.81, 1e-4);
    const VectorXd dir = fam.covariance() * s.theta.coords;
    const double a = dir.squaredNorm(), b = s.theta.coords.dot(dir), c = s.theta.coords.squaredNorm();
    const auto next = natural_step_matched(s);
    if (b * b >= a * (1 - 0.81) * c) {
      ++reachable;
      EXPECT_NEAR(next.objective(), 0.81 * s.objective(), 1e-12 * s.objective());
    } else {
      // Ray minimizer: the new point is orthogonal to the search direction.
      EXPECT_NEAR(next.theta.coords.dot(dir), 0.0, 1e-12 * c);
      EXPECT_LT(next.objective(), s.objective());
    }
  }
  EXPECT_GT(reachable, 100);
}

TEST(MatchedSteps, NaturalStepIsShorterInFisherPerStep) {
  RngStream rng(34);
  for (int trial = 0; trial < 200; ++trial) {
    const GaussianLocationFamily fam(testsupport::random_spd(rng, 4, 0.1, 1.0));
    const QuadOptState s(ParamPoint(rng.normal_vector(4)), fam, 0.81, 1e-4);
    const auto nat = natural_step_matched(s);
    if (nat.objective() > 0.81 * s.objective() * (1 + 1e-9)) continue;  // ray-minimizer fallback
    const double ln = fisher_norm(fam.metric(), nat.theta - s.theta);
    const double le = fisher_norm(fam.metric(), euclidean_step_matched(s).theta - s.theta);
    EXPECT_LE(ln, le * (1 + 1e-12));
  }
}

TEST(MatchedSteps, AtOptimumThrows) {
  const QuadOptState s(ParamPoint::zero(2), GaussianLocationFamily::isotropic(2), 0.5, 0.1);
  EXPECT_THROW(euclidean_step_matched(s), std::domain_error);
  EXPECT_THROW(natural_step_matched(s), std::domain_error);
  EXPECT_THROW(QuadOptState(ParamPoint::zero(2), GaussianLocationFamily::isotropic(2), 1.0, 0.1),
               std::invalid_argument);
}

TEST(MatchedDescent, EuclideanStepCountIsClosedForm) {
  RngStream rng(35);
  EXPECT_EQ(euclidean_step_count(0.81, 1e-4), 44);
  for (int trial = 0; trial < 100; ++trial) {
    const double rho = 0.05 + 0.9 * rng.uniform();
    const double target = std::pow(10.0, -1.0 - 5.0 * rng.uniform());
    const GaussianLocationFamily fam(testsupport::random_spd(rng, 3));
    const QuadOptState s(ParamPoint(rng.normal_vector(3)), fam, rho, target);
    const auto res = run_matched_descent(s, DescentMethod::euclidean);
    const int closed = euclidean_step_count(rho, target);
    // Floating rounding can only matter when ln(target)/ln(rho) sits on an integer.
    const double q = std::log(target) / std::log(rho);
    if (std::abs(q - std::round(q)) > 1e-9) EXPECT_EQ(res.steps, closed);
    EXPECT_LE(res.final_ratio, target);
  }
}

TEST(MatchedDescent, EuclideanPathIsTheFisherGeodesic) {
  // The Euclidean path is a straight segment, so its Fisher length equals the
  // endpoint distance; any other path (natural included) is at least that long.
  RngStream rng(36);
  for (int trial = 0; trial < 50; ++trial) {
    const GaussianLocationFamily fam(testsupport::random_spd(rng, 3, 0.1, 1.0));
    const ParamPoint th0(rng.normal_vector(3));
    const QuadOptState s(th0, fam, 0.81, 1e-4);
    const auto eu = run_matched_descent(s, DescentMethod::euclidean);
    const double chord = fisher_norm(fam.metric(), TangentVector(th0.coords)) * (1 - std::sqrt(eu.final_ratio));
    EXPECT_NEAR(eu.fisher_length, chord, 1e-10 * chord);
    const auto nat = run_matched_descent(s, DescentMethod::natural);
    EXPECT_LE(nat.final_ratio, 1e-4);
    // Fisher distance from theta_0 to the sublevel endpoint bounds the natural length below.
    const double end_norm_bound = std::sqrt(nat.final_ratio) * th0.coords.norm() /
                                  std::sqrt(fam.covariance().selfadjointView<Eigen::Lower>().eigenvalues().minCoeff());
    EXPECT_GE(nat.fisher_length, fisher_norm(fam.metric(), TangentVector(th0.coords)) - end_norm_bound - 1e-12);
  }
}
