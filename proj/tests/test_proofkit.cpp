#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sectlab/proofkit.hpp"

using namespace sectlab;

namespace {

ConvexBody l1(std::size_t n) { return ConvexBody::lp_ball(Exponent::finite(1.0), n); }
ConvexBody l2(std::size_t n) { return ConvexBody::lp_ball(Exponent::finite(2.0), n); }

// level with Pr(|g| < lambda) = p for g standard Gaussian
double gaussian_level(double p) { return oracle::normal_quantile(0.5 + p / 2.0); }

void expect_net_invariants(const ConvexBody& body, const NetResult& net) {
  EXPECT_EQ(net.cardinality, net.points.size());
  for (std::size_t i = 0; i < net.points.size(); ++i) {
    EXPECT_NEAR(net.points[i].norm(), net.r, 1e-9);
    EXPECT_TRUE(membership(body, net.points[i], 1e-9));
    for (std::size_t j = 0; j < i; ++j) EXPECT_GE((net.points[i] - net.points[j]).norm(), net.rho);
  }
}

}  // namespace

TEST(BinomialTail, DirectEvaluation) {
  const auto t = binomial_tail_bound(0.01, 100);
  EXPECT_NEAR(t.analytic(), std::pow(std::exp(1.0) / 6.0, 6.0), 1e-12);
  EXPECT_NEAR(t.analytic(), 8.647e-3, 1e-6);
  EXPECT_DOUBLE_EQ(t.target(), 1.0 / 64.0);
}

TEST(BinomialTail, RatioIdentity) {
  for (double eps : {0.001, 0.02, 0.08}) {
    for (std::size_t k : {12u, 100u, 5000u}) {
      const auto t = binomial_tail_bound(eps, k);
      const double m = 6.0 * eps * static_cast<double>(k);
      EXPECT_NEAR(t.log_analytic - t.log_target, m * std::log(std::exp(1.0) / 3.0), 1e-9 * m);
      EXPECT_LE(t.log_analytic, t.log_target);
    }
  }
}

TEST(BinomialTail, NoUnderflowInLogSpace) {
  const auto t = binomial_tail_bound(0.08, 100000);
  EXPECT_TRUE(std::isfinite(t.log_analytic));
  EXPECT_LT(t.log_analytic, -1000.0);
}

TEST(BinomialTail, RejectsEpsilon) {
  EXPECT_THROW(binomial_tail_bound(0.0, 10), InputError);
  EXPECT_THROW(binomial_tail_bound(1.0 / 12.0, 10), InputError);
  EXPECT_THROW(binomial_tail_bound(0.01, 0), InputError);
}

TEST(Wilson, KnownInterval) {
  const auto [lo, hi] = wilson_interval(3, 10);
  EXPECT_NEAR(lo, 0.178821, 1e-6);
  EXPECT_NEAR(hi, 0.457543, 1e-6);
  const auto [z0, z1] = wilson_interval(0, 100);
  EXPECT_EQ(z0, 0.0);
  EXPECT_GT(z1, 0.0);
}

TEST(LemmaSim, GaussianPremiseHasNoFailures) {
  const auto res = lemma_smallball_sim(Ensemble::gaussian(1), 0.0125, 0.01, 600, 10000, RngStream{1, 0});
  EXPECT_EQ(res.failures, 0u);
  EXPECT_DOUBLE_EQ(res.bound, std::exp2(-36.0));
}

TEST(LemmaSim, ZeroLevelNeverFails) {
  const auto res = lemma_smallball_sim(Ensemble::uniform_cube(1), 0.0, 0.05, 50, 2000, RngStream{1, 1});
  EXPECT_EQ(res.failure_rate, 0.0);
}

TEST(LemmaSim, NearBoundaryWithinWilsonBand) {
  const double eps = 0.08;
  const auto res =
      lemma_smallball_sim(Ensemble::gaussian(1), gaussian_level(eps), eps, 24, 10000, RngStream{1, 2});
  EXPECT_LE(res.failure_rate, res.bound + 3.0 * res.wilson());
}

TEST(LemmaSim, BadCountMatchesBinomialMean) {
  // with lambda at Pr(|g| < lambda) = 0.3 the bad count is Binomial(k, 0.3)
  const double lambda = gaussian_level(0.3);
  auto gen = RngStream{2, 0}.engine();
  CoordinateSampler coords(Ensemble::gaussian(1));
  double total = 0.0;
  const int trials = 5000;
  for (int t = 0; t < trials; ++t) {
    const auto trial = small_ball_trial(coords, gen, lambda, 0.05, 40);
    EXPECT_LE(trial.bad_count, 40u);
    total += static_cast<double>(trial.bad_count);
  }
  const double se = std::sqrt(40 * 0.3 * 0.7 / trials);
  EXPECT_NEAR(total / trials, 12.0, 4.0 * se);
}

TEST(LemmaSim, ExchangeableAcrossSeeds) {
  const double lambda = gaussian_level(0.3);
  const auto a = lemma_smallball_sim(Ensemble::gaussian(1), lambda, 0.05, 40, 4000, RngStream{3, 0});
  const auto b = lemma_smallball_sim(Ensemble::gaussian(1), lambda, 0.05, 40, 4000, RngStream{3, 1});
  EXPECT_NEAR(a.failure_rate, b.failure_rate, 4.0 * std::hypot(a.std_error(), b.std_error()));
}

TEST(LemmaSim, RejectsEpsilon) {
  EXPECT_THROW(lemma_smallball_sim(Ensemble::gaussian(1), 0.1, 0.1, 10, 10, RngStream{}), InputError);
}

TEST(CorollarySim, SingleVectorReducesToLemma) {
  const double lambda = gaussian_level(0.3);
  const auto lemma = lemma_smallball_sim(Ensemble::gaussian(1), lambda, 0.05, 40, 3000, RngStream{4, 0});
  const auto cor = corollary_sim(Ensemble::gaussian(1), 1, lambda, 0.05, 40, 3000, RngStream{4, 0});
  EXPECT_EQ(lemma.failures, cor.failures);
}

TEST(CorollarySim, UnionBoundAndMonotonicity) {
  const double lambda = gaussian_level(0.3);
  const auto one = corollary_sim(Ensemble::gaussian(1), 1, lambda, 0.05, 40, 4000, RngStream{5, 0});
  const auto four = corollary_sim(Ensemble::gaussian(1), 4, lambda, 0.05, 40, 4000, RngStream{5, 1});
  const auto sixteen = corollary_sim(Ensemble::gaussian(1), 16, lambda, 0.05, 40, 4000, RngStream{5, 2});
  EXPECT_LE(four.failure_rate, 4.0 * one.failure_rate + 3.0 * four.std_error());
  EXPECT_GE(four.failure_rate, one.failure_rate - 3.0 * std::hypot(one.std_error(), four.std_error()));
  EXPECT_GE(sixteen.failure_rate, four.failure_rate - 3.0 * std::hypot(four.std_error(), sixteen.std_error()));
}

TEST(CorollarySim, CardinalityCap) {
  // 2^{3 eps k} = 2^6 = 64
  EXPECT_NO_THROW(corollary_sim(Ensemble::gaussian(1), 64, 0.01, 0.05, 40, 10, RngStream{}));
  EXPECT_THROW(corollary_sim(Ensemble::gaussian(1), 65, 0.01, 0.05, 40, 10, RngStream{}), InputError);
  const auto res = corollary_sim(Ensemble::gaussian(1), 64, gaussian_level(0.05), 0.05, 40, 2000,
                                 RngStream{6, 0});
  EXPECT_NEAR(res.bound, 1.0 / 64.0, 1e-15);
  EXPECT_LE(res.failure_rate, res.bound + 3.0 * res.std_error());
}

TEST(Net, WideSeparationGivesOnePoint) {
  const auto net = separated_net(l1(6), 0.5, 1.01, 200, RngStream{7, 0});
  EXPECT_EQ(net.cardinality, 1u);
  EXPECT_TRUE(net.budget_exhausted);
  expect_net_invariants(l1(6), net);
}

TEST(Net, SphereSeparation) {
  const auto net = separated_net(l2(5), 1.0, 1.9, 2000, RngStream{7, 1});
  EXPECT_GE(net.cardinality, 2u);
  EXPECT_LE(net.cardinality, 10u);
  expect_net_invariants(l2(5), net);
}

TEST(Net, CrossPolytopeInvariants) {
  const auto net = separated_net(l1(32), 0.5, 0.6, 300, RngStream{7, 2});
  EXPECT_GE(net.cardinality, 2u);
  expect_net_invariants(l1(32), net);
}

TEST(Net, EmptySphereSection) {
  EXPECT_THROW(separated_net(l1(4), 1.5, 0.1, 10, RngStream{}), EmptySetError);
  EXPECT_THROW(separated_net(l1(4), 0.5, 0.0, 10, RngStream{}), InputError);
  EXPECT_THROW(separated_net(l1(4), 0.5, 0.1, 0, RngStream{}), InputError);
}

TEST(Net, StarvedWhenSphereSectionIsTiny) {
  // a needle ellipsoid along the diagonal: only directions close to it reach radius 0.9
  const std::size_t n = 30;
  Vector v = Vector::Constant(static_cast<Eigen::Index>(n), -1.0 / std::sqrt(double(n)));
  v[0] += 1.0;
  const Matrix q = Matrix::Identity(n, n) - 2.0 * v * v.transpose() / v.squaredNorm();
  Vector axes = Vector::Constant(static_cast<Eigen::Index>(n), 1e-4);
  axes[0] = 1.0;
  const Matrix shape = q * axes.asDiagonal() * q.transpose();
  const auto body = ConvexBody::ellipsoid(0.5 * (shape + shape.transpose()));
  NetOptions opt;
  opt.max_resample = 50;
  const auto net = separated_net(body, 0.9, 0.1, 10, RngStream{7, 3}, opt);
  EXPECT_TRUE(net.starved);
  EXPECT_EQ(net.cardinality, 0u);
}

TEST(Net, ReachesVerticesOfTheCrossPolytope) {
  // r close to the circumradius: the section is a union of small caps at +-e_i
  const auto net = separated_net(l1(30), 0.999, 0.5, 2000, RngStream{7, 4});
  EXPECT_FALSE(net.starved);
  EXPECT_EQ(net.cardinality, 60u);
  expect_net_invariants(l1(30), net);
}

TEST(Net, DeterministicGivenSeed) {
  const auto a = separated_net(l1(10), 0.5, 0.4, 100, RngStream{8, 0});
  const auto b = separated_net(l1(10), 0.5, 0.4, 100, RngStream{8, 0});
  ASSERT_EQ(a.cardinality, b.cardinality);
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i], b.points[i]);
}

TEST(Oscillation, ProbesAtNetPointsGiveZero) {
  const auto net = separated_net(l1(12), 0.5, 0.4, 100, RngStream{9, 0});
  const auto res = oscillation_at(net, net.points, Ensemble::gaussian(12), 20, 30, RngStream{9, 1});
  EXPECT_EQ(res.A_hat, 0.0);
  EXPECT_TRUE(res.rearrangement_ok);
}

TEST(Oscillation, CauchySchwarzCapOnBall) {
  const std::size_t n = 8;
  const auto net = separated_net(l2(n), 1.0, 0.8, 300, RngStream{9, 2});
  OscillationOptions opt;
  opt.draws = 50;
  opt.width_samples = 200;
  const auto res = empirical_oscillation(l2(n), net, Ensemble::gaussian(n), 16, 20, RngStream{9, 3}, opt);
  ASSERT_EQ(res.per_draw.size(), 50u);
  for (std::size_t d = 0; d < res.per_draw.size(); ++d) {
    EXPECT_LE(res.per_draw[d], res.max_probe_gap * res.row_norm_mean[d] + 1e-12);
  }
}

TEST(Oscillation, CrossPolytopeBelowRhs) {
  const std::size_t n = 32, k = 64;
  const double eps = 1.0 / 600.0;
  const double r = 0.5;
  const double lw = localized_mean_width(l1(n), r, 2000, RngStream{10, 0}).mean;
  const double rho = lw / std::sqrt(eps * static_cast<double>(k));
  const auto net = separated_net(l1(n), r, rho, 200, RngStream{10, 1});
  OscillationOptions opt;
  opt.draws = 200;
  opt.width_samples = 2000;
  const auto res = empirical_oscillation(l1(n), net, Ensemble::gaussian(n), k, 20, RngStream{10, 2}, opt);
  EXPECT_GE(res.fraction_below_rhs(), 0.95);
  EXPECT_TRUE(res.rearrangement_ok);
}

TEST(Oscillation, RejectsEmptyNet) {
  NetResult empty;
  EXPECT_THROW(oscillation_at(empty, {Vector::Ones(3)}, Ensemble::gaussian(3), 4, 2, RngStream{}),
               InputError);
}
