#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

#include "sectlab/bodies.hpp"
#include "sectlab/rng.hpp"

using namespace sectlab;

namespace {

Vector gaussian_vector(std::size_t n, std::uint32_t sub) {
  auto gen = RngStream{11, 0}.engine(sub);
  std::normal_distribution<double> normal;
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(gen);
  return v;
}

std::vector<ConvexBody> lp_family(std::size_t n) {
  return {ConvexBody::lp_ball(Exponent::finite(1.0), n), ConvexBody::lp_ball(Exponent::finite(1.5), n),
          ConvexBody::lp_ball(Exponent::finite(2.0), n), ConvexBody::lp_ball(Exponent::finite(3.0), n),
          ConvexBody::lp_ball(Exponent::infinity(), n)};
}

Matrix signed_columns(const Matrix& half) {
  Matrix both(half.rows(), 2 * half.cols());
  both << half, -half;
  return both;
}

}  // namespace

TEST(Exponent, RejectsInvalid) {
  EXPECT_THROW(Exponent::finite(0.5), InputError);
  EXPECT_THROW(Exponent::finite(std::nan("")), InputError);
  EXPECT_THROW(Exponent::infinity().value(), InputError);
}

TEST(Exponent, Duals) {
  EXPECT_TRUE(Exponent::finite(1.0).dual().is_infinite());
  EXPECT_EQ(Exponent::infinity().dual().value(), 1.0);
  EXPECT_DOUBLE_EQ(Exponent::finite(3.0).dual().value(), 1.5);
  EXPECT_DOUBLE_EQ(Exponent::finite(2.0).dual().value(), 2.0);
}

TEST(LpNorm, MatchesDefinition) {
  Vector x(3);
  x << 3.0, -4.0, 12.0;
  EXPECT_DOUBLE_EQ(lp_norm(x, Exponent::finite(1.0)), 19.0);
  EXPECT_DOUBLE_EQ(lp_norm(x, Exponent::finite(2.0)), 13.0);
  EXPECT_DOUBLE_EQ(lp_norm(x, Exponent::infinity()), 12.0);
  EXPECT_NEAR(lp_norm(x, Exponent::finite(3.0)), std::cbrt(27.0 + 64.0 + 1728.0), 1e-12);
  Vector big = Vector::Constant(4, 1e200);
  EXPECT_NEAR(lp_norm(big, Exponent::finite(4.0)) / 1e200, std::pow(4.0, 0.25), 1e-12);
}

TEST(Support, SupportPointAttainsSupportAndIsFeasible) {
  for (const auto& body : lp_family(7)) {
    for (std::uint32_t s = 0; s < 50; ++s) {
      const Vector u = gaussian_vector(7, s);
      const Vector t = support_point(body, u);
      EXPECT_NEAR(u.dot(t), support(body, u), 1e-10 * support(body, u));
      EXPECT_LE(gauge(body, t), 1.0 + 1e-10);
    }
  }
}

TEST(Support, EqualsDualNormOnLpBalls) {
  const Vector u = gaussian_vector(9, 3);
  EXPECT_NEAR(support(ConvexBody::lp_ball(Exponent::finite(1.0), 9), u), u.cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(support(ConvexBody::lp_ball(Exponent::infinity(), 9), u), u.lpNorm<1>(), 1e-12);
  EXPECT_NEAR(support(ConvexBody::lp_ball(Exponent::finite(2.0), 9), u), u.norm(), 1e-12);
}

TEST(Gauge, PositivelyHomogeneousAndZeroAtOrigin) {
  for (const auto& body : lp_family(5)) {
    const Vector x = gaussian_vector(5, 8);
    EXPECT_NEAR(gauge(body, 2.5 * x), 2.5 * gauge(body, x), 1e-12);
    EXPECT_EQ(gauge(body, Vector::Zero(5)), 0.0);
    EXPECT_TRUE(membership(body, x / gauge(body, x), 1e-12));
    EXPECT_FALSE(membership(body, 1.01 * x / gauge(body, x)));
  }
}

TEST(Gauge, DimensionMismatchThrows) {
  const auto body = ConvexBody::lp_ball(Exponent::finite(1.0), 4);
  EXPECT_THROW(gauge(body, Vector::Ones(5)), InputError);
  EXPECT_THROW(support(body, Vector::Ones(3)), InputError);
}

TEST(Ellipsoid, SupportGaugeAndRadius) {
  Vector axes(3);
  axes << 1.0, 2.0, 0.5;
  const auto body = ConvexBody::ellipsoid_axes(axes);
  Vector e1 = Vector::Zero(3), e2 = Vector::Zero(3);
  e1[0] = 1.0;
  e2[1] = 1.0;
  EXPECT_NEAR(support(body, e2), 2.0, 1e-14);
  EXPECT_NEAR(gauge(body, e2), 0.5, 1e-14);
  EXPECT_NEAR(euclidean_radius(body), 2.0, 1e-12);
  const Vector u = gaussian_vector(3, 1);
  const Vector t = support_point(body, u);
  EXPECT_NEAR(gauge(body, t), 1.0, 1e-12);
  EXPECT_NEAR(u.dot(t), support(body, u), 1e-12);
}

TEST(Ellipsoid, RejectsBadShapes) {
  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(ConvexBody::ellipsoid(asym), InputError);
  Matrix indefinite(2, 2);
  indefinite << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(ConvexBody::ellipsoid(indefinite), InputError);
  EXPECT_THROW(ConvexBody::ellipsoid_axes(Vector::Zero(2)), InputError);
}

TEST(VertexHull, CrossPolytopeMatchesL1) {
  const std::size_t n = 5;
  const auto hull = ConvexBody::vertex_hull(signed_columns(Matrix::Identity(5, 5)));
  const auto l1 = ConvexBody::lp_ball(Exponent::finite(1.0), n);
  for (std::uint32_t s = 0; s < 20; ++s) {
    const Vector x = gaussian_vector(n, 100 + s);
    EXPECT_NEAR(gauge(hull, x), gauge(l1, x), 1e-12);
    EXPECT_NEAR(support(hull, x), support(l1, x), 1e-12);
  }
  EXPECT_NEAR(euclidean_radius(hull), 1.0, 1e-15);
}

TEST(VertexHull, SquareMatchesLinf) {
  Matrix half(2, 2);
  half << 1.0, 1.0, 1.0, -1.0;
  const auto hull = ConvexBody::vertex_hull(signed_columns(half));
  const auto cube = ConvexBody::lp_ball(Exponent::infinity(), 2);
  for (std::uint32_t s = 0; s < 20; ++s) {
    const Vector x = gaussian_vector(2, 200 + s);
    EXPECT_NEAR(gauge(hull, x), gauge(cube, x), 1e-12);
    EXPECT_NEAR(support(hull, x), support(cube, x), 1e-12);
  }
}

TEST(VertexHull, RejectsAsymmetricOrFlat) {
  Matrix one_sided = Matrix::Identity(2, 2);
  EXPECT_THROW(ConvexBody::vertex_hull(one_sided), InputError);
  Matrix flat(2, 2);
  flat << 1.0, -1.0, 0.0, 0.0;
  EXPECT_THROW(ConvexBody::vertex_hull(flat), InputError);
}

TEST(Body, ScaledBodies) {
  const auto l2 = ConvexBody::lp_ball(Exponent::finite(2.0), 3);
  const auto big = l2.scaled(3.0);
  EXPECT_NEAR(euclidean_radius(big), 3.0, 1e-12);
  EXPECT_THROW(ConvexBody::lp_ball(Exponent::finite(1.0), 3).scaled(2.0), InputError);
}

TEST(Radius, LpBalls) {
  EXPECT_DOUBLE_EQ(euclidean_radius(ConvexBody::lp_ball(Exponent::finite(1.0), 10)), 1.0);
  EXPECT_DOUBLE_EQ(euclidean_radius(ConvexBody::lp_ball(Exponent::infinity(), 16)), 4.0);
  EXPECT_NEAR(euclidean_radius(ConvexBody::lp_ball(Exponent::finite(4.0), 16)), 2.0, 1e-12);
}

// Brute-force oracle in the plane: maximize <u, x> over a fine polar grid of
// B1 cap rB2, plus the corner points.
TEST(LocalizedSupport, L1MatchesPlanarGrid) {
  const auto body = ConvexBody::lp_ball(Exponent::finite(1.0), 2);
  for (double r : {0.3, 0.6, 0.75, 0.9}) {
    for (std::uint32_t s = 0; s < 5; ++s) {
      const Vector u = gaussian_vector(2, 300 + s);
      double best = 0.0;
      const int steps = 200000;
      for (int i = 0; i < steps; ++i) {
        const double a = 2.0 * M_PI * i / steps;
        const double c = std::cos(a), sn = std::sin(a);
        const double radius = std::min(r, 1.0 / (std::abs(c) + std::abs(sn)));
        best = std::max(best, radius * (u[0] * c + u[1] * sn));
      }
      // kinks where the circle crosses the boundary of B1
      if (r * std::sqrt(2.0) > 1.0) {
        const double h = std::sqrt(2.0 - 1.0 / (r * r));
        const double a = r * (1.0 / r + h) / 2.0, b = r * (1.0 / r - h) / 2.0;
        for (double sx : {-1.0, 1.0}) {
          for (double sy : {-1.0, 1.0}) {
            best = std::max(best, sx * a * u[0] + sy * b * u[1]);
            best = std::max(best, sx * b * u[0] + sy * a * u[1]);
          }
        }
      }
      const auto loc = localized_support(body, r, u);
      EXPECT_NEAR(loc.value, best, 1e-6 * u.norm()) << "r=" << r;
    }
  }
}

TEST(LocalizedSupport, GenericPathBracketsL1Value) {
  // the cross-polytope as a vertex hull goes through the subgradient path
  const std::size_t n = 6;
  const auto hull = ConvexBody::vertex_hull(signed_columns(Matrix::Identity(6, 6)));
  const auto l1 = ConvexBody::lp_ball(Exponent::finite(1.0), n);
  LocalizedOptions opt;
  opt.subgradient_iters = 20000;
  for (std::uint32_t s = 0; s < 10; ++s) {
    const Vector u = gaussian_vector(n, 400 + s);
    const double exact = localized_support(l1, 0.5, u).value;
    const auto gen = localized_support(hull, 0.5, u, opt);
    EXPECT_LE(gen.lower_bound, exact + 1e-9);
    EXPECT_GE(gen.value, exact - 1e-9);
    EXPECT_LE(gen.value, exact * 1.01);
  }
}

TEST(LocalizedSupport, TrivialCases) {
  const Vector u = gaussian_vector(8, 9);
  const auto l2 = ConvexBody::lp_ball(Exponent::finite(2.0), 8);
  EXPECT_NEAR(localized_support(l2, 0.25, u).value, 0.25 * u.norm(), 1e-14);
  EXPECT_NEAR(localized_support(l2, 4.0, u).value, u.norm(), 1e-14);
  const auto cube = ConvexBody::lp_ball(Exponent::infinity(), 8);
  EXPECT_DOUBLE_EQ(localized_support(cube, 10.0, u).value, support(cube, u));
  EXPECT_THROW(localized_support(cube, 0.0, u), InputError);
}

TEST(LocalizedSupport, MonotoneAndSublinearInRadius) {
  const auto l1 = ConvexBody::lp_ball(Exponent::finite(1.0), 30);
  const Vector u = gaussian_vector(30, 77);
  double prev = 0.0, prev_ratio = std::numeric_limits<double>::infinity();
  for (double r = 0.05; r <= 1.0; r += 0.05) {
    const double h = localized_support(l1, r, u).value;
    EXPECT_GE(h, prev - 1e-12);
    EXPECT_LE(h / r, prev_ratio + 1e-9);
    EXPECT_LE(h, std::min(r * u.norm(), support(l1, u)) + 1e-12);
    prev = h;
    prev_ratio = h / r;
  }
}

TEST(ParseBody, Specs) {
  EXPECT_EQ(parse_body("l1", 4).dim(), 4u);
  EXPECT_TRUE(parse_body("linf", 3).as<LpBall>()->p.is_infinite());
  EXPECT_TRUE(parse_body("lp:inf", 3).as<LpBall>()->p.is_infinite());
  EXPECT_DOUBLE_EQ(parse_body("lp:3", 3).as<LpBall>()->p.value(), 3.0);
  const auto e = parse_body("ellipsoid:1,2,3", 0);
  EXPECT_EQ(e.dim(), 3u);
  EXPECT_NEAR(euclidean_radius(e), 3.0, 1e-12);
  EXPECT_THROW(parse_body("l1", 0), InputError);
  EXPECT_THROW(parse_body("ellipsoid:1,2", 3), InputError);
  EXPECT_THROW(parse_body("banana", 3), InputError);
  EXPECT_THROW(parse_body("lp:0.5", 3), InputError);
  EXPECT_THROW(parse_body("lp:x", 3), InputError);
}

TEST(ParseBody, HullFromCsv) {
  const std::string path = ::testing::TempDir() + "square.csv";
  {
    std::ofstream out(path);
    out << "# square\n1,1\n-1,-1\n1,-1\n-1,1\n";
  }
  const auto hull = parse_body("hull:" + path, 2);
  Vector x(2);
  x << 0.5, 0.25;
  EXPECT_NEAR(gauge(hull, x), 0.5, 1e-12);
  EXPECT_THROW(parse_body("hull:/nonexistent/file.csv", 0), InputError);
  std::remove(path.c_str());
}

#include "oracles.hpp"

TEST(LocalizedSupport, L1MatchesClosedForm) {
  const auto body = ConvexBody::lp_ball(Exponent::finite(1.0), 30);
  for (std::uint32_t s = 0; s < 30; ++s) {
    const Vector u = gaussian_vector(30, 500 + s);
    const std::vector<double> uv(u.data(), u.data() + u.size());
    for (double r : {0.05, 0.2, 0.5, 0.9}) {
      EXPECT_NEAR(localized_support(body, r, u).value, oracle::l1_ball_localized_support(uv, r),
                  1e-9 * u.norm());
    }
  }
}
