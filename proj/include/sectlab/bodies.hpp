#pragma once

// Centrally symmetric convex bodies given by exact oracles.
//
// Three families are supported: l_p unit balls, ellipsoids
// {x : x^T A^{-1} x <= 1} with A symmetric positive definite, and convex hulls
// of a vertex set closed under negation. Every body exposes its support
// function h_T(u) = sup_{t in T} <u,t> (which, T being symmetric, is the polar
// norm ||u||_{T°}), its gauge, and a Euclidean circumradius.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sectlab/error.hpp"

namespace sectlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// An l_p exponent in [1, inf]. Infinity is a tag, never a float sentinel.
class Exponent {
 public:
  static Exponent finite(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) {
      throw InputError("l_p exponent must be a finite value >= 1 (use infinity())");
    }
    return Exponent(p);
  }
  static Exponent infinity() { return Exponent(std::nullopt); }

  bool is_infinite() const { return !p_.has_value(); }
  double value() const {
    if (!p_) throw InputError("exponent is infinite");
    return *p_;
  }

  /// Hoelder conjugate q with 1/p + 1/q = 1.
  Exponent dual() const {
    if (!p_) return finite(1.0);
    if (*p_ == 1.0) return infinity();
    return finite(*p_ / (*p_ - 1.0));
  }

  friend bool operator==(const Exponent&, const Exponent&) = default;

 private:
  explicit Exponent(std::optional<double> p) : p_(p) {}
  std::optional<double> p_;
};

inline double lp_norm(const Vector& x, const Exponent& p) {
  if (p.is_infinite()) return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
  const double e = p.value();
  if (e == 1.0) return x.lpNorm<1>();
  if (e == 2.0) return x.norm();
  // scale by the max entry so large exponents do not overflow
  const double m = x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]) / m, e);
  return m * std::pow(s, 1.0 / e);
}

struct LpBall {
  Exponent p;
};

struct Ellipsoid {
  Matrix shape;    // A
  Matrix inverse;  // A^{-1}
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

struct VertexHull {
  Matrix half_vertices;         // n x h, one column per +/- pair
  std::vector<Matrix> inverses;  // V_S^{-1} for every invertible basis S
};

class ConvexBody {
 public:
  using Kind = std::variant<LpBall, Ellipsoid, VertexHull>;

  static constexpr std::size_t kHullBasisBudget = 200000;

  static ConvexBody lp_ball(Exponent p, std::size_t dim) {
    detail::require(dim >= 1, "body dimension must be positive");
    return ConvexBody(LpBall{p}, dim);
  }

  /// Ellipsoid {x : x^T shape^{-1} x <= 1}.
  static ConvexBody ellipsoid(const Matrix& shape) {
    detail::require(shape.rows() >= 1 && shape.rows() == shape.cols(),
                    "ellipsoid shape must be a nonempty square matrix");
    detail::require(shape.allFinite(), "ellipsoid shape has non-finite entries");
    const double asym = (shape - shape.transpose()).cwiseAbs().maxCoeff();
    detail::require(asym <= 1e-12 * std::max(1.0, shape.cwiseAbs().maxCoeff()),
                    "ellipsoid shape must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(shape);
    detail::require(eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 0.0,
                    "ellipsoid shape must be positive definite");
    Ellipsoid e;
    e.shape = shape;
    e.inverse = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                eig.eigenvectors().transpose();
    e.inverse = 0.5 * (e.inverse + e.inverse.transpose()).eval();
    e.min_eigenvalue = eig.eigenvalues().minCoeff();
    e.max_eigenvalue = eig.eigenvalues().maxCoeff();
    const auto n = static_cast<std::size_t>(shape.rows());
    return ConvexBody(std::move(e), n);
  }

  /// Axis-aligned ellipsoid with the given semi-axes.
  static ConvexBody ellipsoid_axes(const Vector& semi_axes) {
    detail::require(semi_axes.size() >= 1, "ellipsoid needs at least one semi-axis");
    detail::require((semi_axes.array() > 0.0).all() && semi_axes.allFinite(),
                    "ellipsoid semi-axes must be positive and finite");
    return ellipsoid(semi_axes.array().square().matrix().asDiagonal());
  }

  /// Convex hull of the columns of `vertices`, which must be closed under
  /// negation and span R^n.
  static ConvexBody vertex_hull(const Matrix& vertices) {
    const Eigen::Index n = vertices.rows();
    detail::require(n >= 1 && vertices.cols() >= 1, "vertex hull needs vertices");
    detail::require(vertices.allFinite(), "vertex hull has non-finite coordinates");
    const double scale = vertices.cwiseAbs().maxCoeff();
    const double tol = 1e-12 * std::max(1.0, scale);
    auto same = [&](const Vector& a, const Vector& b) {
      return (a - b).cwiseAbs().maxCoeff() <= tol;
    };
    std::vector<Vector> half;
    for (Eigen::Index j = 0; j < vertices.cols(); ++j) {
      const Vector v = vertices.col(j);
      bool has_negation = false;
      for (Eigen::Index i = 0; i < vertices.cols(); ++i) {
        if (same(vertices.col(i), -v)) has_negation = true;
      }
      if (!has_negation) throw InputError("vertex set is not closed under negation");
      if (v.cwiseAbs().maxCoeff() <= tol) continue;
      bool seen = false;
      for (const auto& h : half) {
        if (same(h, v) || same(h, -v)) seen = true;
      }
      if (!seen) half.push_back(v);
    }
    Matrix hv(n, static_cast<Eigen::Index>(half.size()));
    for (std::size_t j = 0; j < half.size(); ++j) hv.col(static_cast<Eigen::Index>(j)) = half[j];
    Eigen::FullPivLU<Matrix> lu(hv);
    lu.setThreshold(1e-12);
    detail::require(lu.rank() == n, "vertex hull has empty interior (vertices do not span R^n)");

    VertexHull body;
    body.half_vertices = hv;
    const auto h = static_cast<std::size_t>(hv.cols());
    const auto dim = static_cast<std::size_t>(n);
    if (binomial(h, dim) > static_cast<double>(kHullBasisBudget)) {
      throw SizeError("vertex hull too large for exhaustive basis enumeration");
    }
    std::vector<std::size_t> idx(dim);
    for (std::size_t i = 0; i < dim; ++i) idx[i] = i;
    for (;;) {
      Matrix basis(n, n);
      for (std::size_t i = 0; i < dim; ++i) {
        basis.col(static_cast<Eigen::Index>(i)) = hv.col(static_cast<Eigen::Index>(idx[i]));
      }
      Eigen::FullPivLU<Matrix> blu(basis);
      blu.setThreshold(1e-10);
      if (blu.isInvertible()) body.inverses.push_back(blu.inverse());
      // next combination
      std::size_t i = dim;
      while (i > 0 && idx[i - 1] == h - dim + i - 1) --i;
      if (i == 0) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < dim; ++j) idx[j] = idx[j - 1] + 1;
    }
    return ConvexBody(std::move(body), dim);
  }

  std::size_t dim() const { return dim_; }
  const Kind& kind() const { return kind_; }

  template <typename K>
  const K* as() const {
    return std::get_if<K>(&kind_);
  }

  /// The body alpha * T for alpha > 0.
  ConvexBody scaled(double alpha) const {
    detail::require(alpha > 0.0 && std::isfinite(alpha), "scale must be positive");
    if (const auto* e = as<Ellipsoid>()) return ellipsoid(alpha * alpha * e->shape);
    if (const auto* h = as<VertexHull>()) {
      Matrix both(h->half_vertices.rows(), 2 * h->half_vertices.cols());
      both << alpha * h->half_vertices, -alpha * h->half_vertices;
      return vertex_hull(both);
    }
    if (const auto* b = as<LpBall>()) {
      // an l_p ball scaled by alpha is the ellipsoid alpha*B_2 only for p = 2
      if (!b->p.is_infinite() && b->p.value() == 2.0) {
        return ellipsoid(Matrix::Identity(static_cast<Eigen::Index>(dim_),
                                          static_cast<Eigen::Index>(dim_)) *
                         alpha * alpha);
      }
    }
    throw InputError("scaling is only supported for ellipsoids, hulls and the l2 ball");
  }

  static double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return std::round(r);
  }

 private:
  ConvexBody(Kind kind, std::size_t dim) : kind_(std::move(kind)), dim_(dim) {}

  Kind kind_;
  std::size_t dim_;
};

namespace detail {
inline void check_dim(const ConvexBody& body, const Vector& v) {
  if (static_cast<std::size_t>(v.size()) != body.dim()) {
    throw InputError("dimension mismatch: body has dim " + std::to_string(body.dim()) +
                     ", vector has " + std::to_string(v.size()));
  }
}
}  // namespace detail

/// h_T(u) = sup_{t in T} <u, t> = ||u||_{T°}.
inline double support(const ConvexBody& body, const Vector& u) {
  detail::check_dim(body, u);
  if (const auto* b = body.as<LpBall>()) return lp_norm(u, b->p.dual());
  if (const auto* e = body.as<Ellipsoid>()) {
    return std::sqrt(std::max(0.0, u.dot(e->shape * u)));
  }
  const auto& h = *body.as<VertexHull>();
  return (h.half_vertices.transpose() * u).cwiseAbs().maxCoeff();
}

/// A maximiser t in T of <u, t>; zero for u = 0.
inline Vector support_point(const ConvexBody& body, const Vector& u) {
  detail::check_dim(body, u);
  const Eigen::Index n = u.size();
  Vector t = Vector::Zero(n);
  if (u.cwiseAbs().maxCoeff() == 0.0) return t;
  if (const auto* b = body.as<LpBall>()) {
    const Exponent q = b->p.dual();
    if (q.is_infinite()) {  // p = 1: a signed coordinate vertex
      Eigen::Index j = 0;
      u.cwiseAbs().maxCoeff(&j);
      t[j] = u[j] > 0 ? 1.0 : -1.0;
    } else if (q.value() == 1.0) {  // p = inf: cube corner
      for (Eigen::Index i = 0; i < n; ++i) t[i] = u[i] > 0 ? 1.0 : (u[i] < 0 ? -1.0 : 0.0);
    } else {
      const double qv = q.value();
      const double norm = lp_norm(u, q);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double a = std::abs(u[i]) / norm;
        t[i] = std::copysign(std::pow(a, qv - 1.0), u[i]);
      }
    }
    return t;
  }
  if (const auto* e = body.as<Ellipsoid>()) {
    const Vector au = e->shape * u;
    return au / std::sqrt(std::max(u.dot(au), std::numeric_limits<double>::min()));
  }
  const auto& h = *body.as<VertexHull>();
  const Vector scores = h.half_vertices.transpose() * u;
  Eigen::Index j = 0;
  scores.cwiseAbs().maxCoeff(&j);
  return scores[j] >= 0 ? Vector(h.half_vertices.col(j)) : Vector(-h.half_vertices.col(j));
}

/// Minkowski functional inf{t > 0 : x/t in T}; zero at the origin.
inline double gauge(const ConvexBody& body, const Vector& x) {
  detail::check_dim(body, x);
  if (x.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  if (const auto* b = body.as<LpBall>()) return lp_norm(x, b->p);
  if (const auto* e = body.as<Ellipsoid>()) {
    return std::sqrt(std::max(0.0, x.dot(e->inverse * x)));
  }
  // Exhaustive active set: the minimal l1 representation x = V lambda is
  // attained on a basis of vertex columns.
  const auto& h = *body.as<VertexHull>();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& inv : h.inverses) best = std::min(best, (inv * x).lpNorm<1>());
  return best;
}

inline bool membership(const ConvexBody& body, const Vector& x, double tol = 0.0) {
  detail::require(tol >= 0.0, "membership tolerance must be nonnegative");
  return gauge(body, x) <= 1.0 + tol;
}

/// d_T = sup_{t in T} ||t||_2.
inline double euclidean_radius(const ConvexBody& body) {
  if (const auto* b = body.as<LpBall>()) {
    const auto n = static_cast<double>(body.dim());
    if (b->p.is_infinite()) return std::sqrt(n);
    const double p = b->p.value();
    return p <= 2.0 ? 1.0 : std::pow(n, 0.5 - 1.0 / p);
  }
  if (const auto* e = body.as<Ellipsoid>()) return std::sqrt(e->max_eigenvalue);
  return body.as<VertexHull>()->half_vertices.colwise().norm().maxCoeff();
}

struct LocalizedSupport {
  double value = 0.0;        // upper bound on h_{T cap rB2}(u)
  double lower_bound = 0.0;  // certified lower bound
  bool converged = true;
  int iterations = 0;
};

struct LocalizedOptions {
  int ternary_iters = 200;
  int subgradient_iters = 2000;
  double rel_tol = 1e-3;  // declared gap for the subgradient fallback
};

namespace detail {

inline double soft_threshold_norm(const Vector& u, double t) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double a = std::abs(u[i]) - t;
    if (a > 0.0) s += a * a;
  }
  return std::sqrt(s);
}

// h_{B1 cap rB2}(u) = min_t t + r ||soft(u, t)||_2, convex in t on [0, ||u||_inf].
inline LocalizedSupport localized_l1(const Vector& u, double r, int iters) {
  auto f = [&](double t) { return t + r * soft_threshold_norm(u, t); };
  double lo = 0.0;
  double hi = u.cwiseAbs().maxCoeff();
  const double width0 = hi;
  int it = 0;
  for (; it < iters && hi - lo > 1e-15 * std::max(width0, 1e-300); ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (f(m1) <= f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const double value = std::min({f(lo), f(hi), f(0.5 * (lo + hi))});
  return {value, value, true, it};
}

// Subgradient descent on v -> h_T(u - v) + r ||v||_2 with step ~ 1/sqrt(j).
// Lower bounds come from feasible points of T cap rB2 built from support points.
inline LocalizedSupport localized_generic(const ConvexBody& body, const Vector& u, double r,
                                          const LocalizedOptions& opt) {
  const double unorm = u.norm();
  double upper = std::min(support(body, u), r * unorm);
  Vector best_v = upper == r * unorm ? u : Vector::Zero(u.size());

  auto clip_to_ball = [&](const Vector& t) -> Vector {
    const double tn = t.norm();
    return tn > r ? Vector(t * (r / tn)) : t;
  };
  auto clip_to_body = [&](const Vector& t) -> Vector {
    const double g = gauge(body, t);
    return g > 1.0 ? Vector(t / g) : t;
  };
  double lower = std::max(0.0, u.dot(clip_to_ball(support_point(body, u))));
  if (unorm > 0.0) lower = std::max(lower, u.dot(clip_to_body(u * (r / unorm))));

  Vector v = best_v;
  Vector t_avg = Vector::Zero(u.size());
  double weight = 0.0;
  int it = 0;
  for (it = 1; it <= opt.subgradient_iters; ++it) {
    if (upper - lower <= opt.rel_tol * std::max(upper, 1e-300)) break;
    const Vector t = support_point(body, u - v);
    const double vn = v.norm();
    Vector g = -t;
    if (vn > 0.0) g += r * v / vn;
    const double gn = g.norm();
    if (gn == 0.0) break;  // v is optimal
    const double step = unorm / std::sqrt(static_cast<double>(it));
    t_avg += step * t;
    weight += step;
    v -= (step / gn) * g;
    const double val = support(body, u - v) + r * v.norm();
    if (val < upper) {
      upper = val;
      best_v = v;
    }
    lower = std::max(lower, u.dot(clip_to_ball(t)));
    lower = std::max(lower, u.dot(clip_to_ball(t_avg / weight)));
  }
  const bool converged = upper - lower <= opt.rel_tol * std::max(upper, 1e-300);
  return {upper, std::min(lower, upper), converged, it};
}

}  // namespace detail

/// h_{T cap rB2}(u) via the infimal convolution inf_v h_T(u - v) + r ||v||_2.
///
/// Exact for the l2 ball and for any body with r >= its circumradius; a 1-D
/// convex search over the soft-threshold level for the l1 ball; otherwise a
/// subgradient method whose result is an upper bound, with a certified lower
/// bound and a flag telling whether the declared relative gap was reached.
inline LocalizedSupport localized_support(const ConvexBody& body, double r, const Vector& u,
                                          const LocalizedOptions& opt = {}) {
  detail::check_dim(body, u);
  detail::require(r > 0.0 && std::isfinite(r), "localization radius must be positive");
  detail::require(opt.ternary_iters >= 1 && opt.subgradient_iters >= 1,
                  "localized support needs at least one iteration");
  if (r >= euclidean_radius(body)) {
    const double h = support(body, u);
    return {h, h, true, 0};
  }
  if (const auto* b = body.as<LpBall>()) {
    if (!b->p.is_infinite() && b->p.value() == 2.0) {
      const double h = std::min(1.0, r) * u.norm();
      return {h, h, true, 0};
    }
    if (!b->p.is_infinite() && b->p.value() == 1.0) {
      return detail::localized_l1(u, r, opt.ternary_iters);
    }
  }
  return detail::localized_generic(body, u, r, opt);
}

/// Reads vertices from a CSV file, one vertex per row.
inline Matrix read_vertex_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vertex file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InputError("bad number in vertex file: '" + cell + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError("vertex file is empty: " + path);
  const std::size_t n = rows.front().size();
  Matrix v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != n) throw InputError("ragged vertex file: " + path);
    for (std::size_t i = 0; i < n; ++i) {
      v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[j][i];
    }
  }
  return v;
}

/// Parses `l1`, `l2`, `linf`, `lp:<p>`, `ellipsoid:<a1,a2,...>`, `hull:<path>`.
/// For ellipsoids and hulls the dimension comes from the spec; a nonzero `n`
/// that disagrees is an error.
inline ConvexBody parse_body(const std::string& spec, std::size_t n) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  const bool is_lp = head == "l1" || head == "l2" || head == "linf" || head == "lp";
  if (is_lp && n == 0) throw InputError("body '" + spec + "' needs a dimension");
  if (head == "l1") return ConvexBody::lp_ball(Exponent::finite(1.0), n);
  if (head == "l2") return ConvexBody::lp_ball(Exponent::finite(2.0), n);
  if (head == "linf") return ConvexBody::lp_ball(Exponent::infinity(), n);
  if (head == "lp") {
    if (arg == "inf") return ConvexBody::lp_ball(Exponent::infinity(), n);
    double p = 0.0;
    try {
      p = std::stod(arg);
    } catch (const std::exception&) {
      throw InputError("bad exponent in body spec: " + spec);
    }
    return ConvexBody::lp_ball(Exponent::finite(p), n);
  }
  ConvexBody body = [&] {
    if (head == "ellipsoid") {
      std::vector<double> axes;
      std::stringstream ss(arg);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        try {
          axes.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw InputError("bad semi-axis in body spec: " + spec);
        }
      }
      return ConvexBody::ellipsoid_axes(
          Eigen::Map<const Vector>(axes.data(), static_cast<Eigen::Index>(axes.size())));
    }
    if (head == "hull") return ConvexBody::vertex_hull(read_vertex_csv(arg));
    throw InputError("unknown body spec: " + spec);
  }();
  if (n != 0 && n != body.dim()) {
    throw InputError("body '" + spec + "' has dimension " + std::to_string(body.dim()) +
                     " but n = " + std::to_string(n));
  }
  return body;
}

}  // namespace sectlab
