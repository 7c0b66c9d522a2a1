#pragma once

// Estimators of diam(T cap ker Gamma) = 2 sup { ||x||_2 : x in T, Gamma x = 0 }.
//
//  * direction_sampling_diameter: generic lower bound for any body; random
//    kernel directions followed by a stochastic hill climb.
//  * l1_vertex_ascent_diameter: lower bound for the cross-polytope that walks
//    vertices of B1 cap ker Gamma with a linear program (each step maximises
//    <x_prev, x>, which never decreases ||x||_2).
//  * crosspolytope_section_diameter_exact: exact value by enumerating the
//    supports of all candidate extreme points.
//  * ellipsoid_section_diameter: exact value from a symmetric eigenproblem.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sectlab/bodies.hpp"
#include "sectlab/error.hpp"
#include "sectlab/kernels.hpp"
#include "sectlab/parallel.hpp"
#include "sectlab/rng.hpp"

namespace sectlab {

enum class DiameterKind { kExact, kLowerBound };

inline std::string to_string(DiameterKind kind) {
  return kind == DiameterKind::kExact ? "exact" : "lower_bound";
}

struct DiameterResult {
  double value = 0.0;
  DiameterKind kind = DiameterKind::kLowerBound;
  Vector witness;  // a point of T cap ker Gamma with ||witness||_2 = value / 2
  std::size_t evaluations = 0;
};

struct SamplingOptions {
  std::size_t restarts = 32;
  double initial_step = 0.5;
};

namespace detail {

inline DiameterResult zero_diameter(std::size_t n, DiameterKind kind) {
  return {0.0, kind, Vector::Zero(static_cast<Eigen::Index>(n)), 0};
}

// Radius of T along the unit vector z-direction in the kernel.
inline double section_radius(const ConvexBody& body, const Matrix& basis, const Vector& z) {
  const Vector d = basis * (z / z.norm());
  const double g = gauge(body, d);
  return g > 0.0 ? 1.0 / g : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Lower bound on diam(T cap ker Gamma) from random directions in the kernel
/// followed by a hill climb from the best few.
///
/// Directions are Gaussian in kernel coordinates. The best `restarts` distinct
/// samples seed independent hill climbs (own substreams) that perturb the
/// kernel coordinates with Gaussian steps; the step doubles on success and is
/// halved on failure.
inline DiameterResult direction_sampling_diameter(const ConvexBody& body, const KernelBasis& kb,
                                                  std::size_t n_dirs, std::size_t refine_iters,
                                                  const RngStream& rng,
                                                  const SamplingOptions& opt = {}) {
  detail::require(n_dirs >= 1, "direction sampling needs at least one direction");
  detail::require(kb.ambient_dim() == body.dim(), "kernel basis and body dimensions differ");
  const std::size_t n = body.dim();
  const std::size_t m = kb.dim();
  if (m == 0) return detail::zero_diameter(n, DiameterKind::kLowerBound);

  struct Candidate {
    double radius;
    Vector z;
  };
  const std::size_t keep = std::max<std::size_t>(1, opt.restarts);
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (n_dirs + kChunk - 1) / kChunk;
  std::vector<std::vector<Candidate>> per_chunk(chunks);
  const RngStream sample_rng = rng.child(0x5A);
  parallel_for(chunks, [&](std::size_t c) {
    auto gen = sample_rng.engine(static_cast<std::uint32_t>(c));
    std::normal_distribution<double> normal;
    const std::size_t end = std::min(n_dirs, (c + 1) * kChunk);
    auto& best = per_chunk[c];
    for (std::size_t i = c * kChunk; i < end; ++i) {
      Vector z(static_cast<Eigen::Index>(m));
      for (Eigen::Index t = 0; t < z.size(); ++t) z[t] = normal(gen);
      const double rad = detail::section_radius(body, kb.basis, z);
      // keep the top `keep`, earlier samples win ties
      auto pos = std::find_if(best.begin(), best.end(),
                              [&](const Candidate& cand) { return rad > cand.radius; });
      if (pos != best.end() || best.size() < keep) {
        best.insert(pos, Candidate{rad, z / z.norm()});
        if (best.size() > keep) best.pop_back();
      }
    }
  });
  std::vector<Candidate> top;
  for (auto& chunk : per_chunk) {
    for (auto& cand : chunk) {
      auto pos = std::find_if(top.begin(), top.end(),
                              [&](const Candidate& t) { return cand.radius > t.radius; });
      top.insert(pos, std::move(cand));
      if (top.size() > keep) top.pop_back();
    }
  }

  std::vector<Candidate> climbed(top.size());
  const RngStream climb_rng = rng.child(0xC1);
  parallel_for(top.size(), [&](std::size_t s) {
    auto gen = climb_rng.engine(static_cast<std::uint32_t>(s));
    std::normal_distribution<double> normal;
    Vector z = top[s].z;
    double rad = top[s].radius;
    double step = opt.initial_step;
    // one-fifth success rule: the step is stable when a fifth of the moves succeed
    constexpr double kGrow = 1.5;
    const double kShrink = std::pow(kGrow, -0.25);
    for (std::size_t it = 0; it < refine_iters; ++it) {
      Vector trial = z;
      for (Eigen::Index t = 0; t < trial.size(); ++t) trial[t] += step * normal(gen);
      const double tn = trial.norm();
      if (tn == 0.0) continue;
      trial /= tn;
      const double r = detail::section_radius(body, kb.basis, trial);
      if (r > rad) {
        rad = r;
        z = trial;
        step = std::min(kGrow * step, 1.0);
      } else {
        step = std::max(kShrink * step, 1e-12);
      }
    }
    climbed[s] = Candidate{rad, z};
  });

  std::size_t best = 0;
  for (std::size_t s = 1; s < climbed.size(); ++s) {
    if (climbed[s].radius > climbed[best].radius) best = s;
  }
  const Vector d = kb.basis * climbed[best].z;
  DiameterResult out;
  out.kind = DiameterKind::kLowerBound;
  out.witness = d / gauge(body, d);
  out.value = 2.0 * out.witness.norm();
  out.evaluations = n_dirs + top.size() * refine_iters;
  return out;
}

/// Maximises <w, x> over {x : Gamma x = 0, ||x||_1 <= 1} by a bounded revised
/// simplex method. The basis is kept between calls, so a sequence of related
/// objectives is warm-started.
///
/// Standard form: x = p - q with p, q >= 0, a slack s >= 0 for
/// sum(p) + sum(q) + s = 1, and one artificial variable per row of Gamma that
/// is fixed at zero.
class L1SectionLp {
 public:
  explicit L1SectionLp(Matrix gamma)
      : gamma_(std::move(gamma)),
        k_(gamma_.rows()),
        n_(gamma_.cols()),
        m_(k_ + 1),
        basis_(static_cast<std::size_t>(m_)),
        position_(static_cast<std::size_t>(2 * n_ + 1 + k_), -1),
        binv_(Matrix::Identity(m_, m_)),
        xb_(Vector::Zero(m_)) {
    detail::require(gamma_.allFinite(), "matrix has non-finite entries");
    for (Eigen::Index i = 0; i < k_; ++i) set_basic(i, artificial(i));
    set_basic(k_, slack());
    xb_[k_] = 1.0;
  }

  Vector maximize(const Vector& w) {
    detail::require(w.size() == n_, "objective dimension mismatch");
    const double cost_tol = 1e-11 * std::max(1.0, w.cwiseAbs().maxCoeff());
    constexpr double kPivotTol = 1e-9;
    const std::size_t max_pivots = 100 * static_cast<std::size_t>(n_ + m_) + 1000;
    std::size_t degenerate_run = 0;
    for (std::size_t iter = 0;; ++iter) {
      if (iter > max_pivots) throw std::runtime_error("simplex iteration limit reached");
      if (since_refactor_ >= 64) refactor();

      Vector cb(m_);
      for (Eigen::Index i = 0; i < m_; ++i) cb[i] = cost(basis_[static_cast<std::size_t>(i)], w);
      const Vector pi = binv_.transpose() * cb;
      const Vector g = gamma_.transpose() * pi.head(k_);
      const double pk = pi[k_];

      // Dantzig pricing, Bland's rule after a long run of degenerate pivots
      const bool bland = degenerate_run > 50;
      Eigen::Index entering = -1;
      double best = cost_tol;
      for (Eigen::Index j = 0; j <= 2 * n_; ++j) {
        if (position_[static_cast<std::size_t>(j)] >= 0) continue;
        double d = 0.0;
        if (j < n_) {
          d = w[j] - g[j] - pk;
        } else if (j < 2 * n_) {
          d = -w[j - n_] + g[j - n_] - pk;
        } else {
          d = -pk;
        }
        if (d > best) {
          entering = j;
          if (bland) break;
          best = d;
        }
      }
      if (entering < 0) break;

      const Vector alpha = binv_ * column(entering);
      Eigen::Index leave = -1;
      double theta = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        const Eigen::Index var = basis_[static_cast<std::size_t>(i)];
        double ratio = std::numeric_limits<double>::infinity();
        if (is_artificial(var)) {
          if (std::abs(alpha[i]) > kPivotTol) ratio = 0.0;
        } else if (alpha[i] > kPivotTol) {
          ratio = std::max(0.0, xb_[i]) / alpha[i];
        }
        if (ratio == std::numeric_limits<double>::infinity()) continue;
        const bool better = ratio < theta - 1e-13 ||
                            (ratio <= theta + 1e-13 && leave >= 0 &&
                             (bland ? var < basis_[static_cast<std::size_t>(leave)]
                                    : std::abs(alpha[i]) > std::abs(alpha[leave])));
        if (leave < 0 || better) {
          theta = std::min(theta, ratio);
          leave = i;
        }
      }
      if (leave < 0) throw std::runtime_error("section LP unbounded");
      degenerate_run = theta <= 1e-14 ? degenerate_run + 1 : 0;

      xb_ -= theta * alpha;
      xb_[leave] = theta;
      const double piv = alpha[leave];
      binv_.row(leave) /= piv;
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (i != leave && alpha[i] != 0.0) binv_.row(i) -= alpha[i] * binv_.row(leave);
      }
      position_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(leave)])] = -1;
      set_basic(leave, entering);
      ++pivots_;
      ++since_refactor_;
    }
    return solution();
  }

  /// Current basic solution as a point of R^n.
  Vector solution() const {
    Vector x = Vector::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index var = basis_[static_cast<std::size_t>(i)];
      const double v = std::max(0.0, xb_[i]);
      if (var < n_) {
        x[var] += v;
      } else if (var < 2 * n_) {
        x[var - n_] -= v;
      }
    }
    return x;
  }

  std::size_t pivots() const { return pivots_; }

 private:
  Eigen::Index slack() const { return 2 * n_; }
  Eigen::Index artificial(Eigen::Index row) const { return 2 * n_ + 1 + row; }
  bool is_artificial(Eigen::Index var) const { return var > 2 * n_; }

  void set_basic(Eigen::Index row, Eigen::Index var) {
    basis_[static_cast<std::size_t>(row)] = var;
    position_[static_cast<std::size_t>(var)] = row;
  }

  double cost(Eigen::Index var, const Vector& w) const {
    if (var < n_) return w[var];
    if (var < 2 * n_) return -w[var - n_];
    return 0.0;
  }

  Vector column(Eigen::Index var) const {
    Vector c = Vector::Zero(m_);
    if (var < n_) {
      c.head(k_) = gamma_.col(var);
      c[k_] = 1.0;
    } else if (var < 2 * n_) {
      c.head(k_) = -gamma_.col(var - n_);
      c[k_] = 1.0;
    } else if (var == slack()) {
      c[k_] = 1.0;
    } else {
      c[var - 2 * n_ - 1] = 1.0;
    }
    return c;
  }

  void refactor() {
    Matrix b(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) b.col(i) = column(basis_[static_cast<std::size_t>(i)]);
    binv_ = b.partialPivLu().inverse();
    Vector rhs = Vector::Zero(m_);
    rhs[k_] = 1.0;
    xb_ = binv_ * rhs;
    since_refactor_ = 0;
  }

  Matrix gamma_;
  Eigen::Index k_;
  Eigen::Index n_;
  Eigen::Index m_;
  std::vector<Eigen::Index> basis_;
  std::vector<Eigen::Index> position_;
  Matrix binv_;
  Vector xb_;
  std::size_t pivots_ = 0;
  std::size_t since_refactor_ = 0;
};

struct AscentOptions {
  std::size_t starts = 32;
  std::size_t max_rounds = 100;
};

/// Lower bound on diam(B1 cap ker Gamma) by LP vertex ascent.
///
/// Each start maximises one coordinate x_j (a random subset of coordinates is
/// used), then repeatedly replaces x by argmax_{y in section} <x, y> until
/// ||x||_2 stops growing. Every iterate is a vertex of the section.
inline DiameterResult l1_vertex_ascent_diameter(const Matrix& gamma, const RngStream& rng,
                                                const AscentOptions& opt = {}) {
  detail::require(gamma.cols() >= 1, "ascent needs n >= 1");
  const Eigen::Index n = gamma.cols();
  L1SectionLp lp(gamma);
  std::vector<Eigen::Index> coords(static_cast<std::size_t>(n));
  std::iota(coords.begin(), coords.end(), Eigen::Index{0});
  auto gen = rng.engine();
  for (std::size_t i = coords.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(gen() % i);
    std::swap(coords[i - 1], coords[j]);
  }
  const std::size_t starts = std::min<std::size_t>(std::max<std::size_t>(1, opt.starts), coords.size());

  Vector best = Vector::Zero(n);
  double best_norm = 0.0;
  std::size_t solves = 0;
  for (std::size_t s = 0; s < starts; ++s) {
    Vector w = Vector::Zero(n);
    w[coords[s]] = 1.0;
    Vector x = lp.maximize(w);
    ++solves;
    double xn = x.norm();
    for (std::size_t round = 0; round < opt.max_rounds && xn > 0.0; ++round) {
      Vector y = lp.maximize(x);
      ++solves;
      const double yn = y.norm();
      if (yn <= xn * (1.0 + 1e-12)) break;
      x = std::move(y);
      xn = yn;
    }
    if (xn > best_norm) {
      best_norm = xn;
      best = x;
    }
  }
  DiameterResult out;
  out.kind = DiameterKind::kLowerBound;
  out.evaluations = solves;
  if (best_norm == 0.0) {
    out.witness = Vector::Zero(n);
    return out;
  }
  out.witness = best / best.lpNorm<1>();
  out.value = 2.0 * out.witness.norm();
  return out;
}

struct ExactOptions {
  double rel_tol = kDefaultKernelTol;
  double budget = 5e6;  // max number of top-level supports
};

namespace detail {

struct SupportSearch {
  const Matrix& gamma;
  double rel_tol;
  double best = 0.0;
  Vector witness;
  std::size_t evaluations = 0;
  std::unordered_set<std::uint64_t> visited;

  void record(const std::vector<Eigen::Index>& support, const Vector& v) {
    const double l1 = v.lpNorm<1>();
    if (l1 == 0.0) return;
    const double ratio = v.norm() / l1;
    if (ratio > best) {
      best = ratio;
      witness = Vector::Zero(gamma.cols());
      for (std::size_t t = 0; t < support.size(); ++t) {
        witness[support[t]] = v[static_cast<Eigen::Index>(t)] / l1;
      }
    }
  }

  void visit(const std::vector<Eigen::Index>& support) {
    ++evaluations;
    Matrix sub(gamma.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t t = 0; t < support.size(); ++t) {
      sub.col(static_cast<Eigen::Index>(t)) = gamma.col(support[t]);
    }
    Eigen::FullPivLU<Matrix> lu(sub);
    lu.setThreshold(rel_tol);
    const Eigen::Index null_dim = sub.cols() - lu.rank();
    if (null_dim == 0) return;
    if (null_dim == 1) {
      record(support, lu.kernel().col(0));
      return;
    }
    // degenerate support: extreme points live on smaller supports
    const Matrix kernel = lu.kernel();
    for (Eigen::Index c = 0; c < kernel.cols(); ++c) record(support, kernel.col(c));
    if (support.size() <= 1) return;
    for (std::size_t drop = 0; drop < support.size(); ++drop) {
      std::vector<Eigen::Index> smaller;
      std::uint64_t mask = 0;
      for (std::size_t t = 0; t < support.size(); ++t) {
        if (t == drop) continue;
        smaller.push_back(support[t]);
        mask |= std::uint64_t{1} << support[t];
      }
      if (visited.insert(mask).second) visit(smaller);
    }
  }
};

}  // namespace detail

/// Exact diam(B1^n cap ker Gamma).
///
/// Every extreme point of B1 cap ker Gamma has at most rank(Gamma) + 1 nonzero
/// coordinates, and ||.||_2 attains its maximum over the section at an extreme
/// point, so it suffices to visit every support S of that size and normalise
/// each null vector of the column-restricted Gamma_S.
inline DiameterResult crosspolytope_section_diameter_exact(const Matrix& gamma,
                                                           const ExactOptions& opt = {}) {
  const Eigen::Index n = gamma.cols();
  detail::require(n >= 1, "exact diameter needs n >= 1");
  detail::require(n <= 64, "exact cross-polytope enumeration supports n <= 64");
  DiameterResult out;
  out.kind = DiameterKind::kExact;
  const std::size_t rank = gamma.rows() == 0 ? 0 : numerical_rank(gamma, opt.rel_tol);
  if (rank == 0) {
    out.witness = Vector::Zero(n);
    out.witness[0] = 1.0;
    out.value = 2.0;
    out.evaluations = 1;
    return out;
  }
  const auto nn = static_cast<std::size_t>(n);
  const std::size_t size = std::min(rank + 1, nn);
  if (ConvexBody::binomial(nn, size) > opt.budget) {
    throw SizeError("cross-polytope enumeration over C(" + std::to_string(nn) + ", " +
                    std::to_string(size) + ") supports exceeds the budget");
  }

  // parallel over the smallest index of the support
  const std::size_t firsts = nn - size + 1;
  std::vector<detail::SupportSearch> searches;
  searches.reserve(firsts);
  for (std::size_t f = 0; f < firsts; ++f) searches.push_back({gamma, opt.rel_tol, 0.0, Vector(), 0, {}});
  parallel_for(firsts, [&](std::size_t f) {
    auto& search = searches[f];
    std::vector<std::size_t> idx(size);
    idx[0] = f;
    for (std::size_t i = 1; i < size; ++i) idx[i] = f + i;
    for (;;) {
      std::vector<Eigen::Index> support(idx.begin(), idx.end());
      search.visit(support);
      std::size_t i = size;
      while (i > 1 && idx[i - 1] == nn - size + i - 1) --i;
      if (i <= 1) break;
      ++idx[i - 1];
      for (std::size_t j = i; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  });

  double best = 0.0;
  for (const auto& s : searches) {
    out.evaluations += s.evaluations;
    if (s.best > best) {
      best = s.best;
      out.witness = s.witness;
    }
  }
  if (best == 0.0) {
    out.witness = Vector::Zero(n);
    return out;
  }
  out.value = 2.0 * out.witness.norm();
  return out;
}

inline constexpr double kMaxEllipsoidCondition = 1e12;

/// Exact diameter of {x : x^T A^{-1} x <= 1} cap span(B):
/// max ||Bz||_2 = ||z|| subject to z^T (B^T A^{-1} B) z <= 1 is 1/sqrt(lambda_min).
inline DiameterResult ellipsoid_section_diameter(const Matrix& shape, const KernelBasis& kb) {
  detail::require(shape.rows() == shape.cols() &&
                      static_cast<std::size_t>(shape.rows()) == kb.ambient_dim(),
                  "ellipsoid shape and kernel basis dimensions differ");
  const auto n = kb.ambient_dim();
  if (kb.dim() == 0) return detail::zero_diameter(n, DiameterKind::kExact);
  Eigen::SelfAdjointEigenSolver<Matrix> shape_eig(shape);
  const auto& ev = shape_eig.eigenvalues();
  if (shape_eig.info() != Eigen::Success || ev.minCoeff() <= 0.0) {
    throw InputError("ellipsoid shape must be symmetric positive definite");
  }
  if (ev.maxCoeff() / ev.minCoeff() > kMaxEllipsoidCondition) {
    throw ConditioningError("ellipsoid shape condition number exceeds 1e12");
  }
  const Matrix inv = shape_eig.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                     shape_eig.eigenvectors().transpose();
  Matrix reduced = kb.basis.transpose() * inv * kb.basis;
  reduced = 0.5 * (reduced + reduced.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced);
  const double lmin = eig.eigenvalues()[0];
  DiameterResult out;
  out.kind = DiameterKind::kExact;
  out.witness = kb.basis * eig.eigenvectors().col(0) / std::sqrt(lmin);
  out.value = 2.0 / std::sqrt(lmin);
  out.evaluations = 1;
  return out;
}

inline DiameterResult ellipsoid_section_diameter(const ConvexBody& body, const KernelBasis& kb) {
  if (const auto* e = body.as<Ellipsoid>()) return ellipsoid_section_diameter(e->shape, kb);
  if (const auto* b = body.as<LpBall>(); b && !b->p.is_infinite() && b->p.value() == 2.0) {
    const auto n = static_cast<Eigen::Index>(body.dim());
    return ellipsoid_section_diameter(Matrix::Identity(n, n), kb);
  }
  throw InputError("ellipsoid_section_diameter needs an ellipsoid or the l2 ball");
}

}  // namespace sectlab
