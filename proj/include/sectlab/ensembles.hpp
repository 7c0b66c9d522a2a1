#pragma once

// Isotropic, symmetric random vectors with iid unit-variance coordinates, and
// the row matrix Gamma = k^{-1/2} sum_i <X_i, .> e_i built from them.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sectlab/bodies.hpp"
#include "sectlab/error.hpp"
#include "sectlab/parallel.hpp"
#include "sectlab/rng.hpp"

namespace sectlab {

enum class EnsembleKind { kGaussian, kUniformCube, kSymmetricExponential, kStudentT };

class Ensemble {
 public:
  static Ensemble gaussian(std::size_t dim) { return Ensemble(EnsembleKind::kGaussian, dim, 0.0); }
  /// iid coordinates uniform on [-sqrt(3), sqrt(3)].
  static Ensemble uniform_cube(std::size_t dim) {
    return Ensemble(EnsembleKind::kUniformCube, dim, 0.0);
  }
  /// iid Laplace coordinates with unit variance.
  static Ensemble symmetric_exponential(std::size_t dim) {
    return Ensemble(EnsembleKind::kSymmetricExponential, dim, 0.0);
  }
  /// iid Student-t(nu) coordinates rescaled to unit variance; nu > 2.
  static Ensemble student_t(double nu, std::size_t dim) {
    detail::require(nu > 2.0 && std::isfinite(nu), "student_t needs nu > 2 for finite variance");
    return Ensemble(EnsembleKind::kStudentT, dim, nu);
  }

  EnsembleKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  double nu() const { return nu_; }

  /// beta with ||X||_inf <= beta almost surely, when such a bound exists.
  std::optional<double> linf_bound() const {
    if (kind_ == EnsembleKind::kUniformCube) return std::sqrt(3.0);
    return std::nullopt;
  }

  Ensemble with_dim(std::size_t dim) const { return Ensemble(kind_, dim, nu_); }

  std::string name() const {
    switch (kind_) {
      case EnsembleKind::kGaussian: return "gaussian";
      case EnsembleKind::kUniformCube: return "uniform";
      case EnsembleKind::kSymmetricExponential: return "exponential";
      case EnsembleKind::kStudentT: {
        std::string s = std::to_string(nu_);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return "student:" + s;
      }
    }
    return "unknown";
  }

 private:
  Ensemble(EnsembleKind kind, std::size_t dim, double nu) : kind_(kind), dim_(dim), nu_(nu) {
    detail::require(dim >= 1, "ensemble dimension must be positive");
  }

  EnsembleKind kind_;
  std::size_t dim_;
  double nu_;
};

/// Draws single coordinates of an ensemble. Holds distribution state, so one
/// sampler should be used per generator.
class CoordinateSampler {
 public:
  explicit CoordinateSampler(const Ensemble& ens)
      : kind_(ens.kind()),
        exponential_(std::sqrt(2.0)),
        student_(ens.kind() == EnsembleKind::kStudentT ? ens.nu() : 3.0),
        student_scale_(ens.kind() == EnsembleKind::kStudentT
                           ? std::sqrt((ens.nu() - 2.0) / ens.nu())
                           : 1.0) {}

  template <typename Gen>
  double operator()(Gen& gen) {
    switch (kind_) {
      case EnsembleKind::kGaussian:
        return normal_(gen);
      case EnsembleKind::kUniformCube:
        return std::sqrt(3.0) * (2.0 * gen.uniform01() - 1.0);
      case EnsembleKind::kSymmetricExponential: {
        const double mag = exponential_(gen);
        return (gen() >> 63) != 0u ? mag : -mag;
      }
      case EnsembleKind::kStudentT:
        return student_scale_ * student_(gen);
    }
    return 0.0;
  }

 private:
  EnsembleKind kind_;
  std::normal_distribution<double> normal_;
  std::exponential_distribution<double> exponential_;
  std::student_t_distribution<double> student_;
  double student_scale_;
};

template <typename Gen>
Vector sample_vector(const Ensemble& ens, Gen& gen, CoordinateSampler& coords) {
  Vector x(static_cast<Eigen::Index>(ens.dim()));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = coords(gen);
  return x;
}

/// One draw of X from the start of the stream.
inline Vector sample_vector(const Ensemble& ens, const RngStream& rng) {
  auto gen = rng.engine();
  CoordinateSampler coords(ens);
  return sample_vector(ens, gen, coords);
}

/// k x n matrix whose i-th row is X_i / sqrt(k).
inline Matrix sample_matrix(const Ensemble& ens, std::size_t k, const RngStream& rng) {
  detail::require(k >= 1, "sample_matrix needs k >= 1");
  auto gen = rng.engine();
  CoordinateSampler coords(ens);
  const auto rows = static_cast<Eigen::Index>(k);
  const auto n = static_cast<Eigen::Index>(ens.dim());
  Matrix gamma(rows, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) gamma(i, j) = scale * coords(gen);
  }
  return gamma;
}

/// k^{-1/2} (X_1 + ... + X_k).
template <typename Gen>
Vector sample_row_sum(const Ensemble& ens, std::size_t k, Gen& gen, CoordinateSampler& coords) {
  Vector s = Vector::Zero(static_cast<Eigen::Index>(ens.dim()));
  for (std::size_t i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < s.size(); ++j) s[j] += coords(gen);
  }
  return s / std::sqrt(static_cast<double>(k));
}

/// Geometric grid of candidate small-ball levels.
inline std::vector<double> small_ball_grid(double lo = 1e-4, double hi = 1.0, std::size_t points = 200) {
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double f = points == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    grid[i] = lo * std::pow(hi / lo, f);
  }
  grid.back() = hi;
  return grid;
}

struct SmallBallEstimate {
  double lambda_hat = 0.0;
  // lambda_hat restricted to each tested family, for diagnosing which
  // directions are binding: coordinate, 2-sparse, dense.
  std::array<double, 3> family_lambda{};
  std::size_t directions_tested = 0;
};

/// Largest grid level lambda such that, for every tested direction x (unit
/// norm), the empirical Pr(|<x, X>| >= lambda) is at least target_prob.
///
/// Directions: all coordinate vectors, the 2-sparse vectors
/// (e_i +/- e_{i+1 mod n}) / sqrt(2), and `directions` random dense unit vectors.
inline SmallBallEstimate estimate_small_ball(const Ensemble& ens, std::size_t n,
                                             std::size_t directions,
                                             std::size_t samples_per_direction,
                                             double target_prob, const RngStream& rng) {
  detail::require(target_prob > 0.0 && target_prob < 1.0, "target_prob must lie in (0, 1)");
  detail::require(directions >= 1 && samples_per_direction >= 1,
                  "small-ball estimate needs directions and samples");
  detail::require(n >= 1, "small-ball estimate needs n >= 1");
  const Ensemble e = ens.with_dim(n);

  struct Direction {
    int family;
    std::vector<std::size_t> index;  // empty means dense
    std::vector<double> coef;
  };
  std::vector<Direction> dirs;
  for (std::size_t i = 0; i < n; ++i) dirs.push_back({0, {i}, {1.0}});
  const double h = 1.0 / std::sqrt(2.0);
  const std::size_t pairs = n < 2 ? 0 : (n == 2 ? 1 : n);
  for (std::size_t i = 0; i < pairs; ++i) {
    const std::size_t j = (i + 1) % n;
    dirs.push_back({1, {i, j}, {h, h}});
    dirs.push_back({1, {i, j}, {h, -h}});
  }
  for (std::size_t d = 0; d < directions; ++d) dirs.push_back({2, {}, {}});

  // kth largest |<x, X>| is the largest level whose empirical mass is >= target
  const auto need = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(target_prob * static_cast<double>(samples_per_direction) - 1e-9)));
  std::vector<double> critical(dirs.size());
  const RngStream dense_rng = rng.child(0xD1);
  parallel_for(dirs.size(), [&](std::size_t d) {
    auto gen = rng.engine(static_cast<std::uint32_t>(d));
    CoordinateSampler coords(e);
    Vector dense;
    if (dirs[d].index.empty()) {
      auto dgen = dense_rng.engine(static_cast<std::uint32_t>(d));
      std::normal_distribution<double> normal;
      dense.resize(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < dense.size(); ++i) dense[i] = normal(dgen);
      dense /= dense.norm();
    }
    std::vector<double> values(samples_per_direction);
    for (auto& v : values) {
      double dot = 0.0;
      if (dirs[d].index.empty()) {
        for (Eigen::Index i = 0; i < dense.size(); ++i) dot += dense[i] * coords(gen);
      } else {
        // coordinates are iid, so only the support needs sampling
        for (std::size_t t = 0; t < dirs[d].index.size(); ++t) dot += dirs[d].coef[t] * coords(gen);
      }
      v = std::abs(dot);
    }
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(need - 1),
                     values.end(), std::greater<>());
    critical[d] = values[need - 1];
  });

  const auto grid = small_ball_grid();
  auto snap = [&](double level) {
    double best = 0.0;
    for (double g : grid) {
      if (g <= level) best = g;
    }
    return best;
  };
  SmallBallEstimate out;
  std::array<double, 3> fam_min{std::numeric_limits<double>::infinity(),
                                std::numeric_limits<double>::infinity(),
                                std::numeric_limits<double>::infinity()};
  double overall = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    overall = std::min(overall, critical[d]);
    auto& fm = fam_min[static_cast<std::size_t>(dirs[d].family)];
    fm = std::min(fm, critical[d]);
  }
  out.lambda_hat = snap(overall);
  for (std::size_t f = 0; f < 3; ++f) {
    out.family_lambda[f] = std::isinf(fam_min[f]) ? std::numeric_limits<double>::quiet_NaN() : snap(fam_min[f]);
  }
  out.directions_tested = dirs.size();
  return out;
}

struct IsotropyReport {
  double deviation = 0.0;  // || Sigma_hat - I ||_op
  // Coordinates without a finite fourth moment: the empirical covariance
  // converges slowly and the deviation is only indicative.
  bool slow_converging = false;
};

inline IsotropyReport isotropy_check(const Ensemble& ens, std::size_t n, std::size_t samples,
                                     const RngStream& rng) {
  detail::require(n >= 1 && samples >= n, "isotropy check needs N >= n");
  const Ensemble e = ens.with_dim(n);
  auto gen = rng.engine();
  CoordinateSampler coords(e);
  const auto dim = static_cast<Eigen::Index>(n);
  Matrix cov = Matrix::Zero(dim, dim);
  constexpr std::size_t kBlock = 1024;
  Matrix block(dim, static_cast<Eigen::Index>(kBlock));
  for (std::size_t done = 0; done < samples;) {
    const std::size_t take = std::min(kBlock, samples - done);
    for (std::size_t c = 0; c < take; ++c) {
      for (Eigen::Index i = 0; i < dim; ++i) block(i, static_cast<Eigen::Index>(c)) = coords(gen);
    }
    const auto cols = static_cast<Eigen::Index>(take);
    cov.noalias() += block.leftCols(cols) * block.leftCols(cols).transpose();
    done += take;
  }
  cov /= static_cast<double>(samples);
  cov -= Matrix::Identity(dim, dim);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
  IsotropyReport out;
  out.deviation = eig.eigenvalues().cwiseAbs().maxCoeff();
  out.slow_converging = e.kind() == EnsembleKind::kStudentT && e.nu() <= 4.0;
  return out;
}

/// Parses `gaussian`, `uniform`, `exponential`, `student:<nu>`.
inline Ensemble parse_ensemble(const std::string& spec, std::size_t n) {
  detail::require(n >= 1, "ensemble needs a dimension");
  if (spec == "gaussian") return Ensemble::gaussian(n);
  if (spec == "uniform") return Ensemble::uniform_cube(n);
  if (spec == "exponential") return Ensemble::symmetric_exponential(n);
  if (spec.rfind("student:", 0) == 0) {
    double nu = 0.0;
    try {
      nu = std::stod(spec.substr(8));
    } catch (const std::exception&) {
      throw InputError("bad degrees of freedom in ensemble spec: " + spec);
    }
    return Ensemble::student_t(nu, n);
  }
  throw InputError("unknown ensemble spec: " + spec);
}

}  // namespace sectlab
