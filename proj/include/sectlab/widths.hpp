#pragma once

// Monte Carlo estimates of polar-norm expectations:
//   E ||G||_{T°}                        (Gaussian mean width)
//   E ||k^{-1/2} sum_i X_i||_{T°}       (row-sum width)
//   E ||G||_{(T cap rB2)°}              (localized width)
//
// Sample j always uses substream j of the given stream and the partial sums are
// reduced in index order, so estimates do not depend on the worker count.

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "sectlab/bodies.hpp"
#include "sectlab/ensembles.hpp"
#include "sectlab/parallel.hpp"
#include "sectlab/rng.hpp"

namespace sectlab {

enum class WidthKind { kGaussianWidth, kRowSumWidth, kLocalizedGaussianWidth, kSecondMoment };

struct WidthEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
  WidthKind kind = WidthKind::kGaussianWidth;
};

/// Mean and standard error of a list of samples.
inline WidthEstimate summarize(const std::vector<double>& values, WidthKind kind) {
  WidthEstimate w;
  w.kind = kind;
  w.samples = values.size();
  if (values.empty()) return w;
  double sum = 0.0;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  w.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - w.mean) * (v - w.mean);
    w.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return w;
}

inline Vector standard_gaussian(std::size_t n, Philox4x32& gen) {
  std::normal_distribution<double> normal;
  Vector g(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = normal(gen);
  return g;
}

namespace detail {
template <typename F>
std::vector<double> mc_values(std::size_t count, F&& sample) {
  std::vector<double> values(count);
  parallel_for(count, [&](std::size_t j) { values[j] = sample(j); });
  return values;
}
}  // namespace detail

/// E h_T(G) over N standard Gaussian vectors.
inline WidthEstimate mc_mean_width(const ConvexBody& body, std::size_t samples, const RngStream& rng) {
  detail::require(samples >= 2, "mc_mean_width needs at least 2 samples");
  auto values = detail::mc_values(samples, [&](std::size_t j) {
    auto gen = rng.engine(static_cast<std::uint32_t>(j));
    return support(body, standard_gaussian(body.dim(), gen));
  });
  return summarize(values, WidthKind::kGaussianWidth);
}

/// E h_T(k^{-1/2} sum_{i<=k} X_i) over N independent row sums.
inline WidthEstimate row_sum_width(const ConvexBody& body, const Ensemble& ens, std::size_t k,
                                   std::size_t samples, const RngStream& rng) {
  detail::require(k >= 1, "row_sum_width needs k >= 1");
  detail::require(samples >= 2, "row_sum_width needs at least 2 samples");
  const Ensemble e = ens.with_dim(body.dim());
  auto values = detail::mc_values(samples, [&](std::size_t j) {
    auto gen = rng.engine(static_cast<std::uint32_t>(j));
    CoordinateSampler coords(e);
    return support(body, sample_row_sum(e, k, gen, coords));
  });
  return summarize(values, WidthKind::kRowSumWidth);
}

/// E h_{T cap rB2}(G). Uses the same Gaussian draws as mc_mean_width for the
/// same stream, so estimates at different r are coupled.
inline WidthEstimate localized_mean_width(const ConvexBody& body, double r, std::size_t samples,
                                          const RngStream& rng, const LocalizedOptions& opt = {}) {
  detail::require(r > 0.0, "localized_mean_width needs r > 0");
  detail::require(samples >= 2, "localized_mean_width needs at least 2 samples");
  auto values = detail::mc_values(samples, [&](std::size_t j) {
    auto gen = rng.engine(static_cast<std::uint32_t>(j));
    return localized_support(body, r, standard_gaussian(body.dim(), gen), opt).value;
  });
  return summarize(values, WidthKind::kLocalizedGaussianWidth);
}

/// E h_T(X)^2 for a single draw X of the ensemble.
inline WidthEstimate second_moment_width(const ConvexBody& body, const Ensemble& ens,
                                         std::size_t samples, const RngStream& rng) {
  detail::require(samples >= 2, "second moment needs at least 2 samples");
  const Ensemble e = ens.with_dim(body.dim());
  auto values = detail::mc_values(samples, [&](std::size_t j) {
    auto gen = rng.engine(static_cast<std::uint32_t>(j));
    CoordinateSampler coords(e);
    const double h = support(body, sample_vector(e, gen, coords));
    return h * h;
  });
  return summarize(values, WidthKind::kSecondMoment);
}

inline std::string to_string(WidthKind kind) {
  switch (kind) {
    case WidthKind::kGaussianWidth: return "gaussian_width";
    case WidthKind::kRowSumWidth: return "row_sum_width";
    case WidthKind::kLocalizedGaussianWidth: return "localized_gaussian_width";
    case WidthKind::kSecondMoment: return "second_moment";
  }
  return "unknown";
}

}  // namespace sectlab
