#pragma once

// Upper bounds on diam(T cap ker Gamma):
//
//  * theorem_main: (C / sqrt k) * max{ E||G||_{T°}, E||k^{-1/2} sum X_i||_{T°} }
//  * type2:        (C / sqrt k) * max{ E||G||_{T°}, R2(T°) (E||X||_{T°}^2)^{1/2} }
//  * fixed_point:  C * max{ rho_k(delta, Q1), r_k(Q2) }
//
// Localized fixed points use T cap rB2 (ball localization). It contains
// T cap rS^{n-1}, so the computed radii dominate the sphere-localized ones.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sectlab/bodies.hpp"
#include "sectlab/ensembles.hpp"
#include "sectlab/error.hpp"
#include "sectlab/rng.hpp"
#include "sectlab/widths.hpp"

namespace sectlab {

enum class BoundVariant { kTheoremMain, kFixedPoint, kType2 };

inline std::string to_string(BoundVariant v) {
  switch (v) {
    case BoundVariant::kTheoremMain: return "theorem";
    case BoundVariant::kFixedPoint: return "fixed-point";
    case BoundVariant::kType2: return "type2";
  }
  return "unknown";
}

inline BoundVariant parse_variant(const std::string& s) {
  if (s == "theorem" || s == "theorem_main") return BoundVariant::kTheoremMain;
  if (s == "fixed-point" || s == "fixed_point") return BoundVariant::kFixedPoint;
  if (s == "type2") return BoundVariant::kType2;
  throw InputError("unknown bound variant: " + s);
}

struct BoundReport {
  WidthEstimate gaussian_width;
  // theorem_main: the row-sum width. type2: R2 * sqrt(E||X||^2_{T°}).
  WidthEstimate rowsum_width;
  double lambda_hat = std::numeric_limits<double>::quiet_NaN();
  std::size_t k = 0;
  double constant = 1.0;
  double bound_value = 0.0;
  BoundVariant variant = BoundVariant::kTheoremMain;
  // fixed_point only
  double rho_k = std::numeric_limits<double>::quiet_NaN();
  double r_k = std::numeric_limits<double>::quiet_NaN();
};

inline BoundReport theorem_bound(const WidthEstimate& gw, const WidthEstimate& rw, std::size_t k,
                                 double constant) {
  detail::require(k >= 1, "theorem_bound needs k >= 1");
  detail::require(constant > 0.0 && std::isfinite(constant), "constant C must be positive");
  BoundReport r;
  r.gaussian_width = gw;
  r.rowsum_width = rw;
  r.k = k;
  r.constant = constant;
  r.variant = BoundVariant::kTheoremMain;
  r.bound_value = constant / std::sqrt(static_cast<double>(k)) * std::max(gw.mean, rw.mean);
  return r;
}

/// The constant produced by following the proof with explicit choices:
/// (200 / (delta * lambda)) * (c_sud / sqrt(eps) + 4).
inline double proof_chain_constant(double lambda, double delta = 0.1, double eps = 1.0 / 600.0,
                                   double c_sud = 1.0) {
  detail::require(lambda > 0.0 && delta > 0.0 && delta < 1.0 && eps > 0.0 && c_sud > 0.0,
                  "proof constant needs lambda > 0, delta in (0,1), eps > 0");
  return 200.0 / (delta * lambda) * (c_sud / std::sqrt(eps) + 4.0);
}

struct FixedPointResult {
  double value = 0.0;  // smallest tested point satisfying the predicate
  bool saturated = false;  // predicate false on the whole bracket; value = upper end
  double bracket_lo = 0.0;  // last tested point violating the predicate (or value)
  double bracket_hi = 0.0;
  std::size_t evaluations = 0;
};

inline constexpr int kFixedPointBisections = 10;

/// Bisection for inf{x in [lo, hi] : pred(x)} on a monotone predicate.
/// After ten halvings every tested point lies on the grid lo + i (hi - lo) / 2^10.
inline FixedPointResult bisect_fixed_point(const std::function<bool(double)>& pred, double lo,
                                           double hi) {
  detail::require(lo > 0.0 && hi > lo && std::isfinite(hi), "invalid fixed-point bracket");
  FixedPointResult out;
  out.evaluations = 1;
  if (pred(lo)) {
    out.value = out.bracket_lo = out.bracket_hi = lo;
    return out;
  }
  ++out.evaluations;
  if (!pred(hi)) {
    out.value = out.bracket_lo = out.bracket_hi = hi;
    out.saturated = true;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(1 << kFixedPointBisections);
  long a = 0;
  long b = 1L << kFixedPointBisections;
  while (b - a > 1) {
    const long mid = (a + b) / 2;
    ++out.evaluations;
    if (pred(lo + static_cast<double>(mid) * step)) {
      b = mid;
    } else {
      a = mid;
    }
  }
  out.bracket_lo = lo + static_cast<double>(a) * step;
  out.bracket_hi = b == (1L << kFixedPointBisections) ? hi : lo + static_cast<double>(b) * step;
  out.value = out.bracket_hi;
  return out;
}

/// The predicate E||G||_{(T cap rB2)°} <= Q2 r sqrt(k), estimated with a fixed
/// set of Gaussian draws so it is deterministic given the stream.
inline bool fixed_point_r_predicate(const ConvexBody& body, std::size_t k, double q2,
                                    std::size_t samples, double r, const RngStream& rng) {
  const double width = localized_mean_width(body, r, samples, rng).mean;
  return width <= q2 * r * std::sqrt(static_cast<double>(k));
}

/// r_k(Q2) with ball localization.
inline FixedPointResult fixed_point_r(const ConvexBody& body, std::size_t k, double q2,
                                      std::size_t samples, double r_lo, double r_hi,
                                      const RngStream& rng) {
  detail::require(k >= 1, "fixed_point_r needs k >= 1");
  detail::require(q2 > 0.0, "Q2 must be positive");
  detail::require(samples >= 2, "fixed_point_r needs at least 2 samples");
  return bisect_fixed_point(
      [&](double r) { return fixed_point_r_predicate(body, k, q2, samples, r, rng); }, r_lo, r_hi);
}

/// Empirical quantile: the ceil(level * N)-th smallest value.
inline double order_quantile(std::vector<double> values, double level) {
  detail::require(!values.empty(), "quantile of an empty sample");
  const double pos = std::ceil(level * static_cast<double>(values.size()) - 1e-12);
  const auto idx = static_cast<std::size_t>(
      std::clamp(pos, 1.0, static_cast<double>(values.size()))) - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx), values.end());
  return values[idx];
}

/// Row sums k^{-1/2} sum_i X_i shared by every step of the rho bisection.
class RowSumSample {
 public:
  RowSumSample(const Ensemble& ens, std::size_t n, std::size_t k, std::size_t samples,
               const RngStream& rng)
      : sums_(samples) {
    const Ensemble e = ens.with_dim(n);
    parallel_for(samples, [&](std::size_t j) {
      auto gen = rng.engine(static_cast<std::uint32_t>(j));
      CoordinateSampler coords(e);
      sums_[j] = sample_row_sum(e, k, gen, coords);
    });
  }
  const std::vector<Vector>& sums() const { return sums_; }

 private:
  std::vector<Vector> sums_;
};

inline bool fixed_point_rho_predicate(const ConvexBody& body, const RowSumSample& sample,
                                      std::size_t k, double delta, double q1, double rho) {
  std::vector<double> values(sample.sums().size());
  parallel_for(values.size(), [&](std::size_t j) {
    values[j] = localized_support(body, rho, sample.sums()[j]).value;
  });
  return order_quantile(std::move(values), 1.0 - delta) <= q1 * rho * std::sqrt(static_cast<double>(k));
}

/// rho_k(delta, Q1): the (1 - delta)-quantile of ||k^{-1/2} sum X_i||_{(T cap rho B2)°}
/// must not exceed Q1 rho sqrt(k).
inline FixedPointResult fixed_point_rho(const ConvexBody& body, const Ensemble& ens, std::size_t k,
                                        double delta, double q1, std::size_t samples,
                                        double rho_lo, double rho_hi, const RngStream& rng) {
  detail::require(k >= 1, "fixed_point_rho needs k >= 1");
  detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  detail::require(q1 > 0.0, "Q1 must be positive");
  detail::require(samples >= 1, "fixed_point_rho needs samples");
  detail::require(rho_lo > 0.0 && rho_hi > rho_lo, "invalid fixed-point bracket");
  const RowSumSample sample(ens, body.dim(), k, samples, rng);
  return bisect_fixed_point(
      [&](double rho) { return fixed_point_rho_predicate(body, sample, k, delta, q1, rho); },
      rho_lo, rho_hi);
}

/// Type 2 constants of the polar norm: ||.||_{T°} = l_inf^n has R2 <= sqrt(log n);
/// l_q with q >= 2 has R2 <= sqrt(q - 1); Hilbert spaces have R2 = 1.
inline std::optional<double> default_type2_constant(const ConvexBody& body) {
  if (const auto* b = body.as<LpBall>()) {
    if (b->p.is_infinite()) return std::nullopt;  // T° = l_1 has no type 2
    const double p = b->p.value();
    if (p == 1.0) {
      // R2 >= 1 in every normed space, which matters only for n <= 2
      return std::sqrt(std::max(1.0, std::log(static_cast<double>(body.dim()))));
    }
    if (p <= 2.0) return std::sqrt(b->p.dual().value() - 1.0);
    return std::nullopt;
  }
  if (body.as<Ellipsoid>() != nullptr) return 1.0;
  return std::nullopt;
}

/// Bound for heavy-tailed rows through the type 2 constant of T°.
inline BoundReport type2_bound(const ConvexBody& body, const Ensemble& ens, std::size_t k,
                               std::size_t samples, double r2, const RngStream& rng,
                               double constant = 1.0) {
  detail::require(r2 > 0.0 && std::isfinite(r2), "R2 must be positive");
  detail::require(k >= 1, "type2_bound needs k >= 1");
  detail::require(constant > 0.0, "constant C must be positive");
  const WidthEstimate gw = mc_mean_width(body, samples, rng.child(1));
  const WidthEstimate m2 = second_moment_width(body, ens, samples, rng.child(2));
  WidthEstimate second;
  second.kind = WidthKind::kSecondMoment;
  second.samples = m2.samples;
  second.mean = r2 * std::sqrt(m2.mean);
  // delta method for sqrt of a mean
  second.std_error = m2.mean > 0.0 ? r2 * m2.std_error / (2.0 * std::sqrt(m2.mean)) : 0.0;
  BoundReport r;
  r.gaussian_width = gw;
  r.rowsum_width = second;
  r.k = k;
  r.constant = constant;
  r.variant = BoundVariant::kType2;
  r.bound_value = constant / std::sqrt(static_cast<double>(k)) * std::max(gw.mean, second.mean);
  return r;
}

struct FixedPointBoundOptions {
  double delta = 0.25;
  double q1 = 1.0;
  double q2 = 1.0;
  double lo = 1e-3;
  double hi = 0.0;  // 0 means euclidean_radius(body)
};

/// C * max{rho_k, r_k}.
inline BoundReport fixed_point_bound(const ConvexBody& body, const Ensemble& ens, std::size_t k,
                                     std::size_t samples, const RngStream& rng, double constant,
                                     const FixedPointBoundOptions& opt = {}) {
  detail::require(constant > 0.0, "constant C must be positive");
  const double hi = opt.hi > 0.0 ? opt.hi : euclidean_radius(body);
  const auto r = fixed_point_r(body, k, opt.q2, samples, opt.lo, hi, rng.child(1));
  const auto rho = fixed_point_rho(body, ens, k, opt.delta, opt.q1, samples, opt.lo, hi, rng.child(2));
  BoundReport out;
  out.gaussian_width = localized_mean_width(body, r.value, samples, rng.child(1));
  out.k = k;
  out.constant = constant;
  out.variant = BoundVariant::kFixedPoint;
  out.r_k = r.value;
  out.rho_k = rho.value;
  out.bound_value = constant * std::max(r.value, rho.value);
  return out;
}

}  // namespace sectlab
