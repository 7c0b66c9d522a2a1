#pragma once

// Desk-scale checks of the probabilistic devices behind the diameter bound:
// the binomial small-ball lemma, its union-bound corollary, rho-separated nets
// on T cap rS^{n-1}, and the oscillation estimate for x - pi(x).
//
// Suprema over T_r are replaced by maxima over sampled probes, so every check
// here is one-sided: a violation is evidence of a bug, a pass is not a proof.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "sectlab/bodies.hpp"
#include "sectlab/ensembles.hpp"
#include "sectlab/error.hpp"
#include "sectlab/parallel.hpp"
#include "sectlab/rng.hpp"
#include "sectlab/widths.hpp"

namespace sectlab {

struct BinomialTail {
  double log_analytic = 0.0;  // log of (e/(6 eps))^{6 eps k} eps^{6 eps k}
  double log_target = 0.0;    // log of 2^{-6 eps k}
  double analytic() const { return std::exp(log_analytic); }
  double target() const { return std::exp(log_target); }
};

inline BinomialTail binomial_tail_bound(double epsilon, std::size_t k) {
  detail::require(epsilon > 0.0 && epsilon < 1.0 / 12.0, "epsilon must lie in (0, 1/12)");
  detail::require(k >= 1, "k must be positive");
  const double m = 6.0 * epsilon * static_cast<double>(k);
  BinomialTail out;
  out.log_analytic = m * (std::log(std::exp(1.0) / (6.0 * epsilon)) + std::log(epsilon));
  out.log_target = -m * std::log(2.0);
  if (out.log_analytic > out.log_target) {
    throw std::logic_error("binomial estimate exceeds 2^{-6 eps k}");
  }
  return out;
}

/// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials,
                                                 double z = 1.0) {
  detail::require(trials >= 1, "wilson interval needs trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// Width (half the length) of the one-sigma Wilson interval.
inline double wilson_width(std::size_t successes, std::size_t trials) {
  const auto [lo, hi] = wilson_interval(successes, trials, 1.0);
  return 0.5 * (hi - lo);
}

struct SmallBallTrial {
  std::size_t k = 0;
  double epsilon = 0.0;
  double lambda_level = 0.0;
  std::size_t bad_count = 0;  // coordinates with |zeta_j| < lambda ||zeta||_L2
  bool passed = true;         // bad_count <= 6 eps k
};

struct SimulationResult {
  double failure_rate = 0.0;
  double bound = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double std_error() const {
    const double p = failure_rate;
    return trials == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }
  double wilson() const { return wilson_width(failures, trials); }
};

/// One vector of k iid coordinates. The coordinate law has unit variance, so
/// ||zeta||_L2 = 1.
template <typename Gen>
SmallBallTrial small_ball_trial(CoordinateSampler& coords, Gen& gen, double lambda, double epsilon,
                                std::size_t k) {
  SmallBallTrial t;
  t.k = k;
  t.epsilon = epsilon;
  t.lambda_level = lambda;
  for (std::size_t j = 0; j < k; ++j) {
    if (std::abs(coords(gen)) < lambda) ++t.bad_count;
  }
  t.passed = static_cast<double>(t.bad_count) <= 6.0 * epsilon * static_cast<double>(k);
  return t;
}

/// Empirical Pr(more than 6 eps k of k coordinates fall below lambda) against 2^{-6 eps k}.
inline SimulationResult lemma_smallball_sim(const Ensemble& dist, double lambda, double epsilon,
                                            std::size_t k, std::size_t trials, const RngStream& rng) {
  detail::require(epsilon > 0.0 && epsilon < 1.0 / 12.0, "epsilon must lie in (0, 1/12)");
  detail::require(lambda >= 0.0, "lambda must be nonnegative");
  detail::require(k >= 1 && trials >= 1, "lemma simulation needs k and trials");
  const Ensemble scalar = dist.with_dim(1);
  std::vector<char> failed(trials, 0);
  parallel_for(trials, [&](std::size_t t) {
    auto gen = rng.engine(static_cast<std::uint32_t>(t));
    CoordinateSampler coords(scalar);
    failed[t] = small_ball_trial(coords, gen, lambda, epsilon, k).passed ? 0 : 1;
  });
  SimulationResult out;
  out.trials = trials;
  out.failures = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
  out.failure_rate = static_cast<double>(out.failures) / static_cast<double>(trials);
  out.bound = std::exp2(-6.0 * epsilon * static_cast<double>(k));
  return out;
}

/// Simultaneous version over N independent vectors, N <= 2^{3 eps k}; a trial
/// fails when any of the N vectors has more than 6 eps k small coordinates.
inline SimulationResult corollary_sim(const Ensemble& dist, std::size_t count, double lambda,
                                      double epsilon, std::size_t k, std::size_t trials,
                                      const RngStream& rng) {
  detail::require(epsilon > 0.0 && epsilon < 1.0 / 12.0, "epsilon must lie in (0, 1/12)");
  detail::require(count >= 1 && k >= 1 && trials >= 1, "corollary simulation needs N, k, trials");
  const double cap = std::exp2(3.0 * epsilon * static_cast<double>(k));
  if (static_cast<double>(count) > cap * (1.0 + 1e-12)) {
    throw InputError("N exceeds 2^{3 eps k}");
  }
  const Ensemble scalar = dist.with_dim(1);
  std::vector<char> failed(trials, 0);
  parallel_for(trials, [&](std::size_t t) {
    auto gen = rng.engine(static_cast<std::uint32_t>(t));
    CoordinateSampler coords(scalar);
    for (std::size_t i = 0; i < count; ++i) {
      if (!small_ball_trial(coords, gen, lambda, epsilon, k).passed) {
        failed[t] = 1;
        break;
      }
    }
  });
  SimulationResult out;
  out.trials = trials;
  out.failures = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), 1));
  out.failure_rate = static_cast<double>(out.failures) / static_cast<double>(trials);
  out.bound = std::exp2(-3.0 * epsilon * static_cast<double>(k));
  return out;
}

struct NetResult {
  std::vector<Vector> points;  // on T cap rS^{n-1}
  double rho = 0.0;
  double r = 0.0;
  std::size_t cardinality = 0;
  // stopped after candidate_budget consecutive rejections: maximal only up to sampling
  bool budget_exhausted = false;
  bool starved = false;  // could not draw points of T cap rS^{n-1}
  std::size_t candidates = 0;
};

struct NetOptions {
  std::size_t max_resample = 100000;  // draws per candidate before giving up
  std::size_t max_points = std::size_t{1} << 20;
};

/// Draws points of T cap rS^{n-1}: r times a random direction, rejected until
/// it lies in T. The direction is Gaussian on a random coordinate subset whose
/// size is uniform in 1..n; uniform directions alone are almost never accepted
/// when T is far from round (B1 in moderate dimension, say).
class SpherePointSampler {
 public:
  SpherePointSampler(const ConvexBody& body, double r, std::size_t max_resample)
      : body_(body), r_(r), max_resample_(max_resample) {}

  template <typename Gen>
  std::optional<Vector> operator()(Gen& gen) const {
    std::normal_distribution<double> normal;
    const std::size_t n = body_.dim();
    std::vector<Eigen::Index> coords(n);
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    for (std::size_t attempt = 0; attempt < max_resample_; ++attempt) {
      const std::size_t s = std::uniform_int_distribution<std::size_t>(1, n)(gen);
      for (std::size_t i = 0; i < s; ++i) {
        const std::size_t j = std::uniform_int_distribution<std::size_t>(i, n - 1)(gen);
        std::swap(coords[i], coords[j]);
      }
      Vector d = Vector::Zero(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < s; ++i) d[coords[i]] = normal(gen);
      const double dn = d.norm();
      if (dn == 0.0) continue;
      const Vector x = d * (r_ / dn);
      if (gauge(body_, x) <= 1.0) return x;
    }
    return std::nullopt;
  }

 private:
  const ConvexBody& body_;
  double r_;
  std::size_t max_resample_;
};

/// Greedy rho-separated subset of T cap rS^{n-1}: a sampled candidate joins
/// the net iff it is at distance >= rho from every current point; stops after
/// candidate_budget consecutive rejections.
inline NetResult separated_net(const ConvexBody& body, double r, double rho,
                               std::size_t candidate_budget, const RngStream& rng,
                               const NetOptions& opt = {}) {
  detail::require(rho > 0.0, "rho must be positive");
  detail::require(r > 0.0, "r must be positive");
  detail::require(candidate_budget >= 1, "candidate budget must be positive");
  if (r > euclidean_radius(body) * (1.0 + 1e-12)) {
    throw EmptySetError("T cap rS^{n-1} is empty: r exceeds the circumradius");
  }
  NetResult net;
  net.r = r;
  net.rho = rho;
  SpherePointSampler sampler(body, r, opt.max_resample);
  auto gen = rng.engine();
  std::size_t rejected = 0;
  while (rejected < candidate_budget) {
    if (net.points.size() >= opt.max_points) break;
    const auto cand = sampler(gen);
    if (!cand) {
      net.starved = true;
      break;
    }
    ++net.candidates;
    bool separated = true;
    for (const auto& p : net.points) {
      if ((p - *cand).norm() < rho) {
        separated = false;
        break;
      }
    }
    if (separated) {
      net.points.push_back(*cand);
      rejected = 0;
    } else {
      ++rejected;
    }
  }
  net.budget_exhausted = rejected >= candidate_budget;
  net.cardinality = net.points.size();
  return net;
}

/// Index of the net point nearest to x in l2.
inline std::size_t nearest_point(const NetResult& net, const Vector& x) {
  std::size_t best = 0;
  double dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < net.points.size(); ++i) {
    const double d = (net.points[i] - x).squaredNorm();
    if (d < dist) {
      dist = d;
      best = i;
    }
  }
  return best;
}

struct OscillationOptions {
  std::size_t draws = 200;
  std::size_t width_samples = 2000;
  double delta = 0.1;
  double epsilon = 1.0 / 600.0;
  double c = 1.0;
};

struct OscillationResult {
  // mean over draws of max over probes of k^{-1} sum_i |<X_i, x - pi(x)>|
  double A_hat = 0.0;
  // c E||G||_{T°} / sqrt(eps k) + (4/k) E||sum X_i||_{T°}
  double rhs = 0.0;
  // the (k/100)-th largest |<X_i, x - pi(x)>| stayed below 100 A_hat / delta on every probe
  bool rearrangement_ok = true;
  std::vector<double> per_draw;
  std::vector<double> row_norm_mean;  // k^{-1} sum_i ||X_i||_2 per draw
  double max_probe_gap = 0.0;         // max ||x - pi(x)||_2 over all probes
  double fraction_below_rhs() const {
    if (per_draw.empty()) return 1.0;
    const auto below = std::count_if(per_draw.begin(), per_draw.end(),
                                     [&](double v) { return v <= rhs; });
    return static_cast<double>(below) / static_cast<double>(per_draw.size());
  }
};

namespace detail {

using ProbeSource = std::function<std::vector<Vector>(Philox4x32&)>;

inline OscillationResult oscillation_core(const NetResult& net, const Ensemble& ens, std::size_t k,
                                          std::size_t draws, const ProbeSource& probes,
                                          double delta, const RngStream& rng) {
  detail::require(!net.points.empty(), "oscillation needs a nonempty net");
  detail::require(k >= 1 && draws >= 1, "oscillation needs k and draws");
  const auto n = static_cast<std::size_t>(net.points.front().size());
  const Ensemble e = ens.with_dim(n);
  const std::size_t order = std::max<std::size_t>(1, k / 100);

  OscillationResult out;
  out.per_draw.assign(draws, 0.0);
  out.row_norm_mean.assign(draws, 0.0);
  std::vector<double> worst_order(draws, 0.0);
  std::vector<double> gaps(draws, 0.0);
  parallel_for(draws, [&](std::size_t d) {
    auto gen = rng.engine(static_cast<std::uint32_t>(d));
    CoordinateSampler coords(e);
    Matrix rows(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      for (Eigen::Index j = 0; j < rows.cols(); ++j) rows(i, j) = coords(gen);
    }
    out.row_norm_mean[d] = rows.rowwise().norm().mean();
    for (const auto& x : probes(gen)) {
      const Vector diff = x - net.points[nearest_point(net, x)];
      gaps[d] = std::max(gaps[d], diff.norm());
      Vector w = (rows * diff).cwiseAbs();
      out.per_draw[d] = std::max(out.per_draw[d], w.mean());
      std::nth_element(w.data(), w.data() + (order - 1), w.data() + w.size(), std::greater<>());
      worst_order[d] = std::max(worst_order[d], w[static_cast<Eigen::Index>(order - 1)]);
    }
  });
  double sum = 0.0;
  for (double v : out.per_draw) sum += v;
  out.A_hat = sum / static_cast<double>(draws);
  const double cap = 100.0 * out.A_hat / delta;
  for (std::size_t d = 0; d < draws; ++d) {
    if (worst_order[d] > cap * (1.0 + 1e-12)) out.rearrangement_ok = false;
    out.max_probe_gap = std::max(out.max_probe_gap, gaps[d]);
  }
  return out;
}

}  // namespace detail

/// Oscillation of x - pi(x) over sampled probes x in T cap rS^{n-1}.
inline OscillationResult empirical_oscillation(const ConvexBody& body, const NetResult& net,
                                               const Ensemble& ens, std::size_t k,
                                               std::size_t probe_points, const RngStream& rng,
                                               const OscillationOptions& opt = {}) {
  detail::require(!net.points.empty(), "oscillation needs a nonempty net");
  detail::require(probe_points >= 1, "oscillation needs probe points");
  detail::require(static_cast<std::size_t>(net.points.front().size()) == body.dim(),
                  "net and body dimensions differ");
  SpherePointSampler sampler(body, net.r, NetOptions{}.max_resample);
  auto probes = [&](Philox4x32& gen) {
    std::vector<Vector> xs;
    xs.reserve(probe_points);
    for (std::size_t p = 0; p < probe_points; ++p) {
      auto x = sampler(gen);
      if (!x) throw EmptySetError("could not sample probes on T cap rS^{n-1}");
      xs.push_back(std::move(*x));
    }
    return xs;
  };
  OscillationResult out =
      detail::oscillation_core(net, ens, k, opt.draws, probes, opt.delta, rng.child(0x05C));
  const double kk = static_cast<double>(k);
  const double gw = mc_mean_width(body, opt.width_samples, rng.child(0x6A)).mean;
  const double rw = row_sum_width(body, ens, k, opt.width_samples, rng.child(0x7B)).mean;
  // E||sum X_i|| = sqrt(k) E||k^{-1/2} sum X_i||
  out.rhs = opt.c * gw / std::sqrt(opt.epsilon * kk) + 4.0 / kk * std::sqrt(kk) * rw;
  return out;
}

/// Oscillation with caller-chosen probes (used for checks at net points).
inline OscillationResult oscillation_at(const NetResult& net, const std::vector<Vector>& probes,
                                        const Ensemble& ens, std::size_t k, std::size_t draws,
                                        const RngStream& rng, double delta = 0.1) {
  detail::require(!probes.empty(), "oscillation needs probe points");
  return detail::oscillation_core(
      net, ens, k, draws, [&](Philox4x32&) { return probes; }, delta, rng);
}

}  // namespace sectlab
