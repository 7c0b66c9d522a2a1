#pragma once

// Reference values computed independently of the library code paths.

#include <cmath>
#include <functional>
#include <algorithm>
#include <numbers>
#include <vector>

namespace oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Phi^{-1}(p) by bisection on erfc.
inline double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// E||G||_2 for G standard Gaussian in R^n: sqrt(2) Gamma((n+1)/2) / Gamma(n/2).
inline double gaussian_l2_norm_mean(int n) {
  return std::numbers::sqrt2 * std::exp(std::lgamma((n + 1) / 2.0) - std::lgamma(n / 2.0));
}

/// E||G||_1 = n sqrt(2/pi).
inline double gaussian_l1_norm_mean(int n) { return n * std::sqrt(2.0 / std::numbers::pi); }

/// Composite Simpson rule on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int m = 20000) {
  if (m % 2 == 1) ++m;
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// E max_i |g_i| = int_0^inf 1 - (2 Phi(t) - 1)^n dt.
inline double gaussian_linf_norm_mean(int n) {
  return simpson([n](double t) { return 1.0 - std::pow(2.0 * normal_cdf(t) - 1.0, n); }, 0.0, 12.0);
}

/// h_{B1 cap rB2}(u) = min_{t >= 0} t + r ||(|u| - t)_+||_2, solved exactly:
/// on each interval where the active set has s coordinates the stationarity
/// condition is a quadratic in t.
inline double l1_ball_localized_support(std::vector<double> u, double r) {
  for (auto& x : u) x = std::abs(x);
  std::sort(u.begin(), u.end(), std::greater<>());
  auto f = [&](double t) {
    double s2 = 0.0;
    for (double a : u) {
      if (a > t) s2 += (a - t) * (a - t);
    }
    return t + r * std::sqrt(s2);
  };
  double best = std::min(f(0.0), f(u.front()));
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t s = 1; s <= u.size(); ++s) {
    sum += u[s - 1];
    sum_sq += u[s - 1] * u[s - 1];
    const double hi = u[s - 1];
    const double lo = s < u.size() ? u[s] : 0.0;
    best = std::min(best, f(lo));
    const double ds = static_cast<double>(s);
    // s (r^2 s - 1) t^2 + 2 A (1 - r^2 s) t + (r^2 A^2 - B) = 0
    const double qa = ds * (r * r * ds - 1.0);
    const double qb = 2.0 * sum * (1.0 - r * r * ds);
    const double qc = r * r * sum * sum - sum_sq;
    std::vector<double> roots;
    if (std::abs(qa) < 1e-300) {
      if (std::abs(qb) > 0.0) roots.push_back(-qc / qb);
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        roots.push_back((-qb + std::sqrt(disc)) / (2.0 * qa));
        roots.push_back((-qb - std::sqrt(disc)) / (2.0 * qa));
      }
    }
    for (double t : roots) {
      if (t >= lo && t <= hi) best = std::min(best, f(t));
    }
  }
  return best;
}

}  // namespace oracle
