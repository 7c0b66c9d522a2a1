#pragma once

// Seeded sweeps over (n, k, trial): sample Gamma, measure diam(T cap ker Gamma),
// compare with a calibrated bound, and persist everything as byte-stable CSV.
//
// Trial (n, k, t) draws Gamma from stream hash(n, k, t) of the master seed and
// the diameter search from a child of that stream, so switching the diameter
// method never changes Gamma.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sectlab/bodies.hpp"
#include "sectlab/bounds.hpp"
#include "sectlab/diameter.hpp"
#include "sectlab/ensembles.hpp"
#include "sectlab/error.hpp"
#include "sectlab/kernels.hpp"
#include "sectlab/parallel.hpp"
#include "sectlab/rng.hpp"
#include "sectlab/widths.hpp"

namespace sectlab {

enum class DiameterMethod { kAuto, kExact, kSample, kAscent };

inline DiameterMethod parse_method(const std::string& s) {
  if (s == "auto") return DiameterMethod::kAuto;
  if (s == "exact") return DiameterMethod::kExact;
  if (s == "sample") return DiameterMethod::kSample;
  if (s == "ascent") return DiameterMethod::kAscent;
  throw InputError("unknown diameter method: " + s);
}

inline std::string to_string(DiameterMethod m) {
  switch (m) {
    case DiameterMethod::kAuto: return "auto";
    case DiameterMethod::kExact: return "exact";
    case DiameterMethod::kSample: return "sample";
    case DiameterMethod::kAscent: return "ascent";
  }
  return "unknown";
}

struct SweepConfig {
  std::string body_spec = "l1";
  std::string ensemble_spec = "gaussian";
  std::vector<std::size_t> n_list;
  std::vector<std::size_t> k_list;
  std::size_t trials = 10;
  std::size_t width_samples = 10000;
  std::size_t dirs = 100000;
  std::optional<double> constant_C;
  std::uint64_t master_seed = 0;
  std::string output_path;
  BoundVariant variant = BoundVariant::kTheoremMain;

  DiameterMethod method = DiameterMethod::kAuto;
  std::size_t refine_iters = 500;
  double exact_budget = 5e6;
  std::size_t ascent_starts = 32;
  std::size_t smallball_directions = 32;
  std::size_t smallball_samples = 2000;
  double smallball_target = 0.99;
  double calibration_margin = 0.10;
  double calibration_quantile = 0.75;
  // wall-clock is the only nondeterministic output; off by default
  bool record_timing = false;

  void validate() const {
    detail::require(!n_list.empty() && !k_list.empty(), "n_list and k_list must be nonempty");
    detail::require(trials >= 1, "trials must be positive");
    detail::require(width_samples >= 2, "width_samples must be at least 2");
    detail::require(dirs >= 1, "dirs must be positive");
    for (auto n : n_list) detail::require(n >= 1, "n values must be positive");
    for (auto k : k_list) detail::require(k >= 1, "k values must be positive");
    if (constant_C) detail::require(*constant_C > 0.0, "constant_C must be positive");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto x = std::stoull(v, &used, 0);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InputError("bad integer for " + key + ": " + v);
  }
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InputError("bad number for " + key + ": " + v);
  }
}

inline std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& v) {
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
    throw InputError(key + " must be a bracketed list");
  }
  std::vector<std::size_t> out;
  std::stringstream ss(v.substr(1, v.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InputError("bad boolean for " + key + ": " + v);
}

}  // namespace detail

/// Applies one `key = value` setting. Keys are the SweepConfig field names.
inline void apply_config_value(SweepConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string v = detail::trim(raw);
  using detail::parse_real;
  using detail::parse_u64;
  auto as_size = [&] { return static_cast<std::size_t>(parse_u64(key, v)); };
  if (key == "body_spec") cfg.body_spec = v;
  else if (key == "ensemble_spec") cfg.ensemble_spec = v;
  else if (key == "n_list") cfg.n_list = detail::parse_size_list(key, v);
  else if (key == "k_list") cfg.k_list = detail::parse_size_list(key, v);
  else if (key == "trials") cfg.trials = as_size();
  else if (key == "width_samples") cfg.width_samples = as_size();
  else if (key == "dirs") cfg.dirs = as_size();
  else if (key == "constant_C") {
    if (v == "auto" || v.empty()) cfg.constant_C.reset();
    else cfg.constant_C = parse_real(key, v);
  }
  else if (key == "master_seed") cfg.master_seed = parse_u64(key, v);
  else if (key == "output_path") cfg.output_path = v;
  else if (key == "variant") cfg.variant = parse_variant(v);
  else if (key == "method") cfg.method = parse_method(v);
  else if (key == "refine_iters") cfg.refine_iters = as_size();
  else if (key == "exact_budget") cfg.exact_budget = parse_real(key, v);
  else if (key == "ascent_starts") cfg.ascent_starts = as_size();
  else if (key == "smallball_directions") cfg.smallball_directions = as_size();
  else if (key == "smallball_samples") cfg.smallball_samples = as_size();
  else if (key == "smallball_target") cfg.smallball_target = parse_real(key, v);
  else if (key == "calibration_margin") cfg.calibration_margin = parse_real(key, v);
  else if (key == "calibration_quantile") cfg.calibration_quantile = parse_real(key, v);
  else if (key == "record_timing") cfg.record_timing = detail::parse_bool(key, v);
  else throw InputError("unknown config key: " + key);
}

inline SweepConfig parse_config(std::istream& in, SweepConfig cfg = {}) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_config_value(cfg, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

inline SweepConfig parse_config_file(const std::string& path, SweepConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  return parse_config(in, std::move(cfg));
}

struct TrialRecord {
  std::size_t trial = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;  // stream index of the trial under the master seed
  double diam = std::numeric_limits<double>::quiet_NaN();
  std::string diam_kind;  // exact, lower_bound, or error
  double gw = 0.0;
  double gw_se = 0.0;
  double rw = 0.0;
  double rw_se = 0.0;
  double lambda = 0.0;
  double C = 0.0;
  double bound = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double ms = 0.0;
  std::string error;  // not serialized

  bool is_error() const { return diam_kind == "error"; }
};

struct SweepResult {
  std::vector<TrialRecord> records;
  double constant = 0.0;
  bool calibrated = false;
  std::vector<std::string> warnings;
};

/// Stream index of trial t in cell (n, k).
inline std::uint64_t trial_stream(std::size_t n, std::size_t k, std::size_t trial) {
  return hash_ints(n, k, trial);
}

namespace detail {

struct CellBound {
  double base = 0.0;  // bound at C = 1
  WidthEstimate gw;
  WidthEstimate rw;
};

inline bool is_l1(const ConvexBody& body) {
  const auto* b = body.as<LpBall>();
  return b && !b->p.is_infinite() && b->p.value() == 1.0;
}

inline bool is_ellipsoidal(const ConvexBody& body) {
  if (body.as<Ellipsoid>() != nullptr) return true;
  const auto* b = body.as<LpBall>();
  return b && !b->p.is_infinite() && b->p.value() == 2.0;
}

inline DiameterResult trial_diameter(const ConvexBody& body, const Matrix& gamma,
                                     const SweepConfig& cfg, const RngStream& rng) {
  const std::size_t n = body.dim();
  DiameterMethod method = cfg.method;
  if (method == DiameterMethod::kAuto) {
    if (is_ellipsoidal(body)) {
      method = DiameterMethod::kExact;
    } else if (is_l1(body)) {
      const std::size_t size = std::min(static_cast<std::size_t>(gamma.rows()) + 1, n);
      const bool fits = n <= 64 && ConvexBody::binomial(n, size) <= cfg.exact_budget;
      method = fits ? DiameterMethod::kExact : DiameterMethod::kAscent;
    } else {
      method = DiameterMethod::kSample;
    }
  }
  switch (method) {
    case DiameterMethod::kExact:
      if (is_ellipsoidal(body)) return ellipsoid_section_diameter(body, kernel_basis(gamma));
      if (is_l1(body)) {
        ExactOptions opt;
        opt.budget = cfg.exact_budget;
        return crosspolytope_section_diameter_exact(gamma, opt);
      }
      throw InputError("exact diameter is available for l1, l2 and ellipsoid bodies only");
    case DiameterMethod::kAscent: {
      if (!is_l1(body)) throw InputError("vertex ascent is available for the l1 body only");
      AscentOptions opt;
      opt.starts = cfg.ascent_starts;
      return l1_vertex_ascent_diameter(gamma, rng, opt);
    }
    case DiameterMethod::kSample:
    case DiameterMethod::kAuto:
      break;
  }
  return direction_sampling_diameter(body, kernel_basis(gamma), cfg.dirs, cfg.refine_iters, rng);
}

inline CellBound cell_bound(const ConvexBody& body, const Ensemble& ens, std::size_t k,
                            const SweepConfig& cfg, const WidthEstimate& gw) {
  const std::size_t n = body.dim();
  CellBound cb;
  switch (cfg.variant) {
    case BoundVariant::kTheoremMain: {
      cb.gw = gw;
      cb.rw = row_sum_width(body, ens, k, cfg.width_samples,
                            RngStream{cfg.master_seed, hash_ints(0x7277, n, k)});
      cb.base = theorem_bound(cb.gw, cb.rw, k, 1.0).bound_value;
      break;
    }
    case BoundVariant::kType2: {
      const auto r2 = default_type2_constant(body);
      if (!r2) throw InputError("no default type 2 constant for body " + cfg.body_spec);
      // same stream for every k, so the widths are shared across k
      const auto rep = type2_bound(body, ens, k, cfg.width_samples, *r2,
                                   RngStream{cfg.master_seed, hash_ints(0x7432, n)});
      cb.gw = rep.gaussian_width;
      cb.rw = rep.rowsum_width;
      cb.base = rep.bound_value;
      break;
    }
    case BoundVariant::kFixedPoint: {
      const auto rep = fixed_point_bound(body, ens, k, cfg.width_samples,
                                         RngStream{cfg.master_seed, hash_ints(0x6670, n, k)}, 1.0);
      cb.gw = rep.gaussian_width;
      cb.rw.mean = std::max(rep.r_k, rep.rho_k);
      cb.base = rep.bound_value;
      break;
    }
  }
  return cb;
}

}  // namespace detail

inline SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  SweepResult result;
  std::vector<std::size_t> ns = cfg.n_list;
  std::vector<std::size_t> ks = cfg.k_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (std::all_of(ns.begin(), ns.end(), [&](std::size_t n) { return ks.front() >= n; })) {
    result.warnings.push_back("every k is at least every n: kernels are trivial");
  }

  struct Cell {
    std::size_t n, k;
    detail::CellBound bound;
    double lambda;
    std::vector<TrialRecord> records;
  };
  std::vector<Cell> cells;
  for (std::size_t n : ns) {
    const ConvexBody body = parse_body(cfg.body_spec, n);
    const Ensemble ens = parse_ensemble(cfg.ensemble_spec, n);
    const WidthEstimate gw =
        mc_mean_width(body, cfg.width_samples, RngStream{cfg.master_seed, hash_ints(0x6777, n)});
    const double lambda =
        estimate_small_ball(ens, n, cfg.smallball_directions, cfg.smallball_samples,
                            cfg.smallball_target, RngStream{cfg.master_seed, hash_ints(0x6C6D, n)})
            .lambda_hat;
    for (std::size_t k : ks) {
      Cell cell{n, k, detail::cell_bound(body, ens, k, cfg, gw), lambda, {}};
      cell.records.resize(cfg.trials);
      parallel_for(cfg.trials, [&](std::size_t t) {
        TrialRecord& rec = cell.records[t];
        rec.trial = t;
        rec.n = n;
        rec.k = k;
        rec.seed = trial_stream(n, k, t);
        const auto start = std::chrono::steady_clock::now();
        try {
          const RngStream rng{cfg.master_seed, rec.seed};
          const Matrix gamma = sample_matrix(ens, k, rng);
          const DiameterResult d = detail::trial_diameter(body, gamma, cfg, rng.child(0xD1A));
          rec.diam = d.value;
          rec.diam_kind = to_string(d.kind);
        } catch (const std::exception& e) {
          rec.diam = std::numeric_limits<double>::quiet_NaN();
          rec.diam_kind = "error";
          rec.error = e.what();
        }
        if (cfg.record_timing) {
          rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                       .count();
        }
      });
      cells.push_back(std::move(cell));
    }
  }

  if (cfg.constant_C) {
    result.constant = *cfg.constant_C;
  } else {
    // one constant for the whole sweep, fitted at the smallest k
    double worst = 0.0;
    bool any = false;
    for (const auto& cell : cells) {
      if (cell.k != ks.front()) continue;
      std::vector<double> ratios;
      for (const auto& r : cell.records) {
        if (!r.is_error() && cell.bound.base > 0.0) ratios.push_back(r.diam / cell.bound.base);
      }
      if (ratios.empty()) continue;
      worst = std::max(worst, order_quantile(ratios, cfg.calibration_quantile));
      any = true;
    }
    result.calibrated = true;
    if (!any || worst <= 0.0) {
      result.warnings.push_back("calibration had no positive diameters; C set to 1");
      result.constant = 1.0;
    } else {
      result.constant = (1.0 + cfg.calibration_margin) * worst;
    }
  }

  for (auto& cell : cells) {
    for (auto& rec : cell.records) {
      rec.gw = cell.bound.gw.mean;
      rec.gw_se = cell.bound.gw.std_error;
      rec.rw = cell.bound.rw.mean;
      rec.rw_se = cell.bound.rw.std_error;
      rec.lambda = cell.lambda;
      rec.C = result.constant;
      rec.bound = result.constant * cell.bound.base;
      rec.ratio = rec.bound > 0.0 && !rec.is_error() ? rec.diam / rec.bound
                                                     : std::numeric_limits<double>::quiet_NaN();
      if (rec.is_error()) {
        result.warnings.push_back("n=" + std::to_string(rec.n) + " k=" + std::to_string(rec.k) +
                                  " trial=" + std::to_string(rec.trial) + ": " + rec.error);
      }
      result.records.push_back(std::move(rec));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kSweepHeader =
    "trial,n,k,seed,diam,diam_kind,gw,gw_se,rw,rw_se,lambda,C,bound,ratio,ms";
inline constexpr const char* kVerifyHeader = "n,k,trials,fraction,median_diam_sqrtk";

/// 17 significant digits: parses back to the same double.
inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_records_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << kSweepHeader << '\n';
  for (const auto& r : records) {
    out << r.trial << ',' << r.n << ',' << r.k << ',' << r.seed << ',' << format_real(r.diam) << ','
        << r.diam_kind << ',' << format_real(r.gw) << ',' << format_real(r.gw_se) << ','
        << format_real(r.rw) << ',' << format_real(r.rw_se) << ',' << format_real(r.lambda) << ','
        << format_real(r.C) << ',' << format_real(r.bound) << ',' << format_real(r.ratio) << ','
        << format_real(r.ms) << '\n';
  }
}

inline std::string records_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream os;
  write_records_csv(os, records);
  return os.str();
}

inline std::vector<TrialRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kSweepHeader) {
    throw InputError("not a sweep CSV: header mismatch");
  }
  std::vector<TrialRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(detail::trim(item));
    if (f.size() != 15) throw InputError("sweep CSV line " + std::to_string(lineno) + ": 15 fields expected");
    auto real = [&](std::size_t i) {
      char* end = nullptr;
      const double x = std::strtod(f[i].c_str(), &end);
      if (f[i].empty() || *end != '\0') {
        throw InputError("sweep CSV line " + std::to_string(lineno) + ": bad number " + f[i]);
      }
      return x;
    };
    TrialRecord r;
    r.trial = static_cast<std::size_t>(detail::parse_u64("trial", f[0]));
    r.n = static_cast<std::size_t>(detail::parse_u64("n", f[1]));
    r.k = static_cast<std::size_t>(detail::parse_u64("k", f[2]));
    r.seed = detail::parse_u64("seed", f[3]);
    r.diam = real(4);
    r.diam_kind = f[5];
    r.gw = real(6);
    r.gw_se = real(7);
    r.rw = real(8);
    r.rw_se = real(9);
    r.lambda = real(10);
    r.C = real(11);
    r.bound = real(12);
    r.ratio = real(13);
    r.ms = real(14);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<TrialRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_records_csv(in);
}

// ---------------------------------------------------------------------------
// Verification

struct CellReport {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t trials = 0;  // non-error trials
  std::size_t errors = 0;
  double fraction = 0.0;   // share of trials with diam <= bound
  double median_diam_sqrtk = std::numeric_limits<double>::quiet_NaN();
  double median_diam = std::numeric_limits<double>::quiet_NaN();
  bool passed = false;
};

struct VerifyReport {
  std::vector<CellReport> cells;
  double floor = 0.75;
  bool passed = false;

  /// max / min of median(diam) sqrt(k) over cells.
  double scaling_spread() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& c : cells) {
      lo = std::min(lo, c.median_diam_sqrtk);
      hi = std::max(hi, c.median_diam_sqrtk);
    }
    return hi / lo;
  }
};

inline double median(std::vector<double> v) {
  detail::require(!v.empty(), "median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline VerifyReport verify_theorem(const std::vector<TrialRecord>& records,
                                   double probability_floor = 0.75) {
  detail::require(!records.empty(), "verify_theorem needs records");
  detail::require(probability_floor >= 0.0 && probability_floor <= 1.0,
                  "probability floor must lie in [0, 1]");
  std::map<std::pair<std::size_t, std::size_t>, std::vector<const TrialRecord*>> by_cell;
  for (const auto& r : records) by_cell[{r.n, r.k}].push_back(&r);

  VerifyReport report;
  report.floor = probability_floor;
  report.passed = true;
  for (const auto& [key, recs] : by_cell) {
    CellReport c;
    c.n = key.first;
    c.k = key.second;
    std::vector<double> diams;
    std::size_t below = 0;
    for (const auto* r : recs) {
      if (r->is_error() || std::isnan(r->diam)) {
        ++c.errors;
        continue;
      }
      diams.push_back(r->diam);
      if (r->diam <= r->bound) ++below;
    }
    c.trials = diams.size();
    if (!diams.empty()) {
      c.fraction = static_cast<double>(below) / static_cast<double>(diams.size());
      c.median_diam = median(diams);
      c.median_diam_sqrtk = c.median_diam * std::sqrt(static_cast<double>(c.k));
    }
    c.passed = c.trials > 0 && c.fraction >= probability_floor;
    report.passed = report.passed && c.passed;
    report.cells.push_back(c);
  }
  return report;
}

inline void write_verify_csv(std::ostream& out, const VerifyReport& report) {
  out << kVerifyHeader << '\n';
  for (const auto& c : report.cells) {
    out << c.n << ',' << c.k << ',' << c.trials << ',' << format_real(c.fraction) << ','
        << format_real(c.median_diam_sqrtk) << '\n';
  }
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  detail::require(x.size() == y.size() && x.size() >= 2, "slope fit needs two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    detail::require(x[i] > 0.0 && y[i] > 0.0, "slope fit needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  detail::require(sxx > 0.0, "slope fit needs distinct x values");
  return sxy / sxx;
}

}  // namespace sectlab
