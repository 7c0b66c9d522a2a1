// sectlab: command-line front end for the section-diameter library.
//
// Every subcommand prints CSV (header + rows) on stdout. Exit codes:
// 0 success, 1 input error, 2 budget/size error, 3 verification failure.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sectlab/sectlab.hpp"

namespace {

using namespace sectlab;

struct Globals {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

std::string bool_str(bool b) { return b ? "true" : "false"; }

void print_width_row(const WidthEstimate& w) {
  std::cout << "kind,mean,stderr,samples\n"
            << to_string(w.kind) << ',' << format_real(w.mean) << ',' << format_real(w.std_error)
            << ',' << w.samples << '\n';
}

void print_bound(const BoundReport& r, double proof_constant) {
  std::cout << "variant,k,C,gw,gw_se,rw,rw_se,lambda,bound,rho_k,r_k,proof_C\n"
            << to_string(r.variant) << ',' << r.k << ',' << format_real(r.constant) << ','
            << format_real(r.gaussian_width.mean) << ',' << format_real(r.gaussian_width.std_error)
            << ',' << format_real(r.rowsum_width.mean) << ','
            << format_real(r.rowsum_width.std_error) << ',' << format_real(r.lambda_hat) << ','
            << format_real(r.bound_value) << ',' << format_real(r.rho_k) << ','
            << format_real(r.r_k) << ',' << format_real(proof_constant) << '\n';
}

void print_fixed_point(const FixedPointResult& f) {
  std::cout << "value,saturated,bracket_lo,bracket_hi,evaluations\n"
            << format_real(f.value) << ',' << bool_str(f.saturated) << ','
            << format_real(f.bracket_lo) << ',' << format_real(f.bracket_hi) << ','
            << f.evaluations << '\n';
}

void print_simulation(const SimulationResult& s) {
  std::cout << "failure_rate,bound,trials,failures,wilson_width\n"
            << format_real(s.failure_rate) << ',' << format_real(s.bound) << ',' << s.trials << ','
            << s.failures << ',' << format_real(s.wilson()) << '\n';
}

/// Largest grid level meeting the one-coordinate small-ball premise at 1 - eps.
double scalar_lambda(const Ensemble& ens, double eps, const RngStream& rng) {
  return estimate_small_ball(ens, 1, 1, 200000, 1.0 - eps, rng).lambda_hat;
}

template <typename F>
int guarded(const Globals& g, F&& body) {
  try {
    set_worker_count(g.workers);
    return body();
  } catch (const SizeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kBudgetError);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kInputError);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kInputError);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random kernel sections of convex bodies"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--workers", g.workers, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);

  int status = 0;

  // width ------------------------------------------------------------------
  struct {
    std::string body = "l1";
    std::size_t n = 0;
    std::size_t samples = 200000;
    std::optional<double> r;
    std::optional<std::string> ensemble;
    std::size_t k = 1;
    std::size_t iters = 2000;
  } w;
  auto* width = app.add_subcommand("width", "Monte Carlo polar-norm expectations");
  width->add_option("--body", w.body)->required();
  width->add_option("--n", w.n)->required();
  width->add_option("--samples", w.samples);
  width->add_option("--r", w.r, "localization radius");
  width->add_option("--ensemble", w.ensemble, "row-sum width for this ensemble");
  width->add_option("--k", w.k);
  width->add_option("--subgradient-iters", w.iters);
  width->callback([&] {
    status = guarded(g, [&] {
      const ConvexBody body = parse_body(w.body, w.n);
      const RngStream rng{g.seed, 0};
      if (w.r) {
        LocalizedOptions opt;
        opt.subgradient_iters = static_cast<int>(w.iters);
        print_width_row(localized_mean_width(body, *w.r, w.samples, rng, opt));
      } else if (w.ensemble) {
        print_width_row(row_sum_width(body, parse_ensemble(*w.ensemble, w.n), w.k, w.samples, rng));
      } else {
        print_width_row(mc_mean_width(body, w.samples, rng));
      }
      return 0;
    });
  });

  // diameter ---------------------------------------------------------------
  struct {
    std::string body = "l1";
    std::size_t n = 0;
    std::size_t k = 1;
    std::string ensemble = "gaussian";
    std::string method = "auto";
    std::size_t dirs = 100000;
    std::size_t refine = 500;
    double budget = 5e6;
  } d;
  auto* diameter = app.add_subcommand("diameter", "diam(T cap ker Gamma) for one sampled Gamma");
  diameter->add_option("--body", d.body)->required();
  diameter->add_option("--n", d.n)->required();
  diameter->add_option("--k", d.k)->required();
  diameter->add_option("--ensemble", d.ensemble);
  diameter->add_option("--method", d.method)->check(CLI::IsMember({"auto", "exact", "sample", "ascent"}));
  diameter->add_option("--dirs", d.dirs);
  diameter->add_option("--refine", d.refine);
  diameter->add_option("--budget", d.budget, "cap on enumerated supports for exact l1");
  diameter->callback([&] {
    status = guarded(g, [&] {
      const ConvexBody body = parse_body(d.body, d.n);
      SweepConfig cfg;
      cfg.method = parse_method(d.method);
      cfg.dirs = d.dirs;
      cfg.refine_iters = d.refine;
      cfg.exact_budget = d.budget;
      const RngStream rng{g.seed, 0};
      const Matrix gamma = sample_matrix(parse_ensemble(d.ensemble, body.dim()), d.k, rng);
      const DiameterResult res = detail::trial_diameter(body, gamma, cfg, rng.child(0xD1A));
      std::cout << "value,kind,evaluations\n"
                << format_real(res.value) << ',' << to_string(res.kind) << ',' << res.evaluations
                << '\n';
      return 0;
    });
  });

  // bound ------------------------------------------------------------------
  struct {
    std::string body = "l1";
    std::size_t n = 0;
    std::size_t k = 1;
    std::string ensemble = "gaussian";
    std::string variant = "theorem";
    double C = 1.0;
    std::size_t samples = 10000;
    std::optional<double> r2;
    FixedPointBoundOptions fp;
  } b;
  auto* bound = app.add_subcommand("bound", "upper bound on the section diameter");
  bound->add_option("--body", b.body)->required();
  bound->add_option("--n", b.n)->required();
  bound->add_option("--k", b.k)->required();
  bound->add_option("--ensemble", b.ensemble);
  bound->add_option("--variant", b.variant)->check(CLI::IsMember({"theorem", "fixed-point", "type2"}));
  bound->add_option("--C", b.C);
  bound->add_option("--samples", b.samples);
  bound->add_option("--R2", b.r2, "type 2 constant of the polar norm");
  bound->add_option("--delta", b.fp.delta);
  bound->add_option("--Q1", b.fp.q1);
  bound->add_option("--Q2", b.fp.q2);
  bound->callback([&] {
    status = guarded(g, [&] {
      const ConvexBody body = parse_body(b.body, b.n);
      const Ensemble ens = parse_ensemble(b.ensemble, body.dim());
      const RngStream rng{g.seed, 0};
      BoundReport rep;
      switch (parse_variant(b.variant)) {
        case BoundVariant::kTheoremMain:
          rep = theorem_bound(mc_mean_width(body, b.samples, rng.child(1)),
                              row_sum_width(body, ens, b.k, b.samples, rng.child(2)), b.k, b.C);
          break;
        case BoundVariant::kType2: {
          const auto r2 = b.r2 ? b.r2 : default_type2_constant(body);
          if (!r2) throw InputError("no default type 2 constant for this body; pass --R2");
          rep = type2_bound(body, ens, b.k, b.samples, *r2, rng, b.C);
          break;
        }
        case BoundVariant::kFixedPoint:
          rep = fixed_point_bound(body, ens, b.k, b.samples, rng, b.C, b.fp);
          break;
      }
      rep.lambda_hat = estimate_small_ball(ens, body.dim(), 32, 2000, 0.99, rng.child(3)).lambda_hat;
      print_bound(rep, rep.lambda_hat > 0.0 ? proof_chain_constant(rep.lambda_hat)
                                            : std::numeric_limits<double>::infinity());
      return 0;
    });
  });

  // sweep ------------------------------------------------------------------
  struct {
    std::string config;
    std::string body, ensemble, output, variant, method;
    std::vector<std::size_t> n_list, k_list;
    std::size_t trials = 0, width_samples = 0, dirs = 0;
    std::optional<double> C;
    bool timing = false;
  } s;
  auto* sweep = app.add_subcommand("sweep", "seeded sweep over (n, k, trial)");
  sweep->add_option("--config", s.config, "key = value config file")->check(CLI::ExistingFile);
  sweep->add_option("--body", s.body);
  sweep->add_option("--ensemble", s.ensemble);
  sweep->add_option("--n", s.n_list)->delimiter(',');
  sweep->add_option("--k", s.k_list)->delimiter(',');
  sweep->add_option("--trials", s.trials);
  sweep->add_option("--width-samples", s.width_samples);
  sweep->add_option("--dirs", s.dirs);
  sweep->add_option("--C", s.C);
  sweep->add_option("--output", s.output);
  sweep->add_option("--variant", s.variant);
  sweep->add_option("--method", s.method);
  sweep->add_flag("--timing", s.timing, "fill the ms column with wall-clock times");
  sweep->callback([&] {
    status = guarded(g, [&] {
      SweepConfig cfg;
      if (!s.config.empty()) cfg = parse_config_file(s.config);
      if (!s.body.empty()) cfg.body_spec = s.body;
      if (!s.ensemble.empty()) cfg.ensemble_spec = s.ensemble;
      if (!s.n_list.empty()) cfg.n_list = s.n_list;
      if (!s.k_list.empty()) cfg.k_list = s.k_list;
      if (s.trials) cfg.trials = s.trials;
      if (s.width_samples) cfg.width_samples = s.width_samples;
      if (s.dirs) cfg.dirs = s.dirs;
      if (s.C) cfg.constant_C = s.C;
      if (!s.output.empty()) cfg.output_path = s.output;
      if (!s.variant.empty()) cfg.variant = parse_variant(s.variant);
      if (!s.method.empty()) cfg.method = parse_method(s.method);
      if (s.timing) cfg.record_timing = true;
      if (app.get_option("--seed")->count() > 0) cfg.master_seed = g.seed;

      const SweepResult res = run_sweep(cfg);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
      if (cfg.output_path.empty()) {
        write_records_csv(std::cout, res.records);
      } else {
        std::ofstream out(cfg.output_path, std::ios::binary);
        if (!out) throw InputError("cannot write " + cfg.output_path);
        write_records_csv(out, res.records);
      }
      const bool any_error = std::any_of(res.records.begin(), res.records.end(),
                                         [](const TrialRecord& r) { return r.is_error(); });
      return any_error ? static_cast<int>(ExitCode::kBudgetError) : 0;
    });
  });

  // verify -----------------------------------------------------------------
  struct {
    std::string input;
    std::string output;
    double floor = 0.75;
  } v;
  auto* verify = app.add_subcommand("verify", "per-cell check diam <= bound with probability >= floor");
  verify->add_option("input", v.input, "sweep CSV")->required()->check(CLI::ExistingFile);
  verify->add_option("--floor", v.floor)->check(CLI::Range(0.0, 1.0));
  verify->add_option("--output", v.output);
  verify->callback([&] {
    status = guarded(g, [&] {
      const VerifyReport rep = verify_theorem(read_records_csv(v.input), v.floor);
      if (v.output.empty()) {
        write_verify_csv(std::cout, rep);
      } else {
        std::ofstream out(v.output, std::ios::binary);
        if (!out) throw InputError("cannot write " + v.output);
        write_verify_csv(out, rep);
      }
      return rep.passed ? 0 : static_cast<int>(ExitCode::kVerificationFailure);
    });
  });

  // proofkit ---------------------------------------------------------------
  auto* proofkit = app.add_subcommand("proofkit", "checks of the probabilistic lemmas");
  proofkit->require_subcommand(1);
  struct {
    double eps = 0.01;
    std::size_t k = 600;
    std::size_t trials = 10000;
    std::size_t count = 1;
    std::optional<double> lambda;
    std::string ensemble = "gaussian";
  } l;
  auto add_sim_options = [&](CLI::App* cmd) {
    cmd->add_option("--eps", l.eps);
    cmd->add_option("--k", l.k);
    cmd->add_option("--trials", l.trials);
    cmd->add_option("--lambda", l.lambda, "small-ball level (default: estimated at 1 - eps)");
    cmd->add_option("--ensemble", l.ensemble);
  };
  auto* lemma = proofkit->add_subcommand("lemma", "Pr(more than 6 eps k small coordinates)");
  add_sim_options(lemma);
  lemma->callback([&] {
    status = guarded(g, [&] {
      const Ensemble ens = parse_ensemble(l.ensemble, 1);
      const RngStream rng{g.seed, 0};
      const double lambda = l.lambda ? *l.lambda : scalar_lambda(ens, l.eps, rng.child(1));
      print_simulation(lemma_smallball_sim(ens, lambda, l.eps, l.k, l.trials, rng));
      return 0;
    });
  });
  auto* corollary = proofkit->add_subcommand("corollary", "union over N vectors");
  add_sim_options(corollary);
  corollary->add_option("--N", l.count);
  corollary->callback([&] {
    status = guarded(g, [&] {
      const Ensemble ens = parse_ensemble(l.ensemble, 1);
      const RngStream rng{g.seed, 0};
      const double lambda = l.lambda ? *l.lambda : scalar_lambda(ens, l.eps, rng.child(1));
      print_simulation(corollary_sim(ens, l.count, lambda, l.eps, l.k, l.trials, rng));
      return 0;
    });
  });

  struct {
    std::string body = "l1";
    std::size_t n = 0;
    double r = 0.5;
    double rho = 0.1;
    std::size_t budget = 2000;
    std::string points;
    std::size_t k = 64;
    std::string ensemble = "gaussian";
    std::size_t probes = 50;
    std::size_t draws = 200;
    std::size_t width_samples = 2000;
  } nt;
  auto add_net_options = [&](CLI::App* cmd) {
    cmd->add_option("--body", nt.body)->required();
    cmd->add_option("--n", nt.n)->required();
    cmd->add_option("--r", nt.r);
    cmd->add_option("--rho", nt.rho);
    cmd->add_option("--budget", nt.budget, "consecutive rejections before stopping");
  };
  auto* net = proofkit->add_subcommand("net", "greedy rho-separated subset of T cap rS^{n-1}");
  add_net_options(net);
  net->add_option("--points", nt.points, "write net points to this CSV");
  net->callback([&] {
    status = guarded(g, [&] {
      const ConvexBody body = parse_body(nt.body, nt.n);
      const NetResult res = separated_net(body, nt.r, nt.rho, nt.budget, RngStream{g.seed, 0});
      std::cout << "cardinality,rho,r,budget_exhausted,starved,candidates\n"
                << res.cardinality << ',' << format_real(res.rho) << ',' << format_real(res.r)
                << ',' << bool_str(res.budget_exhausted) << ',' << bool_str(res.starved) << ','
                << res.candidates << '\n';
      if (!nt.points.empty()) {
        std::ofstream out(nt.points, std::ios::binary);
        if (!out) throw InputError("cannot write " + nt.points);
        for (const auto& p : res.points) {
          for (Eigen::Index i = 0; i < p.size(); ++i) out << (i ? "," : "") << format_real(p[i]);
          out << '\n';
        }
      }
      return 0;
    });
  });
  auto* osc = proofkit->add_subcommand("oscillation", "sampled oscillation of x - pi(x)");
  add_net_options(osc);
  osc->add_option("--k", nt.k);
  osc->add_option("--ensemble", nt.ensemble);
  osc->add_option("--probes", nt.probes);
  osc->add_option("--draws", nt.draws);
  osc->add_option("--width-samples", nt.width_samples);
  osc->callback([&] {
    status = guarded(g, [&] {
      const ConvexBody body = parse_body(nt.body, nt.n);
      const RngStream rng{g.seed, 0};
      const NetResult res = separated_net(body, nt.r, nt.rho, nt.budget, rng.child(1));
      OscillationOptions opt;
      opt.draws = nt.draws;
      opt.width_samples = nt.width_samples;
      const auto o = empirical_oscillation(body, res, parse_ensemble(nt.ensemble, nt.n), nt.k,
                                           nt.probes, rng.child(2), opt);
      std::cout << "net_size,A_hat,rhs,rearrangement_ok,fraction_below_rhs,max_probe_gap\n"
                << res.cardinality << ',' << format_real(o.A_hat) << ',' << format_real(o.rhs)
                << ',' << bool_str(o.rearrangement_ok) << ',' << format_real(o.fraction_below_rhs())
                << ',' << format_real(o.max_probe_gap) << '\n';
      return 0;
    });
  });

  // fixed-point ------------------------------------------------------------
  auto* fixed = app.add_subcommand("fixed-point", "localized fixed points r_k and rho_k");
  fixed->require_subcommand(1);
  struct {
    std::string body = "l1";
    std::size_t n = 0;
    std::size_t k = 1;
    std::size_t samples = 2000;
    double q = 1.0;
    double lo = 1e-3;
    std::optional<double> hi;
    std::string ensemble = "gaussian";
    double delta = 0.25;
  } f;
  auto add_fp_options = [&](CLI::App* cmd, const char* qname) {
    cmd->add_option("--body", f.body)->required();
    cmd->add_option("--n", f.n)->required();
    cmd->add_option("--k", f.k)->required();
    cmd->add_option("--samples", f.samples);
    cmd->add_option(qname, f.q);
    cmd->add_option("--lo", f.lo);
    cmd->add_option("--hi", f.hi, "upper bracket (default: circumradius)");
  };
  auto* fpr = fixed->add_subcommand("r", "r_k(Q2) with Gaussian localized width");
  add_fp_options(fpr, "--Q2");
  fpr->callback([&] {
    status = guarded(g, [&] {
      const ConvexBody body = parse_body(f.body, f.n);
      const double hi = f.hi ? *f.hi : euclidean_radius(body);
      print_fixed_point(fixed_point_r(body, f.k, f.q, f.samples, f.lo, hi, RngStream{g.seed, 0}));
      return 0;
    });
  });
  auto* fprho = fixed->add_subcommand("rho", "rho_k(delta, Q1) with row-sum localized width");
  add_fp_options(fprho, "--Q1");
  fprho->add_option("--ensemble", f.ensemble);
  fprho->add_option("--delta", f.delta);
  fprho->callback([&] {
    status = guarded(g, [&] {
      const ConvexBody body = parse_body(f.body, f.n);
      const double hi = f.hi ? *f.hi : euclidean_radius(body);
      print_fixed_point(fixed_point_rho(body, parse_ensemble(f.ensemble, body.dim()), f.k, f.delta,
                                        f.q, f.samples, f.lo, hi, RngStream{g.seed, 0}));
      return 0;
    });
  });


  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ExitCode::kInputError);
  }
  return status;
}
