#include "stinla/config.hpp"
#include "stinla/oracle.hpp"
#include "stinla/report.hpp"
#include "stinla/validate.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace stinla;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfigError = 2, kNotConverged = 3, kValidationFailed = 4 };

struct Common {
  std::string config;
  ConfigOverrides overrides;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "run configuration file");
  if (config_required) opt->required();
  sub->add_option("--seed", c.overrides.seed, "RNG seed (overrides run.seed)");
  sub->add_option("--workers", c.overrides.workers, "worker threads W (overrides parallel.workers)");
  sub->add_option("--partitions", c.overrides.partitions, "solver partitions P (overrides parallel.partitions)");
  sub->add_option("--lb", c.overrides.lb, "load-balance factor (overrides parallel.lb)");
  sub->add_option("--out-dir", c.overrides.out_dir, "output directory (overrides output.dir)");
}

RunConfig resolve_config(const Common& c, bool needs_model = true) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  apply_overrides(cfg, c.overrides);
  if (needs_model || !c.config.empty()) cfg.validate();
  return cfg;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_fit(const Common& c) {
  const RunConfig cfg = resolve_config(c);
  const LoadedModel lm = load_model(cfg);
  const LayerAllocation alloc = run_allocation(cfg);
  const Model model(lm.spec, lm.prior, run_layout(cfg, alloc));

  const auto t0 = std::chrono::steady_clock::now();
  const PosteriorSummary s = fit(model, lm.theta_initial, cfg.optimizer, alloc);
  const double seconds = since(t0);
  write_fit_outputs(cfg.out_dir, cfg, model, s, seconds);

  const bool converged = s.status == OptimizerStatus::Converged || s.status == OptimizerStatus::FunctionTolerance;
  std::printf("fit %s: iterations=%lld f_evals=%lld grad_inf=%.3g log_posterior=%.10g hessian_pd=%s time=%.2fs\n",
              to_string(s.status).c_str(), static_cast<long long>(s.iterations), static_cast<long long>(s.f_evals),
              s.grad_inf, s.logpost_at_mode, s.hessian_pd ? "yes" : "no", seconds);
  std::printf("outputs written to %s%s\n", cfg.out_dir.c_str(), converged ? "" : " (partial: not converged)");
  return converged ? kOk : kNotConverged;
}

int cmd_predict(const Common& c, const std::string& a_pred_path, std::string latent_path, std::string output) {
  const RunConfig cfg = resolve_config(c, false);
  if (latent_path.empty()) latent_path = cfg.out_dir + "/latent.csv";
  if (output.empty()) output = cfg.out_dir + "/predictions.csv";
  if (!std::filesystem::exists(latent_path)) throw ConfigError("fitted latent field not found: " + latent_path);
  if (!std::filesystem::exists(a_pred_path)) throw ConfigError("prediction matrix not found: " + a_pred_path);
  const Vector mu = read_latent_mean(latent_path);
  const SparseMatrix a = read_matrix_market(a_pred_path);
  const Vector pred = predict(a, mu);
  if (auto parent = std::filesystem::path(output).parent_path(); !parent.empty())
    std::filesystem::create_directories(parent);
  write_prediction_csv(output, pred);
  std::printf("predicted %lld rows into %s\n", static_cast<long long>(pred.size()), output.c_str());
  return kOk;
}

void bench_matrix(const BTAMatrix& m, const RunConfig& cfg, std::vector<BenchmarkRow>& rows) {
  const auto row = [&](std::string routine, Index p, double lb, std::string phase, double sec, double flops) {
    rows.push_back({std::move(routine), p, lb, m.n(), m.b(), m.a(), std::move(phase), sec, flops});
  };
  const Vector rhs = Vector::Ones(m.size());
  for (Index r = 0; r < cfg.bench_repeats; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    const BTAFactor f = factorize(m);
    row("factorize", 1, 1.0, "sequential", since(t0), f.flops.total());
    FlopCounter fi;
    t0 = std::chrono::steady_clock::now();
    solve(f, rhs);
    row("solve", 1, 1.0, "sequential", since(t0), 0.0);
    t0 = std::chrono::steady_clock::now();
    selected_invert(f, &fi);
    row("selected_invert", 1, 1.0, "sequential", since(t0), fi.total());
  }
  for (Index p : cfg.bench_partitions)
    for (double lb : cfg.bench_lb) {
      if (p == 1 && lb != cfg.bench_lb.front()) continue;
      if (p > 1 && m.n() < 2 * p) continue;
      const double use_lb = p == 1 ? 1.0 : lb;
      const PartitionPlan plan = plan_partitions(m.n(), p, use_lb);
      for (Index r = 0; r < cfg.bench_repeats; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        const DistBTAFactor d = d_factorize(m, plan, std::min(p, cfg.workers));
        const double total = since(t0);
        row("d_factorize", p, use_lb, "total", total, d.total_flops().total());
        if (!d.sequential) {
          row("d_factorize", p, use_lb, "local", d.local_seconds, d.total_flops().total() - d.reduced_flops.total());
          row("d_factorize", p, use_lb, "reduced", d.reduced_seconds, d.reduced_flops.total());
          for (std::size_t k = 0; k < d.parts.size(); ++k)
            row("d_factorize", p, use_lb, "partition_" + std::to_string(k), d.parts[k].seconds,
                d.parts[k].flops.total());
        }
        FlopCounter fs, fi;
        t0 = std::chrono::steady_clock::now();
        d_solve(d, rhs, &fs);
        row("d_solve", p, use_lb, "total", since(t0), fs.total());
        t0 = std::chrono::steady_clock::now();
        d_selected_invert(d, &fi);
        row("d_selected_invert", p, use_lb, "total", since(t0), fi.total());
      }
    }
}

int cmd_benchmark(const Common& c) {
  const RunConfig cfg = resolve_config(c);
  std::filesystem::create_directories(cfg.out_dir);
  std::mt19937_64 rng(cfg.seed);
  std::vector<BenchmarkRow> rows;

  const BTAMatrix full = oracle::random_spd_bta(cfg.bench_n, cfg.bench_b, cfg.bench_a, rng);
  bench_matrix(full, cfg, rows);

  const BTAMatrix prior_like = oracle::random_spd_bta(cfg.bench_n, cfg.bench_b, cfg.bench_a, rng, true);
  const double qp = factorize(prior_like).flops.total();
  const double qc = factorize(full).flops.total();
  rows.push_back({"work_model_qp", 1, 1.0, cfg.bench_n, cfg.bench_b, cfg.bench_a, "factorize", 0.0, qp});
  rows.push_back({"work_model_qc", 1, 1.0, cfg.bench_n, cfg.bench_b, cfg.bench_a, "factorize", 0.0, qc});

  const LoadedModel lm = load_model(cfg);
  const LayerAllocation alloc = run_allocation(cfg);
  const Model model(lm.spec, lm.prior, run_layout(cfg, alloc));
  const ScalarFunction f = [&model](const Vector& t) { return model.objective(t); };
  std::vector<TaskTrace> trace;
  const auto t0 = std::chrono::steady_clock::now();
  fd_gradient(f, lm.theta_initial, cfg.optimizer.h, alloc, &trace);
  const double grad_seconds = since(t0);
  const ModelSpec& s = model.spec();
  rows.push_back({"fd_gradient", cfg.partitions, cfg.lb, s.n_t, s.n_v * s.n_s, s.n_v * s.n_r, "total", grad_seconds,
                  0.0});

  write_benchmark_csv(cfg.out_dir + "/benchmark.csv", rows);
  write_trace_csv(cfg.out_dir + "/task_trace.csv", trace);
  const double a3 = double(cfg.bench_a * cfg.bench_a * cfg.bench_a), b3 = double(cfg.bench_b * cfg.bench_b * cfg.bench_b);
  std::printf("benchmark: %zu rows, work ratio Q_c/Q_p = %.4f (model 1 + a^3/b^3 = %.4f), allocation g1=%lld g2=%lld "
              "g3=%lld\n",
              rows.size(), qc / qp, 1.0 + a3 / b3, static_cast<long long>(alloc.g1), static_cast<long long>(alloc.g2),
              static_cast<long long>(alloc.g3));
  std::printf("outputs written to %s\n", cfg.out_dir.c_str());
  return kOk;
}

int cmd_validate(const Common& c, Index instances, bool corrupt) {
  const RunConfig cfg = resolve_config(c, false);
  check::SuiteOptions opts;
  opts.seed = cfg.seed;
  opts.instances = instances > 0 ? instances : cfg.validate_instances;
  opts.corrupt_permutation = corrupt;
  bool all = true;
  for (const auto& r : check::run_suite(opts)) {
    std::printf("%s\n", check::describe(r).c_str());
    all = all && r.pass;
  }
  std::printf("%s (seed %llu)\n", all ? "all properties passed" : "validation failed",
              static_cast<unsigned long long>(opts.seed));
  return all ? kOk : kValidationFailed;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

std::string join(const Vector& v) {
  std::string s;
  for (Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_real(v[i]);
  return s;
}

int cmd_synth(const Common& c) {
  const RunConfig cfg = resolve_config(c);
  if (!cfg.synthetic) throw ConfigError("synth needs model.synthetic = true");
  const LoadedModel lm = load_model(cfg);
  const ModelSpec& s = lm.spec;
  const std::string dir = cfg.out_dir;
  std::filesystem::create_directories(dir);

  write_matrix_market(dir + "/c.mtx", s.spatial[0].c);
  write_matrix_market(dir + "/g.mtx", s.spatial[0].g);
  write_matrix_market(dir + "/m0.mtx", s.temporal[0].m0);
  write_matrix_market(dir + "/m1.mtx", s.temporal[0].m1);
  write_matrix_market(dir + "/m2.mtx", s.temporal[0].m2);
  std::vector<std::string> designs, obs;
  for (Index i = 0; i < s.n_v; ++i) {
    designs.push_back("design_" + std::to_string(i) + ".mtx");
    obs.push_back("y_" + std::to_string(i) + ".csv");
    write_matrix_market(dir + "/" + designs.back(), s.design[std::size_t(i)]);
    write_vector_csv(dir + "/" + obs.back(), s.observations[std::size_t(i)], "y");
  }
  write_vector_csv(dir + "/x_true.csv", lm.x_true, "x");

  std::ofstream out(dir + "/model.ini");
  if (!out) throw IoError("cannot write " + dir + "/model.ini");
  out << "[model]\n"
      << "n_v = " << s.n_v << "\nn_s = " << s.n_s << "\nn_t = " << s.n_t << "\nn_r = " << s.n_r << '\n'
      << "fixed_effect_precision = " << format_real(s.fixed_effect_precision) << '\n'
      << "synthetic = false\n"
      << "c = c.mtx\ng = g.mtx\nm0 = m0.mtx\nm1 = m1.mtx\nm2 = m2.mtx\n"
      << "design = " << join(designs) << "\nobservations = " << join(obs) << '\n';
  if (s.n_v > 1) {
    Vector ge(s.n_v);
    for (Index i = 0; i < s.n_v; ++i) ge[i] = s.process_gamma_e(i);
    out << "gamma_e = " << join(ge) << '\n';
  }
  out << "\n[theta]\ntrue = " << join(lm.theta_true) << "\ninitial = " << join(lm.theta_initial)
      << "\nprior_mean = " << join(lm.prior.mean) << "\nprior_sd = " << join(lm.prior.sd) << '\n';
  out << "\n[optimizer]\nh = " << format_real(cfg.optimizer.h) << "\nh2 = " << format_real(cfg.optimizer.h2)
      << "\ngtol = " << format_real(cfg.optimizer.gtol) << "\nftol = " << format_real(cfg.optimizer.ftol)
      << "\nmax_iter = " << cfg.optimizer.max_iter << "\nmax_step = " << format_real(cfg.optimizer.max_step) << '\n';
  out << "\n[parallel]\nworkers = " << cfg.workers << "\npartitions = " << cfg.partitions
      << "\nlb = " << format_real(cfg.lb) << '\n';
  out << "\n[output]\ndir = fit\n\n[run]\nseed = " << cfg.seed << '\n';

  std::printf("synthetic data (N = %lld, %lld observations) written to %s\n",
              static_cast<long long>(joint_dimension(s)), static_cast<long long>(s.observation_count()), dir.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stinla: Bayesian inference for spatio-temporal Gaussian models with structured solvers"};
  app.require_subcommand(1);

  Common fit_c, pred_c, bench_c, val_c, synth_c;
  auto* fit_cmd = app.add_subcommand("fit", "fit the model: mode, Hessian, latent marginals");
  add_common(fit_cmd, fit_c, true);

  auto* pred_cmd = app.add_subcommand("predict", "predicted means A_pred mu from a fitted latent field");
  add_common(pred_cmd, pred_c, false);
  std::string a_pred, latent, pred_out;
  pred_cmd->add_option("--a-pred", a_pred, "prediction matrix (Matrix Market)")->required();
  pred_cmd->add_option("--latent", latent, "fitted latent CSV (default <out-dir>/latent.csv)");
  pred_cmd->add_option("--output", pred_out, "prediction CSV (default <out-dir>/predictions.csv)");

  auto* bench_cmd = app.add_subcommand("benchmark", "time the sequential and partitioned solvers");
  add_common(bench_cmd, bench_c, true);

  auto* val_cmd = app.add_subcommand("validate", "run the randomized oracle suite");
  add_common(val_cmd, val_c, false);
  Index instances = 0;
  bool corrupt = false;
  val_cmd->add_option("--instances", instances, "instances per property (overrides validate.instances)");
  val_cmd->add_flag("--corrupt-permutation", corrupt, "swap two permutation entries (negative control)");

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic data set and its file-based config");
  add_common(synth_cmd, synth_c, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_c);
    if (*pred_cmd) return cmd_predict(pred_c, a_pred, latent, pred_out);
    if (*bench_cmd) return cmd_benchmark(bench_c);
    if (*val_cmd) return cmd_validate(val_c, instances, corrupt);
    if (*synth_cmd) return cmd_synth(synth_c);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const PlanningError& e) {
    std::fprintf(stderr, "planning error: %s\n", e.what());
    return kConfigError;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "dimension error: %s\n", e.what());
    return kConfigError;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
