#include "stinla/config.hpp"
#include "stinla/validate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <limits>
#include <string>
#include <vector>

using namespace stinla;

namespace {

constexpr double kNoLimit = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Outcome summarize(const std::vector<check::PropertyResult>& rs, double seconds, double limit) {
  Outcome o;
  o.pass = seconds < limit;
  for (const auto& r : rs) {
    o.pass = o.pass && r.pass;
    o.detail += r.name + " " + (r.pass ? "ok" : "FAILED") + " worst=" + fmt("%.2e", r.worst) + "; ";
  }
  o.detail += "time " + fmt("%.2f", seconds) + "s";
  if (std::isfinite(limit)) o.detail += " (limit " + fmt("%.0f", limit) + "s)";
  return o;
}

Outcome criterion_1() {
  std::mt19937_64 rng(101);
  std::vector<check::BtaShape> shapes;
  for (Index n = 1; n <= 8; ++n)
    for (Index b = 1; b <= 6; ++b)
      for (Index a = 0; a <= 4; ++a) shapes.push_back({n, b, a});
  const auto t0 = std::chrono::steady_clock::now();
  const auto rs = check::bta_oracle(shapes, rng);
  Outcome o = summarize(rs, since(t0), 30.0);
  o.pass = o.pass && shapes.size() >= 200;
  o.detail = std::to_string(shapes.size()) + " instances; " + o.detail;
  return o;
}

Outcome criterion_2() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<Index> pb(1, 5), pa(0, 3);
  std::vector<check::DistCase> cases;
  for (Index p = 1; p <= 4; ++p)
    for (double lb : {1.0, 1.6})
      for (Index n = 2 * p; n <= 24; ++n) cases.push_back({p, lb, n, pb(rng), pa(rng)});
  const auto t0 = std::chrono::steady_clock::now();
  const auto rs = check::dist_equivalence(cases, rng, 2);
  Outcome o = summarize(rs, since(t0), 60.0);
  o.detail = std::to_string(cases.size()) + " cases; " + o.detail;
  return o;
}

Outcome criterion_3() {
  std::mt19937_64 rng(303);
  const auto t0 = std::chrono::steady_clock::now();
  return summarize(check::coreg_duality(50, rng), since(t0), kNoLimit);
}

Outcome criterion_4() {
  std::mt19937_64 rng(404);
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = summarize({check::permutation_similarity(100, rng)}, since(t0), kNoLimit);
  const Index ap = joint_dimension(3, 4210, 48, 2), mb = joint_dimension(1, 4002, 250, 6);
  const PermutationMap pa = build_permutation(3, 4210, 48, 2), pm = build_permutation(1, 4002, 250, 6);
  const bool rows = ap == 606246 && mb == 1000506 && pa.size() == 606246 && pm.size() == 1000506 &&
                    pa.n() * pa.b() + pa.a() == ap && pm.n() * pm.b() + pm.a() == mb;
  o.pass = o.pass && rows;
  o.detail += "; dimension rows " + std::to_string(ap) + ", " + std::to_string(mb) + (rows ? " ok" : " WRONG");
  return o;
}

Outcome criterion_5() {
  std::mt19937_64 rng(505);
  const auto t0 = std::chrono::steady_clock::now();
  auto rs = check::objective_oracle(20, rng);
  std::erase_if(rs, [](const check::PropertyResult& r) { return r.name == "latent_sd_dense"; });
  Outcome o = summarize(rs, since(t0), kNoLimit);
  for (const auto& r : rs)
    if (r.name == "gradient_second_order") o.detail += "; " + r.detail;
  return o;
}

Outcome criterion_6() {
  std::mt19937_64 rng(606);
  const ModelSpec spec = oracle::random_model(3, 3, 4, 1, 20, rng);
  const Vector theta = oracle::random_theta(3, rng);
  const Model model(spec, ThetaPrior::weak(theta));
  const ScalarFunction f = [&model](const Vector& t) { return model.objective(t); };

  std::vector<std::function<double()>> tasks;
  for (int k = 0; k < 31; ++k)
    tasks.emplace_back([&, k] {
      Vector t = theta;
      t[k % 15] += 1e-2 * (k + 1);
      return model.objective(t);
    });

  bool identical = true;
  GradientResult ref;
  std::vector<double> ref_tasks;
  for (Index w : {1, 2, 4, 8, 31}) {
    const LayerAllocation alloc = allocate(w, 15, true);
    const GradientResult g = fd_gradient(f, theta, 1e-3, alloc);
    const std::vector<double> out = run_tasks(tasks, alloc);
    if (w == 1) {
      ref = g;
      ref_tasks = out;
      continue;
    }
    identical = identical && g.f0 == ref.f0 && (g.g - ref.g).cwiseAbs().maxCoeff() == 0.0 && out == ref_tasks;
  }

  Index calls = 0;
  const ScalarFunction counting = [&calls](const Vector& t) {
    ++calls;
    return t.sum();
  };
  fd_gradient(counting, Vector::Zero(15), 1e-3, allocate(1, 15, true));
  const Index c15 = calls;
  calls = 0;
  fd_gradient(counting, Vector::Zero(4), 1e-3, allocate(1, 4, true));
  const Index c4 = calls;
  const bool counts = c15 == 31 && c4 == 9 && gradient_task_count(15) == 31 && gradient_task_count(4) == 9 &&
                      allocate(31, 15, true).g1 == 31 && allocate(9, 4, true).g1 == 9;

  Outcome o;
  o.pass = identical && counts;
  o.detail = std::string("W in {1,2,4,8,31} ") + (identical ? "bit-identical" : "DIFFER") + "; task counts " +
             std::to_string(c15) + " (dim 15), " + std::to_string(c4) + " (dim 4)";
  return o;
}

struct FitRun {
  PosteriorSummary summary;
  double seconds = 0.0;
  LoadedModel data;
};

FitRun run_fit(const std::string& config) {
  RunConfig cfg = load_config(config);
  cfg.workers = 1;
  cfg.partitions = 1;
  FitRun r;
  r.data = load_model(cfg);
  const LayerAllocation alloc = run_allocation(cfg);
  const Model model(r.data.spec, r.data.prior, run_layout(cfg, alloc));
  const auto t0 = std::chrono::steady_clock::now();
  r.summary = fit(model, r.data.theta_initial, cfg.optimizer, alloc);
  r.seconds = since(t0);
  return r;
}

Outcome criterion_7() {
  const std::string dir = STINLA_CONFIG_DIR;
  Outcome o;

  const FitRun u = run_fit(dir + "/synthetic_univariate.toml");
  const PosteriorSummary& s = u.summary;
  const oracle::DenseObjective d = oracle::dense_objective(u.data.spec, s.theta_mode.values, u.data.prior);
  const double sd_err = ((s.latent_sd - d.sd).array() / d.sd.array()).abs().maxCoeff();
  const bool sd_pos = s.latent_sd.minCoeff() > 0.0;
  const bool uni = s.status == OptimizerStatus::Converged && s.grad_inf <= 1e-3 && s.iterations <= 100 &&
                   u.seconds < 120.0 && sd_pos && sd_err <= check::kLatentSdTol;
  o.detail = "univariate " + to_string(s.status) + " iterations=" + std::to_string(s.iterations) +
             " grad_inf=" + fmt("%.2e", s.grad_inf) + " time=" + fmt("%.2f", u.seconds) + "s" +
             " sd_min=" + fmt("%.3g", s.latent_sd.minCoeff()) + " sd_vs_dense=" + fmt("%.2e", sd_err);

  const FitRun t = run_fit(dir + "/trivariate.toml");
  const PosteriorSummary& st = t.summary;
  const bool tri = st.status == OptimizerStatus::Converged && st.grad_inf <= 1e-3 && t.seconds < 600.0 &&
                   st.latent_sd.size() == joint_dimension(t.data.spec) && st.latent_sd.minCoeff() > 0.0;
  o.detail += "; trivariate " + to_string(st.status) + " iterations=" + std::to_string(st.iterations) +
              " grad_inf=" + fmt("%.2e", st.grad_inf) + " time=" + fmt("%.2f", t.seconds) + "s";
  o.pass = uni && tri;
  return o;
}

Outcome criterion_8() {
  std::mt19937_64 rng(808);
  const Index b = 4, a = 4;
  const double model = 1.0 + load_balance_ratio(b, a);
  Outcome o;
  o.pass = true;
  for (Index n : {32, 64, 128, 256}) {
    const BTAMatrix qp = oracle::random_spd_bta(n, b, a, rng, true);
    const BTAMatrix qc = oracle::random_spd_bta(n, b, a, rng);
    const double ratio = factorize(qc).flops.total() / factorize(qp).flops.total();
    const double rel = std::abs(ratio - model) / model;
    o.pass = o.pass && rel <= 0.10;
    o.detail += "n=" + std::to_string(n) + " ratio=" + fmt("%.4f", ratio) + " (dev " + fmt("%.1f", 100.0 * rel) +
                "%); ";
  }
  o.detail += "model 1 + a^3/b^3 = " + fmt("%.4f", model) + ", tolerance 10%";
  return o;
}

const std::vector<std::pair<const char*, Outcome (*)()>> kCriteria{
    {"BTA solver oracle suite", criterion_1},
    {"distributed equivalence", criterion_2},
    {"covariance duality and three-process blocks", criterion_3},
    {"permutation correctness", criterion_4},
    {"objective and gradient correctness", criterion_5},
    {"scheduler determinism and task counts", criterion_6},
    {"end-to-end synthetic fit", criterion_7},
    {"work-model operation counts", criterion_8},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  if (only < 0 || only > int(kCriteria.size())) {
    std::fprintf(stderr, "usage: acceptance [--criterion 1..%zu]\n", kCriteria.size());
    return 2;
  }
  bool all = true;
  for (std::size_t k = 0; k < kCriteria.size(); ++k) {
    if (only && int(k + 1) != only) continue;
    Outcome o;
    try {
      o = kCriteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %zu %s: %s: %s\n", k + 1, o.pass ? "PASS" : "FAIL", kCriteria[k].first, o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
