#include "stinla/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace stinla {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

std::vector<double> as_list(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_latent_csv(const std::string& path, const ModelSpec& spec, const Vector& mean, const Vector& sd) {
  const Index lat = spec.latent_size();
  if (mean.size() != spec.n_v * lat || sd.size() != mean.size()) throw DimensionError("latent output size mismatch");
  auto out = open_out(path);
  out << "index,process,time,space,mean,sd\n";
  for (Index i = 0; i < mean.size(); ++i) {
    const Index v = i / lat;
    const Index r = i % lat;
    const bool st = r < spec.n_s * spec.n_t;
    const Index t = st ? r / spec.n_s : -1;
    const Index s = st ? r % spec.n_s : r - spec.n_s * spec.n_t;
    out << i << ',' << v << ',' << t << ',' << s << ',' << format_real(mean[i]) << ',' << format_real(sd[i]) << '\n';
  }
}

Vector read_latent_mean(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,process,time,space,mean", 0) != 0)
    throw IoError(path + ": not a latent CSV");
  std::vector<double> mean;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 5) throw IoError(path + ": malformed row '" + line + "'");
    if (std::stoll(cells[0]) != static_cast<long long>(mean.size())) throw IoError(path + ": rows out of order");
    mean.push_back(std::stod(cells[4]));
  }
  return Eigen::Map<const Vector>(mean.data(), Index(mean.size()));
}

void write_prediction_csv(const std::string& path, const Vector& pred) {
  auto out = open_out(path);
  out << "row,mean\n";
  for (Index i = 0; i < pred.size(); ++i) out << i << ',' << format_real(pred[i]) << '\n';
}

void write_fit_outputs(const std::string& dir, const RunConfig& cfg, const Model& model,
                       const PosteriorSummary& summary, double seconds) {
  std::filesystem::create_directories(dir);
  const ModelSpec& spec = model.spec();
  const bool converged =
      summary.status == OptimizerStatus::Converged || summary.status == OptimizerStatus::FunctionTolerance;

  nlohmann::ordered_json j;
  j["status"] = to_string(summary.status);
  j["converged"] = converged;
  j["partial"] = !converged;
  j["iterations"] = summary.iterations;
  j["f_evals"] = summary.f_evals;
  j["grad_inf"] = summary.grad_inf;
  j["gtol"] = cfg.optimizer.gtol;
  j["log_posterior_at_mode"] = summary.logpost_at_mode;
  j["seed"] = cfg.seed;
  j["model"] = {{"n_v", spec.n_v},
                {"n_s", spec.n_s},
                {"n_t", spec.n_t},
                {"n_r", spec.n_r},
                {"observations", spec.observation_count()},
                {"latent_dimension", joint_dimension(spec)},
                {"bta", {{"n", spec.n_t}, {"b", spec.n_v * spec.n_s}, {"a", spec.n_v * spec.n_r}}}};
  if (spec.n_v > 1) {
    std::vector<double> ge;
    for (Index i = 0; i < spec.n_v; ++i) ge.push_back(spec.process_gamma_e(i));
    j["model"]["gamma_e"] = ge;
  }
  const PartitionPlan plan = model.plan();
  j["solver"] = {{"partitions", plan.partitions}, {"lb", plan.lb}, {"sizes", plan.sizes()},
                 {"fell_back_to_even", plan.fell_back_to_even}};
  const auto names = summary.theta_mode.names();
  nlohmann::ordered_json theta = nlohmann::ordered_json::array();
  for (Index i = 0; i < summary.theta_mode.dim(); ++i) {
    nlohmann::ordered_json t;
    t["name"] = names[std::size_t(i)];
    t["mode"] = summary.theta_mode.values[i];
    if (std::isfinite(summary.theta_sd[i]))
      t["sd"] = summary.theta_sd[i];
    else
      t["sd"] = nullptr;
    if (cfg.theta_true.size() == summary.theta_mode.dim()) t["true"] = cfg.theta_true[i];
    theta.push_back(t);
  }
  j["theta"] = theta;
  j["hessian_positive_definite"] = summary.hessian_pd;
  nlohmann::ordered_json h = nlohmann::ordered_json::array();
  for (Index r = 0; r < summary.hessian.rows(); ++r) h.push_back(as_list(summary.hessian.row(r).transpose()));
  j["hessian"] = h;
  {
    auto out = open_out(dir + "/summary.json");
    out << j.dump(2) << '\n';
  }

  write_latent_csv(dir + "/latent.csv", spec, summary.latent_mean, summary.latent_sd);

  {
    auto out = open_out(dir + "/trace.csv");
    out << "iteration,f,grad_inf,step,f_evals\n";
    for (const auto& r : summary.trace)
      out << r.iteration << ',' << format_real(r.f) << ',' << format_real(r.grad_inf) << ',' << format_real(r.step)
          << ',' << r.f_evals << '\n';
  }
  {
    auto out = open_out(dir + "/timings.csv");
    out << "iteration,seconds\n";
    for (const auto& r : summary.trace) out << r.iteration << ',' << r.seconds << '\n';
    out << "total," << seconds << '\n';
  }
}

void write_benchmark_csv(const std::string& path, const std::vector<BenchmarkRow>& rows) {
  auto out = open_out(path);
  out << "routine,P,lb,n,b,a,phase,seconds,flop_count\n";
  for (const auto& r : rows)
    out << r.routine << ',' << r.partitions << ',' << r.lb << ',' << r.n << ',' << r.b << ',' << r.a << ',' << r.phase
        << ',' << r.seconds << ',' << format_real(r.flops) << '\n';
}

}  // namespace stinla
