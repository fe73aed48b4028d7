#include "stinla/synth.hpp"

#include "stinla/coreg.hpp"
#include "stinla/inla.hpp"

#include <cmath>

namespace stinla {

void SynthSettings::validate() const {
  if (n_v < 1 || n_s < 1 || n_t < 1 || n_r < 0 || m < 1) throw DimensionError("synthetic model dimensions must be positive");
  if (!(length > 0.0) || !(dt > 0.0)) throw std::invalid_argument("mesh length and time step must be positive");
  if (!gamma_e.empty() && Index(gamma_e.size()) != n_v) throw DimensionError("gamma_e needs one entry per process");
}

SparseMatrix interpolation_design(Index n_s, Index n_t, Index n_r, Index m, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> pick_t(0, n_t - 1);
  std::uniform_real_distribution<double> pick_u(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Triplet> trip;
  trip.reserve(std::size_t(m * (2 + n_r)));
  for (Index r = 0; r < m; ++r) {
    const Index t = pick_t(rng);
    const double u = pick_u(rng) * double(n_s - 1);
    const Index s0 = std::min<Index>(Index(std::floor(u)), std::max<Index>(n_s - 2, 0));
    const double w = n_s == 1 ? 0.0 : u - double(s0);
    trip.emplace_back(int(r), int(t * n_s + s0), 1.0 - w);
    if (n_s > 1) trip.emplace_back(int(r), int(t * n_s + s0 + 1), w);
    for (Index j = 0; j < n_r; ++j) trip.emplace_back(int(r), int(n_s * n_t + j), j == 0 ? 1.0 : normal(rng));
  }
  SparseMatrix a(m, n_s * n_t + n_r);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

Vector sample_gmrf(const BTAMatrix& q, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(q.size());
  for (Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return solve_lower_transpose(factorize(q), z);
}

SyntheticData generate_synthetic(const SynthSettings& s, const Vector& theta_true, std::uint64_t seed) {
  s.validate();
  std::mt19937_64 rng(seed);
  SyntheticData out;
  ModelSpec& spec = out.spec;
  spec.n_v = s.n_v;
  spec.n_s = s.n_s;
  spec.n_t = s.n_t;
  spec.n_r = s.n_r;
  spec.fixed_effect_precision = s.fixed_effect_precision;
  spec.gamma_e = s.gamma_e;
  for (Index i = 0; i < s.n_v; ++i) {
    spec.spatial.push_back(path_graph_spatial(s.n_s, s.length));
    spec.temporal.push_back(uniform_temporal(s.n_t, s.dt));
    spec.design.push_back(interpolation_design(s.n_s, s.n_t, s.n_r, s.m, rng));
    spec.observations.push_back(Vector::Zero(s.m));
  }
  spec.validate();

  const HyperParams hp{s.n_v, theta_true};
  hp.validate();
  const SparseMatrix qp = joint_prior_precision(spec, theta_true);
  PermutationMap map = build_permutation(s.n_v, s.n_s, s.n_t, s.n_r);
  bind_pattern(map, qp);
  out.x_true = from_bta_order(sample_gmrf(map_to_bta(qp, map), rng), map);

  std::normal_distribution<double> normal(0.0, 1.0);
  const Index lat = spec.latent_size();
  for (Index i = 0; i < s.n_v; ++i) {
    const double noise_sd = 1.0 / std::sqrt(std::exp(hp.log_tau(i)));
    Vector y = spec.design[std::size_t(i)] * out.x_true.segment(i * lat, lat);
    for (Index r = 0; r < y.size(); ++r) y[r] += noise_sd * normal(rng);
    spec.observations[std::size_t(i)] = std::move(y);
  }
  return out;
}

}  // namespace stinla
