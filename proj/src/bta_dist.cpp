#include "stinla/bta_dist.hpp"

#include "stinla/sched.hpp"

#include <chrono>
#include <cmath>

namespace stinla {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

std::vector<Index> PartitionPlan::sizes() const {
  std::vector<Index> s;
  for (Index p = 0; p < partitions; ++p) s.push_back(blocks(p));
  return s;
}

PartitionPlan plan_partitions(Index n, Index partitions, double lb) {
  if (partitions < 1) throw PlanningError("partition count must be at least one");
  if (!(lb >= 1.0) || !std::isfinite(lb)) throw PlanningError("load-balance factor must be finite and >= 1");
  if (partitions == 1 && n < 1) throw PlanningError("cannot partition an empty block chain");
  if (partitions > 1 && n < 2 * partitions)
    throw PlanningError("n = " + std::to_string(n) + " time blocks cannot be split into " +
                        std::to_string(partitions) + " partitions of at least two blocks (need n >= 2P)");
  PartitionPlan plan;
  plan.n = n;
  plan.partitions = partitions;
  plan.lb = lb;

  auto split = [&](double factor) {
    std::vector<double> w(static_cast<std::size_t>(partitions), 1.0);
    if (partitions > 1) w.front() = w.back() = factor;
    double total = 0.0;
    for (double x : w) total += x;
    std::vector<Index> size(static_cast<std::size_t>(partitions));
    Index used = 0;
    for (std::size_t p = 0; p < w.size(); ++p) {
      size[p] = Index(std::floor(double(n) * w[p] / total + 1e-9));
      used += size[p];
    }
    for (std::size_t p = 0; used < n; p = (p + 1) % w.size(), ++used) ++size[p];
    return size;
  };

  std::vector<Index> size = split(lb);
  bool feasible = true;
  for (Index s : size) feasible = feasible && (partitions == 1 || s >= 2);
  if (!feasible) {
    size = split(1.0);
    plan.fell_back_to_even = true;
  }
  plan.boundaries.assign(1, 0);
  for (Index s : size) plan.boundaries.push_back(plan.boundaries.back() + s);
  return plan;
}

FlopCounter DistBTAFactor::total_flops() const {
  if (sequential) return sequential->flops;
  FlopCounter f = reduced_flops;
  for (const auto& p : parts) f += p.flops;
  return f;
}

namespace {

PartitionFactor factor_partition(const BTAMatrix& m, const PartitionPlan& plan, Index p, bool arrow) {
  using namespace kernels;
  using Kind = PartitionFactor::Kind;
  const auto t0 = Clock::now();
  const Index P = plan.partitions, b = m.b(), a = m.a();
  PartitionFactor pf;
  pf.begin = plan.begin(p);
  pf.end = plan.end(p);
  pf.kind = p == 0 ? Kind::Top : (p == P - 1 ? Kind::Bottom : Kind::Middle);
  if (pf.kind != Kind::Top) pf.top_separator = pf.begin;
  if (pf.kind != Kind::Bottom) pf.bottom_separator = pf.end - 1;
  FlopCounter& fc = pf.flops;

  const Index local = pf.end - pf.begin;
  std::vector<Matrix> d(static_cast<std::size_t>(local)), ar(static_cast<std::size_t>(local));
  for (Index k = pf.begin; k < pf.end; ++k) {
    d[std::size_t(k - pf.begin)] = m.diag(k);
    ar[std::size_t(k - pf.begin)] = arrow ? Matrix(m.arrow(k)) : Matrix::Zero(a, b);
  }
  auto D = [&](Index k) -> Matrix& { return d[std::size_t(k - pf.begin)]; };
  auto A = [&](Index k) -> Matrix& { return ar[std::size_t(k - pf.begin)]; };
  pf.tip_update = Matrix::Zero(a, a);

  std::vector<std::pair<Index, Index>> order;  // (block, succ)
  switch (pf.kind) {
    case Kind::Top:
      for (Index k = pf.begin; k + 1 < pf.end; ++k) order.emplace_back(k, k + 1);
      break;
    case Kind::Middle:
      for (Index k = pf.begin + 1; k + 1 < pf.end; ++k) order.emplace_back(k, k + 1);
      break;
    case Kind::Bottom:
      for (Index k = pf.end - 1; k > pf.begin; --k) order.emplace_back(k, k - 1);
      break;
  }

  const bool anchored = pf.kind == Kind::Middle;
  const Index top = pf.top_separator;
  // coupling (top separator, next block to eliminate)
  Matrix g = anchored ? Matrix(m.lower(top).transpose()) : Matrix();

  pf.steps.reserve(order.size());
  for (const auto& [k, succ] : order) {
    EliminationStep st;
    st.block = k;
    st.succ = succ;
    if (!potrf(D(k), fc)) throw NotPositiveDefinite(k, int(p));
    st.l_diag = std::move(D(k));
    st.l_succ = succ == k + 1 ? Matrix(m.lower(k)) : Matrix(m.lower(k - 1).transpose());
    trsm_right_lower_t(st.l_diag, st.l_succ, fc);
    syrk_sub(D(succ), st.l_succ, fc);
    if (anchored) {
      st.l_anchor = std::move(g);
      trsm_right_lower_t(st.l_diag, st.l_anchor, fc);
      syrk_sub(D(top), st.l_anchor, fc);
      g = Matrix::Zero(b, b);
      gemm_nt(g, st.l_anchor, st.l_succ, -1.0, fc);
    }
    if (arrow) {
      st.l_arrow = std::move(A(k));
      trsm_right_lower_t(st.l_diag, st.l_arrow, fc);
      gemm_nt(A(succ), st.l_arrow, st.l_succ, -1.0, fc);
      if (anchored) gemm_nt(A(top), st.l_arrow, st.l_anchor, -1.0, fc);
      syrk_sub(pf.tip_update, st.l_arrow, fc);
    }
    pf.steps.push_back(std::move(st));
  }

  if (pf.top_separator >= 0) {
    pf.top_diag = std::move(D(pf.top_separator));
    pf.top_arrow = std::move(A(pf.top_separator));
  }
  if (pf.bottom_separator >= 0) {
    pf.bottom_diag = std::move(D(pf.bottom_separator));
    pf.bottom_arrow = std::move(A(pf.bottom_separator));
  }
  if (anchored) pf.separator_coupling = g.transpose();
  pf.seconds = since(t0);
  return pf;
}

BTAMatrix assemble_reduced(const BTAMatrix& m, const std::vector<PartitionFactor>& parts,
                           std::vector<Index>& reduced_blocks) {
  const Index P = Index(parts.size());
  BTAMatrix r(2 * (P - 1), m.b(), m.a());
  reduced_blocks.clear();
  Index idx = 0;
  for (Index p = 0; p < P; ++p) {
    const PartitionFactor& pf = parts[std::size_t(p)];
    if (pf.top_separator >= 0) {
      r.diag(idx) = pf.top_diag;
      r.arrow(idx) = pf.top_arrow;
      if (pf.bottom_separator >= 0) r.lower(idx) = pf.separator_coupling;
      reduced_blocks.push_back(pf.top_separator);
      ++idx;
    }
    if (pf.bottom_separator >= 0) {
      r.diag(idx) = pf.bottom_diag;
      r.arrow(idx) = pf.bottom_arrow;
      r.lower(idx) = m.lower(pf.bottom_separator);
      reduced_blocks.push_back(pf.bottom_separator);
      ++idx;
    }
  }
  r.tip() = m.tip();
  for (const auto& pf : parts) r.tip() += pf.tip_update;
  return r;
}

}  // namespace

DistBTAFactor d_factorize(const BTAMatrix& m, const PartitionPlan& plan, Index workers) {
  if (plan.n != m.n() || Index(plan.boundaries.size()) != plan.partitions + 1)
    throw PlanningError("partition plan does not match the matrix block count");
  DistBTAFactor f;
  f.plan = plan;
  f.n = m.n();
  f.b = m.b();
  f.a = m.a();
  f.arrow_zero = m.arrow_is_zero();
  f.workers = std::max<Index>(workers, 1);

  if (plan.partitions == 1) {
    f.sequential = factorize(m);
    return f;
  }

  const bool arrow = f.a > 0 && !f.arrow_zero;
  const Index P = plan.partitions;
  f.parts.resize(std::size_t(P));
  std::vector<std::optional<NotPositiveDefinite>> failures(static_cast<std::size_t>(P));
  auto t0 = Clock::now();
  parallel_for(P, f.workers, [&](TaskIndex p) {
    try {
      f.parts[std::size_t(p)] = factor_partition(m, plan, Index(p), arrow);
    } catch (const NotPositiveDefinite& e) {
      failures[std::size_t(p)] = e;
    }
  });
  f.local_seconds = since(t0);
  for (const auto& e : failures)
    if (e) throw *e;

  t0 = Clock::now();
  BTAMatrix r = assemble_reduced(m, f.parts, f.reduced_blocks);
  try {
    f.reduced = factorize(std::move(r));
  } catch (const NotPositiveDefinite& e) {
    const Index rb = e.block();
    throw NotPositiveDefinite(rb < Index(f.reduced_blocks.size()) ? f.reduced_blocks[std::size_t(rb)] : f.n, -1);
  }
  f.reduced_flops = f.reduced.flops;
  f.reduced_seconds = since(t0);
  return f;
}

double logdet(const DistBTAFactor& f) {
  if (f.sequential) return logdet(*f.sequential);
  double s = 0.0;
  for (const auto& pf : f.parts)
    for (const auto& st : pf.steps) s += 2.0 * st.l_diag.diagonal().array().log().sum();
  return s + logdet(f.reduced);
}

Vector d_solve(const DistBTAFactor& f, const Vector& rhs, FlopCounter* flops) {
  using namespace kernels;
  const Index N = f.n * f.b + f.a;
  if (rhs.size() != N) throw DimensionError("d_solve: rhs length mismatch");
  if (f.sequential) return solve(*f.sequential, rhs);

  const Index P = f.plan.partitions, b = f.b, a = f.a, nb = f.n * b;
  const bool arrow = a > 0 && !f.arrow_zero;
  Vector x = rhs;
  std::vector<Vector> tip_part(std::size_t(P), Vector::Zero(a));
  std::vector<FlopCounter> fcs(static_cast<std::size_t>(P));
  auto seg = [&](Index k) { return x.segment(k * b, b); };

  parallel_for(P, f.workers, [&](TaskIndex p) {
    const PartitionFactor& pf = f.parts[std::size_t(p)];
    FlopCounter& fc = fcs[std::size_t(p)];
    for (const auto& st : pf.steps) {
      auto xk = seg(st.block);
      trsv_lower(st.l_diag, xk, fc);
      gemv(seg(st.succ), st.l_succ, xk, -1.0, fc);
      if (st.l_anchor.size() > 0) gemv(seg(pf.top_separator), st.l_anchor, xk, -1.0, fc);
      if (arrow) gemv(tip_part[std::size_t(p)], st.l_arrow, xk, -1.0, fc);
    }
  });

  const Index nr = Index(f.reduced_blocks.size());
  Vector rr(nr * b + a);
  for (Index r = 0; r < nr; ++r) rr.segment(r * b, b) = seg(f.reduced_blocks[std::size_t(r)]);
  rr.segment(nr * b, a) = x.segment(nb, a);
  for (const auto& t : tip_part) rr.segment(nr * b, a) += t;
  const Vector xr = solve(f.reduced, rr);
  for (Index r = 0; r < nr; ++r) seg(f.reduced_blocks[std::size_t(r)]) = xr.segment(r * b, b);
  x.segment(nb, a) = xr.segment(nr * b, a);

  parallel_for(P, f.workers, [&](TaskIndex p) {
    const PartitionFactor& pf = f.parts[std::size_t(p)];
    FlopCounter& fc = fcs[std::size_t(p)];
    for (auto it = pf.steps.rbegin(); it != pf.steps.rend(); ++it) {
      const auto& st = *it;
      auto xk = seg(st.block);
      gemv_t(xk, st.l_succ, seg(st.succ), -1.0, fc);
      if (st.l_anchor.size() > 0) gemv_t(xk, st.l_anchor, seg(pf.top_separator), -1.0, fc);
      if (arrow) gemv_t(xk, st.l_arrow, x.segment(nb, a), -1.0, fc);
      trsv_lower_t(st.l_diag, xk, fc);
    }
  });
  if (flops)
    for (const auto& fc : fcs) *flops += fc;
  return x;
}

BTAMatrix d_selected_invert(const DistBTAFactor& f, FlopCounter* flops) {
  using namespace kernels;
  if (f.sequential) return selected_invert(*f.sequential, flops);

  const Index P = f.plan.partitions, b = f.b, a = f.a;
  const bool arrow = a > 0 && !f.arrow_zero;
  FlopCounter reduced_fc;
  const BTAMatrix sr = selected_invert(f.reduced, &reduced_fc);

  BTAMatrix s(f.n, b, a);
  const Index nr = Index(f.reduced_blocks.size());
  for (Index r = 0; r < nr; ++r) {
    const Index g = f.reduced_blocks[std::size_t(r)];
    s.diag(g) = sr.diag(r);
    s.arrow(g) = sr.arrow(r);
    // reduced lower(r) couples reduced blocks r+1 and r; when they are
    // adjacent in time it is an original pattern block.
    if (r + 1 < nr && f.reduced_blocks[std::size_t(r + 1)] == g + 1) s.lower(g) = sr.lower(r);
  }
  s.tip() = sr.tip();

  // Sigma(bottom separator, top separator) for every middle partition
  std::vector<Matrix> sep_coupling(static_cast<std::size_t>(P));
  for (Index r = 0; r + 1 < nr; ++r) {
    const Index g = f.reduced_blocks[std::size_t(r)];
    for (Index p = 1; p + 1 < P; ++p)
      if (f.parts[std::size_t(p)].top_separator == g) sep_coupling[std::size_t(p)] = sr.lower(r);
  }

  std::vector<FlopCounter> fcs(static_cast<std::size_t>(P));
  parallel_for(P, f.workers, [&](TaskIndex p) {
    const PartitionFactor& pf = f.parts[std::size_t(p)];
    FlopCounter& fc = fcs[std::size_t(p)];
    const bool anchored = pf.kind == PartitionFactor::Kind::Middle;
    const Index top = pf.top_separator;
    // Sigma(top, succ) of the step being processed
    Matrix sig_top_succ = anchored ? Matrix(sep_coupling[std::size_t(p)].transpose()) : Matrix();

    for (auto it = pf.steps.rbegin(); it != pf.steps.rend(); ++it) {
      const auto& st = *it;
      const Index k = st.block, sc = st.succ;
      const Matrix linv = lower_inverse(st.l_diag, fc);

      Matrix t_succ = Matrix::Zero(b, b);
      gemm_nn(t_succ, s.diag(sc), st.l_succ, -1.0, fc);
      if (anchored) gemm_tn(t_succ, sig_top_succ, st.l_anchor, -1.0, fc);
      if (arrow) gemm_tn(t_succ, s.arrow(sc), st.l_arrow, -1.0, fc);
      Matrix sig_succ_k = Matrix::Zero(b, b);
      gemm_nn(sig_succ_k, t_succ, linv, 1.0, fc);

      Matrix sig_top_k;
      if (anchored) {
        Matrix t_top = Matrix::Zero(b, b);
        gemm_nn(t_top, sig_top_succ, st.l_succ, -1.0, fc);
        gemm_nn(t_top, s.diag(top), st.l_anchor, -1.0, fc);
        if (arrow) gemm_tn(t_top, s.arrow(top), st.l_arrow, -1.0, fc);
        sig_top_k = Matrix::Zero(b, b);
        gemm_nn(sig_top_k, t_top, linv, 1.0, fc);
      }

      Matrix sig_arrow_k;
      if (arrow) {
        Matrix t_arrow = Matrix::Zero(a, b);
        gemm_nn(t_arrow, s.arrow(sc), st.l_succ, -1.0, fc);
        if (anchored) gemm_nn(t_arrow, s.arrow(top), st.l_anchor, -1.0, fc);
        gemm_nn(t_arrow, s.tip(), st.l_arrow, -1.0, fc);
        sig_arrow_k = Matrix::Zero(a, b);
        gemm_nn(sig_arrow_k, t_arrow, linv, 1.0, fc);
      }

      Matrix skk = linv.transpose();
      gemm_tn(skk, sig_succ_k, st.l_succ, -1.0, fc);
      if (anchored) gemm_tn(skk, sig_top_k, st.l_anchor, -1.0, fc);
      if (arrow) gemm_tn(skk, sig_arrow_k, st.l_arrow, -1.0, fc);
      Matrix dk = Matrix::Zero(b, b);
      gemm_nn(dk, skk, linv, 1.0, fc);

      s.diag(k) = 0.5 * (dk + dk.transpose());
      if (arrow) s.arrow(k) = sig_arrow_k;
      if (sc == k + 1)
        s.lower(k) = sig_succ_k;
      else
        s.lower(k - 1) = sig_succ_k.transpose();
      if (anchored) {
        if (k == top + 1) s.lower(top) = sig_top_k.transpose();
        sig_top_succ = std::move(sig_top_k);
      }
    }
    if (anchored && pf.steps.empty()) s.lower(top) = sep_coupling[std::size_t(p)];
  });
  if (flops) {
    *flops += reduced_fc;
    for (const auto& fc : fcs) *flops += fc;
  }
  return s;
}

}  // namespace stinla
