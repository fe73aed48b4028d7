#pragma once

#include "stinla/bta.hpp"

#include <optional>
#include <vector>

namespace stinla {

class PlanningError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Slicing of the n time blocks into P contiguous partitions.
struct PartitionPlan {
  Index n = 0;
  Index partitions = 1;
  double lb = 1.0;
  /// partitions + 1 strictly increasing cut indices, boundaries[0] = 0,
  /// boundaries[P] = n.
  std::vector<Index> boundaries;
  /// Set when the requested load balance could not keep every partition at
  /// two blocks or more and an even split was used instead.
  bool fell_back_to_even = false;

  Index begin(Index p) const { return boundaries[std::size_t(p)]; }
  Index end(Index p) const { return boundaries[std::size_t(p + 1)]; }
  Index blocks(Index p) const { return end(p) - begin(p); }
  std::vector<Index> sizes() const;
};

/// The two boundary partitions get weight lb, interior partitions weight 1.
/// Sizes are floor(n w_p / sum w) with the remainder handed out one block at a
/// time from the first partition on. Requires n >= 2P (n >= 1 for P = 1).
PartitionPlan plan_partitions(Index n, Index partitions, double lb = 1.0);

/// One block eliminated inside a partition. `succ` is the neighbour block
/// eliminated later along the chain (the next interior block or a
/// separator); interior partitions also couple every eliminated block to
/// their top separator (`anchor`), which is the fill created by the nested
/// dissection ordering.
struct EliminationStep {
  Index block = 0;
  Index succ = 0;
  Matrix l_diag;
  Matrix l_succ;
  Matrix l_anchor;
  Matrix l_arrow;
};

struct PartitionFactor {
  enum class Kind { Top, Middle, Bottom };

  Kind kind = Kind::Top;
  Index begin = 0;
  Index end = 0;
  Index top_separator = -1;
  Index bottom_separator = -1;
  std::vector<EliminationStep> steps;

  /// Schur-complemented separator blocks handed to the reduced system.
  Matrix top_diag, bottom_diag, top_arrow, bottom_arrow;
  /// Coupling block (bottom separator rows, top separator columns), middle only.
  Matrix separator_coupling;
  /// Contribution -sum L_a L_a^T of the eliminated blocks to the arrow tip.
  Matrix tip_update;

  FlopCounter flops;
  double seconds = 0.0;
};

struct DistBTAFactor {
  PartitionPlan plan;
  Index n = 0, b = 0, a = 0;
  bool arrow_zero = false;
  /// Concurrent partition workers used for the local phases.
  Index workers = 1;

  /// Set when the plan has a single partition.
  std::optional<BTAFactor> sequential;

  std::vector<PartitionFactor> parts;
  /// Global block index of each reduced-system block:
  /// [B_0, T_1, B_1, T_2, ..., B_{P-2}, T_{P-1}].
  std::vector<Index> reduced_blocks;
  BTAFactor reduced;

  FlopCounter reduced_flops;
  double reduced_seconds = 0.0;
  double local_seconds = 0.0;

  FlopCounter total_flops() const;
};

/// Time-partitioned Cholesky. Partitions run concurrently on up to `workers`
/// threads; the reduced separator system is assembled in partition order and
/// factorized on one worker.
DistBTAFactor d_factorize(const BTAMatrix& m, const PartitionPlan& plan, Index workers = 1);
double logdet(const DistBTAFactor& f);
/// Partitioned triangular solve: local forward elimination onto the
/// separators, reduced solve, local back substitution.
Vector d_solve(const DistBTAFactor& f, const Vector& rhs, FlopCounter* flops = nullptr);
BTAMatrix d_selected_invert(const DistBTAFactor& f, FlopCounter* flops = nullptr);

}  // namespace stinla
