#pragma once

// Randomized property checks against the dense oracles. Shared by the
// validate command and the acceptance runner.

#include "stinla/oracle.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace stinla::check {

inline constexpr double kReconstructionTol = 1e-10;
inline constexpr double kLogdetTol = 1e-9;
inline constexpr double kSolveTol = 1e-10;
inline constexpr double kSelectedInverseTol = 1e-8;
inline constexpr double kDistLogdetTol = 1e-9;
inline constexpr double kDistSolveTol = 1e-9;
inline constexpr double kDistSelectedInverseTol = 1e-8;
inline constexpr double kDualityTol = 1e-8;
inline constexpr double kBlockFormulaTol = 1e-12;
inline constexpr double kSimilarityTol = 1e-9;
inline constexpr double kObjectiveTol = 1e-8;
inline constexpr double kGradientRatioLow = 30.0;
inline constexpr double kGradientRatioHigh = 300.0;
inline constexpr double kLatentSdTol = 1e-6;

struct PropertyResult {
  std::string name;
  bool pass = false;
  Index instances = 0;
  double worst = 0.0;
  double tolerance = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct BtaShape {
  Index n = 1, b = 1, a = 0;
};

/// Reconstruction, logdet, solve residual and selected inverse of the
/// sequential solver against dense Cholesky / determinant / inverse.
std::vector<PropertyResult> bta_oracle(const std::vector<BtaShape>& shapes, std::mt19937_64& rng);

struct DistCase {
  Index partitions = 1;
  double lb = 1.0;
  Index n = 2, b = 1, a = 0;
};

/// d_factorize / d_solve / d_selected_invert against the sequential solver;
/// P = 1 must be bit-identical.
std::vector<PropertyResult> dist_equivalence(const std::vector<DistCase>& cases, std::mt19937_64& rng,
                                             Index workers = 2);

/// Dense inverse of the assembled joint precision against the mixed
/// covariance, read back through the BTA permutation and the selected
/// inverse; plus the explicit three-process block formula. With
/// `corrupt_permutation` two entries of the forward map are swapped.
std::vector<PropertyResult> coreg_duality(Index instances, std::mt19937_64& rng, bool corrupt_permutation = false);

/// Permuted joint precisions are similarity transforms, fit the BTA
/// envelope, and N = n b + a.
PropertyResult permutation_similarity(Index instances, std::mt19937_64& rng);

/// Objective vs the dense reimplementation, conditional posterior sds vs
/// the dense inverse, and O(h^2) behaviour of the gradient.
std::vector<PropertyResult> objective_oracle(Index instances, std::mt19937_64& rng);

struct SuiteOptions {
  std::uint64_t seed = 1;
  Index instances = 20;
  bool corrupt_permutation = false;
};

std::vector<PropertyResult> run_suite(const SuiteOptions& opts);

std::string describe(const PropertyResult& r);

}  // namespace stinla::check
