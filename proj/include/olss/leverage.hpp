#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "olss/matrix.hpp"

namespace olss {

/// Statistical leverage scores: score_i = ‖U(i,:)‖² for the left singular
/// factor U of the source matrix, truncated at numerical rank.
struct LeverageScores {
  std::vector<double> scores;
  std::size_t source_rows = 0;
  std::size_t feature_dim = 0;
};

struct SampleSelection {
  std::vector<std::size_t> indices;  // distinct, in selection order
  std::uint64_t seed = 0;
  std::vector<double> probabilities;
};

/// Relative cutoff below which trailing singular directions are dropped.
inline constexpr double kRankCutoff = 1e-12;

LeverageScores leverage_scores(const Matrix& a);

/// p_i = score_i / Σ scores. Throws DegenerateInputError if all scores are 0.
std::vector<double> sampling_distribution(const LeverageScores& s);

/// Weighted sampling without replacement by exponential keys: each row with
/// p_i > 0 draws u_i ∈ (0,1) and gets key u_i^(1/p_i); the `count` largest
/// keys win (ties to the lower index). If too few rows carry mass, the rest is
/// filled uniformly from the zero-probability rows.
SampleSelection sample_without_replacement(const std::vector<double>& p, std::size_t count,
                                           std::uint64_t seed);

/// Fast path: scores of A·R⁻¹ where R comes from a sign-random projection
/// S·A (S is oversample x rows, entries ±1/√oversample). The result is
/// rescaled so that Σ scores equals the numerical rank of S·A.
LeverageScores approx_leverage_scores(const Matrix& a, std::size_t oversample,
                                      std::uint64_t seed);

}  // namespace olss
