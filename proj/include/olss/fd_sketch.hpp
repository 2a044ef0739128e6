#pragma once

#include <cstddef>

#include "olss/matrix.hpp"

namespace olss {

/// Frequent-directions state: a buffer of at most 2ℓ rows that is shrunk
/// back to ℓ rows whenever it overflows.
struct FDState {
  std::size_t capacity = 0;     // ℓ
  std::size_t feature_dim = 0;  // d
  Matrix buffer;                // rows <= 2ℓ, cols == d
  std::size_t rows_seen = 0;
};

struct FDBound {
  double lhs = 0.0;  // ‖AᵀA − ÂᵀÂ‖₂
  double rhs = 0.0;  // ‖A − A_k‖_F² / (ℓ − k)
};

FDState fd_new(std::size_t capacity, std::size_t feature_dim);

/// Appends rows one at a time; as soon as the buffer holds more than 2ℓ rows
/// it is shrunk to ℓ.
FDState fd_append(FDState state, const Matrix& rows);

/// δ = σ_{ℓ+1}² (0 when there are at most ℓ values); keeps the top ℓ rows of
/// diag(√max(σ² − δ, 0))·Vᵀ.
FDState fd_shrink(FDState state);

/// Exactly ℓ rows. A buffer holding more than ℓ rows is shrunk (on a copy)
/// first, an under-full one is zero-padded.
Matrix fd_sketch(const FDState& state);

/// Both sides of the deterministic covariance bound for a sketch of `a`
/// with ℓ = sketch.rows(). Requires k < ℓ.
FDBound fd_error_bound(const Matrix& a, const Matrix& sketch, std::size_t k);

}  // namespace olss
