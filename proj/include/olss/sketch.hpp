#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>

#include "olss/matrix.hpp"

namespace olss {

/// One task's data: inputs (n x d) paired row by row with targets (n x m).
struct TaskData {
  Matrix inputs;
  Matrix targets;
  std::size_t task_id = 0;
};

enum class LeverageMode { exact, approximate };

/// Online leverage score sampling state: the retained (Â, B̂) pair.
struct SketchState {
  std::size_t capacity = 0;  // ℓ
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  Matrix a_hat;  // <= ℓ x d
  Matrix b_hat;  // <= ℓ x m, row j pairs with row j of a_hat
  std::size_t tasks_absorbed = 0;
  std::uint64_t seed_root = 0;
  LeverageMode mode = LeverageMode::exact;
  std::size_t approx_oversample = 0;  // 0 selects 4·d
  std::size_t peak_rows = 0;          // largest stacked buffer seen by absorb

  bool operator==(const SketchState&) const = default;
};

SketchState olss_new(std::size_t capacity, std::size_t input_dim, std::size_t output_dim,
                     std::uint64_t seed_root);

/// Stacks the task under the current sketch, scores the stacked rows by
/// leverage and keeps ℓ of them, sampled without replacement. The selection
/// seed is splitmix64(seed_root ^ task_id).
SketchState olss_absorb(SketchState state, const TaskData& task);

/// The current (Â, B̂). Throws StateError before the first absorb.
std::pair<Matrix, Matrix> olss_training_set(const SketchState& state);

/// Checkpoint as `a_hat.mat`, `b_hat.mat` (OLSSMAT1) plus `sketch.txt`.
void save_sketch(const std::filesystem::path& dir, const SketchState& state);
SketchState load_sketch(const std::filesystem::path& dir);

}  // namespace olss
