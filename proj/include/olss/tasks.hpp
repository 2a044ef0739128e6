#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "olss/matrix.hpp"
#include "olss/neural.hpp"
#include "olss/sketch.hpp"

namespace olss {

/// Square grayscale images (one per row, pixels in [0,1]) with class labels
/// and a fixed train/test split.
struct BaseDataset {
  Matrix images;  // N x side²
  std::vector<std::size_t> labels;
  std::size_t side = 0;
  std::size_t classes = 0;
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
};

enum class TaskKind { rotated, permuted, incremental };

std::string to_string(TaskKind kind);
TaskKind parse_task_kind(const std::string& s);

struct Task {
  TaskData train;
  TaskData test;
  ClassMask mask = ClassMask::all(1);
  double angle_deg = 0.0;                // rotated
  std::uint64_t permutation_seed = 0;    // permuted (0 for the identity task)
  std::vector<std::size_t> permutation;  // permuted: out[j] = in[permutation[j]]
  std::vector<std::size_t> classes;      // incremental: the task's class subset
};

struct TaskSequence {
  TaskKind kind = TaskKind::rotated;
  std::size_t input_dim = 0;
  std::size_t classes = 0;
  std::vector<Task> tasks;
};

/// Synthetic digit-like data: each class gets a random stroke prototype and
/// samples add N(0, noise²) pixel noise, clipped to [0,1]. Samples are
/// interleaved by class; the last per_class/6 (at least one) of every class
/// form the test split.
BaseDataset gen_base_dataset(std::size_t classes, std::size_t per_class, std::size_t side,
                             double noise, std::uint64_t seed);

/// MNIST-style IDX files (magic 0x00000803 images, 0x00000801 labels).
/// Pixels are scaled to [0,1]; the split follows the same per-class rule.
BaseDataset load_idx_dataset(const std::filesystem::path& images,
                             const std::filesystem::path& labels);

/// Nearest-neighbour rotation about the grid centre by inverse mapping;
/// pixels that map outside the grid become 0.
Matrix rotate_images(const Matrix& images, std::size_t side, double degrees);

/// Task t (1-based) is rotated by 180·(t−1)/(T−1) degrees.
TaskSequence make_rotated_tasks(const BaseDataset& base, std::size_t tasks);
/// Task 1 is unpermuted; task t ≥ 2 uses a pixel permutation seeded by
/// splitmix64(seed ^ t).
TaskSequence make_permuted_tasks(const BaseDataset& base, std::size_t tasks, std::uint64_t seed);
/// Task t holds classes [(t−1)·C/T, t·C/T) and its mask allows every class
/// seen so far.
TaskSequence make_incremental_tasks(const BaseDataset& base, std::size_t tasks);

/// Dispatches on kind. A rotated sequence of a single task is the unrotated
/// base (the angle grid needs T >= 2).
TaskSequence make_task_sequence(TaskKind kind, const BaseDataset& base, std::size_t tasks,
                                std::uint64_t seed);

Matrix one_hot(const std::vector<std::size_t>& labels, std::size_t classes);

}  // namespace olss
