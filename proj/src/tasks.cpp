#include "olss/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "olss/error.hpp"
#include "olss/matrix_io.hpp"
#include "olss/rng.hpp"

namespace olss {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Fills train/test indices for rows laid out per class: the last
// max(1, n_c / 6) rows of each class go to the test split.
void split_per_class(BaseDataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.classes);
  for (std::size_t i = 0; i < ds.labels.size(); ++i) by_class[ds.labels[i]].push_back(i);
  for (const auto& rows : by_class) {
    if (rows.empty()) continue;
    const std::size_t n_test = rows.size() < 2 ? 0 : std::max<std::size_t>(1, rows.size() / 6);
    const std::size_t n_train = rows.size() - n_test;
    ds.train_idx.insert(ds.train_idx.end(), rows.begin(), rows.begin() + n_train);
    ds.test_idx.insert(ds.test_idx.end(), rows.begin() + n_train, rows.end());
  }
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
  std::sort(ds.test_idx.begin(), ds.test_idx.end());
}

// A handful of short random walks with momentum, drawn at full intensity.
std::vector<double> stroke_prototype(std::size_t side, Rng& rng) {
  static constexpr int kDr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
  static constexpr int kDc[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  std::vector<double> img(side * side, 0.0);
  const int s = static_cast<int>(side);
  const std::size_t strokes = 2 + rng.next_below(2);
  for (std::size_t k = 0; k < strokes; ++k) {
    int r = static_cast<int>(rng.next_below(side));
    int c = static_cast<int>(rng.next_below(side));
    int dir = static_cast<int>(rng.next_below(8));
    const std::size_t length = side / 2 + rng.next_below(side);
    for (std::size_t step = 0; step < length; ++step) {
      img[static_cast<std::size_t>(r * s + c)] = 1.0;
      const std::uint64_t turn = rng.next_below(4);
      if (turn == 0) dir = (dir + 1) % 8;
      if (turn == 1) dir = (dir + 7) % 8;
      int nr = r + kDr[dir];
      int nc = c + kDc[dir];
      if (nr < 0 || nr >= s || nc < 0 || nc >= s) {
        dir = (dir + 4) % 8;
        nr = r + kDr[dir];
        nc = c + kDc[dir];
      }
      r = std::clamp(nr, 0, s - 1);
      c = std::clamp(nc, 0, s - 1);
    }
  }
  return img;
}

TaskData make_task_data(const Matrix& images, const std::vector<std::size_t>& labels,
                        const std::vector<std::size_t>& idx, std::size_t classes,
                        std::size_t task_id) {
  TaskData t;
  t.inputs = select_rows(images, idx);
  std::vector<std::size_t> sub(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) sub[k] = labels[idx[k]];
  t.targets = one_hot(sub, classes);
  t.task_id = task_id;
  return t;
}

Matrix permute_pixels(const Matrix& images, const std::vector<std::size_t>& perm) {
  Matrix out(images.rows(), images.cols());
  for (std::size_t i = 0; i < images.rows(); ++i) {
    const auto in = images.row(i);
    auto o = out.row(i);
    for (std::size_t j = 0; j < perm.size(); ++j) o[j] = in[perm[j]];
  }
  return out;
}

std::uint32_t read_be32(const std::string& bytes, std::size_t pos) {
  return (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos])) << 24) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + 1])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + 2])) << 8) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + 3]));
}

}  // namespace

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::rotated: return "rotated";
    case TaskKind::permuted: return "permuted";
    case TaskKind::incremental: return "incremental";
  }
  return "?";
}

TaskKind parse_task_kind(const std::string& s) {
  if (s == "rotated") return TaskKind::rotated;
  if (s == "permuted") return TaskKind::permuted;
  if (s == "incremental") return TaskKind::incremental;
  throw ArgumentError("unknown task kind '" + s + "'");
}

Matrix one_hot(const std::vector<std::size_t>& labels, std::size_t classes) {
  Matrix m(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw DataError("label " + std::to_string(labels[i]) + " out of range");
    m(i, labels[i]) = 1.0;
  }
  return m;
}

BaseDataset gen_base_dataset(std::size_t classes, std::size_t per_class, std::size_t side,
                             double noise, std::uint64_t seed) {
  if (side < 4) throw ArgumentError("gen_base_dataset: side must be >= 4");
  if (classes < 2) throw ArgumentError("gen_base_dataset: classes must be >= 2");
  if (per_class < 1) throw ArgumentError("gen_base_dataset: per_class must be >= 1");
  if (!(noise >= 0.0) || !std::isfinite(noise))
    throw ArgumentError("gen_base_dataset: noise must be finite and >= 0");

  Rng rng(seed);
  std::vector<std::vector<double>> protos;
  for (std::size_t c = 0; c < classes; ++c) protos.push_back(stroke_prototype(side, rng));

  const std::size_t d = side * side;
  BaseDataset ds;
  ds.side = side;
  ds.classes = classes;
  ds.images = Matrix(classes * per_class, d);
  ds.labels.resize(classes * per_class);
  for (std::size_t j = 0; j < per_class; ++j) {
    for (std::size_t c = 0; c < classes; ++c) {
      const std::size_t i = j * classes + c;
      ds.labels[i] = c;
      auto row = ds.images.row(i);
      for (std::size_t p = 0; p < d; ++p) {
        const double v = protos[c][p] + (noise > 0.0 ? noise * rng.next_normal() : 0.0);
        row[p] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  split_per_class(ds);
  return ds;
}

BaseDataset load_idx_dataset(const std::filesystem::path& images,
                             const std::filesystem::path& labels) {
  const std::string ib = read_file(images);
  const std::string lb = read_file(labels);
  if (ib.size() < 16 || read_be32(ib, 0) != 0x00000803)
    throw FormatError(images.string() + ": not an IDX image file (magic 0x00000803)");
  if (lb.size() < 8 || read_be32(lb, 0) != 0x00000801)
    throw FormatError(labels.string() + ": not an IDX label file (magic 0x00000801)");
  const std::size_t n = read_be32(ib, 4);
  const std::size_t rows = read_be32(ib, 8);
  const std::size_t cols = read_be32(ib, 12);
  if (rows != cols) throw FormatError(images.string() + ": images must be square");
  if (ib.size() != 16 + n * rows * cols) throw FormatError(images.string() + ": truncated");
  if (read_be32(lb, 4) != n || lb.size() != 8 + n)
    throw FormatError(labels.string() + ": label count does not match images");

  BaseDataset ds;
  ds.side = rows;
  const std::size_t d = rows * cols;
  ds.images = Matrix(n, d);
  ds.labels.resize(n);
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = static_cast<unsigned char>(lb[8 + i]);
    max_label = std::max(max_label, ds.labels[i]);
    auto row = ds.images.row(i);
    for (std::size_t p = 0; p < d; ++p)
      row[p] = static_cast<unsigned char>(ib[16 + i * d + p]) / 255.0;
  }
  ds.classes = max_label + 1;
  split_per_class(ds);
  return ds;
}

Matrix rotate_images(const Matrix& images, std::size_t side, double degrees) {
  if (images.cols() != side * side) throw ShapeError("rotate_images: rows are not side² wide");
  const double rad = degrees * kPi / 180.0;
  const double cs = std::cos(rad);
  const double sn = std::sin(rad);
  const double centre = (static_cast<double>(side) - 1.0) / 2.0;
  const long s = static_cast<long>(side);

  // Source pixel for every destination pixel, -1 when outside the grid.
  std::vector<long> src(side * side, -1);
  for (long r = 0; r < s; ++r) {
    for (long c = 0; c < s; ++c) {
      const double y = static_cast<double>(r) - centre;
      const double x = static_cast<double>(c) - centre;
      const double sy = cs * y - sn * x + centre;
      const double sx = sn * y + cs * x + centre;
      const long rr = static_cast<long>(std::floor(sy + 0.5));
      const long cc = static_cast<long>(std::floor(sx + 0.5));
      if (rr >= 0 && rr < s && cc >= 0 && cc < s) src[static_cast<std::size_t>(r * s + c)] = rr * s + cc;
    }
  }
  Matrix out(images.rows(), images.cols());
  for (std::size_t i = 0; i < images.rows(); ++i) {
    const auto in = images.row(i);
    auto o = out.row(i);
    for (std::size_t p = 0; p < src.size(); ++p)
      o[p] = src[p] < 0 ? 0.0 : in[static_cast<std::size_t>(src[p])];
  }
  return out;
}

TaskSequence make_rotated_tasks(const BaseDataset& base, std::size_t tasks) {
  if (tasks < 2) throw ArgumentError("make_rotated_tasks: need at least 2 tasks");
  TaskSequence seq;
  seq.kind = TaskKind::rotated;
  seq.input_dim = base.images.cols();
  seq.classes = base.classes;
  for (std::size_t t = 1; t <= tasks; ++t) {
    Task task;
    task.angle_deg = 180.0 * static_cast<double>(t - 1) / static_cast<double>(tasks - 1);
    const Matrix rotated =
        t == 1 ? base.images : rotate_images(base.images, base.side, task.angle_deg);
    task.train = make_task_data(rotated, base.labels, base.train_idx, base.classes, t);
    task.test = make_task_data(rotated, base.labels, base.test_idx, base.classes, t);
    task.mask = ClassMask::all(base.classes);
    seq.tasks.push_back(std::move(task));
  }
  return seq;
}

TaskSequence make_permuted_tasks(const BaseDataset& base, std::size_t tasks, std::uint64_t seed) {
  if (tasks < 1) throw ArgumentError("make_permuted_tasks: need at least 1 task");
  TaskSequence seq;
  seq.kind = TaskKind::permuted;
  seq.input_dim = base.images.cols();
  seq.classes = base.classes;
  const std::size_t d = base.images.cols();
  for (std::size_t t = 1; t <= tasks; ++t) {
    Task task;
    task.permutation.resize(d);
    std::iota(task.permutation.begin(), task.permutation.end(), std::size_t{0});
    if (t > 1) {
      task.permutation_seed = splitmix64(seed ^ t);
      Rng rng(task.permutation_seed);
      for (std::size_t i = d; i > 1; --i) std::swap(task.permutation[i - 1], task.permutation[rng.next_below(i)]);
    }
    const Matrix permuted = t == 1 ? base.images : permute_pixels(base.images, task.permutation);
    task.train = make_task_data(permuted, base.labels, base.train_idx, base.classes, t);
    task.test = make_task_data(permuted, base.labels, base.test_idx, base.classes, t);
    task.mask = ClassMask::all(base.classes);
    seq.tasks.push_back(std::move(task));
  }
  return seq;
}

TaskSequence make_incremental_tasks(const BaseDataset& base, std::size_t tasks) {
  if (tasks < 1 || base.classes % tasks != 0)
    throw ArgumentError("make_incremental_tasks: " + std::to_string(tasks) +
                        " tasks do not divide " + std::to_string(base.classes) + " classes");
  TaskSequence seq;
  seq.kind = TaskKind::incremental;
  seq.input_dim = base.images.cols();
  seq.classes = base.classes;
  const std::size_t per_task = base.classes / tasks;
  for (std::size_t t = 1; t <= tasks; ++t) {
    Task task;
    const std::size_t lo = (t - 1) * per_task;
    const std::size_t hi = t * per_task;
    for (std::size_t c = lo; c < hi; ++c) task.classes.push_back(c);
    auto in_task = [&](std::size_t i) { return base.labels[i] >= lo && base.labels[i] < hi; };
    std::vector<std::size_t> train, test;
    std::copy_if(base.train_idx.begin(), base.train_idx.end(), std::back_inserter(train), in_task);
    std::copy_if(base.test_idx.begin(), base.test_idx.end(), std::back_inserter(test), in_task);
    task.train = make_task_data(base.images, base.labels, train, base.classes, t);
    task.test = make_task_data(base.images, base.labels, test, base.classes, t);
    std::vector<bool> allowed(base.classes, false);
    std::fill(allowed.begin(), allowed.begin() + static_cast<long>(hi), true);
    task.mask = ClassMask(std::move(allowed));
    seq.tasks.push_back(std::move(task));
  }
  return seq;
}

TaskSequence make_task_sequence(TaskKind kind, const BaseDataset& base, std::size_t tasks,
                                std::uint64_t seed) {
  switch (kind) {
    case TaskKind::rotated:
      if (tasks == 1) {
        TaskSequence seq = make_permuted_tasks(base, 1, seed);
        seq.kind = TaskKind::rotated;
        seq.tasks.front().permutation.clear();
        return seq;
      }
      return make_rotated_tasks(base, tasks);
    case TaskKind::permuted: return make_permuted_tasks(base, tasks, seed);
    case TaskKind::incremental: return make_incremental_tasks(base, tasks);
  }
  throw ArgumentError("unknown task kind");
}

}  // namespace olss
