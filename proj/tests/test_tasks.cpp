#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "olss/error.hpp"
#include "olss/tasks.hpp"
#include "test_util.hpp"

using namespace olss;

namespace {

// Exact quarter turn by index arithmetic.
Matrix rot90(const Matrix& images, std::size_t side) {
  Matrix out(images.rows(), images.cols());
  for (std::size_t n = 0; n < images.rows(); ++n)
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c) out(n, r * side + c) = images(n, (side - 1 - c) * side + r);
  return out;
}

std::size_t label_of(const Matrix& targets, std::size_t r) {
  const auto row = targets.row(r);
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

TEST_CASE("gen_base_dataset") {
  SUBCASE("shape and split") {
    const BaseDataset b = gen_base_dataset(10, 60, 8, 0.25, 0);
    CHECK(b.images.rows() == 600);
    CHECK(b.images.cols() == 64);
    CHECK(b.train_idx.size() == 500);
    CHECK(b.test_idx.size() == 100);
    std::set<std::size_t> train(b.train_idx.begin(), b.train_idx.end());
    for (auto i : b.test_idx) CHECK(train.count(i) == 0);
    for (double x : b.images.data()) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
    std::vector<int> per(10, 0);
    for (auto l : b.labels) ++per[l];
    for (int n : per) CHECK(n == 60);
  }
  SUBCASE("zero noise gives identical samples per class") {
    const BaseDataset b = gen_base_dataset(4, 5, 6, 0.0, 1);
    for (std::size_t i = 0; i < b.images.rows(); ++i)
      for (std::size_t j = 0; j < b.images.rows(); ++j)
        if (b.labels[i] == b.labels[j])
          CHECK(std::equal(b.images.row(i).begin(), b.images.row(i).end(), b.images.row(j).begin()));
  }
  SUBCASE("seed sensitivity and determinism") {
    CHECK(gen_base_dataset(3, 4, 5, 0.0, 1).images == gen_base_dataset(3, 4, 5, 0.0, 1).images);
    CHECK_FALSE(gen_base_dataset(3, 4, 5, 0.0, 1).images == gen_base_dataset(3, 4, 5, 0.0, 2).images);
  }
  SUBCASE("a linear classifier separates the default data") {
    const BaseDataset b = gen_base_dataset(10, 60, 8, 0.25, 0);
    const TaskSequence seq = make_task_sequence(TaskKind::rotated, b, 1, 0);
    const Task& t = seq.tasks[0];
    SGDConfig cfg;
    cfg.epochs = 30;
    const MLPParams p = sgd_epochs(init_mlp({64, 10}, 3), t.train.inputs, t.train.targets, t.mask, cfg);
    const double acc = evaluate(p, t.test.inputs, t.test.targets, t.mask);
    MESSAGE("linear test accuracy " << acc);
    CHECK(acc >= 0.9);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(gen_base_dataset(10, 60, 3, 0.25, 0), ArgumentError);
    CHECK_THROWS_AS(gen_base_dataset(1, 60, 8, 0.25, 0), ArgumentError);
  }
}

TEST_CASE("rotate_images") {
  const BaseDataset b = gen_base_dataset(3, 4, 8, 0.2, 5);
  CHECK(rotate_images(b.images, 8, 0.0) == b.images);
  const Matrix half = rotate_images(b.images, 8, 180.0);
  CHECK(half == rot90(rot90(b.images, 8), 8));
  const Matrix quarter = rotate_images(b.images, 8, 90.0);
  const Matrix three = rot90(rot90(rot90(b.images, 8), 8), 8);
  CHECK((quarter == rot90(b.images, 8) || quarter == three));
  for (double deg : {13.0, 45.0, 100.0}) {
    for (double x : rotate_images(b.images, 8, deg).data()) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
  CHECK_THROWS_AS(rotate_images(b.images, 7, 10.0), ShapeError);
}

TEST_CASE("make_rotated_tasks") {
  const BaseDataset b = gen_base_dataset(4, 12, 6, 0.2, 6);
  const TaskSequence seq = make_rotated_tasks(b, 5);
  REQUIRE(seq.tasks.size() == 5);
  CHECK(seq.input_dim == 36);
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(seq.tasks[t].angle_deg == doctest::Approx(45.0 * t));
    CHECK(seq.tasks[t].mask.count() == 4);
    CHECK(seq.tasks[t].train.task_id == t + 1);
  }
  CHECK(seq.tasks[0].train.inputs == select_rows(b.images, b.train_idx));
  CHECK(seq.tasks[4].train.inputs == rotate_images(select_rows(b.images, b.train_idx), 6, 180.0));
  CHECK(seq.tasks[2].train.targets == seq.tasks[0].train.targets);
  CHECK_THROWS_AS(make_rotated_tasks(b, 1), ArgumentError);
  const TaskSequence single = make_task_sequence(TaskKind::rotated, b, 1, 0);
  CHECK(single.tasks.size() == 1);
  CHECK(single.tasks[0].train.inputs == seq.tasks[0].train.inputs);
}

TEST_CASE("make_permuted_tasks") {
  const BaseDataset b = gen_base_dataset(3, 6, 5, 0.3, 7);
  const TaskSequence seq = make_permuted_tasks(b, 4, 99);
  REQUIRE(seq.tasks.size() == 4);
  CHECK(seq.tasks[0].train.inputs == select_rows(b.images, b.train_idx));
  for (const Task& t : seq.tasks) {
    auto sorted = t.permutation;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 0; j < sorted.size(); ++j) CHECK(sorted[j] == j);
    const Matrix& base = seq.tasks[0].train.inputs;
    for (std::size_t r = 0; r < base.rows(); ++r) {
      for (std::size_t j = 0; j < base.cols(); ++j)
        CHECK(t.train.inputs(r, j) == base(r, t.permutation[j]));
      std::vector<double> x(base.row(r).begin(), base.row(r).end());
      std::vector<double> y(t.train.inputs.row(r).begin(), t.train.inputs.row(r).end());
      std::sort(x.begin(), x.end());
      std::sort(y.begin(), y.end());
      CHECK(x == y);
    }
  }
  CHECK(seq.tasks[0].permutation_seed == 0);
  CHECK(seq.tasks[1].permutation_seed == splitmix64(99 ^ 2));
  CHECK_FALSE(seq.tasks[1].permutation == seq.tasks[2].permutation);
  CHECK(make_permuted_tasks(b, 4, 99).tasks[3].train.inputs == seq.tasks[3].train.inputs);
  CHECK_THROWS_AS(make_permuted_tasks(b, 0, 99), ArgumentError);
}

TEST_CASE("make_incremental_tasks") {
  const BaseDataset b = gen_base_dataset(10, 12, 6, 0.2, 8);
  const TaskSequence seq = make_incremental_tasks(b, 5);
  REQUIRE(seq.tasks.size() == 5);
  std::set<std::size_t> all;
  for (std::size_t t = 0; t < 5; ++t) {
    const Task& task = seq.tasks[t];
    CHECK(task.classes == std::vector<std::size_t>{2 * t, 2 * t + 1});
    for (auto c : task.classes) CHECK(all.insert(c).second);
    CHECK(task.mask.count() == 2 * (t + 1));
    for (std::size_t r = 0; r < task.train.targets.rows(); ++r) {
      const auto l = label_of(task.train.targets, r);
      CHECK((l == 2 * t || l == 2 * t + 1));
    }
    if (t > 0)
      for (std::size_t c = 0; c < 10; ++c)
        if (seq.tasks[t - 1].mask.allows(c)) CHECK(task.mask.allows(c));
  }
  CHECK(all.size() == 10);
  CHECK(seq.tasks[2].mask.count() == 6);
  CHECK_THROWS_AS(make_incremental_tasks(b, 3), ArgumentError);
}

TEST_CASE("task kinds parse and print") {
  for (auto k : {TaskKind::rotated, TaskKind::permuted, TaskKind::incremental})
    CHECK(parse_task_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_task_kind("shuffled"), ArgumentError);
}

TEST_CASE("one_hot") {
  CHECK(one_hot({2, 0}, 3) == Matrix{{0, 0, 1}, {1, 0, 0}});
  CHECK_THROWS_AS(one_hot({3}, 3), DataError);
}

TEST_CASE("IDX ingestion") {
  const auto dir = olss::testing::scratch_dir("idx");
  const std::size_t n = 12, side = 4;
  {
    std::ofstream img(dir / "img.idx", std::ios::binary);
    write_be32(img, 0x803);
    write_be32(img, n);
    write_be32(img, side);
    write_be32(img, side);
    for (std::size_t i = 0; i < n * side * side; ++i) img.put(static_cast<char>(i % 256));
    std::ofstream lab(dir / "lab.idx", std::ios::binary);
    write_be32(lab, 0x801);
    write_be32(lab, n);
    for (std::size_t i = 0; i < n; ++i) lab.put(static_cast<char>(i % 3));
  }
  const BaseDataset b = load_idx_dataset(dir / "img.idx", dir / "lab.idx");
  CHECK(b.images.rows() == n);
  CHECK(b.side == side);
  CHECK(b.classes == 3);
  CHECK(b.images(0, 1) == doctest::Approx(1.0 / 255.0));
  CHECK(b.train_idx.size() + b.test_idx.size() == n);
  CHECK_THROWS_AS(load_idx_dataset(dir / "lab.idx", dir / "img.idx"), FormatError);
  CHECK_THROWS_AS(load_idx_dataset(dir / "missing", dir / "lab.idx"), FormatError);
}
