#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "olss/error.hpp"
#include "olss/leverage.hpp"
#include "olss/sketch.hpp"
#include "test_util.hpp"

using namespace olss;
using olss::testing::random_matrix;

namespace {

// Targets carry a unique row id as a one-hot column so survivors can be traced.
TaskData tagged_task(const Matrix& inputs, std::size_t first_id, std::size_t width,
                     std::size_t task_id) {
  Matrix targets(inputs.rows(), width);
  for (std::size_t i = 0; i < inputs.rows(); ++i) targets(i, first_id + i) = 1.0;
  return {inputs, targets, task_id};
}

std::size_t row_id(const Matrix& b, std::size_t r) {
  const auto row = b.row(r);
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

// Inclusion probabilities of successive weighted draws without replacement,
// by dynamic programming over drawn subsets.
std::vector<double> successive_inclusion(const std::vector<double>& p, std::size_t k) {
  const std::size_t n = p.size();
  std::vector<double> prob(std::size_t{1} << n, 0.0);
  prob[0] = 1.0;
  std::vector<double> incl(n, 0.0);
  for (std::size_t mask = 0; mask < prob.size(); ++mask) {
    if (prob[mask] == 0.0) continue;
    const auto drawn = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (drawn == k) {
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1) incl[i] += prob[mask];
      continue;
    }
    double rest = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!(mask >> i & 1)) rest += p[i];
    for (std::size_t i = 0; i < n; ++i)
      if (!(mask >> i & 1) && p[i] > 0.0) prob[mask | std::size_t{1} << i] += prob[mask] * p[i] / rest;
  }
  return incl;
}

void check_pairs_are_copies(const SketchState& s, const Matrix& all_inputs) {
  for (std::size_t r = 0; r < s.a_hat.rows(); ++r) {
    const auto id = row_id(s.b_hat, r);
    for (std::size_t j = 0; j < s.a_hat.cols(); ++j) CHECK(s.a_hat(r, j) == all_inputs(id, j));
  }
}

}  // namespace

TEST_CASE("olss_new") {
  const SketchState s = olss_new(100, 64, 10, 7);
  CHECK(s.tasks_absorbed == 0);
  CHECK(s.a_hat.rows() == 0);
  CHECK(s.a_hat.cols() == 64);
  CHECK(s.b_hat.cols() == 10);
  CHECK(s.seed_root == 7);
  CHECK(s == olss_new(100, 64, 10, 7));
  CHECK_THROWS_AS(olss_new(0, 64, 10, 7), ArgumentError);
}

TEST_CASE("olss_absorb keeps everything when capacity suffices") {
  const Matrix a1 = random_matrix(5, 4, 1);
  const Matrix a2 = random_matrix(6, 4, 2);
  const Matrix all = vstack(a1, a2);
  SketchState s = olss_new(20, 4, 11, 3);
  s = olss_absorb(s, tagged_task(a1, 0, 11, 1));
  s = olss_absorb(s, tagged_task(a2, 5, 11, 2));
  REQUIRE(s.a_hat.rows() == 11);
  std::vector<std::size_t> ids;
  for (std::size_t r = 0; r < 11; ++r) ids.push_back(row_id(s.b_hat, r));
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 0; i < 11; ++i) CHECK(ids[i] == i);
  check_pairs_are_copies(s, all);
  CHECK(s.tasks_absorbed == 2);
}

TEST_CASE("first absorb with capacity n_1 permutes the task") {
  const Matrix a1 = random_matrix(8, 3, 4);
  const SketchState s = olss_absorb(olss_new(8, 3, 8, 5), tagged_task(a1, 0, 8, 1));
  const auto [a, b] = olss_training_set(s);
  REQUIRE(a.rows() == 8);
  std::vector<bool> seen(8, false);
  for (std::size_t r = 0; r < 8; ++r) {
    const auto id = row_id(b, r);
    CHECK_FALSE(seen[id]);
    seen[id] = true;
  }
  check_pairs_are_copies(s, a1);
}

TEST_CASE("two-task retention matches successive-sampling inclusion") {
  const std::size_t d = 6;
  Matrix a1 = olss::testing::random_matrix(4, d, 10, 0.05);
  for (std::size_t i = 0; i < 4; ++i) a1(i, i) += 1.0;
  // Two rows in new directions plus a faint echo of a first-task direction.
  Matrix a2{{0, 0, 0, 0, 10, 0}, {0, 0, 0, 0, 0, 10}, {0, 0, 0, 0, 0, 0}};
  for (std::size_t j = 0; j < d; ++j) a2(2, j) = 0.1 * a1(0, j);
  const Matrix all = vstack(a1, a2);

  // After the first absorb every row of a1 is kept, so the stacked rows for the
  // second absorb are a1 (some order) over a2 and scores are order-equivariant.
  const auto p = sampling_distribution(leverage_scores(all));
  const auto expected = successive_inclusion(p, 4);

  const int trials = 10000;
  std::vector<int> kept(all.rows(), 0);
  for (int t = 0; t < trials; ++t) {
    SketchState s = olss_new(4, d, 7, static_cast<std::uint64_t>(t));
    s = olss_absorb(s, tagged_task(a1, 0, 7, 1));
    s = olss_absorb(s, tagged_task(a2, 4, 7, 2));
    REQUIRE(s.a_hat.rows() == 4);
    for (std::size_t r = 0; r < 4; ++r) ++kept[row_id(s.b_hat, r)];
    if (t < 20) check_pairs_are_copies(s, all);
  }
  for (std::size_t i = 0; i < all.rows(); ++i) {
    const double f = static_cast<double>(kept[i]) / trials;
    CHECK(std::abs(f - expected[i]) <= 0.02);
  }
  // The new directions survive far more often than the echo.
  CHECK(expected[4] > 0.6);
  CHECK(expected[5] > 0.6);
  CHECK(expected[6] < 0.1);
}

TEST_CASE("constant memory and row-pair integrity over a task stream") {
  const std::size_t ell = 12, d = 5, tasks = 8;
  SketchState s = olss_new(ell, d, 1 + tasks * 20, 9);
  Matrix all(0, d);
  std::size_t total = 0, max_n = 0;
  for (std::size_t t = 1; t <= tasks; ++t) {
    const std::size_t n = 10 + 2 * t;
    const Matrix a = random_matrix(n, d, 100 + t);
    s = olss_absorb(s, tagged_task(a, total, 1 + tasks * 20, t));
    all = vstack(all, a);
    total += n;
    max_n = std::max(max_n, n);
    CHECK(s.a_hat.rows() == std::min(ell, total));
    CHECK(s.b_hat.rows() == s.a_hat.rows());
    CHECK(s.tasks_absorbed == t);
  }
  CHECK(s.peak_rows <= ell + max_n);
  check_pairs_are_copies(s, all);
}

TEST_CASE("absorb is deterministic and seed sensitive") {
  auto run = [](std::uint64_t seed, LeverageMode mode) {
    SketchState s = olss_new(6, 4, 30, seed);
    s.mode = mode;
    for (std::size_t t = 1; t <= 3; ++t) s = olss_absorb(s, tagged_task(random_matrix(10, 4, t), (t - 1) * 10, 30, t));
    return s;
  };
  for (auto mode : {LeverageMode::exact, LeverageMode::approximate}) {
    CHECK(run(1, mode) == run(1, mode));
    CHECK_FALSE(run(1, mode).b_hat == run(2, mode).b_hat);
    CHECK(run(1, mode).a_hat.rows() == 6);
  }
}

TEST_CASE("uniform leverage gives uniform inclusion") {
  // Two copies of an orthonormal basis: every row scores 1/2.
  const Matrix half = Matrix::identity(4);
  const int trials = 4000;
  std::vector<int> kept(8, 0);
  for (int t = 0; t < trials; ++t) {
    SketchState s = olss_new(4, 4, 8, static_cast<std::uint64_t>(t) * 7919);
    s = olss_absorb(s, tagged_task(half, 0, 8, 1));
    s = olss_absorb(s, tagged_task(half, 4, 8, 2));
    for (std::size_t r = 0; r < 4; ++r) ++kept[row_id(s.b_hat, r)];
  }
  const double sigma = std::sqrt(0.5 * 0.5 / trials);
  for (int k : kept) CHECK(std::abs(static_cast<double>(k) / trials - 0.5) <= 4.0 * sigma);
}

TEST_CASE("olss_training_set before any absorb") {
  CHECK_THROWS_AS(olss_training_set(olss_new(3, 2, 2, 0)), StateError);
}

TEST_CASE("absorb errors") {
  const SketchState s = olss_new(3, 2, 2, 0);
  CHECK_THROWS_AS(olss_absorb(s, {Matrix(3, 3), Matrix(3, 2), 1}), ShapeError);
  CHECK_THROWS_AS(olss_absorb(s, {Matrix(3, 2), Matrix(3, 3), 1}), ShapeError);
  CHECK_THROWS_AS(olss_absorb(s, {Matrix(3, 2), Matrix(2, 2), 1}), ShapeError);
  CHECK_THROWS_AS(olss_absorb(s, {Matrix(3, 2), Matrix(3, 2), 1}), DegenerateInputError);
}

TEST_CASE("sketch checkpoint round-trip") {
  const auto dir = olss::testing::scratch_dir("sketch");
  SketchState s = olss_new(5, 3, 12, 42);
  s = olss_absorb(s, tagged_task(random_matrix(6, 3, 1), 0, 12, 1));
  s = olss_absorb(s, tagged_task(random_matrix(6, 3, 2), 6, 12, 2));
  save_sketch(dir, s);
  const SketchState back = load_sketch(dir);
  CHECK(back == s);
  // Continuing from the checkpoint matches continuing in memory.
  const TaskData next = tagged_task(random_matrix(4, 3, 3), 0, 12, 3);
  CHECK(olss_absorb(back, next) == olss_absorb(s, next));

  std::filesystem::remove(dir / "b_hat.mat");
  CHECK_THROWS_AS(load_sketch(dir), FormatError);
}
