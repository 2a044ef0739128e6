#include "olss/sketch.hpp"

#include <algorithm>
#include <sstream>
#include <string>

#include "olss/error.hpp"
#include "olss/leverage.hpp"
#include "olss/matrix_io.hpp"
#include "olss/rng.hpp"

namespace olss {

SketchState olss_new(std::size_t capacity, std::size_t input_dim, std::size_t output_dim,
                     std::uint64_t seed_root) {
  if (capacity == 0) throw ArgumentError("olss_new: capacity must be >= 1");
  SketchState s;
  s.capacity = capacity;
  s.input_dim = input_dim;
  s.output_dim = output_dim;
  s.a_hat = Matrix(0, input_dim);
  s.b_hat = Matrix(0, output_dim);
  s.seed_root = seed_root;
  return s;
}

SketchState olss_absorb(SketchState state, const TaskData& task) {
  if (task.inputs.rows() != task.targets.rows())
    throw ShapeError("olss_absorb: inputs and targets row counts differ");
  if (task.inputs.cols() != state.input_dim || task.targets.cols() != state.output_dim)
    throw ShapeError("olss_absorb: task is " + std::to_string(task.inputs.cols()) + "/" +
                     std::to_string(task.targets.cols()) + " wide, sketch expects " +
                     std::to_string(state.input_dim) + "/" + std::to_string(state.output_dim));

  Matrix stacked_a = vstack(state.a_hat, task.inputs);
  Matrix stacked_b = vstack(state.b_hat, task.targets);
  state.peak_rows = std::max(state.peak_rows, stacked_a.rows());
  if (stacked_a.rows() == 0) throw DegenerateInputError("olss_absorb: no rows to sample from");

  const LeverageScores scores =
      state.mode == LeverageMode::exact
          ? leverage_scores(stacked_a)
          : approx_leverage_scores(stacked_a,
                                   state.approx_oversample ? state.approx_oversample
                                                           : 4 * state.input_dim,
                                   splitmix64(state.seed_root ^ ~task.task_id));
  const std::vector<double> p = sampling_distribution(scores);
  const SampleSelection pick = sample_without_replacement(
      p, state.capacity, splitmix64(state.seed_root ^ task.task_id));

  state.a_hat = select_rows(stacked_a, pick.indices);
  state.b_hat = select_rows(stacked_b, pick.indices);
  ++state.tasks_absorbed;
  return state;
}

std::pair<Matrix, Matrix> olss_training_set(const SketchState& state) {
  if (state.tasks_absorbed == 0) throw StateError("olss_training_set: no task absorbed yet");
  return {state.a_hat, state.b_hat};
}

void save_sketch(const std::filesystem::path& dir, const SketchState& state) {
  std::filesystem::create_directories(dir);
  save_matrix(dir / "a_hat.mat", state.a_hat);
  save_matrix(dir / "b_hat.mat", state.b_hat);
  std::ostringstream m;
  m << "capacity " << state.capacity << '\n'
    << "input_dim " << state.input_dim << '\n'
    << "output_dim " << state.output_dim << '\n'
    << "tasks_absorbed " << state.tasks_absorbed << '\n'
    << "seed_root " << state.seed_root << '\n'
    << "mode " << (state.mode == LeverageMode::exact ? "exact" : "approximate") << '\n'
    << "approx_oversample " << state.approx_oversample << '\n'
    << "peak_rows " << state.peak_rows << '\n';
  write_file_atomic(dir / "sketch.txt", m.str());
}

SketchState load_sketch(const std::filesystem::path& dir) {
  SketchState s;
  std::istringstream in(read_file(dir / "sketch.txt"));
  std::string key;
  while (in >> key) {
    if (key == "mode") {
      std::string v;
      in >> v;
      if (v != "exact" && v != "approximate") throw FormatError("sketch.txt: bad mode " + v);
      s.mode = v == "exact" ? LeverageMode::exact : LeverageMode::approximate;
      continue;
    }
    std::uint64_t v = 0;
    if (!(in >> v)) throw FormatError("sketch.txt: bad value for " + key);
    if (key == "capacity") s.capacity = v;
    else if (key == "input_dim") s.input_dim = v;
    else if (key == "output_dim") s.output_dim = v;
    else if (key == "tasks_absorbed") s.tasks_absorbed = v;
    else if (key == "seed_root") s.seed_root = v;
    else if (key == "approx_oversample") s.approx_oversample = v;
    else if (key == "peak_rows") s.peak_rows = v;
    else throw FormatError("sketch.txt: unknown key " + key);
  }
  s.a_hat = load_matrix(dir / "a_hat.mat");
  s.b_hat = load_matrix(dir / "b_hat.mat");
  if (s.capacity == 0 || s.a_hat.rows() != s.b_hat.rows() || s.a_hat.cols() != s.input_dim ||
      s.b_hat.cols() != s.output_dim || s.a_hat.rows() > s.capacity)
    throw FormatError("sketch checkpoint in " + dir.string() + " is inconsistent");
  return s;
}

}  // namespace olss
