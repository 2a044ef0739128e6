#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "olss/sketch.hpp"
#include "olss/tasks.hpp"

namespace olss {

enum class Method { sgd, ewc, olss };

std::string to_string(Method m);
Method parse_method(const std::string& s);

struct ExperimentConfig {
  std::vector<std::size_t> hidden = {100, 100};
  double lr = 0.1;
  int epochs = 5;
  std::size_t batch = 50;
  std::size_t sketch_size = 0;  // 0: size of the first task's training set
  double lambda = 30.0;
  LeverageMode leverage = LeverageMode::exact;

  /// Throws ArgumentError describing the first invalid field.
  void validate() const;
};

/// acc[k-1][i-1] is the accuracy on task i's test set after training through
/// task k (defined for i <= k). wall_clock[k-1] is the training time of task
/// k in seconds (evaluation excluded).
struct MetricsTable {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> acc;
  std::vector<double> wall_clock;

  std::size_t tasks() const { return acc.size(); }
  double total_wall_clock() const;
};

/// Trains one model over the task stream with the given method and records
/// the lower-triangular accuracy table. Initial parameters and per-task
/// shuffling depend only on `seed`, so methods compared under one seed see
/// identical starting points.
MetricsTable run_experiment(Method method, const TaskSequence& seq, const ExperimentConfig& cfg,
                            std::uint64_t seed);

/// Called once per finished run with its slot index; calls are serialised.
using RunCallback = std::function<void(std::size_t, const MetricsTable&)>;

/// All (method, seed) pairs, method-major. Runs on up to `threads` workers;
/// each run owns its slot of the result vector. The first failure is
/// rethrown after all workers stop.
std::vector<MetricsTable> run_grid(const std::vector<Method>& methods, const TaskSequence& seq,
                                   const ExperimentConfig& cfg,
                                   const std::vector<std::uint64_t>& seeds, std::size_t threads,
                                   const RunCallback& on_complete = {});

/// Mean of acc[k][1..k]; k counts trained tasks (1-based).
double average_accuracy(const MetricsTable& m, std::size_t k);
/// acc[k][1].
double task1_accuracy(const MetricsTable& m, std::size_t k);

// CSV columns: method,seed,task_trained,task_evaluated,accuracy,wall_clock_s
// (tasks 1-based).
void write_metrics_csv(std::ostream& out, const std::vector<MetricsTable>& tables,
                       bool header = true);
/// Groups rows by (method, seed) in first-seen order. Errors carry the line.
std::vector<MetricsTable> read_metrics_csv(std::istream& in);

}  // namespace olss
