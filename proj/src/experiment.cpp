#include "olss/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "olss/error.hpp"
#include "olss/rng.hpp"

namespace olss {

namespace {

constexpr std::uint64_t kInitStream = 0x1d1c0ffee0ddf00dULL;
constexpr std::uint64_t kShuffleStream = 0x5eedba5eba11ULL;

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find(',', start);
    out.push_back(line.substr(start, end == std::string::npos ? std::string::npos : end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

template <typename T>
T parse_field(const std::string& s, std::size_t line_no, const char* name) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw FormatError("metrics CSV line " + std::to_string(line_no) + ": bad " + name + " '" + s +
                      "'");
  return v;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::sgd: return "sgd";
    case Method::ewc: return "ewc";
    case Method::olss: return "olss";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "sgd") return Method::sgd;
  if (s == "ewc") return Method::ewc;
  if (s == "olss") return Method::olss;
  throw ArgumentError("unknown method '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ArgumentError("learning rate must be > 0");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch < 1) throw ArgumentError("batch size must be >= 1");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be >= 0");
  for (auto h : hidden)
    if (h == 0) throw ArgumentError("hidden layer sizes must be >= 1");
}

double MetricsTable::total_wall_clock() const {
  double s = 0.0;
  for (double w : wall_clock) s += w;
  return s;
}

MetricsTable run_experiment(Method method, const TaskSequence& seq, const ExperimentConfig& cfg,
                            std::uint64_t seed) {
  cfg.validate();
  if (seq.tasks.empty()) throw ArgumentError("run_experiment: empty task sequence");

  std::vector<std::size_t> layers{seq.input_dim};
  layers.insert(layers.end(), cfg.hidden.begin(), cfg.hidden.end());
  layers.push_back(seq.classes);
  MLPParams params = init_mlp(layers, splitmix64(seed ^ kInitStream));

  const std::size_t ell = cfg.sketch_size ? cfg.sketch_size : seq.tasks.front().train.inputs.rows();
  SketchState sketch = olss_new(std::max<std::size_t>(ell, 1), seq.input_dim, seq.classes, seed);
  sketch.mode = cfg.leverage;
  EWCAnchors anchors;
  anchors.lambda = cfg.lambda;

  MetricsTable table;
  table.method = to_string(method);
  table.seed = seed;

  for (std::size_t k = 0; k < seq.tasks.size(); ++k) {
    const Task& task = seq.tasks[k];
    SGDConfig sgd{cfg.lr, cfg.epochs, cfg.batch, splitmix64(seed ^ kShuffleStream ^ (k + 1))};

    const auto start = std::chrono::steady_clock::now();
    try {
      switch (method) {
        case Method::sgd:
          params = sgd_epochs(std::move(params), task.train.inputs, task.train.targets, task.mask, sgd);
          break;
        case Method::ewc: {
          params = sgd_epochs(std::move(params), task.train.inputs, task.train.targets, task.mask,
                              sgd, &anchors);
          anchors.anchors.push_back(
              {params.flatten(), fisher_diag(params, task.train.inputs, task.train.targets, task.mask)});
          break;
        }
        case Method::olss: {
          sketch = olss_absorb(std::move(sketch), task.train);
          const auto [a_hat, b_hat] = olss_training_set(sketch);
          params = sgd_epochs(std::move(params), a_hat, b_hat, task.mask, sgd);
          break;
        }
      }
    } catch (const TrainingError& e) {
      throw TrainingError(to_string(method) + " seed " + std::to_string(seed) + " task " +
                              std::to_string(k + 1) + ": " + e.what(),
                          e.epoch());
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    table.wall_clock.push_back(elapsed.count());

    std::vector<double> row;
    for (std::size_t i = 0; i <= k; ++i) {
      const Task& eval = seq.tasks[i];
      row.push_back(evaluate(params, eval.test.inputs, eval.test.targets, task.mask));
    }
    table.acc.push_back(std::move(row));
  }
  return table;
}

std::vector<MetricsTable> run_grid(const std::vector<Method>& methods, const TaskSequence& seq,
                                   const ExperimentConfig& cfg,
                                   const std::vector<std::uint64_t>& seeds, std::size_t threads,
                                   const RunCallback& on_complete) {
  cfg.validate();
  const std::size_t jobs = methods.size() * seeds.size();
  std::vector<MetricsTable> results(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex sink;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs && !failed; j = next++) {
      try {
        results[j] = run_experiment(methods[j / seeds.size()], seq, cfg, seeds[j % seeds.size()]);
        if (on_complete) {
          std::lock_guard lock(sink);
          on_complete(j, results[j]);
        }
      } catch (...) {
        errors[j] = std::current_exception();
        failed = true;
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(jobs, 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

double average_accuracy(const MetricsTable& m, std::size_t k) {
  if (k < 1 || k > m.tasks())
    throw ArgumentError("average_accuracy: k = " + std::to_string(k) + " outside 1.." +
                        std::to_string(m.tasks()));
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += m.acc[k - 1][i];
  return s / static_cast<double>(k);
}

double task1_accuracy(const MetricsTable& m, std::size_t k) {
  if (k < 1 || k > m.tasks())
    throw ArgumentError("task1_accuracy: k = " + std::to_string(k) + " outside 1.." +
                        std::to_string(m.tasks()));
  return m.acc[k - 1][0];
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsTable>& tables, bool header) {
  if (header) out << "method,seed,task_trained,task_evaluated,accuracy,wall_clock_s\n";
  for (const auto& t : tables) {
    for (std::size_t k = 0; k < t.tasks(); ++k) {
      char wall[32];
      std::snprintf(wall, sizeof wall, "%.6f", k < t.wall_clock.size() ? t.wall_clock[k] : 0.0);
      for (std::size_t i = 0; i <= k; ++i)
        out << t.method << ',' << t.seed << ',' << k + 1 << ',' << i + 1 << ','
            << format_double(t.acc[k][i]) << ',' << wall << '\n';
    }
  }
}

std::vector<MetricsTable> read_metrics_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<MetricsTable> tables;
  std::map<std::pair<std::string, std::uint64_t>, std::size_t> slot;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (!saw_header) {
      if (line.rfind("method,seed,task_trained,task_evaluated,accuracy,wall_clock_s", 0) != 0)
        throw FormatError("metrics CSV line " + std::to_string(line_no) + ": missing header");
      saw_header = true;
      continue;
    }
    const auto f = split_csv(line);
    if (f.size() != 6)
      throw FormatError("metrics CSV line " + std::to_string(line_no) + ": expected 6 fields, got " +
                        std::to_string(f.size()));
    if (f[0].empty()) throw FormatError("metrics CSV line " + std::to_string(line_no) + ": empty method");
    const auto seed = parse_field<std::uint64_t>(f[1], line_no, "seed");
    const auto k = parse_field<std::size_t>(f[2], line_no, "task_trained");
    const auto i = parse_field<std::size_t>(f[3], line_no, "task_evaluated");
    const auto acc = parse_field<double>(f[4], line_no, "accuracy");
    const auto wall = parse_field<double>(f[5], line_no, "wall_clock_s");
    if (k < 1 || i < 1 || i > k)
      throw FormatError("metrics CSV line " + std::to_string(line_no) +
                        ": need 1 <= task_evaluated <= task_trained");
    if (!(acc >= 0.0 && acc <= 1.0))
      throw FormatError("metrics CSV line " + std::to_string(line_no) + ": accuracy outside [0,1]");

    auto key = std::make_pair(f[0], seed);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, tables.size()).first;
      tables.push_back({});
      tables.back().method = f[0];
      tables.back().seed = seed;
    }
    MetricsTable& t = tables[it->second];
    if (t.acc.size() < k) {
      t.acc.resize(k);
      t.wall_clock.resize(k, 0.0);
    }
    if (t.acc[k - 1].size() < k) t.acc[k - 1].resize(k, std::nan(""));
    t.acc[k - 1][i - 1] = acc;
    t.wall_clock[k - 1] = wall;
  }
  if (!saw_header) throw FormatError("metrics CSV: empty input");
  if (tables.empty()) throw FormatError("metrics CSV: no data rows");
  for (const auto& t : tables)
    for (std::size_t k = 0; k < t.tasks(); ++k)
      for (std::size_t i = 0; i <= k; ++i)
        if (t.acc[k].size() != k + 1 || std::isnan(t.acc[k][i]))
          throw FormatError("metrics CSV: " + t.method + " seed " + std::to_string(t.seed) +
                            " is missing task_trained=" + std::to_string(k + 1) +
                            " task_evaluated=" + std::to_string(i + 1));
  return tables;
}

}  // namespace olss
