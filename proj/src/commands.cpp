#include "olss/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "olss/error.hpp"
#include "olss/experiment.hpp"
#include "olss/fd_sketch.hpp"
#include "olss/leverage.hpp"
#include "olss/matrix_io.hpp"
#include "olss/report.hpp"
#include "olss/tasks.hpp"

namespace fs = std::filesystem;

namespace olss {

namespace {

struct GenDataArgs {
  std::size_t classes = 10;
  std::size_t per_class = 60;
  std::size_t side = 8;
  double noise = 0.25;
  std::uint64_t seed = 0;
  std::string out;
};

struct SketchArgs {
  std::string input;
  std::string method = "leverage";
  std::size_t sketch_size = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool approx = false;
};

struct BenchArgs {
  std::vector<std::string> methods = {"sgd", "ewc", "olss"};
  std::string task_kind = "rotated";
  std::size_t tasks = 10;
  std::size_t sketch_size = 0;
  double lr = 0.1;
  int epochs = 5;
  std::size_t batch = 50;
  std::vector<std::size_t> hidden = {100, 100};
  double lambda = 30.0;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::string out;
  bool approx = false;
  std::string idx_images;
  std::string idx_labels;
  std::size_t classes = 10;
  std::size_t per_class = 60;
  std::size_t side = 8;
  double noise = 0.25;
  std::uint64_t data_seed = 0;
};

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
};

std::size_t worker_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("OLSS_THREADS")) {
    char* end = nullptr;
    const unsigned long cap = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || cap == 0)
      throw ArgumentError("OLSS_THREADS must be a positive integer");
    n = std::min<std::size_t>(n, cap);
  }
  return n;
}

std::string labels_csv(const BaseDataset& ds) {
  std::vector<char> is_test(ds.labels.size(), 0);
  for (auto i : ds.test_idx) is_test[i] = 1;
  std::ostringstream out;
  out << "index,label,split\n";
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    out << i << ',' << ds.labels[i] << ',' << (is_test[i] ? "test" : "train") << '\n';
  return out.str();
}

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  const BaseDataset ds = gen_base_dataset(a.classes, a.per_class, a.side, a.noise, a.seed);
  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_matrix(dir / "images.mat", ds.images);
  write_file_atomic(dir / "labels.csv", labels_csv(ds));
  out << "wrote " << ds.images.rows() << "x" << ds.images.cols() << " images to "
      << (dir / "images.mat").string() << " and labels to " << (dir / "labels.csv").string()
      << '\n';
  return kExitOk;
}

int cmd_sketch(const SketchArgs& a, std::ostream& out) {
  if (a.method != "fd" && a.method != "leverage")
    throw ArgumentError("--method must be fd or leverage");
  if (a.sketch_size == 0) throw ArgumentError("--sketch-size must be >= 1");
  if (a.approx && a.method != "leverage")
    throw ArgumentError("--approx-leverage only applies to --method leverage");
  const Matrix input = load_matrix(a.input);
  if (input.rows() == 0 || input.cols() == 0) throw DataError("input matrix is empty");

  Matrix sketch;
  if (a.method == "fd") {
    FDState st = fd_append(fd_new(a.sketch_size, input.cols()), input);
    sketch = fd_sketch(st);
  } else {
    const LeverageScores scores = a.approx
                                      ? approx_leverage_scores(input, 4 * input.cols(), a.seed)
                                      : leverage_scores(input);
    const SampleSelection pick =
        sample_without_replacement(sampling_distribution(scores), a.sketch_size, a.seed);
    sketch = select_rows(input, pick.indices);
  }

  const double cov_err = spectral_norm(subtract(matmul_tn(input, input), matmul_tn(sketch, sketch)));
  const double norm = spectral_norm(input);
  save_matrix(a.out, sketch);
  out << "method=" << a.method << " rows=" << input.rows() << " sketch_rows=" << sketch.rows()
      << " covariance_error=" << cov_err << " spectral_norm_sq=" << norm * norm;
  if (a.method == "fd") {
    out << " bound_rhs_k0=" << fd_error_bound(input, sketch, 0).rhs;
  }
  out << '\n';
  return kExitOk;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  std::vector<Method> methods;
  for (const auto& m : a.methods) methods.push_back(parse_method(m));
  if (methods.empty()) throw ArgumentError("--method needs at least one method");
  if (a.seeds.empty()) throw ArgumentError("--seeds needs at least one seed");
  const TaskKind kind = parse_task_kind(a.task_kind);
  if (a.tasks < 1) throw ArgumentError("--tasks must be >= 1");
  if (a.idx_images.empty() != a.idx_labels.empty())
    throw ArgumentError("--idx-images and --idx-labels must be given together");

  ExperimentConfig cfg;
  cfg.hidden = a.hidden;
  cfg.lr = a.lr;
  cfg.epochs = a.epochs;
  cfg.batch = a.batch;
  cfg.sketch_size = a.sketch_size;
  cfg.lambda = a.lambda;
  cfg.leverage = a.approx ? LeverageMode::approximate : LeverageMode::exact;
  cfg.validate();
  const std::size_t threads = worker_threads();

  const BaseDataset base = a.idx_images.empty()
                               ? gen_base_dataset(a.classes, a.per_class, a.side, a.noise, a.data_seed)
                               : load_idx_dataset(a.idx_images, a.idx_labels);
  const TaskSequence seq = make_task_sequence(kind, base, a.tasks, a.data_seed);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const fs::path csv_path = dir / "metrics.csv";

  // Completed runs are flushed in canonical (method, seed) order after each
  // run finishes, so an aborted bench leaves every finished run on disk.
  std::map<std::size_t, MetricsTable> done;
  auto flush = [&](std::size_t slot, const MetricsTable& t) {
    done.emplace(slot, t);
    std::vector<MetricsTable> ordered;
    for (const auto& [_, table] : done) ordered.push_back(table);
    std::ostringstream csv;
    write_metrics_csv(csv, ordered);
    write_file_atomic(csv_path, csv.str());
  };
  const auto tables = run_grid(methods, seq, cfg, a.seeds, threads, flush);

  const std::string table = render_summary_table(summarize(tables));
  write_file_atomic(dir / "summary.txt", table);
  out << "task kind " << to_string(kind) << ", " << seq.tasks.size() << " tasks, "
      << a.seeds.size() << " seed(s)\n"
      << table << "metrics written to " << csv_path.string() << '\n';
  return kExitOk;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  std::vector<MetricsTable> tables;
  for (const auto& path : a.inputs) {
    std::istringstream in(read_file(path));
    try {
      auto t = read_metrics_csv(in);
      tables.insert(tables.end(), t.begin(), t.end());
    } catch (const FormatError& e) {
      throw FormatError(path + ": " + e.what());
    }
  }
  const auto summaries = summarize(tables);

  std::vector<Series> avg, t1, fin;
  for (const auto& s : summaries) {
    avg.push_back({s.method, s.average_accuracy});
    t1.push_back({s.method, s.task1_accuracy});
    fin.push_back({s.method, s.final_task_accuracy});
  }
  const std::string table = render_summary_table(summaries);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_file_atomic(dir / "avg_accuracy.svg",
                    render_svg_chart("Average accuracy over tasks seen", "tasks trained",
                                     "average accuracy", avg));
  write_file_atomic(dir / "task1_accuracy.svg",
                    render_svg_chart("Task 1 accuracy", "tasks trained", "accuracy", t1));
  write_file_atomic(dir / "final_task_accuracy.svg",
                    render_svg_chart("Per-task accuracy after the last task", "task",
                                     "accuracy", fin));
  write_file_atomic(dir / "wall_clock.txt", table);
  out << table;
  return kExitOk;
}

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ArgumentError*>(&e)) return kExitArgument;
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const DataError*>(&e) ||
      dynamic_cast<const ShapeError*>(&e))
    return kExitData;
  return kExitNumeric;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming leverage-score sketching and continual-learning benchmarks", "olss"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate the synthetic base dataset");
  gen_cmd->add_option("--classes", gen.classes, "Number of classes")->capture_default_str();
  gen_cmd->add_option("--per-class", gen.per_class, "Samples per class")->capture_default_str();
  gen_cmd->add_option("--side", gen.side, "Image side length")->capture_default_str();
  gen_cmd->add_option("--noise", gen.noise, "Pixel noise standard deviation")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  SketchArgs sk;
  auto* sketch_cmd = app.add_subcommand("sketch", "Sketch a matrix with FD or leverage sampling");
  sketch_cmd->add_option("--input", sk.input, "OLSSMAT1 or CSV matrix")->required();
  sketch_cmd->add_option("--method", sk.method, "fd or leverage")->capture_default_str();
  sketch_cmd->add_option("--sketch-size", sk.sketch_size, "Sketch rows")->required();
  sketch_cmd->add_option("--seed", sk.seed, "Sampling seed")->capture_default_str();
  sketch_cmd->add_option("--out", sk.out, "Output matrix (.csv for CSV, else OLSSMAT1)")->required();
  sketch_cmd->add_flag("--approx-leverage", sk.approx, "Use approximate leverage scores");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run the continual-learning benchmark");
  bench_cmd->add_option("--method,--methods", bench.methods, "Methods: sgd,ewc,olss")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--task-kind", bench.task_kind, "rotated, permuted or incremental")
      ->capture_default_str();
  bench_cmd->add_option("--tasks", bench.tasks, "Number of tasks")->capture_default_str();
  bench_cmd->add_option("--sketch-size", bench.sketch_size, "OLSS rows (0: first task size)")
      ->capture_default_str();
  bench_cmd->add_option("--lr", bench.lr, "Learning rate")->capture_default_str();
  bench_cmd->add_option("--epochs", bench.epochs, "Epochs per task")->capture_default_str();
  bench_cmd->add_option("--batch", bench.batch, "Minibatch size")->capture_default_str();
  bench_cmd->add_option("--hidden", bench.hidden, "Hidden layer sizes")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--lambda", bench.lambda, "EWC penalty weight")->capture_default_str();
  bench_cmd->add_option("--seeds", bench.seeds, "Run seeds")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Output directory")->required();
  bench_cmd->add_flag("--approx-leverage", bench.approx, "Approximate leverage scores in OLSS");
  bench_cmd->add_option("--idx-images", bench.idx_images, "IDX image file (real-data runs)");
  bench_cmd->add_option("--idx-labels", bench.idx_labels, "IDX label file (real-data runs)");
  bench_cmd->add_option("--classes", bench.classes, "Synthetic classes")->capture_default_str();
  bench_cmd->add_option("--per-class", bench.per_class, "Synthetic samples per class")
      ->capture_default_str();
  bench_cmd->add_option("--side", bench.side, "Synthetic image side")->capture_default_str();
  bench_cmd->add_option("--noise", bench.noise, "Synthetic pixel noise")->capture_default_str();
  bench_cmd->add_option("--data-seed", bench.data_seed, "Dataset and permutation seed")
      ->capture_default_str();

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Render charts and a timing table from metrics CSVs");
  report_cmd->add_option("csv", report.inputs, "Metrics CSV files")->required();
  report_cmd->add_option("--out", report.out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitArgument;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(gen, out);
    if (sketch_cmd->parsed()) return cmd_sketch(sk, out);
    if (bench_cmd->parsed()) return cmd_bench(bench, out);
    if (report_cmd->parsed()) return cmd_report(report, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitArgument;
}

}  // namespace olss
