#pragma once

#include <string>
#include <vector>

#include "olss/experiment.hpp"

namespace olss {

struct Series {
  std::string name;
  std::vector<double> values;  // y at x = 1, 2, ...
};

/// Per-method aggregates, each averaged over that method's seeds.
struct MethodSummary {
  std::string method;
  std::size_t seeds = 0;
  std::vector<double> average_accuracy;  // index k-1
  std::vector<double> task1_accuracy;    // index k-1
  std::vector<double> final_task_accuracy;  // acc[T][i], index i-1
  double final_average_mean = 0.0, final_average_min = 0.0, final_average_max = 0.0;
  double final_task1_mean = 0.0, final_task1_min = 0.0, final_task1_max = 0.0;
  double wall_clock_mean = 0.0, wall_clock_min = 0.0, wall_clock_max = 0.0;
};

/// Groups tables by method (first-seen order). All tables of one method must
/// cover the same number of tasks.
std::vector<MethodSummary> summarize(const std::vector<MetricsTable>& tables);

/// Polyline chart, one line per series. Diagnostic output, not pixel-exact.
std::string render_svg_chart(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<Series>& series);

/// Fixed-width text table: method, seeds, final average accuracy, task-1
/// retention, total wall clock (mean [min, max] over seeds).
std::string render_summary_table(const std::vector<MethodSummary>& summaries);

}  // namespace olss
