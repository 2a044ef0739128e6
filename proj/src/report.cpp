#include "olss/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "olss/error.hpp"

namespace olss {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

struct Stats {
  double mean = 0.0, min = 0.0, max = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  return s;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::vector<MethodSummary> summarize(const std::vector<MetricsTable>& tables) {
  std::vector<MethodSummary> out;
  std::vector<std::vector<const MetricsTable*>> groups;
  for (const auto& t : tables) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const MethodSummary& s) { return s.method == t.method; });
    if (it == out.end()) {
      out.push_back({});
      out.back().method = t.method;
      groups.emplace_back();
      it = out.end() - 1;
    }
    groups[static_cast<std::size_t>(it - out.begin())].push_back(&t);
  }

  for (std::size_t g = 0; g < out.size(); ++g) {
    const auto& members = groups[g];
    const std::size_t tasks = members.front()->tasks();
    for (const auto* t : members)
      if (t->tasks() != tasks)
        throw FormatError("method " + out[g].method + " has runs with differing task counts");
    MethodSummary& s = out[g];
    s.seeds = members.size();
    s.average_accuracy.assign(tasks, 0.0);
    s.task1_accuracy.assign(tasks, 0.0);
    s.final_task_accuracy.assign(tasks, 0.0);
    std::vector<double> fin_avg, fin_t1, wall;
    const double inv = 1.0 / static_cast<double>(members.size());
    for (const auto* t : members) {
      for (std::size_t k = 1; k <= tasks; ++k) {
        s.average_accuracy[k - 1] += average_accuracy(*t, k) * inv;
        s.task1_accuracy[k - 1] += task1_accuracy(*t, k) * inv;
      }
      for (std::size_t i = 0; i < tasks; ++i) s.final_task_accuracy[i] += t->acc[tasks - 1][i] * inv;
      fin_avg.push_back(average_accuracy(*t, tasks));
      fin_t1.push_back(task1_accuracy(*t, tasks));
      wall.push_back(t->total_wall_clock());
    }
    const Stats a = stats(fin_avg), b = stats(fin_t1), c = stats(wall);
    s.final_average_mean = a.mean, s.final_average_min = a.min, s.final_average_max = a.max;
    s.final_task1_mean = b.mean, s.final_task1_min = b.min, s.final_task1_max = b.max;
    s.wall_clock_mean = c.mean, s.wall_clock_min = c.min, s.wall_clock_max = c.max;
  }
  return out;
}

std::string render_svg_chart(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<Series>& series) {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 130, kTop = 40, kBottom = 50;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  std::size_t n = 1;
  for (const auto& s : series) n = std::max(n, s.values.size());
  auto px = [&](std::size_t i) {
    return kLeft + (n == 1 ? pw / 2 : pw * static_cast<double>(i) / static_cast<double>(n - 1));
  };
  auto py = [&](double v) { return kTop + ph * (1.0 - std::clamp(v, 0.0, 1.0)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = t / 5.0;
    svg << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << py(v) << "\" y2=\""
        << py(v) << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
        << fmt("%.1f", v) << "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i)
    svg << "<text x=\"" << px(i) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">"
        << i + 1 << "</text>\n";
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">"
      << xml_escape(x_label) << "</text>\n"
      << "<text transform=\"translate(16," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << xml_escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kPalette[s % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[s].values.size(); ++i)
      svg << (i ? " " : "") << fmt("%.2f", px(i)) << ',' << fmt("%.2f", py(series[s].values[i]));
    svg << "\"/>\n";
    for (std::size_t i = 0; i < series[s].values.size(); ++i)
      svg << "<circle cx=\"" << fmt("%.2f", px(i)) << "\" cy=\"" << fmt("%.2f", py(series[s].values[i]))
          << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
    const double ly = kTop + 16 + 18 * static_cast<double>(s);
    svg << "<line x1=\"" << kLeft + pw + 12 << "\" x2=\"" << kLeft + pw + 32 << "\" y1=\"" << ly
        << "\" y2=\"" << ly << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << kLeft + pw + 38 << "\" y=\"" << ly + 4 << "\">"
        << xml_escape(series[s].name) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_summary_table(const std::vector<MethodSummary>& summaries) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %5s  %-24s  %-24s  %-28s\n", "method", "seeds",
                "avg accuracy (final)", "task-1 accuracy (final)", "wall clock s (total)");
  out << line;
  for (const auto& s : summaries) {
    std::snprintf(line, sizeof line,
                  "%-8s %5zu  %.4f [%.4f, %.4f]  %.4f [%.4f, %.4f]  %9.3f [%.3f, %.3f]\n",
                  s.method.c_str(), s.seeds, s.final_average_mean, s.final_average_min,
                  s.final_average_max, s.final_task1_mean, s.final_task1_min, s.final_task1_max,
                  s.wall_clock_mean, s.wall_clock_min, s.wall_clock_max);
    out << line;
  }
  return out.str();
}

}  // namespace olss
