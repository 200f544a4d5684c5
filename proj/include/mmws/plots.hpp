#pragma once

// SVG line charts for benchmark sweeps: runtime, throughput, and speedup
// versus matrix dimension, one series per model. Each polyline carries
// data-series / data-points attributes so the charts stay machine-checkable.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmws/bench.hpp"
#include "mmws/cost_model.hpp"

namespace mmws {

struct PlotSeries {
  std::string name;
  std::string color;
  bool dashed = false;
  std::vector<std::pair<double, double>> points;  // (n, value), ascending n
};

namespace detail {

inline void write_line_chart(const std::string& path, const std::string& title,
                             const std::string& y_label,
                             const std::vector<PlotSeries>& series,
                             const std::string& metadata_comment = {}) {
  constexpr double width = 720, height = 480;
  constexpr double ml = 80, mr = 24, mt = 48, mb = 56;
  const double plot_w = width - ml - mr;
  const double plot_h = height - mt - mb;

  double x_min = 0, x_max = 1, y_max = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (first) {
        x_min = x_max = x;
        y_max = y;
        first = false;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max <= 0) y_max = 1;
  y_max *= 1.08;

  const auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * plot_w; };
  const auto py = [&](double y) { return mt + plot_h - y / y_max * plot_h; };

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  if (!metadata_comment.empty()) out << "<!-- " << metadata_comment << " -->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"26\" text-anchor=\"middle\" font-size=\"16\" "
      << "font-family=\"sans-serif\">" << title << "</text>\n";

  // Axes and ticks.
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << mt + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\"" << ml + plot_w
      << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = y_max * t / 5.0;
    out << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(v) << "\" x2=\"" << ml << "\" y2=\""
        << py(v) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << py(v) + 4
        << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
        << format_g6(v) << "</text>\n";
  }
  std::vector<double> x_ticks;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) x_ticks.push_back(x);
  }
  std::sort(x_ticks.begin(), x_ticks.end());
  x_ticks.erase(std::unique(x_ticks.begin(), x_ticks.end()), x_ticks.end());
  for (const double x : x_ticks) {
    out << "<line x1=\"" << px(x) << "\" y1=\"" << mt + plot_h << "\" x2=\"" << px(x)
        << "\" y2=\"" << mt + plot_h + 4 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(x) << "\" y=\"" << mt + plot_h + 18
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
        << format_g6(x) << "</text>\n";
  }
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">"
      << "matrix dimension N</text>\n";
  out << "<text x=\"18\" y=\"" << mt + plot_h / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
      << "transform=\"rotate(-90 18 " << mt + plot_h / 2 << ")\">" << y_label << "</text>\n";

  // Series polylines, point markers, and legend.
  double legend_y = mt + 10;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
    if (s.dashed) out << " stroke-dasharray=\"6 3\"";
    out << " data-series=\"" << s.name << "\" data-points=\"";
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      if (i > 0) out << ';';
      out << format_g6(s.points[i].first) << ':' << format_g6(s.points[i].second);
    }
    out << "\" points=\"";
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      if (i > 0) out << ' ';
      out << px(s.points[i].first) << ',' << py(s.points[i].second);
    }
    out << "\"/>\n";
    for (const auto& [x, y] : s.points) {
      out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\""
          << s.color << "\"/>\n";
    }
    out << "<line x1=\"" << ml + plot_w - 150 << "\" y1=\"" << legend_y << "\" x2=\""
        << ml + plot_w - 126 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 3\"" : "") << "/>\n";
    out << "<text x=\"" << ml + plot_w - 120 << "\" y=\"" << legend_y + 4
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << s.name << "</text>\n";
    legend_y += 18;
  }
  out << "</svg>\n";
  if (!out.flush()) throw IoError("short write to " + path);
}

inline const char* model_color(Model m) {
  switch (m) {
    case Model::seq: return "#555555";
    case Model::threads: return "#1f77b4";
    case Model::msg: return "#d62728";
  }
  return "#000000";
}

}  // namespace detail

/// Writes runtime.svg, mflops.svg, and speedup.svg into `dir`. When
/// CostParams are given and MSG records exist, the runtime chart gains a
/// dashed predicted-communication-cost series.
inline void emit_plots(const std::vector<BenchRecord>& records, const std::string& dir,
                       std::optional<CostParams> cost = std::nullopt) {
  if (records.empty()) throw DomainError("emit_plots: no records");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());

  const Model order[] = {Model::seq, Model::threads, Model::msg};
  auto collect = [&](auto&& value_of) {
    std::vector<PlotSeries> series;
    for (Model m : order) {
      PlotSeries s{model_name(m), detail::model_color(m), false, {}};
      for (const auto& rec : records) {
        if (rec.model != m) continue;
        if (const auto v = value_of(rec)) s.points.emplace_back(static_cast<double>(rec.n), *v);
      }
      std::sort(s.points.begin(), s.points.end());
      if (!s.points.empty()) series.push_back(std::move(s));
    }
    return series;
  };

  auto runtime_series = collect([](const BenchRecord& r) { return std::optional<double>(r.elapsed); });
  std::string metadata;
  if (cost) {
    PlotSeries predicted{"cost-model", "#2ca02c", true, {}};
    for (const auto& rec : records) {
      if (rec.model != Model::msg) continue;
      predicted.points.emplace_back(
          static_cast<double>(rec.n),
          comm_cost_total(rec.n, rec.workers + 1, *cost));
    }
    std::sort(predicted.points.begin(), predicted.points.end());
    if (!predicted.points.empty()) {
      runtime_series.push_back(std::move(predicted));
      metadata = "cost-model overlay: tc=" + detail::format_g6(cost->tc) +
                 " s/datum, tf=" + detail::format_g6(cost->tf) +
                 " s/datum; predicted seconds = ((P-1)N^2+2N)*(tc+tf)";
    }
  }
  detail::write_line_chart(dir + "/runtime.svg", "Running time vs matrix dimension",
                           "elapsed seconds", runtime_series, metadata);

  detail::write_line_chart(dir + "/mflops.svg", "Throughput vs matrix dimension", "MFLOPS",
                           collect([](const BenchRecord& r) { return std::optional<double>(r.mflops); }));

  detail::write_line_chart(dir + "/speedup.svg", "Speedup over sequential vs matrix dimension",
                           "speedup",
                           collect([](const BenchRecord& r) { return r.speedup; }));
}

}  // namespace mmws
