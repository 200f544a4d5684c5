#pragma once

// Cross-checks between the published measurement tables: the throughput and
// speedup tables are recomputed from the runtime table via mflops() and
// speedup() and compared cell by cell. Two throughput cells (seq and threads
// at N=2000) are internally inconsistent in the source data and are expected
// to flag rather than pass.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mmws/bench.hpp"

namespace mmws {

inline constexpr std::int64_t kGoldenDims[4] = {100, 500, 1000, 2000};

// Published runtimes in seconds (rows: seq, threads, msg; columns: kGoldenDims).
inline constexpr double kGoldenRuntime[3][4] = {
    {0.03, 2.09, 22.52, 240.97},
    {0.02, 1.11, 14.36, 163.6},
    {0.33, 1.52, 8.19, 60.19},
};

// Published throughput in MFLOPS (same layout).
inline constexpr double kGoldenMflops[3][4] = {
    {59.08, 119.54, 88.77, 8.91},
    {86.82, 224.35, 139.17, 13.17},
    {6.07, 164.85, 244.17, 265.77},
};

// Published speedups over seq (rows: threads, msg).
inline constexpr double kGoldenSpeedup[2][4] = {
    {1.47, 1.88, 1.57, 1.47},
    {0.1, 1.38, 2.75, 4.0},
};

enum class GoldenStatus { pass, flagged, fail };

struct GoldenRow {
  std::string table;  // "throughput" or "speedup"
  Model model;
  std::int64_t n;
  double published;
  double recomputed;
  double rel_err;     // against the published value
  GoldenStatus status;
};

inline constexpr double kThroughputTolerance = 0.01;
inline constexpr double kSpeedupTolerance = 0.02;

/// True for the cells known to disagree with their own runtime table.
inline bool golden_expected_flag(Model model, std::int64_t n) {
  return (model == Model::seq || model == Model::threads) && n == 2000;
}

inline std::vector<GoldenRow> golden_check() {
  std::vector<GoldenRow> report;
  const Model models[3] = {Model::seq, Model::threads, Model::msg};

  for (int m = 0; m < 3; ++m) {
    for (int d = 0; d < 4; ++d) {
      GoldenRow row;
      row.table = "throughput";
      row.model = models[m];
      row.n = kGoldenDims[d];
      row.published = kGoldenMflops[m][d];
      row.recomputed = mflops(row.n, kGoldenRuntime[m][d]);
      row.rel_err = std::fabs(row.recomputed - row.published) / std::fabs(row.published);
      if (row.rel_err <= kThroughputTolerance) {
        row.status = GoldenStatus::pass;
      } else {
        row.status = golden_expected_flag(row.model, row.n) ? GoldenStatus::flagged
                                                            : GoldenStatus::fail;
      }
      report.push_back(std::move(row));
    }
  }

  for (int m = 0; m < 2; ++m) {
    for (int d = 0; d < 4; ++d) {
      GoldenRow row;
      row.table = "speedup";
      row.model = models[m + 1];
      row.n = kGoldenDims[d];
      row.published = kGoldenSpeedup[m][d];
      row.recomputed = speedup(kGoldenRuntime[0][d], kGoldenRuntime[m + 1][d]);
      row.rel_err = std::fabs(row.recomputed - row.published) / std::fabs(row.published);
      row.status = row.rel_err <= kSpeedupTolerance ? GoldenStatus::pass : GoldenStatus::fail;
      report.push_back(std::move(row));
    }
  }
  return report;
}

inline std::string golden_report_text(const std::vector<GoldenRow>& report) {
  std::string text = "table       model    n     published  recomputed  rel_err  status\n";
  char buf[160];
  for (const auto& row : report) {
    const char* status = row.status == GoldenStatus::pass      ? "PASS"
                         : row.status == GoldenStatus::flagged ? "FLAGGED"
                                                               : "FAIL";
    std::snprintf(buf, sizeof(buf), "%-11s %-8s %-5lld %9.4g  %10.4g  %6.2f%%  %s\n",
                  row.table.c_str(), model_name(row.model), static_cast<long long>(row.n),
                  row.published, row.recomputed, row.rel_err * 100.0, status);
    text += buf;
  }
  return text;
}

}  // namespace mmws
