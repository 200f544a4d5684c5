#include "mmws/plots.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mmws/golden.hpp"

using mmws::BenchRecord;
using mmws::Model;

namespace {

using SeriesMap = std::map<std::string, std::vector<std::pair<double, double>>>;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Pulls every data-series / data-points attribute pair out of an SVG.
SeriesMap parse_series(const std::string& path) {
  const std::string text = slurp(path);
  SeriesMap series;
  std::size_t pos = 0;
  const std::string name_key = "data-series=\"";
  const std::string points_key = "data-points=\"";
  while ((pos = text.find(name_key, pos)) != std::string::npos) {
    pos += name_key.size();
    const std::size_t name_end = text.find('"', pos);
    REQUIRE(name_end != std::string::npos);
    const std::string name = text.substr(pos, name_end - pos);

    std::size_t p = text.find(points_key, name_end);
    REQUIRE(p != std::string::npos);
    p += points_key.size();
    const std::size_t points_end = text.find('"', p);
    REQUIRE(points_end != std::string::npos);

    std::vector<std::pair<double, double>> points;
    std::istringstream items(text.substr(p, points_end - p));
    std::string item;
    while (std::getline(items, item, ';')) {
      const std::size_t colon = item.find(':');
      REQUIRE(colon != std::string::npos);
      points.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    }
    series[name] = std::move(points);
    pos = points_end;
  }
  return series;
}

/// The full <polyline .../> element that carries the named series.
std::string polyline_element(const std::string& path, const std::string& name) {
  const std::string text = slurp(path);
  const std::size_t attr = text.find("data-series=\"" + name + "\"");
  REQUIRE(attr != std::string::npos);
  const std::size_t start = text.rfind("<polyline", attr);
  const std::size_t end = text.find("/>", attr);
  REQUIRE(start != std::string::npos);
  REQUIRE(end != std::string::npos);
  return text.substr(start, end - start + 2);
}

std::filesystem::path fresh_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

/// Records shaped like a full three-model sweep over the published runtimes.
std::vector<BenchRecord> golden_records() {
  std::vector<BenchRecord> records;
  const Model models[3] = {Model::seq, Model::threads, Model::msg};
  for (int m = 0; m < 3; ++m) {
    for (int d = 0; d < 4; ++d) {
      BenchRecord rec;
      rec.model = models[m];
      rec.n = mmws::kGoldenDims[d];
      rec.workers = m == 0 ? 1 : 2;
      rec.elapsed = mmws::kGoldenRuntime[m][d];
      rec.mflops = mmws::mflops(rec.n, rec.elapsed);
      rec.speedup = m == 0 ? 1.0 : mmws::speedup(mmws::kGoldenRuntime[0][d], rec.elapsed);
      records.push_back(rec);
    }
  }
  return records;
}

}  // namespace

TEST_CASE("a two-model sweep yields three charts with two series of four points") {
  mmws::BenchConfig config;
  config.dims = {2, 3, 4, 5};
  config.models = {Model::seq, Model::threads};
  config.thread_workers = 2;
  config.repeats = 1;
  const auto records = mmws::run_suite(config);

  const auto dir = fresh_dir("mmws_plots_basic");
  mmws::emit_plots(records, dir.string());

  for (const char* chart : {"runtime.svg", "mflops.svg", "speedup.svg"}) {
    const auto series = parse_series((dir / chart).string());
    REQUIRE(series.size() == 2);
    REQUIRE(series.count("seq") == 1);
    REQUIRE(series.count("threads") == 1);
    for (const auto& [name, points] : series) {
      REQUIRE(points.size() == 4);
      CHECK(points[0].first == 2.0);
      CHECK(points[3].first == 5.0);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("chart values reproduce the record fields") {
  const auto records = golden_records();
  const auto dir = fresh_dir("mmws_plots_golden");
  mmws::emit_plots(records, dir.string());

  const auto runtime = parse_series((dir / "runtime.svg").string());
  const auto mflops = parse_series((dir / "mflops.svg").string());
  const auto speedup = parse_series((dir / "speedup.svg").string());
  REQUIRE(runtime.size() == 3);
  REQUIRE(mflops.size() == 3);
  REQUIRE(speedup.size() == 3);

  // At N=2000 the message-passing run is fastest and the sequential slowest.
  const double seq_2000 = runtime.at("seq").back().second;
  const double thr_2000 = runtime.at("threads").back().second;
  const double msg_2000 = runtime.at("msg").back().second;
  CHECK(msg_2000 < thr_2000);
  CHECK(thr_2000 < seq_2000);
  CHECK_THAT(seq_2000, Catch::Matchers::WithinRel(240.97, 1e-5));

  // The small-N crossover survives the round trip through the SVG text.
  CHECK(runtime.at("msg").front().second > runtime.at("seq").front().second);
  CHECK_THAT(speedup.at("msg").back().second, Catch::Matchers::WithinRel(4.0036, 1e-3));
  CHECK_THAT(mflops.at("msg").back().second, Catch::Matchers::WithinRel(265.76, 1e-3));
  for (const auto& [name, points] : speedup) {
    REQUIRE(points.size() == 4);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("cost parameters add a dashed overlay to the runtime chart") {
  const auto records = golden_records();
  const auto dir = fresh_dir("mmws_plots_overlay");
  mmws::CostParams cost;
  cost.tc = 3e-7;
  cost.tf = 1e-8;
  mmws::emit_plots(records, dir.string(), cost);

  const auto runtime = parse_series((dir / "runtime.svg").string());
  REQUIRE(runtime.size() == 4);
  REQUIRE(runtime.count("cost-model") == 1);
  const auto& overlay = runtime.at("cost-model");
  REQUIRE(overlay.size() == 4);
  for (const auto& [n, seconds] : overlay) {
    const double expected = mmws::comm_cost_total(static_cast<std::int64_t>(n), 3, cost);
    CHECK_THAT(seconds, Catch::Matchers::WithinRel(expected, 1e-5));
  }

  const std::string element = polyline_element((dir / "runtime.svg").string(), "cost-model");
  CHECK(element.find("stroke-dasharray=\"6 3\"") != std::string::npos);
  CHECK(element.find("#2ca02c") != std::string::npos);

  const std::string text = slurp((dir / "runtime.svg").string());
  CHECK(text.find("cost-model overlay: tc=3e-07 s/datum, tf=1e-08 s/datum") != std::string::npos);
  CHECK(text.find("((P-1)N^2+2N)*(tc+tf)") != std::string::npos);

  // The other charts never carry the overlay.
  CHECK(parse_series((dir / "mflops.svg").string()).count("cost-model") == 0);
  CHECK(parse_series((dir / "speedup.svg").string()).count("cost-model") == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("solid model series stay solid") {
  const auto records = golden_records();
  const auto dir = fresh_dir("mmws_plots_solid");
  mmws::emit_plots(records, dir.string());
  for (const char* name : {"seq", "threads", "msg"}) {
    const std::string element = polyline_element((dir / "runtime.svg").string(), name);
    CHECK(element.find("stroke-dasharray") == std::string::npos);
  }
  const std::string seq_element = polyline_element((dir / "runtime.svg").string(), "seq");
  CHECK(seq_element.find("#555555") != std::string::npos);
  const std::string msg_element = polyline_element((dir / "mflops.svg").string(), "msg");
  CHECK(msg_element.find("#d62728") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("plot emission failures raise IoError") {
  CHECK_THROWS_AS(mmws::emit_plots({}, "anywhere"), mmws::DomainError);

  // A regular file where a directory is needed defeats create_directories.
  const auto blocker = std::filesystem::temp_directory_path() / "mmws_plots_blocker";
  { std::ofstream(blocker.string()) << "x"; }
  CHECK_THROWS_AS(mmws::emit_plots(golden_records(), (blocker / "sub").string()), mmws::IoError);
  std::filesystem::remove(blocker);
}
