// Benchmark CLI.
//
//   bench --models seq,threads,msg --dims 100,500,1000,2000 --threads 2
//         --world-size 3 [--hosts a:p,b:p] --repeats 3 --seed 42
//         --csv out.csv --plots outdir/ [--tc 2e-8 --tf 2e-8]
//   bench golden      cross-check the published measurement tables
//   bench calibrate   measure a per-datum transfer time for --tc/--tf
//
// MSG worker ranks run the mm_node binary found next to this executable
// unless --worker-program says otherwise.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmws/bench.hpp"
#include "mmws/golden.hpp"
#include "mmws/plots.hpp"

namespace {

std::string default_worker_program() {
  char buf[4096];
  const ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) return "mm_node";
  buf[n] = '\0';
  return (std::filesystem::path(buf).parent_path() / "mm_node").string();
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string part =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!part.empty()) parts.push_back(part);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return parts;
}

void print_records(const std::vector<mmws::BenchRecord>& records) {
  std::printf("%-8s %6s %8s %12s %10s %8s\n", "model", "n", "workers", "elapsed_s", "mflops",
              "speedup");
  for (const auto& rec : records) {
    std::printf("%-8s %6lld %8d %12.6f %10.2f ", mmws::model_name(rec.model),
                static_cast<long long>(rec.n), rec.workers, rec.elapsed, rec.mflops);
    if (rec.speedup) {
      std::printf("%8.3f\n", *rec.speedup);
    } else {
      std::printf("%8s\n", "-");
    }
  }
}

int run_calibrate(const std::string& worker_program, const std::vector<mmws::Endpoint>& hosts,
                  int repeats) {
  constexpr std::size_t n_doubles = 1u << 20;
  double best = 0.0;
  for (int r = 0; r < repeats; ++r) {
    mmws::MsgWorld world = mmws::launch_with_master(worker_program, {"--echo"}, 2, hosts);
    const std::vector<double> probe(n_doubles, 0.5);
    const double t0 = mmws::wall_time();
    world.comm.send_f64(1, 1, probe);
    const std::vector<double> back = world.comm.recv_f64(1, 2);
    const double elapsed = mmws::wall_time() - t0;
    if (back != probe) {
      std::fprintf(stderr, "bench: calibration round-trip corrupted the payload\n");
      return 1;
    }
    if (r == 0 || elapsed < best) best = elapsed;
    world.children.wait_all();
  }
  const double per_datum = best / (2.0 * static_cast<double>(n_doubles));
  std::printf("round-trip of %zu doubles: %.6f s -> %.3e s/datum\n", n_doubles, best,
              per_datum);
  if (hosts.empty()) {
    std::printf("path: local loopback; suggested starting point: --tc %.3e --tf %.3e\n",
                per_datum, per_datum);
  } else {
    std::printf("path: via agent %s; suggested: --tc %.3e (measure --tf locally)\n",
                hosts.front().str().c_str(), per_datum);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matrix-multiplication benchmark harness"};

  std::string models_csv = "seq,threads,msg";
  std::string dims_csv = "100,500,1000,2000";
  std::string hosts_csv;
  std::string csv_path;
  std::string plots_dir;
  std::string worker_program = default_worker_program();
  int threads = static_cast<int>(mmws::default_workers());
  int world_size = 3;
  int repeats = 3;
  std::uint64_t seed = 42;
  double tc = -1.0, tf = -1.0;

  app.add_option("--models", models_csv, "comma-separated subset of seq,threads,msg");
  app.add_option("--dims", dims_csv, "comma-separated matrix dimensions");
  app.add_option("--threads", threads, "worker count for the threads model")
      ->check(CLI::PositiveNumber);
  app.add_option("--world-size", world_size, "process count for the msg model (master + workers)")
      ->check(CLI::Range(2, 1 << 20));
  app.add_option("--hosts", hosts_csv, "agent endpoints for remote msg workers");
  app.add_option("--repeats", repeats, "repetitions per cell; minimum elapsed is kept")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for matrix generation");
  app.add_option("--csv", csv_path, "write records to this CSV file");
  app.add_option("--plots", plots_dir, "write runtime/mflops/speedup SVGs into this directory");
  app.add_option("--tc", tc, "cost model: seconds per datum over the network");
  app.add_option("--tf", tf, "cost model: seconds per datum over shared memory");
  app.add_option("--worker-program", worker_program, "program to spawn as msg worker ranks");

  CLI::App* golden = app.add_subcommand("golden", "cross-check the published tables");
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "measure per-datum transfer time for --tc/--tf");

  CLI11_PARSE(app, argc, argv);

  try {
    if (golden->parsed()) {
      const auto report = mmws::golden_check();
      std::fputs(mmws::golden_report_text(report).c_str(), stdout);
      int fails = 0;
      for (const auto& row : report) {
        if (row.status == mmws::GoldenStatus::fail) fails++;
      }
      std::printf("%d cell(s) outside tolerance (expected flags excluded)\n", fails);
      return fails == 0 ? 0 : 1;
    }

    std::vector<mmws::Endpoint> hosts;
    for (const auto& part : split_csv(hosts_csv)) hosts.push_back(mmws::parse_endpoint(part));

    if (calibrate->parsed()) {
      return run_calibrate(worker_program, hosts, repeats);
    }

    mmws::BenchConfig config;
    config.models.clear();
    for (const auto& part : split_csv(models_csv))
      config.models.push_back(mmws::model_from_name(part));
    for (const auto& part : split_csv(dims_csv)) config.dims.push_back(std::stoll(part));
    config.thread_workers = threads;
    config.world_size = world_size;
    config.repeats = repeats;
    config.seed = seed;
    config.hosts = hosts;
    config.worker_program = worker_program;
    config.worker_args = {};

    const auto records = mmws::run_suite(config);
    print_records(records);
    if (!csv_path.empty()) mmws::emit_csv(records, csv_path);
    if (!plots_dir.empty()) {
      std::optional<mmws::CostParams> cost;
      if (tc >= 0.0 && tf >= 0.0) cost = mmws::CostParams{tc, tf};
      mmws::emit_plots(records, plots_dir, cost);
    }
    return 0;
  } catch (const mmws::GateError& e) {
    std::fprintf(stderr, "bench: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bench: %s\n", e.what());
    return 1;
  }
}
