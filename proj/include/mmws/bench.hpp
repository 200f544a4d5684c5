#pragma once

// Benchmark harness: runs the three execution models over a dimension sweep,
// gates every parallel product bitwise against the sequential reference,
// computes MFLOPS/speedup, and reads/writes the CSV record format.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mmws/error.hpp"
#include "mmws/launch.hpp"
#include "mmws/matrix.hpp"
#include "mmws/net.hpp"
#include "mmws/protocol.hpp"
#include "mmws/workshare.hpp"

namespace mmws {

/// A parallel result differed from the sequential reference.
struct GateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Model { seq, threads, msg };

inline const char* model_name(Model m) {
  switch (m) {
    case Model::seq: return "seq";
    case Model::threads: return "threads";
    case Model::msg: return "msg";
  }
  return "?";
}

inline Model model_from_name(const std::string& name) {
  if (name == "seq") return Model::seq;
  if (name == "threads") return Model::threads;
  if (name == "msg") return Model::msg;
  throw DomainError("unknown model '" + name + "' (want seq, threads, or msg)");
}

struct BenchRecord {
  Model model = Model::seq;
  std::int64_t n = 0;
  int workers = 1;
  double elapsed = 0.0;
  double mflops = 0.0;
  std::optional<double> speedup;  // absent until paired with a SEQ run at the same N
};

struct BenchConfig {
  std::vector<std::int64_t> dims;
  std::vector<Model> models = {Model::seq, Model::threads, Model::msg};
  int thread_workers = static_cast<int>(default_workers());
  int world_size = 3;
  int repeats = 3;
  std::uint64_t seed = 42;
  std::vector<Endpoint> hosts;        // agent endpoints for MSG workers
  std::string worker_program;         // program spawned as MSG worker ranks
  std::vector<std::string> worker_args;
};

/// op_count(N) scaled to millions of operations per second.
inline double mflops(std::int64_t n, double elapsed) {
  if (elapsed <= 0.0) throw DomainError("mflops: elapsed must be positive");
  return static_cast<double>(op_count(n)) / elapsed / 1e6;
}

inline double speedup(double t_seq, double t_par) {
  if (t_seq <= 0.0 || t_par <= 0.0) throw DomainError("speedup: times must be positive");
  return t_seq / t_par;
}

namespace detail {

// Distinct, platform-independent seeds per (suite seed, N, matrix side).
inline std::uint64_t derive_seed(std::uint64_t seed, std::int64_t n, int which) {
  std::uint64_t state = seed ^ (static_cast<std::uint64_t>(n) * 2 + static_cast<std::uint64_t>(which));
  return splitmix64_next(state);
}

}  // namespace detail

/// Runs one model at one dimension `repeats` times; returns min elapsed and
/// the (gate-checked) product of the last repeat.
inline std::pair<Matrix, double> time_model(Model model, const Matrix& a, const Matrix& b,
                                            const BenchConfig& config) {
  double best = 0.0;
  std::optional<Matrix> last;
  for (int r = 0; r < config.repeats; ++r) {
    double elapsed = 0.0;
    switch (model) {
      case Model::seq: {
        const double t0 = wall_time();
        Matrix c = matmul_seq(a, b);
        elapsed = wall_time() - t0;
        last = std::move(c);
        break;
      }
      case Model::threads: {
        const double t0 = wall_time();
        Matrix c = matmul_threads(a, b, static_cast<unsigned>(config.thread_workers));
        elapsed = wall_time() - t0;
        last = std::move(c);
        break;
      }
      case Model::msg: {
        // Workers serve one round each, so every repeat gets a fresh world;
        // spawn and teardown stay outside the timed bracket.
        MsgWorld world = launch_with_master(config.worker_program, config.worker_args,
                                            config.world_size, config.hosts);
        auto [c, t] = master_run(world.comm, a, b);
        elapsed = t;
        last = std::move(c);
        if (const int status = world.children.wait_all(); status != 0)
          throw ProtocolError("a worker exited with status " + std::to_string(status));
        break;
      }
    }
    if (r == 0 || elapsed < best) best = elapsed;
  }
  return {std::move(*last), best};
}

/// Full sweep in deterministic order: models in seq, threads, msg order,
/// dimensions as configured. Parallel products that differ bitwise from the
/// sequential reference abort the suite.
inline std::vector<BenchRecord> run_suite(const BenchConfig& config) {
  if (config.dims.empty()) throw DomainError("run_suite: no dimensions configured");
  if (config.repeats < 1) throw DomainError("run_suite: repeats must be >= 1");
  for (Model m : config.models) {
    if (m == Model::msg && config.worker_program.empty())
      throw DomainError("run_suite: msg model needs a worker program");
  }

  auto wants = [&](Model m) {
    for (Model have : config.models)
      if (have == m) return true;
    return false;
  };

  std::vector<BenchRecord> records;
  std::vector<std::pair<std::int64_t, double>> seq_elapsed;  // pairing baseline

  const Model order[] = {Model::seq, Model::threads, Model::msg};
  for (Model model : order) {
    if (!wants(model)) continue;
    for (const std::int64_t n : config.dims) {
      const auto dim = static_cast<std::size_t>(n);
      const Matrix a = random_matrix(dim, dim, detail::derive_seed(config.seed, n, 0));
      const Matrix b = random_matrix(dim, dim, detail::derive_seed(config.seed, n, 1));

      auto [c, elapsed] = time_model(model, a, b, config);

      if (model != Model::seq) {
        const Matrix reference = matmul_seq(a, b);
        if (const auto diff = first_difference(c, reference)) {
          throw GateError(std::string("correctness gate: model=") + model_name(model) +
                          " n=" + std::to_string(n) + " first differing index " +
                          std::to_string(*diff));
        }
      }

      BenchRecord rec;
      rec.model = model;
      rec.n = n;
      rec.workers = model == Model::seq      ? 1
                    : model == Model::threads ? config.thread_workers
                                              : config.world_size - 1;
      rec.elapsed = elapsed;
      rec.mflops = mflops(n, elapsed);
      if (model == Model::seq) {
        seq_elapsed.emplace_back(n, elapsed);
      }
      for (const auto& [sn, st] : seq_elapsed) {
        if (sn == n) rec.speedup = speedup(st, elapsed);
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

inline constexpr const char* kCsvHeader = "model,n,workers,elapsed_s,mflops,speedup";

namespace detail {

inline std::string format_g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

inline void emit_csv(const std::vector<BenchRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << kCsvHeader << "\n";
  for (const auto& rec : records) {
    out << model_name(rec.model) << ',' << rec.n << ',' << rec.workers << ','
        << detail::format_g6(rec.elapsed) << ',' << detail::format_g6(rec.mflops) << ','
        << (rec.speedup ? detail::format_g6(*rec.speedup) : std::string{}) << "\n";
  }
  if (!out.flush()) throw IoError("short write to " + path);
}

inline std::vector<BenchRecord> parse_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw IoError(path + ": missing or unexpected CSV header");

  std::vector<BenchRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos
                                                                     : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 6) throw IoError(path + ": malformed row '" + line + "'");
    try {
      BenchRecord rec;
      rec.model = model_from_name(fields[0]);
      rec.n = std::stoll(fields[1]);
      rec.workers = std::stoi(fields[2]);
      rec.elapsed = std::stod(fields[3]);
      rec.mflops = std::stod(fields[4]);
      if (!fields[5].empty()) rec.speedup = std::stod(fields[5]);
      records.push_back(rec);
    } catch (const std::exception& e) {
      throw IoError(path + ": malformed row '" + line + "': " + e.what());
    }
  }
  return records;
}

}  // namespace mmws
