// Rank node for launched matrix-multiplication worlds.
//
// Workers (rank > 0) serve one distribution round and exit; with --echo they
// instead mirror one float array back to the master (used for calibration).
// Rank 0 under the SPMD launcher runs a small driver: it generates random
// N x N inputs, runs the master protocol, and optionally verifies the
// product against the sequential reference.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmws/comm.hpp"
#include "mmws/launch.hpp"
#include "mmws/matrix.hpp"
#include "mmws/protocol.hpp"

int main(int argc, char** argv) {
  CLI::App app{"matrix-multiplication rank node"};
  bool echo = false;
  bool verify = false;
  std::int64_t n = 256;
  std::uint64_t seed = 42;
  app.add_flag("--echo", echo, "mirror one float array instead of multiplying");
  app.add_flag("--verify", verify, "rank 0: check the product against the sequential result");
  app.add_option("--n", n, "rank 0: matrix dimension")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "rank 0: RNG seed for the inputs");
  CLI11_PARSE(app, argc, argv);

  try {
    mmws::Communicator comm = mmws::connect_from_env();

    if (comm.my_rank() > 0) {
      if (echo) {
        const std::vector<double> data = comm.recv_f64(0, 1);
        comm.send_f64(0, 2, data);
      } else {
        mmws::worker_run(comm);
      }
      return 0;
    }

    if (comm.world_size() < 2) {
      std::fprintf(stderr, "mm_node: rank 0 needs at least one worker\n");
      return 2;
    }
    if (echo) {
      std::vector<double> probe(1u << 20, 0.5);
      const double t0 = mmws::wall_time();
      comm.send_f64(1, 1, probe);
      const std::vector<double> back = comm.recv_f64(1, 2);
      const double elapsed = mmws::wall_time() - t0;
      std::printf("echo round-trip: %zu doubles in %.6f s (%.3e s/datum)\n", probe.size(),
                  elapsed, elapsed / (2.0 * static_cast<double>(probe.size())));
      return back == probe ? 0 : 1;
    }

    const mmws::Matrix a =
        mmws::random_matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(n), seed);
    const mmws::Matrix b = mmws::random_matrix(static_cast<std::size_t>(n),
                                               static_cast<std::size_t>(n), seed + 1);
    const auto [c, elapsed] = mmws::master_run(comm, a, b);
    std::printf("n=%lld workers=%d elapsed=%.6f s\n", static_cast<long long>(n),
                comm.world_size() - 1, elapsed);

    if (verify) {
      const mmws::Matrix ref = mmws::matmul_seq(a, b);
      if (!mmws::bitwise_equal(c, ref)) {
        const auto diff = mmws::first_difference(c, ref);
        std::fprintf(stderr, "mm_node: product differs from sequential result at index %zu\n",
                     diff.value_or(0));
        return 1;
      }
      std::printf("verified: product matches the sequential result bitwise\n");
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mm_node: %s\n", e.what());
    return 1;
  }
}
