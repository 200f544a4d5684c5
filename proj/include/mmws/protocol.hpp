#pragma once

// Master/worker row-decomposition protocol. The master (rank 0) only manages:
// it sends each worker its row assignment plus all of B with tag 1, then
// collects the result slices with tag 2 in ascending rank order. Workers
// compute their slice with the same per-element accumulation order as
// matmul_seq, so the assembled product is bitwise-identical to it.

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mmws/comm.hpp"
#include "mmws/error.hpp"
#include "mmws/matrix.hpp"
#include "mmws/net.hpp"

namespace mmws {

inline constexpr std::uint32_t kTagAssign = 1;  // master -> worker
inline constexpr std::uint32_t kTagResult = 2;  // worker -> master

struct WorkAssignment {
  std::int64_t offset = 0;
  std::int64_t rows = 0;
  bool operator==(const WorkAssignment&) const = default;
};

/// Row split across workers: the first (n_rows mod n_workers) workers get one
/// extra row; offsets accumulate in worker order.
inline std::vector<WorkAssignment> split_rows(std::int64_t n_rows, int n_workers) {
  if (n_workers < 1) throw DomainError("split_rows: need at least one worker");
  if (n_rows < 0) throw DomainError("split_rows: negative row count");
  const std::int64_t averow = n_rows / n_workers;
  const std::int64_t extra = n_rows % n_workers;
  std::vector<WorkAssignment> out(static_cast<std::size_t>(n_workers));
  std::int64_t offset = 0;
  for (int w = 0; w < n_workers; ++w) {
    const std::int64_t rows = averow + (w < extra ? 1 : 0);
    out[static_cast<std::size_t>(w)] = {offset, rows};
    offset += rows;
  }
  return out;
}

/// One distribution/collection round driven by rank 0. Returns the assembled
/// product and the elapsed seconds from first send to last receive.
inline std::pair<Matrix, double> master_run(Communicator& comm, const Matrix& a,
                                            const Matrix& b) {
  if (comm.my_rank() != 0) throw RankError("master_run must be called by rank 0");
  if (comm.world_size() < 2)
    throw DomainError("master_run: need at least one worker (world size >= 2)");
  if (a.cols() != b.rows())
    throw DimensionError("master_run: inner dimensions disagree");

  const std::int64_t n_rows = static_cast<std::int64_t>(a.rows());
  const int n_workers = comm.world_size() - 1;
  const auto assignments = split_rows(n_rows, n_workers);
  Matrix c(a.rows(), b.cols());

  const double t_start = wall_time();
  for (int w = 0; w < n_workers; ++w) {
    const int dest = w + 1;
    const auto& asg = assignments[static_cast<std::size_t>(w)];
    try {
      comm.send_i64(dest, kTagAssign, asg.offset);
      comm.send_i64(dest, kTagAssign, asg.rows);
      comm.send_f64(dest, kTagAssign,
                    a.row_span(static_cast<std::size_t>(asg.offset),
                               static_cast<std::size_t>(asg.rows)));
      comm.send_f64(dest, kTagAssign, b.data());
    } catch (const TransportError& e) {
      throw ProtocolError("distribution to worker rank " + std::to_string(dest) +
                          " failed: " + e.what());
    }
  }

  for (int w = 0; w < n_workers; ++w) {
    const int source = w + 1;
    std::int64_t offset = 0, rows = 0;
    std::vector<double> slice;
    try {
      offset = comm.recv_i64(source, kTagResult);
      rows = comm.recv_i64(source, kTagResult);
      slice = comm.recv_f64(source, kTagResult);
    } catch (const TransportError& e) {
      throw ProtocolError("collection from worker rank " + std::to_string(source) +
                          " failed: " + e.what());
    }
    if (offset < 0 || rows < 0 || offset + rows > n_rows)
      throw ProtocolError("worker rank " + std::to_string(source) +
                          " returned offset " + std::to_string(offset) + ", rows " +
                          std::to_string(rows) + " outside the 0.." +
                          std::to_string(n_rows) + " row range");
    if (slice.size() != static_cast<std::size_t>(rows) * b.cols())
      throw ProtocolError("worker rank " + std::to_string(source) +
                          " returned a slice of " + std::to_string(slice.size()) +
                          " elements, expected " +
                          std::to_string(static_cast<std::size_t>(rows) * b.cols()));
    auto out = c.row_span(static_cast<std::size_t>(offset), static_cast<std::size_t>(rows));
    std::copy(slice.begin(), slice.end(), out.begin());
  }
  const double elapsed = wall_time() - t_start;

  return {std::move(c), elapsed};
}

/// Worker side of one round: receive assignment, multiply, reply. An empty
/// (rows = 0) assignment still completes the handshake.
inline void worker_run(Communicator& comm) {
  if (comm.my_rank() == 0) throw RankError("worker_run must not be called by rank 0");

  const std::int64_t offset = comm.recv_i64(0, kTagAssign);
  const std::int64_t rows = comm.recv_i64(0, kTagAssign);
  const std::vector<double> a_slice = comm.recv_f64(0, kTagAssign);
  const std::vector<double> b_flat = comm.recv_f64(0, kTagAssign);

  if (rows < 0 || offset < 0) throw ProtocolError("worker: negative assignment fields");

  std::vector<double> c_slice;
  if (rows > 0) {
    if (a_slice.size() % static_cast<std::size_t>(rows) != 0)
      throw ProtocolError("worker: A-slice length not divisible by row count");
    const std::size_t a_cols = a_slice.size() / static_cast<std::size_t>(rows);
    if (a_cols == 0 || b_flat.size() % a_cols != 0)
      throw ProtocolError("worker: B length inconsistent with A-slice width");
    const std::size_t b_cols = b_flat.size() / a_cols;
    const std::size_t n_rows = static_cast<std::size_t>(rows);

    c_slice.assign(n_rows * b_cols, 0.0);
    for (std::size_t k = 0; k < b_cols; ++k) {
      for (std::size_t i = 0; i < n_rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a_cols; ++j) {
          acc += a_slice[i * a_cols + j] * b_flat[j * b_cols + k];
        }
        c_slice[i * b_cols + k] = acc;
      }
    }
  }

  comm.send_i64(0, kTagResult, offset);
  comm.send_i64(0, kTagResult, rows);
  comm.send_f64(0, kTagResult, c_slice);
}

}  // namespace mmws
