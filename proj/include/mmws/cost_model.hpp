#pragma once

// Analytic communication-cost and per-worker complexity formulas for the
// master/worker decomposition. Datum counts are returned unscaled so callers
// can price them with whatever tc/tf they calibrated.

#include <cstdint>

#include "mmws/error.hpp"

namespace mmws {

/// Per-datum transfer times: tc over the network, tf over shared memory.
struct CostParams {
  double tc = 0.0;
  double tf = 0.0;

  void validate() const {
    if (tc < 0.0 || tf < 0.0) throw DomainError("CostParams: tc and tf must be >= 0");
    if (tf > tc) throw DomainError("CostParams: tf must not exceed tc");
  }
};

namespace detail {

inline void check_cost_args(std::int64_t n, int p) {
  if (n < 1) throw DomainError("cost model: N must be >= 1");
  if (p < 2) throw DomainError("cost model: P must be >= 2");
}

}  // namespace detail

// Data sent while distributing work: every one of the P-1 workers gets its
// A-slice plus all of B, simplified to (P-1)*N^2 + N. The A-slice term counts
// rows rather than elements; the model is kept in that published form.
inline double comm_cost_distribute(std::int64_t n, int p) {
  detail::check_cost_args(n, p);
  return static_cast<double>(p - 1) * static_cast<double>(n) * static_cast<double>(n) +
         static_cast<double>(n);
}

/// Data received when collecting results; the per-worker slices sum to N.
inline double comm_cost_collect(std::int64_t n, int p) {
  detail::check_cost_args(n, p);
  return static_cast<double>(n);
}

/// Predicted round-trip communication time: ((P-1)*N^2 + 2N) * (tc + tf).
inline double comm_cost_total(std::int64_t n, int p, const CostParams& params) {
  detail::check_cost_args(n, p);
  params.validate();
  const double datums = static_cast<double>(p - 1) * static_cast<double>(n) * static_cast<double>(n) +
                        2.0 * static_cast<double>(n);
  return datums * (params.tc + params.tf);
}

/// Per-worker flop share under message passing: N^3 / (P-1).
inline double complexity_msg(std::int64_t n, int p) {
  detail::check_cost_args(n, p);
  const double nd = static_cast<double>(n);
  return nd * nd * nd / static_cast<double>(p - 1);
}

/// Per-thread flop share under the fork-join model: N^3 / t.
inline double complexity_thread(std::int64_t n, int t) {
  if (n < 1) throw DomainError("cost model: N must be >= 1");
  if (t < 1) throw DomainError("cost model: t must be >= 1");
  const double nd = static_cast<double>(n);
  return nd * nd * nd / static_cast<double>(t);
}

}  // namespace mmws
