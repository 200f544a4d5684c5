#pragma once

#include <stdexcept>

namespace mmws {

// Invalid matrix shapes: zero dimensions, inner-dimension mismatches,
// element buffers of the wrong length.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Arguments outside an operation's domain (zero worker counts, process
// counts below two, non-positive elapsed times, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Rank ids that cannot be addressed: out of range, or a self-send.
struct RankError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Socket-level failures: refused dials, resets, short reads/writes.
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The bytes arrived but make no sense: bad magic, unknown payload kind,
// unexpected payload type, out-of-range row offsets.
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A blocking receive gave up waiting; the usual cause is a deadlocked peer.
struct TimeoutError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failures while spawning or wiring up a process world.
struct LaunchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A parallel_for body threw; surfaced at the caller after the region barrier.
struct RegionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File output failures (CSV, plots).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mmws
