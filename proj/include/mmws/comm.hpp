#pragma once

// Rank-based point-to-point messaging over one duplex TCP connection per
// rank pair. Send blocks until the envelope is fully written; recv blocks
// for a (source, tag) match, queueing non-matching envelopes from that
// source so nothing is dropped or reordered.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmws/error.hpp"
#include "mmws/net.hpp"
#include "mmws/wire.hpp"

namespace mmws {

/// One line of a communicator's traffic log, for protocol-shape assertions.
struct TrafficEntry {
  enum class Dir { sent, received };
  Dir dir;
  int peer;
  std::uint32_t tag;
  PayloadKind kind;
  std::uint64_t element_count;
};

class Communicator {
 public:
  // channels[r] is the duplex connection to rank r; channels[my_rank] unused.
  Communicator(int my_rank, std::vector<UniqueFd> channels)
      : my_rank_(my_rank), channels_(std::move(channels)), pending_(channels_.size()) {
    if (my_rank_ < 0 || static_cast<std::size_t>(my_rank_) >= channels_.size())
      throw RankError("rank " + std::to_string(my_rank_) + " outside world of size " +
                      std::to_string(channels_.size()));
  }

  int my_rank() const { return my_rank_; }
  int world_size() const { return static_cast<int>(channels_.size()); }

  void set_recv_timeout(std::chrono::milliseconds timeout) { recv_timeout_ = timeout; }

  void send_i64(int dest, std::uint32_t tag, std::int64_t value) {
    Envelope env;
    env.payload = value;
    send_envelope(dest, tag, std::move(env));
  }

  void send_f64(int dest, std::uint32_t tag, std::span<const double> values) {
    Envelope env;
    env.payload = std::vector<double>(values.begin(), values.end());
    send_envelope(dest, tag, std::move(env));
  }

  std::int64_t recv_i64(int source, std::uint32_t tag) {
    Envelope env = recv_envelope(source, tag);
    if (env.kind() != PayloadKind::int64_scalar)
      throw ProtocolError("expected INT64_SCALAR from rank " + std::to_string(source) +
                          " tag " + std::to_string(tag));
    return std::get<std::int64_t>(env.payload);
  }

  std::vector<double> recv_f64(int source, std::uint32_t tag) {
    Envelope env = recv_envelope(source, tag);
    if (env.kind() != PayloadKind::float64_array)
      throw ProtocolError("expected FLOAT64_ARRAY from rank " + std::to_string(source) +
                          " tag " + std::to_string(tag));
    return std::get<std::vector<double>>(std::move(env.payload));
  }

  const std::vector<TrafficEntry>& traffic() const { return traffic_; }

 private:
  void check_peer(int rank, const char* action) const {
    if (rank == my_rank_)
      throw RankError(std::string(action) + " to self (rank " + std::to_string(rank) + ")");
    if (rank < 0 || rank >= world_size())
      throw RankError(std::string(action) + ": rank " + std::to_string(rank) +
                      " outside world of size " + std::to_string(world_size()));
  }

  void send_envelope(int dest, std::uint32_t tag, Envelope env) {
    check_peer(dest, "send");
    env.tag = tag;
    env.source = static_cast<std::uint32_t>(my_rank_);
    env.dest = static_cast<std::uint32_t>(dest);
    const auto bytes = encode_envelope(env);
    write_all(channels_[dest].get(), bytes.data(), bytes.size());
    traffic_.push_back({TrafficEntry::Dir::sent, dest, tag, env.kind(), env.element_count()});
  }

  Envelope recv_envelope(int source, std::uint32_t tag) {
    check_peer(source, "recv");

    auto& queue = pending_[source];
    for (auto it = queue.begin(); it != queue.end(); ++it) {
      if (it->tag == tag) {
        Envelope env = std::move(*it);
        queue.erase(it);
        record_recv(env);
        return env;
      }
    }

    const auto deadline = Clock::now() + recv_timeout_;
    for (;;) {
      Envelope env = read_envelope(source, deadline);
      if (env.tag == tag) {
        record_recv(env);
        return env;
      }
      queue.push_back(std::move(env));
    }
  }

  Envelope read_envelope(int source, Clock::time_point deadline) {
    const int fd = channels_[source].get();
    std::uint8_t header[kWireHeaderSize];
    read_exact(fd, header, sizeof(header), deadline);
    const WireHeader h = decode_header(header);
    if (h.source != static_cast<std::uint32_t>(source) ||
        h.dest != static_cast<std::uint32_t>(my_rank_))
      throw ProtocolError("envelope rank fields disagree with its channel");
    std::vector<std::uint8_t> body(h.element_count * 8);
    read_exact(fd, body.data(), body.size(), deadline);
    return assemble_envelope(h, body);
  }

  void record_recv(const Envelope& env) {
    traffic_.push_back({TrafficEntry::Dir::received, static_cast<int>(env.source), env.tag,
                        env.kind(), env.element_count()});
  }

  int my_rank_;
  std::vector<UniqueFd> channels_;
  std::vector<std::deque<Envelope>> pending_;
  std::vector<TrafficEntry> traffic_;
  std::chrono::milliseconds recv_timeout_ = std::chrono::seconds(30);
};

}  // namespace mmws
