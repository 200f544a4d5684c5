#pragma once

// Multi-process launch: spawns ranks (locally or via remote agents), runs a
// rendezvous handshake so every pair of ranks ends up with one duplex
// connection, and injects RANK / WORLD_ENDPOINTS into children.
//
// Control plane (length-prefixed JSON frames, see net.hpp):
//   child  -> rendezvous: {"op":"join","rank":r,"endpoint":"host:port"}
//   rendezvous -> child : {"op":"table","endpoints":[...]}   (index = rank)
//   dialer -> acceptor  : {"op":"hello","rank":r}            (on mesh conns)
//   child  -> rendezvous: {"op":"done","rank":r}
//   rendezvous -> child : {"op":"go"}
//   launcher -> agent   : {"op":"spawn","program":...,"args":[...],
//                          "rank":r,"world_endpoints":"K@host:port"}
//   agent -> launcher   : {"op":"spawned","ok":bool,"error":...}
//   agent -> launcher   : {"op":"exit","status":s}           (child exited)
//
// Data-plane traffic (wire.hpp envelopes) starts only after "go".

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmws/comm.hpp"
#include "mmws/error.hpp"
#include "mmws/net.hpp"

namespace mmws {

inline constexpr const char* kRankEnv = "RANK";
inline constexpr const char* kWorldEnv = "WORLD_ENDPOINTS";

/// "K@host:port": world size plus the rendezvous endpoint.
inline std::string format_world_env(int world_size, const Endpoint& rendezvous) {
  return std::to_string(world_size) + "@" + rendezvous.str();
}

inline std::pair<int, Endpoint> parse_world_env(const std::string& text) {
  const auto at = text.find('@');
  if (at == std::string::npos || at == 0)
    throw LaunchError("malformed " + std::string(kWorldEnv) + " '" + text + "'");
  int world_size = 0;
  try {
    world_size = std::stoi(text.substr(0, at));
  } catch (const std::exception&) {
    throw LaunchError("malformed " + std::string(kWorldEnv) + " '" + text + "'");
  }
  if (world_size < 1)
    throw LaunchError("world size must be >= 1 in " + std::string(kWorldEnv));
  return {world_size, parse_endpoint(text.substr(at + 1))};
}

/// Owns spawned ranks: local child pids and agent connections for remote ones.
class ProcessGroup {
 public:
  ProcessGroup() = default;
  ProcessGroup(ProcessGroup&&) = default;
  ProcessGroup& operator=(ProcessGroup&&) = default;
  ProcessGroup(const ProcessGroup&) = delete;
  ProcessGroup& operator=(const ProcessGroup&) = delete;
  ~ProcessGroup() { kill_all(); }

  void add_local(pid_t pid, int rank) { locals_.push_back({pid, rank, false, 0}); }
  void add_remote(UniqueFd conn, Endpoint agent, int rank) {
    remotes_.push_back({std::move(conn), std::move(agent), rank, false, 0});
  }

  std::size_t size() const { return locals_.size() + remotes_.size(); }

  /// Blocks until every rank exits; returns 0 or the first nonzero status.
  int wait_all() {
    int failure = 0;
    auto note = [&](int rank, int status) {
      if (status != 0 && failure == 0) {
        failure = status;
        std::fprintf(stderr, "launch: rank %d exited with status %d\n", rank, status);
      }
    };
    for (auto& child : locals_) {
      if (child.reaped) continue;
      int raw = 0;
      if (::waitpid(child.pid, &raw, 0) < 0) raw = 0;
      child.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : 128 + WTERMSIG(raw);
      child.reaped = true;
      note(child.rank, child.status);
    }
    for (auto& child : remotes_) {
      if (child.reaped) continue;
      const nlohmann::json msg = recv_ctrl(child.conn.get());
      if (msg.value("op", "") != "exit")
        throw ProtocolError("agent at " + child.agent.str() + " sent unexpected frame");
      child.status = msg.value("status", 1);
      child.reaped = true;
      child.conn.reset();
      note(child.rank, child.status);
    }
    return failure;
  }

  /// Forcibly terminates anything still running (destructor path).
  void kill_all() {
    for (auto& child : locals_) {
      if (child.reaped) continue;
      ::kill(child.pid, SIGKILL);
      int raw = 0;
      ::waitpid(child.pid, &raw, 0);
      child.reaped = true;
      child.status = 137;
    }
    for (auto& child : remotes_) {
      // Closing the spawn connection tells the agent to kill the child.
      child.conn.reset();
      child.reaped = true;
    }
  }

 private:
  struct LocalChild {
    pid_t pid;
    int rank;
    bool reaped;
    int status;
  };
  struct RemoteChild {
    UniqueFd conn;
    Endpoint agent;
    int rank;
    bool reaped;
    int status;
  };
  std::vector<LocalChild> locals_;
  std::vector<RemoteChild> remotes_;
};

namespace detail {

inline pid_t spawn_local(const std::string& program, const std::vector<std::string>& args,
                         int rank, const std::string& world_env) {
  const pid_t pid = ::fork();
  if (pid < 0) throw LaunchError(std::string("fork: ") + errno_text());
  if (pid == 0) {
    ::setenv(kRankEnv, std::to_string(rank).c_str(), 1);
    ::setenv(kWorldEnv, world_env.c_str(), 1);
    std::vector<char*> argv;
    argv.push_back(const_cast<char*>(program.c_str()));
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    ::execvp(program.c_str(), argv.data());
    std::fprintf(stderr, "launch: exec %s: %s\n", program.c_str(), std::strerror(errno));
    ::_exit(127);
  }
  return pid;
}

inline UniqueFd dial_agent(const Endpoint& agent) {
  try {
    return dial(agent, std::chrono::milliseconds(1500));
  } catch (const TransportError& e) {
    throw LaunchError("agent unreachable at " + agent.str() + ": " + e.what());
  }
}

/// Asks an already-dialed agent to spawn one rank; the connection then
/// carries the child's exit status.
inline void request_spawn(const UniqueFd& conn, const Endpoint& agent,
                          const std::string& program, const std::vector<std::string>& args,
                          int rank, const std::string& world_env) {
  nlohmann::json spawn = {{"op", "spawn"},
                          {"program", program},
                          {"args", args},
                          {"rank", rank},
                          {"world_endpoints", world_env}};
  send_ctrl(conn.get(), spawn);
  const auto deadline = Clock::now() + std::chrono::seconds(10);
  const nlohmann::json reply = recv_ctrl(conn.get(), deadline);
  if (reply.value("op", "") != "spawned" || !reply.value("ok", false))
    throw LaunchError("agent at " + agent.str() + " failed to spawn rank " +
                      std::to_string(rank) + ": " + reply.value("error", "unknown error"));
}

struct JoinedRank {
  int rank = -1;
  std::string endpoint;  // the child's advertised mesh endpoint
  UniqueFd conn;
};

/// Accepts `expected` joins with ranks in [min_rank, world_size).
inline std::vector<JoinedRank> collect_joins(Listener& rendezvous, int expected, int min_rank,
                                             int world_size, Clock::time_point deadline) {
  std::vector<JoinedRank> joined;
  std::vector<bool> seen(static_cast<std::size_t>(world_size), false);
  while (static_cast<int>(joined.size()) < expected) {
    JoinedRank j;
    try {
      j.conn = rendezvous.accept(deadline);
      const nlohmann::json msg = recv_ctrl(j.conn.get(), deadline);
      if (msg.value("op", "") != "join") throw ProtocolError("expected join frame");
      j.rank = msg.value("rank", -1);
      j.endpoint = msg.value("endpoint", "");
    } catch (const TimeoutError&) {
      throw LaunchError("timed out waiting for " +
                        std::to_string(expected - joined.size()) + " rank(s) to join");
    }
    if (j.rank < min_rank || j.rank >= world_size || seen[static_cast<std::size_t>(j.rank)])
      throw LaunchError("rendezvous saw invalid or duplicate rank " + std::to_string(j.rank));
    seen[static_cast<std::size_t>(j.rank)] = true;
    joined.push_back(std::move(j));
  }
  return joined;
}

/// TABLE to every joined child, then DONE from each, then GO to all.
/// `table_for` builds the per-child endpoint table (rank-indexed).
template <typename TableFor>
inline void finish_handshake(std::vector<JoinedRank>& joined, TableFor&& table_for,
                             Clock::time_point deadline) {
  for (auto& j : joined) {
    send_ctrl(j.conn.get(), nlohmann::json{{"op", "table"}, {"endpoints", table_for(j)}});
  }
  for (auto& j : joined) {
    try {
      const nlohmann::json msg = recv_ctrl(j.conn.get(), deadline);
      if (msg.value("op", "") != "done") throw ProtocolError("expected done frame");
    } catch (const TimeoutError&) {
      throw LaunchError("rank " + std::to_string(j.rank) + " never finished mesh connect");
    }
  }
  for (auto& j : joined) send_ctrl(j.conn.get(), nlohmann::json{{"op", "go"}});
}

}  // namespace detail

/// Child-side handshake. Reads RANK and WORLD_ENDPOINTS, joins the
/// rendezvous, mesh-connects to all peers, and returns a live Communicator.
inline Communicator connect_from_env() {
  const char* rank_text = std::getenv(kRankEnv);
  const char* world_text = std::getenv(kWorldEnv);
  if (rank_text == nullptr || world_text == nullptr)
    throw LaunchError(std::string(kRankEnv) + " and " + kWorldEnv +
                      " must be set (run under the launcher)");
  int my_rank = 0;
  try {
    my_rank = std::stoi(rank_text);
  } catch (const std::exception&) {
    throw LaunchError(std::string("malformed ") + kRankEnv + " '" + rank_text + "'");
  }
  const auto [world_size, rendezvous_ep] = parse_world_env(world_text);
  if (my_rank < 0 || my_rank >= world_size)
    throw LaunchError("rank " + std::to_string(my_rank) + " outside world of size " +
                      std::to_string(world_size));

  const auto deadline = Clock::now() + std::chrono::seconds(30);
  Listener mesh(Endpoint{"0.0.0.0", 0});
  UniqueFd rendezvous = dial(rendezvous_ep, std::chrono::seconds(10));
  const std::string my_host = local_host_of(rendezvous.get());
  send_ctrl(rendezvous.get(),
            nlohmann::json{{"op", "join"},
                           {"rank", my_rank},
                           {"endpoint", my_host + ":" + std::to_string(mesh.port())}});

  const nlohmann::json table = recv_ctrl(rendezvous.get(), deadline);
  if (table.value("op", "") != "table")
    throw LaunchError("rendezvous sent unexpected frame before table");
  const auto endpoints = table.at("endpoints").get<std::vector<std::string>>();
  if (static_cast<int>(endpoints.size()) != world_size)
    throw LaunchError("endpoint table size disagrees with world size");

  std::vector<UniqueFd> channels(static_cast<std::size_t>(world_size));
  // Dial every lower rank (their listeners predate the table broadcast)...
  for (int peer = 0; peer < my_rank; ++peer) {
    channels[peer] = dial(parse_endpoint(endpoints[static_cast<std::size_t>(peer)]),
                          std::chrono::seconds(10));
    send_ctrl(channels[peer].get(), nlohmann::json{{"op", "hello"}, {"rank", my_rank}});
  }
  // ...and accept one connection from every higher rank.
  for (int n = my_rank + 1; n < world_size; ++n) {
    UniqueFd conn = mesh.accept(deadline);
    const nlohmann::json hello = recv_ctrl(conn.get(), deadline);
    const int peer = hello.value("rank", -1);
    if (hello.value("op", "") != "hello" || peer <= my_rank || peer >= world_size ||
        channels[static_cast<std::size_t>(peer)].valid())
      throw LaunchError("mesh connect saw invalid or duplicate hello");
    channels[static_cast<std::size_t>(peer)] = std::move(conn);
  }

  send_ctrl(rendezvous.get(), nlohmann::json{{"op", "done"}, {"rank", my_rank}});
  const nlohmann::json go = recv_ctrl(rendezvous.get(), deadline);
  if (go.value("op", "") != "go") throw LaunchError("rendezvous sent unexpected frame before go");
  return Communicator(my_rank, std::move(channels));
}

/// A launched world whose rank 0 is the calling process.
struct MsgWorld {
  ProcessGroup children;  // declared first: the communicator closes before teardown
  Communicator comm;
};

/// Spawns ranks 1..world_size-1 running `program args...` (locally, or
/// round-robin over agent endpoints) and becomes rank 0 of the world.
inline MsgWorld launch_with_master(const std::string& program,
                                   const std::vector<std::string>& args, int world_size,
                                   const std::vector<Endpoint>& agents = {}) {
  if (world_size < 1) throw DomainError("launch: world size must be >= 1");
  ProcessGroup children;
  if (world_size == 1) {
    return MsgWorld{std::move(children), Communicator(0, std::vector<UniqueFd>(1))};
  }

  Listener rendezvous(Endpoint{"0.0.0.0", 0});
  Listener mesh(Endpoint{"0.0.0.0", 0});

  for (int rank = 1; rank < world_size; ++rank) {
    if (agents.empty()) {
      const std::string world_env = format_world_env(
          world_size, Endpoint{"127.0.0.1", rendezvous.port()});
      children.add_local(detail::spawn_local(program, args, rank, world_env), rank);
    } else {
      const Endpoint& agent = agents[static_cast<std::size_t>(rank - 1) % agents.size()];
      UniqueFd conn = detail::dial_agent(agent);
      // The child dials back here; advertise the address this machine
      // exposes on the route toward that agent.
      const Endpoint rendezvous_ep{local_host_of(conn.get()), rendezvous.port()};
      detail::request_spawn(conn, agent, program, args, rank,
                            format_world_env(world_size, rendezvous_ep));
      children.add_remote(std::move(conn), agent, rank);
    }
  }

  const auto deadline = Clock::now() + std::chrono::seconds(30);
  auto joined = detail::collect_joins(rendezvous, world_size - 1, 1, world_size, deadline);

  detail::finish_handshake(
      joined,
      [&](const detail::JoinedRank& j) {
        std::vector<std::string> endpoints(static_cast<std::size_t>(world_size));
        // Rank 0 (this process) advertised per child: our address on the
        // route to that child.
        endpoints[0] = local_host_of(j.conn.get()) + ":" + std::to_string(mesh.port());
        for (const auto& other : joined)
          endpoints[static_cast<std::size_t>(other.rank)] = other.endpoint;
        return endpoints;
      },
      deadline);

  std::vector<UniqueFd> channels(static_cast<std::size_t>(world_size));
  for (int n = 1; n < world_size; ++n) {
    UniqueFd conn = mesh.accept(deadline);
    const nlohmann::json hello = recv_ctrl(conn.get(), deadline);
    const int peer = hello.value("rank", -1);
    if (hello.value("op", "") != "hello" || peer < 1 || peer >= world_size ||
        channels[static_cast<std::size_t>(peer)].valid())
      throw LaunchError("mesh connect saw invalid or duplicate hello");
    channels[static_cast<std::size_t>(peer)] = std::move(conn);
  }

  return MsgWorld{std::move(children), Communicator(0, std::move(channels))};
}

/// SPMD launch: spawns ranks 0..world_size-1 all running `program args...`
/// (rank 0 on this machine, workers round-robin over agents when given),
/// hosts the rendezvous, and waits for every rank to exit.
inline int launch_spmd(const std::string& program, const std::vector<std::string>& args,
                       int world_size, const std::vector<Endpoint>& agents = {}) {
  if (world_size < 1) throw DomainError("launch: world size must be >= 1");
  ProcessGroup children;
  Listener rendezvous(Endpoint{"0.0.0.0", 0});

  const std::string local_env =
      format_world_env(world_size, Endpoint{"127.0.0.1", rendezvous.port()});
  children.add_local(detail::spawn_local(program, args, 0, local_env), 0);
  for (int rank = 1; rank < world_size; ++rank) {
    if (agents.empty()) {
      children.add_local(detail::spawn_local(program, args, rank, local_env), rank);
    } else {
      const Endpoint& agent = agents[static_cast<std::size_t>(rank - 1) % agents.size()];
      UniqueFd conn = detail::dial_agent(agent);
      const Endpoint rendezvous_ep{local_host_of(conn.get()), rendezvous.port()};
      detail::request_spawn(conn, agent, program, args, rank,
                            format_world_env(world_size, rendezvous_ep));
      children.add_remote(std::move(conn), agent, rank);
    }
  }

  const auto deadline = Clock::now() + std::chrono::seconds(30);
  auto joined = detail::collect_joins(rendezvous, world_size, 0, world_size, deadline);
  detail::finish_handshake(
      joined,
      [&](const detail::JoinedRank&) {
        std::vector<std::string> endpoints(static_cast<std::size_t>(world_size));
        for (const auto& other : joined)
          endpoints[static_cast<std::size_t>(other.rank)] = other.endpoint;
        return endpoints;
      },
      deadline);

  return children.wait_all();
}

/// Agent daemon: accepts spawn requests and runs each child until it exits
/// (or until the requesting connection drops, which kills the child).
[[noreturn]] inline void agent_serve(const Endpoint& listen_ep) {
  std::optional<Listener> listener;
  try {
    listener.emplace(listen_ep);
  } catch (const TransportError& e) {
    throw LaunchError("agent cannot listen on " + listen_ep.str() + ": " + e.what());
  }
  std::fprintf(stderr, "agent: listening on %s\n", listen_ep.str().c_str());

  for (;;) {
    UniqueFd conn = listener->accept();
    std::thread([fd = std::move(conn)]() mutable {
      try {
        const auto deadline = Clock::now() + std::chrono::seconds(10);
        const nlohmann::json spawn = recv_ctrl(fd.get(), deadline);
        if (spawn.value("op", "") != "spawn") return;
        const pid_t pid = detail::spawn_local(
            spawn.value("program", ""), spawn.value("args", std::vector<std::string>{}),
            spawn.value("rank", -1), spawn.value("world_endpoints", ""));
        send_ctrl(fd.get(), nlohmann::json{{"op", "spawned"}, {"ok", true}});

        // Wait for child exit; a dropped connection means "kill it".
        for (;;) {
          int raw = 0;
          const pid_t done = ::waitpid(pid, &raw, WNOHANG);
          if (done == pid) {
            const int status = WIFEXITED(raw) ? WEXITSTATUS(raw) : 128 + WTERMSIG(raw);
            send_ctrl(fd.get(), nlohmann::json{{"op", "exit"}, {"status", status}});
            return;
          }
          pollfd pfd{fd.get(), POLLIN, 0};
          if (::poll(&pfd, 1, 100) > 0) {
            char probe = 0;
            if (::recv(fd.get(), &probe, 1, MSG_PEEK | MSG_DONTWAIT) == 0) {
              ::kill(pid, SIGKILL);
              ::waitpid(pid, &raw, 0);
              return;
            }
          }
        }
      } catch (const std::exception& e) {
        try {
          send_ctrl(fd.get(), nlohmann::json{{"op", "spawned"}, {"ok", false},
                                             {"error", e.what()}});
        } catch (...) {
        }
      }
    }).detach();
  }
}

}  // namespace mmws
