// Launcher CLI.
//
//   launch --world-size K [--hosts host:port,...] -- <program> <args...>
//   launch agent --listen host:port
//
// Spawns K ranks of <program> (rank 0 on this machine; with --hosts, workers
// go round-robin to the agents at those endpoints), injects RANK and
// WORLD_ENDPOINTS, and waits for all ranks to exit.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmws/launch.hpp"

int main(int argc, char** argv) {
  CLI::App app{"multi-process launcher for rank-based programs"};
  app.allow_extras();

  int world_size = 0;
  std::string hosts_csv;
  app.add_option("--world-size", world_size, "number of ranks to launch")
      ->check(CLI::PositiveNumber);
  app.add_option("--hosts", hosts_csv, "comma-separated agent endpoints for workers");

  std::string agent_listen;
  CLI::App* agent = app.add_subcommand("agent", "run a spawn agent for remote launches");
  agent->add_option("--listen", agent_listen, "endpoint to listen on")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (agent->parsed()) {
      mmws::agent_serve(mmws::parse_endpoint(agent_listen));
    }

    if (world_size < 1) {
      std::fprintf(stderr, "launch: --world-size is required\n");
      return 2;
    }
    std::vector<std::string> rest = app.remaining();
    if (!rest.empty() && rest.front() == "--") rest.erase(rest.begin());
    if (rest.empty()) {
      std::fprintf(stderr, "launch: no program given (use -- <program> <args...>)\n");
      return 2;
    }
    const std::string program = rest.front();
    const std::vector<std::string> args(rest.begin() + 1, rest.end());

    std::vector<mmws::Endpoint> agents;
    if (!hosts_csv.empty()) {
      std::size_t start = 0;
      while (start <= hosts_csv.size()) {
        const std::size_t comma = hosts_csv.find(',', start);
        const std::string part =
            hosts_csv.substr(start, comma == std::string::npos ? std::string::npos
                                                               : comma - start);
        if (!part.empty()) agents.push_back(mmws::parse_endpoint(part));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }

    const int status = mmws::launch_spmd(program, args, world_size, agents);
    return status == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "launch: %s\n", e.what());
    return 1;
  }
}
