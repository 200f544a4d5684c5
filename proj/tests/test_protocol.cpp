#include "mmws/protocol.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "mmws/launch.hpp"
#include "mmws/matrix.hpp"

using mmws::Matrix;
using mmws::WorkAssignment;

namespace {

mmws::MsgWorld worker_world(int world_size) {
  return mmws::launch_with_master(RANK_HELPER_PATH, {"worker"}, world_size);
}

}  // namespace

TEST_CASE("split_rows fixtures") {
  CHECK(mmws::split_rows(4, 3) ==
        std::vector<WorkAssignment>{{0, 2}, {2, 1}, {3, 1}});
  CHECK(mmws::split_rows(6, 3) ==
        std::vector<WorkAssignment>{{0, 2}, {2, 2}, {4, 2}});
  CHECK(mmws::split_rows(2, 3) ==
        std::vector<WorkAssignment>{{0, 1}, {1, 1}, {2, 0}});
  CHECK_THROWS_AS(mmws::split_rows(4, 0), mmws::DomainError);
}

TEST_CASE("split_rows properties over the full grid") {
  for (std::int64_t n_rows = 1; n_rows <= 200; ++n_rows) {
    for (int workers = 1; workers <= 16; ++workers) {
      const auto split = mmws::split_rows(n_rows, workers);
      REQUIRE(split.size() == static_cast<std::size_t>(workers));

      std::int64_t next = 0;
      std::int64_t min_len = split[0].rows, max_len = 0;
      const std::int64_t averow = n_rows / workers;
      const std::int64_t extra = n_rows % workers;
      for (int w = 0; w < workers; ++w) {
        const auto& asg = split[static_cast<std::size_t>(w)];
        CHECK(asg.offset == next);  // contiguous, ascending, disjoint
        CHECK(asg.rows == averow + (w < extra ? 1 : 0));
        next = asg.offset + asg.rows;
        min_len = std::min(min_len, asg.rows);
        max_len = std::max(max_len, asg.rows);
      }
      CHECK(next == n_rows);  // full coverage
      CHECK(max_len - min_len <= 1);
    }
  }
}

TEST_CASE("one worker computes the hand-checked product") {
  auto world = worker_world(2);
  const Matrix a(2, 2, {1, 2, 3, 4});
  const Matrix b(2, 2, {5, 6, 7, 8});
  const auto [c, elapsed] = mmws::master_run(world.comm, a, b);
  CHECK(c(0, 0) == 19.0);
  CHECK(c(0, 1) == 22.0);
  CHECK(c(1, 0) == 43.0);
  CHECK(c(1, 1) == 50.0);
  CHECK(elapsed >= 0.0);
  CHECK(world.children.wait_all() == 0);
}

TEST_CASE("identity times B returns B bitwise") {
  auto world = worker_world(3);
  const Matrix b = mmws::random_matrix(6, 6, 17);
  const auto [c, elapsed] = mmws::master_run(world.comm, mmws::identity(6), b);
  CHECK(mmws::bitwise_equal(c, b));
}

TEST_CASE("message-passing product is bitwise-equal to the sequential one") {
  for (int world_size : {2, 3, 4, 5}) {
    for (std::size_t n : {std::size_t{1}, std::size_t{2}, std::size_t{3}, std::size_t{4},
                          std::size_t{8}, std::size_t{16}, std::size_t{33}}) {
      auto world = worker_world(world_size);
      const Matrix a = mmws::random_matrix(n, n, 100 + n);
      const Matrix b = mmws::random_matrix(n, n, 200 + n);
      const auto [c, elapsed] = mmws::master_run(world.comm, a, b);
      INFO("n=" << n << " world_size=" << world_size);
      CHECK(mmws::bitwise_equal(c, mmws::matmul_seq(a, b)));
      CHECK(world.children.wait_all() == 0);
    }
  }
}

TEST_CASE("rectangular slices reassemble correctly") {
  auto world = worker_world(3);
  const Matrix a = mmws::random_matrix(5, 7, 31);
  const Matrix b = mmws::random_matrix(7, 4, 32);
  const auto [c, elapsed] = mmws::master_run(world.comm, a, b);
  CHECK(mmws::bitwise_equal(c, mmws::matmul_seq(a, b)));
}

TEST_CASE("protocol shape: message counts and field order") {
  auto world = worker_world(3);
  const Matrix a = mmws::random_matrix(4, 4, 51);
  const Matrix b = mmws::random_matrix(4, 4, 52);
  const auto [c, elapsed] = mmws::master_run(world.comm, a, b);
  REQUIRE(mmws::bitwise_equal(c, mmws::matmul_seq(a, b)));

  const auto& log = world.comm.traffic();
  // Distribution: per worker offset, rows, A-slice, B with tag 1.
  int sent_tag1 = 0, recv_tag2 = 0;
  for (const auto& entry : log) {
    if (entry.dir == mmws::TrafficEntry::Dir::sent && entry.tag == 1) sent_tag1++;
    if (entry.dir == mmws::TrafficEntry::Dir::received && entry.tag == 2) recv_tag2++;
  }
  CHECK(sent_tag1 == 4 * 2);
  CHECK(recv_tag2 == 3 * 2);

  using K = mmws::PayloadKind;
  REQUIRE(log.size() == 14);
  // Worker 1: rows {0,1} of a 4x4 problem.
  CHECK(log[0].kind == K::int64_scalar);    // offset
  CHECK(log[1].kind == K::int64_scalar);    // rows
  CHECK(log[2].kind == K::float64_array);   // A-slice
  CHECK(log[2].element_count == 2 * 4);
  CHECK(log[3].kind == K::float64_array);   // all of B
  CHECK(log[3].element_count == 4 * 4);
  for (int i = 0; i < 4; ++i) CHECK(log[static_cast<std::size_t>(i)].peer == 1);
  // Worker 2 gets the same shape.
  CHECK(log[6].element_count == 2 * 4);
  CHECK(log[7].element_count == 4 * 4);
  // Collection: offset, rows, C-slice from rank 1 then rank 2.
  CHECK(log[8].peer == 1);
  CHECK(log[8].kind == K::int64_scalar);
  CHECK(log[9].kind == K::int64_scalar);
  CHECK(log[10].kind == K::float64_array);
  CHECK(log[10].element_count == 2 * 4);
  CHECK(log[11].peer == 2);
  CHECK(log[13].element_count == 2 * 4);
}

TEST_CASE("idle workers still complete the handshake") {
  auto world = worker_world(5);  // 4 workers for 2 rows: two idle
  const Matrix a = mmws::random_matrix(2, 2, 61);
  const Matrix b = mmws::random_matrix(2, 2, 62);
  const auto [c, elapsed] = mmws::master_run(world.comm, a, b);
  CHECK(mmws::bitwise_equal(c, mmws::matmul_seq(a, b)));
  CHECK(world.children.wait_all() == 0);

  // The idle ranks returned zero-row, zero-element result slices.
  const auto& log = world.comm.traffic();
  int empty_slices = 0;
  for (const auto& entry : log) {
    if (entry.dir == mmws::TrafficEntry::Dir::received &&
        entry.kind == mmws::PayloadKind::float64_array && entry.element_count == 0) {
      empty_slices++;
    }
  }
  CHECK(empty_slices == 2);
}

TEST_CASE("reassembly does not depend on reply arrival order") {
  // Rank 1 stalls before serving, so rank 2's reply arrives first and waits
  // in its channel; the master still collects in ascending rank order.
  auto world = mmws::launch_with_master(RANK_HELPER_PATH, {"worker", "300", "1"}, 3);
  const Matrix a = mmws::random_matrix(6, 6, 71);
  const Matrix b = mmws::random_matrix(6, 6, 72);
  const auto [c, elapsed] = mmws::master_run(world.comm, a, b);
  CHECK(mmws::bitwise_equal(c, mmws::matmul_seq(a, b)));
  CHECK(elapsed >= 0.3);
  CHECK(world.children.wait_all() == 0);
}

TEST_CASE("a dead worker surfaces as a protocol error naming the rank") {
  auto world = mmws::launch_with_master(RANK_HELPER_PATH, {"join-only"}, 2);
  const Matrix a = mmws::random_matrix(4, 4, 81);
  const Matrix b = mmws::random_matrix(4, 4, 82);
  CHECK_THROWS_MATCHES(
      mmws::master_run(world.comm, a, b), mmws::ProtocolError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("rank 1")));
}

TEST_CASE("an out-of-range reply offset is a protocol error") {
  auto world = mmws::launch_with_master(RANK_HELPER_PATH, {"worker-bad-offset"}, 2);
  const Matrix a = mmws::random_matrix(4, 4, 91);
  const Matrix b = mmws::random_matrix(4, 4, 92);
  CHECK_THROWS_MATCHES(
      mmws::master_run(world.comm, a, b), mmws::ProtocolError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("999999")));
}

TEST_CASE("master_run preconditions") {
  SECTION("needs at least one worker") {
    auto world = mmws::launch_with_master(RANK_HELPER_PATH, {"join-only"}, 1);
    const Matrix a = mmws::random_matrix(2, 2, 1);
    CHECK_THROWS_AS(mmws::master_run(world.comm, a, a), mmws::DomainError);
  }
  SECTION("inner dimensions must agree") {
    auto world = worker_world(2);
    const Matrix a = mmws::random_matrix(2, 3, 2);
    const Matrix b = mmws::random_matrix(2, 2, 3);
    CHECK_THROWS_AS(mmws::master_run(world.comm, a, b), mmws::DimensionError);
  }
}
