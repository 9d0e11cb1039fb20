#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <filesystem>

#include "qube/snapshot.hpp"
#include "support/random_maze.hpp"

using namespace qube;

namespace {

struct Run {
  Maze maze;
  Parameters params;
  TrainerState trainer;
};

Run trained(const Maze& m, Parameters p, std::uint64_t seed, int episodes) {
  TrainingConfig config;
  Run r{m, p, make_trainer(m, config, seed)};
  for (int i = 0; i < episodes; ++i) run_episode(r.maze, r.trainer, r.params, config);
  return r;
}

Maze corridor_10x10() {
  Maze m = Maze::open(10, 10, {0, 4}, {9, 4});
  for (std::size_t i = 0; i < m.cell_count(); ++i) {
    if (m.cell_at(i).y != 4) m.cells[i] = Tile::Wall;
  }
  return m;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("qube-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("capture of a fresh session", "[snapshot]") {
  const Maze m = Maze::open(10, 10, {0, 9}, {9, 9});
  const TrainerState t = make_trainer(m, {}, 1);
  const Snapshot s = capture(m, {}, t, "snap-1");
  CHECK(s.cycle_count == 0);
  CHECK_FALSE(s.greedy_path);
  CHECK_FALSE(s.converged);
}

TEST_CASE("snapshots are deep copies", "[snapshot]") {
  Run r = trained(corridor_10x10(), {}, 3, 20);
  const Snapshot s = capture(r.maze, r.params, r.trainer, "snap-1", "baseline");
  const Snapshot copy = s;
  TrainingConfig config;
  for (int i = 0; i < 100; ++i) run_episode(r.maze, r.trainer, r.params, config);
  r.maze.set({3, 3}, Tile::Floor);
  CHECK(s == copy);
  CHECK(s.cycle_count == 20);
}

TEST_CASE("captured path equals the live greedy path", "[snapshot]") {
  Run r = trained(corridor_10x10(), {}, 3, 200);
  const Snapshot s = capture(r.maze, r.params, r.trainer, "snap-1");
  REQUIRE(s.greedy_path);
  CHECK(s.greedy_path == greedy_path(r.trainer.qtable, r.maze));
  CHECK(s.greedy_path == greedy_path(s.qtable, s.maze));
  CHECK(path_length(*s.greedy_path) == 9);
}

TEST_CASE("serialize round-trips exactly", "[snapshot][format]") {
  Rng gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Maze m = testing::random_maze(gen, 10, 10, 0.25, 2);
    Parameters p;
    p.learning_rate = 0.3;
    p.range_of_movement = 2;
    const Run r = trained(m, p, trial, 50 + trial * 10);
    const Snapshot s = capture(r.maze, r.params, r.trainer, "snap-" + std::to_string(trial),
                               trial % 2 ? std::optional<std::string>("run " + std::to_string(trial))
                                         : std::nullopt,
                               "2026-01-01T00:00:00Z");
    const std::string text = serialize(s);
    const Snapshot back = deserialize(text);
    REQUIRE(back == s);
    REQUIRE(serialize(back) == text);
    REQUIRE(diff(s, back).empty());
    REQUIRE(back.greedy_path == greedy_path(back.qtable, back.maze));
  }
}

TEST_CASE("snapshot file layout", "[snapshot][format]") {
  Maze m = Maze::open(3, 1, {0, 0}, {2, 0});
  TrainerState t = make_trainer(m, {}, 1);
  t.qtable.at({0, 0}, Direction::Right) = 1.0 / 3.0;
  t.qtable.at({1, 0}, Direction::Right) = 1.0;
  const std::string text = serialize(capture(m, {}, t, "snap-9", std::nullopt, "T"));
  CHECK(text.starts_with("{\n  \"version\": 1,"));
  CHECK(text.find("\"0 0 0.000000 0.000000 0.000000 0.333333\"") != std::string::npos);
  CHECK(text.find("\"S.E\"") != std::string::npos);
  CHECK(text.find("\"greedy_path\": \"diverges\"") == std::string::npos);

  SECTION("decimal rows load when the exact column is absent") {
    auto j = nlohmann::json::parse(text);
    j["qtable"].erase("exact");
    const Snapshot s = deserialize(j.dump());
    CHECK(s.qtable.at({0, 0}, Direction::Right) == 0.333333);
  }
  SECTION("tampering is detected") {
    auto j = nlohmann::json::parse(text);
    j["greedy_path"] = "diverges";
    CHECK_THROWS_AS(deserialize(j.dump()), Error);
    j = nlohmann::json::parse(text);
    j["version"] = 2;
    CHECK_THROWS_AS(deserialize(j.dump()), Error);
    CHECK_THROWS_AS(deserialize("not json"), Error);
  }
}

TEST_CASE("diff", "[snapshot]") {
  const Run base = trained(corridor_10x10(), {}, 5, 100);
  const Snapshot a = capture(base.maze, base.params, base.trainer, "a", std::nullopt, "T");

  SECTION("reflexive") { CHECK(diff(a, a).empty()); }

  SECTION("single parameter change") {
    Snapshot b = a;
    Snapshot low = a;
    low.params.learning_rate = 0.1;
    b.params.learning_rate = 0.9;
    const auto d = diff(low, b);
    REQUIRE(d.param_changes.size() == 1);
    CHECK(d.param_changes[0] == ParamChange{ParamId::learning_rate, 0.1, 0.9});
    CHECK_FALSE(d.maze_changed);
    CHECK_FALSE(d.empty());
  }

  SECTION("maze edits list the changed cells") {
    Snapshot b = a;
    b.maze.set({4, 3}, Tile::Floor);
    b.maze.add_ghost({4, 3});
    const auto d = diff(a, b);
    CHECK(d.maze_changed);
    CHECK(d.changed_cells == std::vector<Cell>{{4, 3}});
  }

  SECTION("cycle delta is signed") {
    Snapshot b = a;
    b.cycle_count += 42;
    CHECK(diff(a, b).cycle_delta == 42);
    CHECK(diff(b, a).cycle_delta == -42);
  }
}

TEST_CASE("diff is mirrored when swapped", "[snapshot][property]") {
  Rng gen(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Maze m1 = testing::random_maze(gen, 10, 10, 0.2, 1);
    const Maze m2 = trial % 3 ? m1 : testing::random_maze(gen, 10, 10, 0.2, 1);
    Parameters p1;
    Parameters p2;
    p2.punishment_value = legal::punishment_value[uniform_index(gen, 7)];
    p2.discount_factor = legal::discount_factor[uniform_index(gen, 5)];
    const Run r1 = trained(m1, p1, trial, 60);
    const Run r2 = trained(m2, p2, trial + 100, 40);
    const Snapshot a = capture(r1.maze, r1.params, r1.trainer, "a", std::nullopt, "T");
    const Snapshot b = capture(r2.maze, r2.params, r2.trainer, "b", std::nullopt, "T");
    const auto ab = diff(a, b);
    const auto ba = diff(b, a);
    REQUIRE(ab.param_changes.size() == ba.param_changes.size());
    for (std::size_t i = 0; i < ab.param_changes.size(); ++i) {
      REQUIRE(ab.param_changes[i].id == ba.param_changes[i].id);
      REQUIRE(ab.param_changes[i].old_value == ba.param_changes[i].new_value);
      REQUIRE(ab.param_changes[i].new_value == ba.param_changes[i].old_value);
    }
    REQUIRE(ab.changed_cells == ba.changed_cells);
    REQUIRE(ab.path_old == ba.path_new);
    REQUIRE(ab.first_path_difference == ba.first_path_difference);
    REQUIRE(ab.cycle_delta == -ba.cycle_delta);
  }
}

TEST_CASE("paths from different punishments are compared cell by cell", "[snapshot]") {
  // Two routes around a ghost: the short one passes next to it.
  const Maze m = parse_maze(
      "S...#.....\n"
      ".##.#.##..\n"
      "..#...#...\n"
      "#.#.#.#.#.\n"
      "..#.#...#.\n"
      ".##.####..\n"
      "....#..G..\n"
      ".#.##.#...\n"
      ".#....#.#.\n"
      "...#....#E\n");
  Parameters mild;
  mild.range_of_movement = 1;
  mild.punishment_value = 1;
  Parameters harsh = mild;
  harsh.punishment_value = 100;
  TrainingConfig config;
  TrainerState t1 = make_trainer(m, config, 1);
  TrainerState t2 = make_trainer(m, config, 2);
  train(m, t1, mild, config, 5000);
  train(m, t2, harsh, config, 5000);
  const Snapshot a = capture(m, mild, t1, "a", std::nullopt, "T");
  const Snapshot b = capture(m, harsh, t2, "b", std::nullopt, "T");
  const auto d = diff(a, b);

  std::optional<std::size_t> expected;
  if (a.greedy_path.has_value() != b.greedy_path.has_value()) {
    expected = 0;
  } else if (a.greedy_path) {
    const auto& p = *a.greedy_path;
    const auto& q = *b.greedy_path;
    for (std::size_t i = 0; i < std::max(p.size(), q.size()); ++i) {
      if (i >= p.size() || i >= q.size() || p[i] != q[i]) {
        expected = i;
        break;
      }
    }
  }
  CHECK(d.first_path_difference == expected);
  REQUIRE(d.param_changes.size() == 1);
  CHECK(d.param_changes[0].id == ParamId::punishment_value);
  CHECK(d.cycle_delta == b.cycle_count - a.cycle_count);
}

TEST_CASE("snapshot store", "[snapshot]") {
  const Maze m = corridor_10x10();
  const TrainerState t = make_trainer(m, {}, 1);

  SECTION("full store refuses instead of evicting") {
    SnapshotStore store;
    for (std::size_t i = 0; i < kSnapshotCapacity; ++i) {
      store.add(capture(m, {}, t, store.next_id()));
    }
    try {
      store.add(capture(m, {}, t, store.next_id()));
      FAIL("expected storage_full");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::storage_full);
    }
    CHECK(store.size() == kSnapshotCapacity);
    CHECK(store.find("snap-1"));
    store.remove("snap-1");
    CHECK_NOTHROW(store.add(capture(m, {}, t, store.next_id())));
    CHECK_THROWS_AS(store.remove("snap-1"), Error);
    CHECK_THROWS_AS(store.get("nope"), Error);
  }

  SECTION("persists one file per snapshot") {
    const auto dir = temp_dir("store");
    SnapshotStore store(dir);
    const auto& s = store.add(capture(m, {}, t, store.next_id(), "first"));
    const auto file = dir / "snap-1.json";
    REQUIRE(std::filesystem::exists(file));
    CHECK(load_snapshot(file) == s);
    store.remove("snap-1");
    CHECK_FALSE(std::filesystem::exists(file));
    std::filesystem::remove_all(dir);
  }

  SECTION("storage failures are io errors, not validation errors") {
    SnapshotStore store(std::filesystem::path("/proc/qube-cannot-write-here"));
    try {
      store.add(capture(m, {}, t, store.next_id()));
      FAIL("expected io_error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::io_error);
    }
    CHECK(store.size() == 0);
  }
}
