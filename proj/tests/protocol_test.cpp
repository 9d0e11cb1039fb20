#include <catch2/catch_amalgamated.hpp>

#include "qube/protocol.hpp"

using namespace qube;
using nlohmann::json;

namespace {

std::vector<json> send(protocol::Endpoint& ep, const std::string& line) {
  std::vector<json> out;
  for (const auto& reply : ep.on_line(line)) out.push_back(json::parse(reply));
  return out;
}

protocol::Endpoint connected(std::uint64_t seed = 1) {
  protocol::Endpoint ep{Session(seed)};
  const auto hello = send(ep, R"({"type":"hello","version":1})");
  REQUIRE(hello.size() == 2);
  return ep;
}

}  // namespace

TEST_CASE("handshake", "[protocol]") {
  protocol::Endpoint ep{Session(42)};
  SECTION("commands before hello are refused") {
    const auto r = send(ep, R"({"type":"Play","id":1})");
    REQUIRE(r.size() == 1);
    CHECK(r[0]["type"] == "error");
    CHECK(r[0]["code"] == "invalid_state");
    CHECK(r[0]["id"] == 1);
    CHECK_FALSE(ep.pump());
  }
  SECTION("version mismatch") {
    const auto r = send(ep, R"({"type":"hello","version":9})");
    CHECK(r[0]["code"] == "malformed_command");
  }
  SECTION("hello describes the session and sends a first frame") {
    const auto r = send(ep, R"({"type":"hello","version":1})");
    REQUIRE(r.size() == 2);
    CHECK(r[0]["type"] == "hello");
    CHECK(r[0]["version"] == 1);
    CHECK(r[0]["seed"] == 42);
    CHECK(r[0]["maze"].size() == 10);
    CHECK(r[0]["legal_values"]["goal_reward"] == json::array({1, 3, 5, 7, 10, 30, 100}));
    CHECK(r[0]["speeds"] == json::array({1, 5, 25, 125, "max"}));
    CHECK(r[1]["type"] == "frame");
    CHECK(r[1]["mode"] == "editing");
    CHECK(r[1]["q_view"]["cells"].size() == 100);
  }
}

TEST_CASE("commands are acknowledged and followed by a frame", "[protocol]") {
  auto ep = connected();
  auto r = send(ep, R"({"type":"EditCell","id":"a","payload":{"x":3,"y":4,"tool":"wall"}})");
  REQUIRE(r.size() == 2);
  CHECK(r[0]["type"] == "ack");
  CHECK(r[0]["id"] == "a");
  CHECK(r[0]["command"] == "EditCell");
  CHECK(r[1]["type"] == "frame");
  CHECK(r[1]["q_view"]["cells"][43]["wall"] == true);

  r = send(ep, R"({"type":"SetSpeed","id":2,"payload":{"speed":"max"}})");
  CHECK(r[1]["speed"] == "max");
  r = send(ep, R"({"type":"Play","id":3})");
  CHECK(r[0]["mode"] == "running");
  // Max speed publishes only at episode boundaries.
  std::optional<std::string> frame;
  for (int i = 0; i < 1000 && !frame; ++i) frame = ep.pump();
  REQUIRE(frame);
  CHECK(json::parse(*frame)["episode_count"] == 1);

  r = send(ep, R"({"type":"SetParam","id":4,"payload":{"name":"discount_factor","value":0.7}})");
  CHECK(r[0]["stale"] == true);
  CHECK(r[1]["stale"] == true);

  r = send(ep, R"({"type":"TakeSnapshot","id":5,"payload":{"label":"one"}})");
  CHECK(r[0]["snapshot"]["id"] == "snap-1");
  CHECK(r[0]["snapshot"]["label"] == "one");
  r = send(ep, R"({"type":"TakeSnapshot","id":6})");
  r = send(ep, R"({"type":"DiffSnapshots","id":7,"payload":{"a":"snap-1","b":"snap-2"}})");
  REQUIRE(r.size() == 1);
  CHECK(r[0]["diff"]["empty"] == true);
  r = send(ep, R"({"type":"ListSnapshots","id":8})");
  CHECK(r[0]["snapshots"].size() == 2);
  r = send(ep, R"({"type":"GetSnapshot","id":9,"payload":{"id":"snap-2"}})");
  CHECK(r[0]["snapshot"]["version"] == 1);
  r = send(ep, R"({"type":"DeleteSnapshot","id":10,"payload":{"id":"snap-1"}})");
  CHECK(r[0]["type"] == "ack");
  r = send(ep, R"({"type":"Reset","id":11})");
  CHECK(r[0]["mode"] == "editing");
  CHECK(r[1]["episode_count"] == 0);
}

TEST_CASE("errors carry a machine-readable code and the correlation id", "[protocol]") {
  auto ep = connected();
  auto code = [&](const std::string& line) {
    const auto r = send(ep, line);
    REQUIRE(r.size() == 1);
    CHECK(r[0]["type"] == "error");
    CHECK_FALSE(r[0]["message"].get<std::string>().empty());
    return r[0]["code"].get<std::string>();
  };
  CHECK(code("{not json") == "malformed_command");
  CHECK(code(R"({"id":1})") == "malformed_command");
  CHECK(code(R"({"type":"Fly","id":1})") == "unknown_command");
  CHECK(code(R"({"type":"EditCell","id":1,"payload":{"x":1}})") == "malformed_command");
  CHECK(code(R"({"type":"EditCell","id":1,"payload":{"x":"1","y":1,"tool":"wall"}})") ==
        "malformed_command");
  CHECK(code(R"({"type":"EditCell","id":1,"payload":{"x":1,"y":1,"tool":"lava"}})") ==
        "illegal_value");
  CHECK(code(R"({"type":"EditCell","id":1,"payload":{"x":0,"y":0,"tool":"ghost"}})") ==
        "invalid_maze");
  CHECK(code(R"({"type":"SetParam","id":1,"payload":{"name":"goal_reward","value":2}})") ==
        "illegal_value");
  CHECK(code(R"({"type":"SetParam","id":1,"payload":{"name":"speed","value":2}})") ==
        "illegal_value");
  CHECK(code(R"({"type":"SetSpeed","id":1,"payload":{"speed":2}})") == "illegal_value");
  CHECK(code(R"({"type":"LoadMaze","id":1,"payload":{"maze":["S.E"]}})") == "invalid_maze");
  CHECK(code(R"({"type":"DeleteSnapshot","id":1,"payload":{"id":"snap-7"}})") == "not_found");
  CHECK(code(R"({"type":"Explain","id":1,"payload":{"name":"learning_rate","value":0.2}})") ==
        "illegal_value");

  const auto r = send(ep, R"({"type":"SetParam","id":{"n":[1,2]},"payload":{"name":"goal_reward","value":2}})");
  CHECK(r[0]["id"] == json::parse(R"({"n":[1,2]})"));
}

TEST_CASE("explain and maze queries", "[protocol]") {
  auto ep = connected();
  auto r = send(ep, R"({"type":"Explain","id":1,"payload":{"name":"range_of_movement","value":5}})");
  REQUIRE(r.size() == 1);
  CHECK(r[0]["text"] ==
        "This Range of Movement allows you ghosts to move in 5 tiles from their original "
        "starting point. This makes a ghost difficult for your agent to learn to avoid.");
  CHECK(r[0]["emphasized"].size() == 2);

  std::vector<std::string> rows(10, "..........");
  rows[0] = "S....#....";
  rows[9] = ".G.......E";
  r = send(ep, json{{"type", "LoadMaze"}, {"id", 2}, {"payload", {{"maze", rows}}}}.dump());
  CHECK(r[0]["type"] == "ack");
  r = send(ep, R"({"type":"GetMaze","id":3})");
  CHECK(r[0]["maze"] == rows);
}

TEST_CASE("protocol sessions replay from their command log", "[protocol]") {
  auto ep = connected(99);
  std::vector<std::string> frames;
  auto collect = [&](const std::string& line) {
    for (const auto& reply : ep.on_line(line)) {
      if (json::parse(reply)["type"] == "frame") frames.push_back(reply);
    }
  };
  collect(R"({"type":"EditCell","id":1,"payload":{"x":4,"y":4,"tool":"ghost"}})");
  collect(R"({"type":"Play","id":2})");
  for (int i = 0; i < 500; ++i) {
    if (auto f = ep.pump()) frames.push_back(*f);
  }
  collect(R"({"type":"SetParam","id":3,"payload":{"name":"range_of_movement","value":5}})");
  for (int i = 0; i < 500; ++i) {
    if (auto f = ep.pump()) frames.push_back(*f);
  }
  const Session& s = ep.session();
  const auto replayed = replay(s.seed(), s.options(), s.initial_maze(), s.initial_params(),
                               s.command_log(), s.clock());
  REQUIRE(replayed.size() == frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    REQUIRE(protocol::frame_json(replayed[i]).dump() == frames[i]);
  }
}
