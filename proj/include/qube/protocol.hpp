#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "qube/explain.hpp"
#include "qube/session.hpp"

// Newline-delimited JSON protocol between a session and its client.
//
//   client -> server   {"type": "hello", "version": 1}             (first)
//                      {"type": <Command>, "id": <any>, "payload": {...}}
//   server -> client   {"type": "hello", ...}   handshake reply
//                      {"type": "ack", "id": ..., "command": ..., ...}
//                      {"type": "error", "id": ..., "code": ..., "message": ...}
//                      {"type": "frame", ...}
//
// Commands: EditCell {x, y, tool}, SetParam {name, value}, Play, Pause,
// SetSpeed {speed: 1|5|25|125|"max"}, Reset, TakeSnapshot {label?},
// DeleteSnapshot {id}, LoadMaze {maze: [rows] | "text"}.
// Queries (ack carries the answer, no frame follows): Explain {name, value},
// GetMaze, ListSnapshots, GetSnapshot {id}, DiffSnapshots {a, b}.
// Every accepted command is acknowledged and followed by a frame.
namespace qube::protocol {

inline constexpr int kVersion = 1;

using Json = nlohmann::ordered_json;

inline Json cell_json(Cell c) { return Json::array({c.x, c.y}); }

inline Json path_json(const GreedyPath& p) {
  if (!p) return "diverges";
  Json arr = Json::array();
  for (Cell c : *p) arr.push_back(cell_json(c));
  return arr;
}

inline Json params_json(const Parameters& p) { return qube::detail::params_to_json(p); }

inline Json legal_values_json() {
  Json j;
  for (ParamId id : kParamIds) {
    Json values = Json::array();
    for (double v : legal_values(id)) values.push_back(v);
    j[std::string(to_string(id))] = values;
  }
  return j;
}

inline Json q_view_json(const QView& view) {
  Json cells = Json::array();
  for (const auto& c : view.cells) {
    Json cell{{"x", c.cell.x}, {"y", c.cell.y}, {"wall", c.wall}};
    if (!c.wall) {
      cell["q"] = c.values;
      cell["bucket"] = c.buckets;
      cell["arrows"] = c.arrows;
    }
    cells.push_back(std::move(cell));
  }
  return Json{{"width", view.width}, {"height", view.height}, {"cells", std::move(cells)}};
}

inline Json frame_json(const Frame& f) {
  Json ghosts = Json::array();
  for (Cell g : f.ghosts) ghosts.push_back(cell_json(g));
  return Json{{"type", "frame"},
              {"tick", f.tick},
              {"mode", to_string(f.mode)},
              {"agent", cell_json(f.agent)},
              {"ghosts", std::move(ghosts)},
              {"terminal", to_string(f.terminal)},
              {"episode_count", f.episode_count},
              {"epsilon", f.epsilon},
              {"converged", f.converged},
              {"stale", f.stale},
              {"speed", f.speed == kMaxSpeed ? Json("max") : Json(f.speed)},
              {"q_view", q_view_json(f.q_view)}};
}

inline Json diff_json(const SnapshotDiff& d) {
  Json params = Json::object();
  for (const auto& c : d.param_changes) {
    params[std::string(to_string(c.id))] = Json::array({c.old_value, c.new_value});
  }
  Json cells = Json::array();
  for (Cell c : d.changed_cells) cells.push_back(cell_json(c));
  return Json{{"empty", d.empty()},
              {"param_changes", std::move(params)},
              {"maze_changed", d.maze_changed},
              {"changed_cells", std::move(cells)},
              {"path_old", path_json(d.path_old)},
              {"path_new", path_json(d.path_new)},
              {"first_path_difference", d.first_path_difference
                                            ? Json(*d.first_path_difference)
                                            : Json(nullptr)},
              {"cycle_delta", d.cycle_delta}};
}

inline Json snapshot_summary_json(const Snapshot& s) {
  return Json{{"id", s.id},
              {"created_at", s.created_at},
              {"label", s.label ? Json(*s.label) : Json(nullptr)},
              {"cycle_count", s.cycle_count},
              {"converged", s.converged},
              {"params", params_json(s.params)},
              {"greedy_path", path_json(s.greedy_path)}};
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& payload, const char* key) {
  if (!payload.is_object() || !payload.contains(key)) {
    throw Error(ErrorCode::malformed_command, std::string("payload is missing '") + key + "'");
  }
  return payload.at(key);
}

template <typename T>
T get(const nlohmann::json& payload, const char* key) {
  const auto& v = field(payload, key);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::malformed_command, std::string("payload field '") + key +
                                                  "' has the wrong type");
  }
}

inline std::string maze_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string text;
    for (const auto& row : v) {
      if (!row.is_string()) throw Error(ErrorCode::malformed_command, "maze rows must be strings");
      text += row.get<std::string>() + "\n";
    }
    return text;
  }
  throw Error(ErrorCode::malformed_command, "maze must be a string or a list of rows");
}

}  // namespace detail

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "EditCell", "SetParam", "Play", "Pause", "SetSpeed",
      "Reset", "TakeSnapshot", "DeleteSnapshot", "LoadMaze"};
  return names;
}

// Decodes a session command; throws malformed_command / unknown_command /
// illegal_value.
inline Command parse_command(const std::string& type, const nlohmann::json& payload) {
  using detail::get;
  if (type == "EditCell") {
    const auto tool_name = get<std::string>(payload, "tool");
    const auto tool = edit_tool_from_string(tool_name);
    if (!tool) {
      throw Error(ErrorCode::illegal_value,
                  "tool must be one of {wall, eraser, ghost, start, goal}, got " + tool_name);
    }
    return cmd::EditCell{{get<int>(payload, "x"), get<int>(payload, "y")}, *tool};
  }
  if (type == "SetParam") {
    const auto name = get<std::string>(payload, "name");
    const auto id = param_from_string(name);
    if (!id) {
      throw Error(ErrorCode::illegal_value,
                  "unknown parameter " + name +
                      "; expected one of {goal_reward, punishment_value, range_of_movement, "
                      "learning_rate, discount_factor}");
    }
    return cmd::SetParam{*id, get<double>(payload, "value")};
  }
  if (type == "Play") return cmd::Play{};
  if (type == "Pause") return cmd::Pause{};
  if (type == "Reset") return cmd::Reset{};
  if (type == "SetSpeed") {
    const auto& v = detail::field(payload, "speed");
    if (v.is_string()) return cmd::SetSpeed{parse_speed(v.get<std::string>())};
    if (v.is_number_integer()) return cmd::SetSpeed{parse_speed(std::to_string(v.get<int>()))};
    throw Error(ErrorCode::malformed_command, "speed must be a number or \"max\"");
  }
  if (type == "TakeSnapshot") {
    cmd::TakeSnapshot c;
    if (payload.is_object() && payload.contains("label") && !payload.at("label").is_null()) {
      c.label = get<std::string>(payload, "label");
    }
    return c;
  }
  if (type == "DeleteSnapshot") return cmd::DeleteSnapshot{get<std::string>(payload, "id")};
  if (type == "LoadMaze") return cmd::LoadMaze{detail::maze_text(detail::field(payload, "maze"))};
  throw Error(ErrorCode::unknown_command, "unknown command type '" + type + "'");
}

// One client connection bound to one session. Transport-agnostic: feed it
// lines, write back what it returns.
class Endpoint {
 public:
  explicit Endpoint(Session session,
                    std::vector<explain::ParameterDescriptor> catalog = explain::catalog())
      : session_(std::move(session)), catalog_(std::move(catalog)) {}

  std::vector<std::string> on_line(std::string_view line) {
    std::vector<std::string> out;
    nlohmann::json msg;
    Json id = nullptr;
    try {
      try {
        msg = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::malformed_command, "message is not valid JSON");
      }
      if (!msg.is_object() || !msg.contains("type") || !msg.at("type").is_string()) {
        throw Error(ErrorCode::malformed_command, "message needs a string 'type'");
      }
      if (msg.contains("id")) id = Json::parse(msg.at("id").dump());
      const auto type = msg.at("type").get<std::string>();
      const nlohmann::json payload = msg.value("payload", nlohmann::json::object());

      if (type == "hello") {
        const int version = msg.value("version", -1);
        if (version != kVersion) {
          throw Error(ErrorCode::malformed_command,
                      "unsupported protocol version; server speaks " + std::to_string(kVersion));
        }
        handshaken_ = true;
        out.push_back(hello().dump());
        out.push_back(frame_json(session_.frame()).dump());
        return out;
      }
      if (!handshaken_) {
        throw Error(ErrorCode::invalid_state, "send a hello message first");
      }
      if (auto answer = query(type, payload)) {
        Json ack{{"type", "ack"}, {"id", id}, {"command", type}};
        for (auto& [k, v] : answer->items()) ack[k] = v;
        out.push_back(ack.dump());
        return out;
      }
      const Command command = parse_command(type, payload);
      const CommandResult result = session_.apply(command);
      Json ack{{"type", "ack"},
               {"id", id},
               {"command", type},
               {"mode", to_string(session_.mode())},
               {"stale", session_.stale()}};
      if (result.snapshot_id) {
        ack["snapshot"] = snapshot_summary_json(session_.snapshots().get(*result.snapshot_id));
      }
      out.push_back(ack.dump());
      out.push_back(frame_json(session_.frame()).dump());
    } catch (const Error& e) {
      out.push_back(error_json(id, e.code(), e.what()).dump());
    }
    return out;
  }

  // Advances the run loop by one tick and returns the frame to publish, if any.
  std::optional<std::string> pump() {
    if (!handshaken_) return std::nullopt;
    if (auto f = session_.tick()) return frame_json(*f).dump();
    return std::nullopt;
  }

  bool handshaken() const { return handshaken_; }
  Session& session() { return session_; }
  const Session& session() const { return session_; }

  static Json error_json(const Json& id, ErrorCode code, std::string_view message) {
    return Json{{"type", "error"}, {"id", id}, {"code", to_string(code)}, {"message", message}};
  }

 private:
  Json hello() const {
    Json speeds = Json::array();
    for (int s : kSpeedLadder) speeds.push_back(s == kMaxSpeed ? Json("max") : Json(s));
    return Json{{"type", "hello"},
                {"version", kVersion},
                {"seed", session_.seed()},
                {"commands", command_names()},
                {"speeds", speeds},
                {"params", params_json(session_.params())},
                {"legal_values", legal_values_json()},
                {"maze", to_lines(session_.maze())}};
  }

  std::optional<Json> query(const std::string& type, const nlohmann::json& payload) const {
    using detail::get;
    if (type == "Explain") {
      const auto name = get<std::string>(payload, "name");
      const auto id = param_from_string(name);
      if (!id) throw Error(ErrorCode::illegal_value, "unknown parameter " + name);
      const auto e = explain::render_madlib(explain::descriptor(*id, catalog_),
                                            get<double>(payload, "value"));
      Json spans = Json::array();
      for (auto s : e.emphasized_slots) spans.push_back(Json::array({s.begin, s.end}));
      return Json{{"text", e.rendered_text}, {"emphasized", spans}};
    }
    if (type == "GetMaze") return Json{{"maze", to_lines(session_.maze())}};
    if (type == "ListSnapshots") {
      Json list = Json::array();
      for (const auto& s : session_.snapshots().all()) list.push_back(snapshot_summary_json(s));
      return Json{{"snapshots", list}};
    }
    if (type == "GetSnapshot") {
      const auto& s = session_.snapshots().get(get<std::string>(payload, "id"));
      return Json{{"snapshot", Json::parse(serialize(s))}};
    }
    if (type == "DiffSnapshots") {
      const auto& a = session_.snapshots().get(get<std::string>(payload, "a"));
      const auto& b = session_.snapshots().get(get<std::string>(payload, "b"));
      return Json{{"diff", diff_json(diff(a, b))}};
    }
    return std::nullopt;
  }

  Session session_;
  std::vector<explain::ParameterDescriptor> catalog_;
  bool handshaken_ = false;
};

}  // namespace qube::protocol
