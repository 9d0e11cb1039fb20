#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qube/engine.hpp"

namespace qube {

inline constexpr int kSnapshotFormatVersion = 1;
inline constexpr std::size_t kSnapshotCapacity = 32;

struct Snapshot {
  std::string id;
  std::string created_at;  // ISO-8601 UTC
  std::optional<std::string> label;
  Maze maze;
  Parameters params;
  QTable qtable;
  GreedyPath greedy_path;
  long cycle_count = 0;
  bool converged = false;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

inline std::string utc_timestamp(std::chrono::system_clock::time_point t =
                                     std::chrono::system_clock::now()) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Copies everything the comparison view needs; the greedy path is derived
// from the copied table so the two can never disagree.
inline Snapshot capture(const Maze& maze, const Parameters& params,
                        const TrainerState& trainer, std::string id,
                        std::optional<std::string> label = std::nullopt,
                        std::string created_at = utc_timestamp()) {
  Snapshot s;
  s.id = std::move(id);
  s.created_at = std::move(created_at);
  s.label = std::move(label);
  s.maze = maze;
  s.params = params;
  s.qtable = trainer.qtable;
  s.greedy_path = greedy_path(s.qtable, s.maze);
  s.cycle_count = trainer.episode_count;
  s.converged = trainer.converged;
  return s;
}

struct ParamChange {
  ParamId id{};
  double old_value = 0;
  double new_value = 0;

  friend bool operator==(const ParamChange&, const ParamChange&) = default;
};

struct SnapshotDiff {
  std::vector<ParamChange> param_changes;
  bool maze_changed = false;
  std::vector<Cell> changed_cells;
  GreedyPath path_old;
  GreedyPath path_new;
  std::optional<std::size_t> first_path_difference;
  long cycle_delta = 0;

  bool empty() const {
    return param_changes.empty() && !maze_changed && !first_path_difference &&
           cycle_delta == 0;
  }
};

namespace detail {

inline char glyph(const Maze& m, Cell c) {
  if (!m.in_bounds(c)) return '\0';
  if (c == m.start) return 'S';
  if (c == m.goal) return 'E';
  if (m.has_ghost_at(c)) return 'G';
  return m.at(c) == Tile::Wall ? '#' : '.';
}

inline std::optional<std::size_t> first_difference(const GreedyPath& a, const GreedyPath& b) {
  if (!a && !b) return std::nullopt;
  if (!a || !b) return 0;
  const std::size_t n = std::min(a->size(), b->size());
  for (std::size_t i = 0; i < n; ++i) {
    if ((*a)[i] != (*b)[i]) return i;
  }
  if (a->size() != b->size()) return n;
  return std::nullopt;
}

}  // namespace detail

inline SnapshotDiff diff(const Snapshot& a, const Snapshot& b) {
  SnapshotDiff d;
  for (ParamId id : kParamIds) {
    if (a.params.get(id) != b.params.get(id)) {
      d.param_changes.push_back({id, a.params.get(id), b.params.get(id)});
    }
  }
  const int w = std::max(a.maze.width, b.maze.width);
  const int h = std::max(a.maze.height, b.maze.height);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (detail::glyph(a.maze, {x, y}) != detail::glyph(b.maze, {x, y})) {
        d.changed_cells.push_back({x, y});
      }
    }
  }
  d.maze_changed = !d.changed_cells.empty();
  d.path_old = a.greedy_path;
  d.path_new = b.greedy_path;
  d.first_path_difference = detail::first_difference(a.greedy_path, b.greedy_path);
  d.cycle_delta = b.cycle_count - a.cycle_count;
  return d;
}

// ---------------------------------------------------------------------------
// Snapshot file format (JSON, keys in this order):
//   version       integer, currently 1
//   id, created_at, label (string or null)
//   cycle_count, converged
//   params        {goal_reward, punishment_value, range_of_movement,
//                  learning_rate, discount_factor}
//   maze          canonical maze text, one string per row
//   qtable.rows   one string per floor cell in row-major order:
//                 "x y up down left right" with 6-decimal values
//   qtable.exact  the same values as C99 hex floats, so reloads are exact
//   greedy_path   [[x, y], ...] or the string "diverges"
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline nlohmann::ordered_json params_to_json(const Parameters& p) {
  nlohmann::ordered_json j;
  for (ParamId id : kParamIds) {
    if (id == ParamId::range_of_movement) {
      j[std::string(to_string(id))] = p.range_of_movement;
    } else {
      j[std::string(to_string(id))] = p.get(id);
    }
  }
  return j;
}

inline Parameters params_from_json(const nlohmann::json& j) {
  Parameters p;
  for (ParamId id : kParamIds) p.set(id, j.at(std::string(to_string(id))).get<double>());
  return p;
}

inline nlohmann::ordered_json path_to_json(const GreedyPath& path) {
  if (!path) return "diverges";
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (Cell c : *path) arr.push_back({c.x, c.y});
  return arr;
}

inline GreedyPath path_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "diverges") {
      throw Error(ErrorCode::malformed_command, "unknown greedy_path marker");
    }
    return std::nullopt;
  }
  Path p;
  for (const auto& c : j) p.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
  return p;
}

}  // namespace detail

inline std::string serialize(const Snapshot& s) {
  nlohmann::ordered_json j;
  j["version"] = kSnapshotFormatVersion;
  j["id"] = s.id;
  j["created_at"] = s.created_at;
  j["label"] = s.label ? nlohmann::ordered_json(*s.label) : nlohmann::ordered_json(nullptr);
  j["cycle_count"] = s.cycle_count;
  j["converged"] = s.converged;
  j["params"] = detail::params_to_json(s.params);
  j["maze"] = to_lines(s.maze);
  auto rows = nlohmann::ordered_json::array();
  auto exact = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < s.maze.cell_count(); ++i) {
    const Cell c = s.maze.cell_at(i);
    if (s.maze.at(c) == Tile::Wall) continue;
    std::string row = std::to_string(c.x) + " " + std::to_string(c.y);
    std::string hex = row;
    for (double v : s.qtable.at(c)) {
      row += " " + detail::fixed6(v);
      hex += " " + detail::hexfloat(v);
    }
    rows.push_back(std::move(row));
    exact.push_back(std::move(hex));
  }
  j["qtable"] = {{"rows", rows}, {"exact", exact}};
  j["greedy_path"] = detail::path_to_json(s.greedy_path);
  return j.dump(2) + "\n";
}

inline Snapshot deserialize(std::string_view text) {
  Snapshot s;
  try {
    const auto j = nlohmann::json::parse(text);
    const int version = j.at("version").get<int>();
    if (version != kSnapshotFormatVersion) {
      throw Error(ErrorCode::malformed_command,
                  "unsupported snapshot version " + std::to_string(version));
    }
    s.id = j.at("id").get<std::string>();
    s.created_at = j.at("created_at").get<std::string>();
    if (!j.at("label").is_null()) s.label = j.at("label").get<std::string>();
    s.cycle_count = j.at("cycle_count").get<long>();
    s.converged = j.at("converged").get<bool>();
    s.params = detail::params_from_json(j.at("params"));
    s.maze = parse_maze(j.at("maze").get<std::vector<std::string>>());
    s.qtable = QTable(s.maze);
    const auto& table = j.at("qtable");
    const bool has_exact = table.contains("exact");
    const auto& rows = has_exact ? table.at("exact") : table.at("rows");
    for (const auto& row : rows) {
      std::istringstream in(row.get<std::string>());
      Cell c;
      in >> c.x >> c.y;
      if (!in || !s.maze.is_floor(c)) {
        throw Error(ErrorCode::malformed_command, "Q-Table row names a non-floor cell");
      }
      for (double& v : s.qtable.at(c)) {
        std::string token;
        in >> token;
        char* end = nullptr;
        v = std::strtod(token.c_str(), &end);
        if (token.empty() || *end != '\0') {
          throw Error(ErrorCode::malformed_command, "bad Q value '" + token + "'");
        }
      }
    }
    s.greedy_path = detail::path_from_json(j.at("greedy_path"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_command, std::string("malformed snapshot: ") + e.what());
  }
  if (s.greedy_path != greedy_path(s.qtable, s.maze)) {
    throw Error(ErrorCode::malformed_command,
                "stored greedy path does not match the stored Q-Table");
  }
  return s;
}

inline Snapshot load_snapshot(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::io_error, "cannot read snapshot " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

inline void save_snapshot(const Snapshot& s, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  out << serialize(s);
  out.flush();
  if (!out) throw Error(ErrorCode::io_error, "cannot write snapshot " + file.string());
}

// Per-session snapshot collection. When full, new captures are refused until
// the user deletes one.
class SnapshotStore {
 public:
  explicit SnapshotStore(std::optional<std::filesystem::path> directory = std::nullopt,
                         std::size_t capacity = kSnapshotCapacity)
      : directory_(std::move(directory)), capacity_(capacity) {}

  std::string next_id() const { return "snap-" + std::to_string(next_serial_); }

  const Snapshot& add(Snapshot s) {
    if (snapshots_.size() >= capacity_) {
      throw Error(ErrorCode::storage_full,
                  "snapshot limit of " + std::to_string(capacity_) +
                      " reached; delete a snapshot first");
    }
    if (find(s.id)) throw Error(ErrorCode::invalid_state, "duplicate snapshot id " + s.id);
    if (directory_) {
      std::error_code ec;
      std::filesystem::create_directories(*directory_, ec);
      if (ec) throw Error(ErrorCode::io_error, "cannot create " + directory_->string());
      save_snapshot(s, file_for(s.id));
    }
    ++next_serial_;
    snapshots_.push_back(std::move(s));
    return snapshots_.back();
  }

  void remove(const std::string& id) {
    auto it = std::find_if(snapshots_.begin(), snapshots_.end(),
                           [&](const Snapshot& s) { return s.id == id; });
    if (it == snapshots_.end()) throw Error(ErrorCode::not_found, "no snapshot " + id);
    if (directory_) {
      std::error_code ec;
      std::filesystem::remove(file_for(id), ec);
      if (ec) throw Error(ErrorCode::io_error, "cannot delete snapshot file for " + id);
    }
    snapshots_.erase(it);
  }

  const Snapshot* find(const std::string& id) const {
    for (const auto& s : snapshots_) {
      if (s.id == id) return &s;
    }
    return nullptr;
  }

  const Snapshot& get(const std::string& id) const {
    if (const Snapshot* s = find(id)) return *s;
    throw Error(ErrorCode::not_found, "no snapshot " + id);
  }

  const std::vector<Snapshot>& all() const { return snapshots_; }
  std::size_t size() const { return snapshots_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::filesystem::path file_for(const std::string& id) const {
    return *directory_ / (id + ".json");
  }

  std::optional<std::filesystem::path> directory_;
  std::size_t capacity_;
  std::vector<Snapshot> snapshots_;
  long next_serial_ = 1;
};

}  // namespace qube
