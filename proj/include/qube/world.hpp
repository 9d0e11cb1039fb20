#pragma once

#include <deque>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qube/core.hpp"

namespace qube {

enum class Tile : std::uint8_t { Floor, Wall };

struct GhostSpawn {
  Cell origin;

  friend bool operator==(const GhostSpawn&, const GhostSpawn&) = default;
};

inline constexpr int kStandardSize = 10;

// A designer-authored level. Dimensions are carried explicitly so tests can
// build small corridors; the interactive session only accepts 10x10.
struct Maze {
  int width = 0;
  int height = 0;
  std::vector<Tile> cells;  // row-major
  Cell start;
  Cell goal;
  std::vector<GhostSpawn> ghosts;

  static Maze open(int width, int height, Cell start, Cell goal) {
    Maze m;
    m.width = width;
    m.height = height;
    m.cells.assign(static_cast<std::size_t>(width) * height, Tile::Floor);
    m.start = start;
    m.goal = goal;
    return m;
  }

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
  }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * width + c.x;
  }
  Tile at(Cell c) const { return cells[index(c)]; }
  void set(Cell c, Tile t) { cells[index(c)] = t; }
  bool is_floor(Cell c) const { return in_bounds(c) && at(c) == Tile::Floor; }
  // Keeps ghosts in row-major order, the order ghosts draw from the RNG.
  void add_ghost(Cell c) {
    auto it = ghosts.begin();
    while (it != ghosts.end() && row_major_before(it->origin, c)) ++it;
    if (it == ghosts.end() || it->origin != c) ghosts.insert(it, GhostSpawn{c});
  }
  static bool row_major_before(Cell a, Cell b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  }
  bool has_ghost_at(Cell c) const {
    for (const auto& g : ghosts) {
      if (g.origin == c) return true;
    }
    return false;
  }
  std::size_t cell_count() const { return cells.size(); }
  Cell cell_at(std::size_t i) const {
    return {static_cast<int>(i % width), static_cast<int>(i / width)};
  }

  friend bool operator==(const Maze&, const Maze&) = default;
};

// Empty optional when the maze satisfies every structural invariant.
inline std::optional<std::string> validation_error(const Maze& m) {
  if (m.width <= 0 || m.height <= 0) return "maze must have positive dimensions";
  if (m.cells.size() != static_cast<std::size_t>(m.width) * m.height) {
    return "cell count does not match dimensions";
  }
  if (!m.in_bounds(m.start)) return "start is out of bounds";
  if (!m.in_bounds(m.goal)) return "goal is out of bounds";
  if (m.start == m.goal) return "start and goal must be different cells";
  if (m.at(m.start) != Tile::Floor) return "start must be a floor cell";
  if (m.at(m.goal) != Tile::Floor) return "goal must be a floor cell";
  for (std::size_t i = 0; i < m.ghosts.size(); ++i) {
    const Cell o = m.ghosts[i].origin;
    if (!m.in_bounds(o)) return "ghost origin is out of bounds";
    if (m.at(o) != Tile::Floor) return "ghost origin must be a floor cell";
    if (o == m.start) return "ghost cannot spawn on the start";
    if (o == m.goal) return "ghost cannot spawn on the goal";
    if (i > 0 && m.ghosts[i - 1].origin == o) return "two ghosts share an origin";
    if (i > 0 && !Maze::row_major_before(m.ghosts[i - 1].origin, o)) {
      return "ghosts must be listed in row-major order";
    }
  }
  return std::nullopt;
}

inline void validate(const Maze& m) {
  if (auto err = validation_error(m)) throw Error(ErrorCode::invalid_maze, *err);
}

inline bool is_standard_size(const Maze& m) {
  return m.width == kStandardSize && m.height == kStandardSize;
}

// Canonical text: one line per row, '#' wall, '.' floor, 'S' start,
// 'E' goal, 'G' ghost origin. Ghosts are listed in row-major order.
inline std::string to_text(const Maze& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.width + 1) * m.height);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const Cell c{x, y};
      char ch = m.at(c) == Tile::Wall ? '#' : '.';
      if (c == m.start) ch = 'S';
      else if (c == m.goal) ch = 'E';
      else if (m.has_ghost_at(c)) ch = 'G';
      out += ch;
    }
    out += '\n';
  }
  return out;
}

inline std::vector<std::string> to_lines(const Maze& m) {
  std::vector<std::string> lines;
  std::istringstream in(to_text(m));
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

inline Maze parse_maze(const std::vector<std::string>& lines) {
  auto fail = [](const std::string& msg) -> Maze {
    throw Error(ErrorCode::invalid_maze, msg);
  };
  if (lines.empty()) return fail("maze text is empty");
  Maze m;
  m.height = static_cast<int>(lines.size());
  m.width = static_cast<int>(lines.front().size());
  if (m.width == 0) return fail("maze rows must not be empty");
  m.cells.assign(static_cast<std::size_t>(m.width) * m.height, Tile::Floor);
  int starts = 0;
  int goals = 0;
  for (int y = 0; y < m.height; ++y) {
    const std::string& row = lines[y];
    if (static_cast<int>(row.size()) != m.width) {
      return fail("row " + std::to_string(y) + " has " +
                  std::to_string(row.size()) + " characters, expected " +
                  std::to_string(m.width));
    }
    for (int x = 0; x < m.width; ++x) {
      const Cell c{x, y};
      switch (row[x]) {
        case '#': m.set(c, Tile::Wall); break;
        case '.': break;
        case 'S': m.start = c; ++starts; break;
        case 'E': m.goal = c; ++goals; break;
        case 'G': m.add_ghost(c); break;
        default:
          return fail(std::string("unexpected character '") + row[x] +
                      "' at row " + std::to_string(y) + ", column " +
                      std::to_string(x));
      }
    }
  }
  if (starts != 1) return fail("maze needs exactly one start 'S'");
  if (goals != 1) return fail("maze needs exactly one goal 'E'");
  validate(m);
  return m;
}

inline Maze parse_maze(std::string_view text) {
  std::vector<std::string> lines;
  std::string current;
  for (char ch : text) {
    if (ch == '\r') continue;
    if (ch == '\n') {
      lines.push_back(std::move(current));
      current.clear();
    } else {
      current += ch;
    }
  }
  if (!current.empty()) lines.push_back(std::move(current));
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return parse_maze(lines);
}

enum class Terminal : std::uint8_t { None, ReachedGoal, KilledByGhost };

inline std::string_view to_string(Terminal t) {
  switch (t) {
    case Terminal::None: return "none";
    case Terminal::ReachedGoal: return "reached_goal";
    case Terminal::KilledByGhost: return "killed_by_ghost";
  }
  return "?";
}

struct WorldState {
  Cell agent;
  std::vector<Cell> ghost_positions;  // index-aligned with Maze::ghosts
  Terminal terminal = Terminal::None;

  bool ghost_at(Cell c) const {
    for (Cell g : ghost_positions) {
      if (g == c) return true;
    }
    return false;
  }

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

inline WorldState spawn(const Maze& maze) {
  WorldState s;
  s.agent = maze.start;
  s.ghost_positions.reserve(maze.ghosts.size());
  for (const auto& g : maze.ghosts) s.ghost_positions.push_back(g.origin);
  return s;
}

// A ghost sharing the agent's cell wins over reaching the goal.
inline Terminal resolve_terminal(const Maze& maze, const WorldState& s) {
  if (s.ghost_at(s.agent)) return Terminal::KilledByGhost;
  if (s.agent == maze.goal) return Terminal::ReachedGoal;
  return Terminal::None;
}

inline WorldState step_agent(const Maze& maze, WorldState state, Direction dir) {
  if (state.terminal != Terminal::None) {
    throw Error(ErrorCode::invalid_state, "cannot move the agent after the episode ended");
  }
  const Cell target = offset(state.agent, dir);
  if (maze.is_floor(target)) state.agent = target;
  state.terminal = resolve_terminal(maze, state);
  return state;
}

// Every cell a ghost may occupy after one step: staying put first, then the
// confined neighbours in direction order.
inline std::vector<Cell> ghost_candidates(const Maze& maze, Cell position,
                                          Cell origin, int range_of_movement) {
  std::vector<Cell> out{position};
  if (range_of_movement <= 0) return out;
  for (Direction d : kDirections) {
    const Cell n = offset(position, d);
    if (maze.is_floor(n) && manhattan(n, origin) <= range_of_movement) {
      out.push_back(n);
    }
  }
  return out;
}

inline WorldState step_ghosts(const Maze& maze, WorldState state,
                              int range_of_movement, Rng& rng) {
  if (state.terminal != Terminal::None) {
    throw Error(ErrorCode::invalid_state, "cannot move ghosts after the episode ended");
  }
  if (range_of_movement < 0) {
    throw Error(ErrorCode::illegal_value, "range of movement must be non-negative");
  }
  if (state.ghost_positions.size() != maze.ghosts.size()) {
    throw Error(ErrorCode::invalid_state, "ghost positions do not match the maze");
  }
  for (std::size_t i = 0; i < state.ghost_positions.size(); ++i) {
    const Cell origin = maze.ghosts[i].origin;
    Cell& position = state.ghost_positions[i];
    // Only reachable after the range was lowered mid-run: the ghost is
    // pulled back to its origin so confinement holds from here on.
    if (manhattan(position, origin) > range_of_movement) {
      position = origin;
      continue;
    }
    const auto candidates =
        ghost_candidates(maze, position, origin, range_of_movement);
    if (candidates.size() > 1) {
      position = candidates[uniform_index(rng, candidates.size())];
    }
  }
  if (state.ghost_at(state.agent)) state.terminal = Terminal::KilledByGhost;
  return state;
}

// Breadth-first distance from start to goal, ignoring ghosts.
inline std::optional<int> shortest_path_length(const Maze& maze) {
  std::vector<int> dist(maze.cell_count(), -1);
  std::deque<Cell> frontier{maze.start};
  dist[maze.index(maze.start)] = 0;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    if (c == maze.goal) return dist[maze.index(c)];
    for (Direction d : kDirections) {
      const Cell n = offset(c, d);
      if (maze.is_floor(n) && dist[maze.index(n)] < 0) {
        dist[maze.index(n)] = dist[maze.index(c)] + 1;
        frontier.push_back(n);
      }
    }
  }
  return std::nullopt;
}

}  // namespace qube
