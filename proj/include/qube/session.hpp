#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "qube/engine.hpp"
#include "qube/snapshot.hpp"

namespace qube {

enum class Mode : std::uint8_t { Editing, Running, Paused, Converged };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Editing: return "editing";
    case Mode::Running: return "running";
    case Mode::Paused: return "paused";
    case Mode::Converged: return "converged";
  }
  return "?";
}

// Steps per second; 0 means unpaced.
inline constexpr std::array<int, 5> kSpeedLadder = {1, 5, 25, 125, 0};
inline constexpr int kMaxSpeed = 0;

inline std::string speed_name(int speed) {
  return speed == kMaxSpeed ? "max" : std::to_string(speed);
}

inline int parse_speed(std::string_view text) {
  for (int s : kSpeedLadder) {
    if (speed_name(s) == text) return s;
  }
  throw Error(ErrorCode::illegal_value,
              "speed must be one of {1, 5, 25, 125, max}, got " + std::string(text));
}

enum class EditTool : std::uint8_t { Wall, Eraser, Ghost, Start, Goal };

inline std::string_view to_string(EditTool t) {
  switch (t) {
    case EditTool::Wall: return "wall";
    case EditTool::Eraser: return "eraser";
    case EditTool::Ghost: return "ghost";
    case EditTool::Start: return "start";
    case EditTool::Goal: return "goal";
  }
  return "?";
}

inline std::optional<EditTool> edit_tool_from_string(std::string_view name) {
  for (auto t : {EditTool::Wall, EditTool::Eraser, EditTool::Ghost, EditTool::Start,
                 EditTool::Goal}) {
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

namespace cmd {
struct EditCell { Cell cell; EditTool tool{}; };
struct SetParam { ParamId id{}; double value = 0; };
struct Play {};
struct Pause {};
struct SetSpeed { int speed = 25; };
struct Reset {};
struct TakeSnapshot { std::optional<std::string> label; };
struct DeleteSnapshot { std::string id; };
struct LoadMaze { std::string text; };
}  // namespace cmd

using Command = std::variant<cmd::EditCell, cmd::SetParam, cmd::Play, cmd::Pause,
                             cmd::SetSpeed, cmd::Reset, cmd::TakeSnapshot,
                             cmd::DeleteSnapshot, cmd::LoadMaze>;

// A command stamped with the logical clock (ticks executed so far in the
// session, never reset) at which it was applied.
struct LoggedCommand {
  long at = 0;
  Command command;
};

// ---------------------------------------------------------------------------
// Q-Table view

inline constexpr int kColorBuckets = 11;
inline constexpr int kNeutralBucket = kColorBuckets / 2;
inline constexpr double kNormalizationFloor = 1e-9;

struct CellView {
  Cell cell;
  bool wall = false;
  ActionValues values{};                  // rounded to 2 decimals
  std::array<int, 4> buckets{};           // 0 strong negative .. 10 strong positive
  std::array<bool, 4> arrows{};           // greedy path leaves this cell that way

  friend bool operator==(const CellView&, const CellView&) = default;
};

struct QView {
  int width = 0;
  int height = 0;
  std::vector<CellView> cells;  // row-major

  friend bool operator==(const QView&, const QView&) = default;
};

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

// Symmetric normalization by the largest magnitude in the table, mapped to
// 11 buckets centred on zero.
inline int color_bucket(double v, double max_abs) {
  const double n = v / std::max(max_abs, kNormalizationFloor);
  const long b = std::lround(n * kNeutralBucket) + kNeutralBucket;
  return static_cast<int>(std::clamp<long>(b, 0, kColorBuckets - 1));
}

inline QView render_q_view(const QTable& q, const Maze& maze, int greedy_step_cap = 200) {
  QView view{maze.width, maze.height, {}};
  view.cells.reserve(maze.cell_count());
  const double scale = q.max_abs(maze);
  for (std::size_t i = 0; i < maze.cell_count(); ++i) {
    CellView cv;
    cv.cell = maze.cell_at(i);
    cv.wall = maze.cells[i] == Tile::Wall;
    cv.buckets.fill(kNeutralBucket);
    if (!cv.wall) {
      for (std::size_t a = 0; a < 4; ++a) {
        const double v = q.at(cv.cell)[a];
        cv.values[a] = round2(v);
        cv.buckets[a] = color_bucket(v, scale);
      }
    }
    view.cells.push_back(cv);
  }
  if (auto path = greedy_path(q, maze, greedy_step_cap)) {
    for (std::size_t i = 0; i + 1 < path->size(); ++i) {
      const auto d = direction_between((*path)[i], (*path)[i + 1]);
      view.cells[maze.index((*path)[i])].arrows[index_of(*d)] = true;
    }
  }
  return view;
}

// ---------------------------------------------------------------------------

struct Frame {
  long tick = 0;
  Mode mode = Mode::Editing;
  Cell agent;
  std::vector<Cell> ghosts;
  Terminal terminal = Terminal::None;
  long episode_count = 0;
  double epsilon = 0;
  bool converged = false;
  bool stale = false;
  int speed = 25;
  QView q_view;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct SessionOptions {
  TrainingConfig training;
  bool require_standard_size = true;
  std::optional<std::filesystem::path> snapshot_dir;
  int initial_speed = 25;
};

inline Maze default_maze() {
  return Maze::open(kStandardSize, kStandardSize, {0, 0},
                    {kStandardSize - 1, kStandardSize - 1});
}

inline std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

struct CommandResult {
  std::optional<std::string> snapshot_id;
};

class Session {
 public:
  explicit Session(std::uint64_t seed, SessionOptions options = {},
                   Maze maze = default_maze(), Parameters params = {})
      : options_(std::move(options)),
        maze_(std::move(maze)),
        params_(params),
        seed_(seed),
        speed_(options_.initial_speed),
        snapshots_(options_.snapshot_dir) {
    check_maze(maze_);
    require_legal(params_);
    parse_speed(speed_name(speed_));
    initial_maze_ = maze_;
    initial_params_ = params_;
    reset_trainer();
  }

  // Applies a command between ticks. Throws qube::Error with a code on
  // rejection; a rejected command leaves the session untouched.
  CommandResult apply(const Command& command) {
    CommandResult result = std::visit([this](const auto& c) { return handle(c); }, command);
    log_.push_back({clock_, command});
    return result;
  }

  // One agent step plus one ghost step. Returns the frame to publish, which
  // under the "max" speed is only produced at episode boundaries.
  std::optional<Frame> tick() {
    if (mode_ != Mode::Running) return std::nullopt;
    if (episode_over_) {
      progress_ = begin_episode(maze_);
      episode_over_ = false;
    }
    ++clock_;
    ++tick_;
    const auto finished =
        train_step(maze_, trainer_, progress_, params_, options_.training);
    if (finished) {
      episode_over_ = true;
      if (trainer_.converged) mode_ = Mode::Converged;
    }
    if (speed_ == kMaxSpeed && !finished) return std::nullopt;
    return frame();
  }

  // Ticks until the current episode ends (or the session stops running) and
  // returns the frames that would have been published.
  std::vector<Frame> run_episode() {
    std::vector<Frame> frames;
    const long before = trainer_.episode_count;
    while (mode_ == Mode::Running && trainer_.episode_count == before) {
      if (auto f = tick()) frames.push_back(std::move(*f));
    }
    return frames;
  }

  Frame frame() const {
    Frame f;
    f.tick = tick_;
    f.mode = mode_;
    f.agent = progress_.world.agent;
    f.ghosts = progress_.world.ghost_positions;
    f.terminal = progress_.world.terminal;
    f.episode_count = trainer_.episode_count;
    f.epsilon = trainer_.epsilon;
    f.converged = trainer_.converged;
    f.stale = stale_;
    f.speed = speed_;
    f.q_view = render_q_view(trainer_.qtable, maze_, options_.training.greedy_step_cap);
    return f;
  }

  const Maze& maze() const { return maze_; }
  const Maze& initial_maze() const { return initial_maze_; }
  const Parameters& params() const { return params_; }
  const Parameters& initial_params() const { return initial_params_; }
  const TrainerState& trainer() const { return trainer_; }
  const EpisodeProgress& progress() const { return progress_; }
  const SessionOptions& options() const { return options_; }
  const SnapshotStore& snapshots() const { return snapshots_; }
  const std::vector<LoggedCommand>& command_log() const { return log_; }
  Mode mode() const { return mode_; }
  bool stale() const { return stale_; }
  int speed() const { return speed_; }
  std::uint64_t seed() const { return seed_; }
  long clock() const { return clock_; }

 private:
  bool trained() const { return trainer_.episode_count > 0 || progress_.steps > 0; }

  void check_maze(const Maze& m) const {
    validate(m);
    if (options_.require_standard_size && !is_standard_size(m)) {
      throw Error(ErrorCode::invalid_maze, "the session only accepts 10x10 mazes, got " +
                                               std::to_string(m.width) + "x" +
                                               std::to_string(m.height));
    }
  }

  void reset_trainer() {
    trainer_ = make_trainer(maze_, options_.training, seed_);
    progress_ = begin_episode(maze_);
    episode_over_ = false;
    stale_ = false;
    tick_ = 0;
  }

  // The Q-Table is kept across edits; the episode in flight is restarted
  // and convergence has to be re-earned on the new layout.
  void commit_maze(Maze m) {
    const bool was_trained = trained();
    if (!trainer_.qtable.matches(m)) {
      maze_ = std::move(m);
      reset_trainer();
      return;
    }
    maze_ = std::move(m);
    trainer_.qtable.clear_walls(maze_);
    trainer_.converged = false;
    trainer_.stable_streak = 0;
    trainer_.last_path.reset();
    progress_ = begin_episode(maze_);
    episode_over_ = false;
    if (was_trained) stale_ = true;
    if (mode_ == Mode::Converged) mode_ = Mode::Paused;
  }

  CommandResult handle(const cmd::EditCell& c) {
    if (!maze_.in_bounds(c.cell)) {
      throw Error(ErrorCode::invalid_maze, "cell (" + std::to_string(c.cell.x) + ", " +
                                               std::to_string(c.cell.y) + ") is out of bounds");
    }
    Maze m = maze_;
    auto drop_ghost = [&] {
      std::erase_if(m.ghosts, [&](const GhostSpawn& g) { return g.origin == c.cell; });
    };
    const bool is_start = c.cell == m.start;
    const bool is_goal = c.cell == m.goal;
    switch (c.tool) {
      case EditTool::Wall:
        if (is_start || is_goal) {
          throw Error(ErrorCode::invalid_maze,
                      std::string("cannot place a wall on the ") + (is_start ? "start" : "goal"));
        }
        drop_ghost();
        m.set(c.cell, Tile::Wall);
        break;
      case EditTool::Eraser:
        if (is_start || is_goal) {
          throw Error(ErrorCode::invalid_maze,
                      std::string("cannot erase the ") + (is_start ? "start" : "goal"));
        }
        drop_ghost();
        m.set(c.cell, Tile::Floor);
        break;
      case EditTool::Ghost:
        if (is_start || is_goal) {
          throw Error(ErrorCode::invalid_maze,
                      std::string("cannot place a ghost on the ") + (is_start ? "start" : "goal"));
        }
        m.set(c.cell, Tile::Floor);
        m.add_ghost(c.cell);
        break;
      case EditTool::Start:
      case EditTool::Goal:
        if (m.has_ghost_at(c.cell)) {
          throw Error(ErrorCode::invalid_maze, "remove the ghost before moving the " +
                                                   std::string(to_string(c.tool)) + " here");
        }
        if (c.tool == EditTool::Start ? is_goal : is_start) {
          throw Error(ErrorCode::invalid_maze, "start and goal must be different cells");
        }
        m.set(c.cell, Tile::Floor);
        (c.tool == EditTool::Start ? m.start : m.goal) = c.cell;
        break;
    }
    check_maze(m);
    commit_maze(std::move(m));
    return {};
  }

  CommandResult handle(const cmd::SetParam& c) {
    params_.set_legal(c.id, c.value);
    if (trained()) stale_ = true;
    return {};
  }

  CommandResult handle(const cmd::Play&) {
    check_maze(maze_);
    mode_ = Mode::Running;
    return {};
  }

  CommandResult handle(const cmd::Pause&) {
    if (mode_ == Mode::Running) mode_ = Mode::Paused;
    return {};
  }

  CommandResult handle(const cmd::SetSpeed& c) {
    speed_ = parse_speed(speed_name(c.speed));
    return {};
  }

  CommandResult handle(const cmd::Reset&) {
    reset_trainer();
    mode_ = Mode::Editing;
    return {};
  }

  CommandResult handle(const cmd::TakeSnapshot& c) {
    const auto& s = snapshots_.add(
        capture(maze_, params_, trainer_, snapshots_.next_id(), c.label));
    return {s.id};
  }

  CommandResult handle(const cmd::DeleteSnapshot& c) {
    snapshots_.remove(c.id);
    return {};
  }

  CommandResult handle(const cmd::LoadMaze& c) {
    Maze m = parse_maze(c.text);
    check_maze(m);
    commit_maze(std::move(m));
    return {};
  }

  SessionOptions options_;
  Maze maze_;
  Maze initial_maze_;
  Parameters params_;
  Parameters initial_params_;
  std::uint64_t seed_;
  int speed_;
  SnapshotStore snapshots_;

  TrainerState trainer_;
  EpisodeProgress progress_;
  bool episode_over_ = false;
  bool stale_ = false;
  Mode mode_ = Mode::Editing;
  long tick_ = 0;
  long clock_ = 0;
  std::vector<LoggedCommand> log_;
};

// Re-runs a recorded session from its initial configuration. Each logged
// command is applied once the logical clock reaches its stamp, followed by
// the frame published for it; ticking continues until `total_ticks`. The
// returned stream equals the live one: tick frames plus one frame per
// accepted command.
inline std::vector<Frame> replay(std::uint64_t seed, const SessionOptions& options,
                                 const Maze& maze, const Parameters& params,
                                 const std::vector<LoggedCommand>& log, long total_ticks) {
  SessionOptions opts = options;
  opts.snapshot_dir.reset();
  Session s(seed, opts, maze, params);
  std::vector<Frame> frames;
  auto advance_to = [&](long clock) {
    while (s.clock() < clock && s.mode() == Mode::Running) {
      if (auto f = s.tick()) frames.push_back(std::move(*f));
    }
  };
  for (const auto& entry : log) {
    advance_to(entry.at);
    if (s.clock() != entry.at) {
      throw Error(ErrorCode::invalid_state, "command log does not match the replayed run");
    }
    s.apply(entry.command);
    frames.push_back(s.frame());
  }
  advance_to(total_ticks);
  return frames;
}

}  // namespace qube
