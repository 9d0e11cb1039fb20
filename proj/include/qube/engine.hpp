#pragma once

#include <optional>
#include <vector>

#include "qube/params.hpp"
#include "qube/qtable.hpp"
#include "qube/world.hpp"

namespace qube {

using Path = std::vector<Cell>;

// A greedy path is either a cell sequence from start to goal, or nullopt when
// following argmax actions loops or runs past the step cap.
using GreedyPath = std::optional<Path>;

enum class Outcome : std::uint8_t { ReachedGoal, KilledByGhost, StepLimit };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::ReachedGoal: return "reached_goal";
    case Outcome::KilledByGhost: return "killed_by_ghost";
    case Outcome::StepLimit: return "step_limit";
  }
  return "?";
}

struct Episode {
  int steps_taken = 0;
  Outcome outcome = Outcome::StepLimit;
  long index = 0;  // 1-based cycle number within the session

  friend bool operator==(const Episode&, const Episode&) = default;
};

struct TrainerState {
  QTable qtable;
  long episode_count = 0;
  double epsilon = 1.0;
  Rng rng;
  bool converged = false;
  int stable_streak = 0;
  GreedyPath last_path;

  friend bool operator==(const TrainerState&, const TrainerState&) = default;
};

inline TrainerState make_trainer(const Maze& maze, const TrainingConfig& config,
                                 std::uint64_t seed) {
  TrainerState t;
  t.qtable = QTable(maze);
  t.epsilon = config.epsilon_start;
  t.rng.seed(seed);
  return t;
}

// One-step Q-Learning backup of entry (s, a):
//   Q(s,a) <- (1 - alpha) * Q(s,a) + alpha * (reward + gamma * max_a' Q(s',a'))
// with the bootstrap term dropped when `next` is empty (terminal transition).
inline void q_update(QTable& q, const Maze& maze, Cell s, Direction a,
                     double reward, std::optional<Cell> next,
                     const Parameters& params) {
  if (!maze.is_floor(s)) {
    throw Error(ErrorCode::invalid_state, "Q-Table updates are only defined on floor cells");
  }
  if (next && !maze.is_floor(*next)) {
    throw Error(ErrorCode::invalid_state, "successor must be a floor cell");
  }
  if (!std::isfinite(reward)) throw Error(ErrorCode::illegal_value, "reward must be finite");
  require_in_range(params);
  const double alpha = params.learning_rate;
  const double gamma = params.discount_factor;
  const double bootstrap = next ? max_value(q.at(*next)) : 0.0;
  double& entry = q.at(s, a);
  entry = (1.0 - alpha) * entry + alpha * (reward + gamma * bootstrap);
}

// Epsilon-greedy. One uniform draw decides explore vs exploit; exploring
// draws the direction from the same stream.
inline Direction select_action(const QTable& q, Cell s, double epsilon, Rng& rng) {
  if (uniform_unit(rng) < epsilon) {
    return kDirections[uniform_index(rng, kDirections.size())];
  }
  return argmax(q.at(s));
}

inline GreedyPath greedy_path(const QTable& q, const Maze& maze, int step_cap = 200) {
  Path path{maze.start};
  std::vector<bool> seen(maze.cell_count(), false);
  seen[maze.index(maze.start)] = true;
  Cell c = maze.start;
  for (int steps = 0; steps < step_cap; ++steps) {
    const Cell n = offset(c, argmax(q.at(c)));
    if (!maze.is_floor(n) || seen[maze.index(n)]) return std::nullopt;
    path.push_back(n);
    if (n == maze.goal) return path;
    seen[maze.index(n)] = true;
    c = n;
  }
  return std::nullopt;
}

inline int path_length(const Path& p) { return static_cast<int>(p.size()) - 1; }

// Updates the stable-path streak from the current table and reports whether
// the greedy path has reached the goal unchanged for `convergence_streak`
// consecutive episodes.
inline bool check_convergence(TrainerState& trainer, const Maze& maze,
                              const TrainingConfig& config) {
  GreedyPath current = greedy_path(trainer.qtable, maze, config.greedy_step_cap);
  if (!current) {
    trainer.stable_streak = 0;
  } else if (trainer.last_path && *trainer.last_path == *current) {
    ++trainer.stable_streak;
  } else {
    trainer.stable_streak = 1;
  }
  trainer.last_path = std::move(current);
  trainer.converged = trainer.stable_streak >= config.convergence_streak;
  return trainer.converged;
}

// The agent/ghost state of the episode currently being played.
struct EpisodeProgress {
  WorldState world;
  int steps = 0;

  friend bool operator==(const EpisodeProgress&, const EpisodeProgress&) = default;
};

inline EpisodeProgress begin_episode(const Maze& maze) { return {spawn(maze), 0}; }

inline Episode finish_episode(TrainerState& trainer, const Maze& maze,
                              const TrainingConfig& config, int steps,
                              Outcome outcome) {
  trainer.epsilon = std::max(config.epsilon_min, trainer.epsilon * config.epsilon_decay);
  ++trainer.episode_count;
  check_convergence(trainer, maze, config);
  return {steps, outcome, trainer.episode_count};
}

// One tick: an agent move with its backup, then a ghost move. Returns the
// finished episode when this tick ended it; `progress` is then left on the
// final state and the caller starts a new episode.
inline std::optional<Episode> train_step(const Maze& maze, TrainerState& trainer,
                                         EpisodeProgress& progress,
                                         const Parameters& params,
                                         const TrainingConfig& config) {
  WorldState& world = progress.world;
  const Cell s = world.agent;
  const Direction a = select_action(trainer.qtable, s, trainer.epsilon, trainer.rng);
  world = step_agent(maze, world, a);
  ++progress.steps;

  switch (world.terminal) {
    case Terminal::ReachedGoal:
      q_update(trainer.qtable, maze, s, a, params.goal_reward, std::nullopt, params);
      return finish_episode(trainer, maze, config, progress.steps, Outcome::ReachedGoal);
    case Terminal::KilledByGhost:
      q_update(trainer.qtable, maze, s, a, -params.punishment_value, std::nullopt, params);
      return finish_episode(trainer, maze, config, progress.steps, Outcome::KilledByGhost);
    case Terminal::None:
      q_update(trainer.qtable, maze, s, a, -config.step_cost, world.agent, params);
      break;
  }

  world = step_ghosts(maze, world, params.range_of_movement, trainer.rng);
  if (world.terminal == Terminal::KilledByGhost) {
    // The ghost walked into the agent: the move just taken led to death.
    q_update(trainer.qtable, maze, s, a, -params.punishment_value, std::nullopt, params);
    return finish_episode(trainer, maze, config, progress.steps, Outcome::KilledByGhost);
  }
  if (progress.steps >= config.step_limit) {
    return finish_episode(trainer, maze, config, progress.steps, Outcome::StepLimit);
  }
  return std::nullopt;
}

inline Episode run_episode(const Maze& maze, TrainerState& trainer,
                           const Parameters& params, const TrainingConfig& config) {
  EpisodeProgress progress = begin_episode(maze);
  for (;;) {
    if (auto done = train_step(maze, trainer, progress, params, config)) return *done;
  }
}

struct TrainingSummary {
  bool converged = false;
  long episodes = 0;
  GreedyPath path;
};

// Runs episodes until convergence or until the trainer has played
// `max_episodes` in total.
inline TrainingSummary train(const Maze& maze, TrainerState& trainer,
                             const Parameters& params, const TrainingConfig& config,
                             long max_episodes) {
  while (!trainer.converged && trainer.episode_count < max_episodes) {
    run_episode(maze, trainer, params, config);
  }
  return {trainer.converged, trainer.episode_count,
          greedy_path(trainer.qtable, maze, config.greedy_step_cap)};
}

}  // namespace qube
