#pragma once

#include <chrono>
#include <string>

#include "qube/engine.hpp"
#include "qube/protocol.hpp"

namespace qube {

struct TrainReport {
  std::uint64_t seed = 0;
  Parameters params;
  bool converged = false;
  long episodes = 0;
  std::optional<int> path_length;
  std::optional<int> oracle_length;
  GreedyPath path;
  double wall_time_ms = 0;
};

// Headless training to convergence or `max_episodes`. Unsolvable mazes are
// a normal outcome (converged = false), not an error.
inline TrainReport train_headless(const Maze& maze, const Parameters& params,
                                  std::uint64_t seed, long max_episodes,
                                  const TrainingConfig& config = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainerState trainer = make_trainer(maze, config, seed);
  const TrainingSummary summary = train(maze, trainer, params, config, max_episodes);
  TrainReport r;
  r.seed = seed;
  r.params = params;
  r.converged = summary.converged;
  r.episodes = summary.episodes;
  r.path = summary.path;
  if (summary.path) r.path_length = path_length(*summary.path);
  r.oracle_length = shortest_path_length(maze);
  r.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// Wall time is the last key so reports can be compared after dropping it.
inline std::string to_json(const TrainReport& r) {
  using protocol::Json;
  Json j{{"seed", r.seed},
         {"params", protocol::params_json(r.params)},
         {"converged", r.converged},
         {"episodes", r.episodes},
         {"path_length", r.path_length ? Json(*r.path_length) : Json(nullptr)},
         {"oracle_length", r.oracle_length ? Json(*r.oracle_length) : Json(nullptr)},
         {"path", protocol::path_json(r.path)},
         {"wall_time_ms", r.wall_time_ms}};
  return j.dump(2);
}

// Maze text with the greedy path drawn as '*' between start and goal.
inline std::string ascii_render(const Maze& maze, const GreedyPath& path) {
  std::string text = to_text(maze);
  if (path) {
    for (std::size_t i = 1; i + 1 < path->size(); ++i) {
      const Cell c = (*path)[i];
      text[static_cast<std::size_t>(c.y) * (maze.width + 1) + c.x] = '*';
    }
  }
  return text;
}

}  // namespace qube
