#pragma once

#include "qube/params.hpp"
#include "qube/qtable.hpp"

namespace qube::testing {

// Bellman optimality fixed point for a ghost-free maze, computed by plain
// synchronous value iteration over every floor cell and direction. Used as
// the reference for learned Q values; shares no code with the learner.
inline QTable value_iteration(const Maze& m, double goal_reward, double step_cost,
                              double gamma, int sweeps = 5000) {
  QTable q(m);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    QTable next = q;
    double delta = 0;
    for (std::size_t i = 0; i < m.cell_count(); ++i) {
      const Cell c = m.cell_at(i);
      if (!m.is_floor(c) || c == m.goal) continue;
      for (Direction d : kDirections) {
        Cell n = offset(c, d);
        if (!m.is_floor(n)) n = c;
        double target;
        if (n == m.goal) {
          target = goal_reward;
        } else {
          double best = q.at(n)[0];
          for (double v : q.at(n)) best = std::max(best, v);
          target = -step_cost + gamma * best;
        }
        delta = std::max(delta, std::abs(target - q.at(c, d)));
        next.at(c, d) = target;
      }
    }
    q = next;
    if (delta < 1e-15) break;
  }
  return q;
}

}  // namespace qube::testing
