#pragma once

#include <array>
#include <vector>

#include "qube/world.hpp"

namespace qube {

using ActionValues = std::array<double, 4>;  // indexed by Direction

// One row of four action values per grid cell. Rows belonging to wall cells
// exist for layout only: they are held at zero and never read or written by
// learning.
class QTable {
 public:
  QTable() = default;
  QTable(int width, int height)
      : width_(width), height_(height),
        values_(static_cast<std::size_t>(width) * height, ActionValues{}) {}

  explicit QTable(const Maze& maze) : QTable(maze.width, maze.height) {}

  int width() const { return width_; }
  int height() const { return height_; }

  const ActionValues& at(Cell c) const { return values_[index(c)]; }
  ActionValues& at(Cell c) { return values_[index(c)]; }
  double at(Cell c, Direction d) const { return at(c)[index_of(d)]; }
  double& at(Cell c, Direction d) { return at(c)[index_of(d)]; }

  bool matches(const Maze& maze) const {
    return width_ == maze.width && height_ == maze.height;
  }

  void clear_walls(const Maze& maze) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (maze.cells[i] == Tile::Wall) values_[i] = ActionValues{};
    }
  }

  // Largest absolute value over the floor cells of `maze`.
  double max_abs(const Maze& maze) const {
    double m = 0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (maze.cells[i] == Tile::Wall) continue;
      for (double v : values_[i]) m = std::max(m, std::abs(v));
    }
    return m;
  }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * width_ + c.x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<ActionValues> values_;
};

// First maximal entry in direction order.
inline Direction argmax(const ActionValues& q) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = i;
  }
  return static_cast<Direction>(best);
}

inline double max_value(const ActionValues& q) {
  return q[index_of(argmax(q))];
}

}  // namespace qube
