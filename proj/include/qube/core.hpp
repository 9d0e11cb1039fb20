#pragma once

#include <array>
#include <cstdlib>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qube {

// Machine-readable failure categories. The wire protocol reports these as
// snake_case strings next to the human-readable message.
enum class ErrorCode {
  invalid_maze,
  illegal_value,
  invalid_state,
  malformed_command,
  unknown_command,
  not_found,
  storage_full,
  io_error,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_maze: return "invalid_maze";
    case ErrorCode::illegal_value: return "illegal_value";
    case ErrorCode::invalid_state: return "invalid_state";
    case ErrorCode::malformed_command: return "malformed_command";
    case ErrorCode::unknown_command: return "unknown_command";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::storage_full: return "storage_full";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Grid coordinate. x grows to the right, y grows downward (row index).
struct Cell {
  int x = 0;
  int y = 0;

  friend constexpr bool operator==(Cell, Cell) = default;
  friend constexpr auto operator<=>(Cell, Cell) = default;
};

inline int manhattan(Cell a, Cell b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

// The declaration order is the tie-break and serialization order.
enum class Direction : std::uint8_t { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr std::array<Direction, 4> kDirections = {
    Direction::Up, Direction::Down, Direction::Left, Direction::Right};

inline constexpr std::size_t index_of(Direction d) {
  return static_cast<std::size_t>(d);
}

inline constexpr Cell offset(Cell c, Direction d) {
  switch (d) {
    case Direction::Up: return {c.x, c.y - 1};
    case Direction::Down: return {c.x, c.y + 1};
    case Direction::Left: return {c.x - 1, c.y};
    case Direction::Right: return {c.x + 1, c.y};
  }
  return c;
}

inline std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
  }
  return "?";
}

inline std::optional<Direction> direction_between(Cell from, Cell to) {
  for (Direction d : kDirections) {
    if (offset(from, d) == to) return d;
  }
  return std::nullopt;
}

// The random stream is a standard Mersenne Twister. Draws go through the
// helpers below instead of <random> distributions, whose output is not
// specified by the standard and would break cross-platform replay.
using Rng = std::mt19937_64;

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = n;
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return static_cast<std::size_t>(draw % bound);
}

// Uniform in [0, 1) with 53 bits of resolution.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace qube

template <>
struct std::hash<qube::Cell> {
  std::size_t operator()(qube::Cell c) const noexcept {
    return std::hash<long long>{}((static_cast<long long>(c.x) << 32) ^
                                  static_cast<unsigned>(c.y));
  }
};
