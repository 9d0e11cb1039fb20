#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>

#include "qube/core.hpp"

namespace qube {

enum class ParamId : std::uint8_t {
  goal_reward,
  punishment_value,
  range_of_movement,
  learning_rate,
  discount_factor,
};

inline constexpr std::array<ParamId, 5> kParamIds = {
    ParamId::goal_reward, ParamId::punishment_value, ParamId::range_of_movement,
    ParamId::learning_rate, ParamId::discount_factor};

inline std::string_view to_string(ParamId id) {
  switch (id) {
    case ParamId::goal_reward: return "goal_reward";
    case ParamId::punishment_value: return "punishment_value";
    case ParamId::range_of_movement: return "range_of_movement";
    case ParamId::learning_rate: return "learning_rate";
    case ParamId::discount_factor: return "discount_factor";
  }
  return "?";
}

inline std::optional<ParamId> param_from_string(std::string_view name) {
  for (ParamId id : kParamIds) {
    if (to_string(id) == name) return id;
  }
  return std::nullopt;
}

// The slider positions offered to designers.
namespace legal {
inline constexpr std::array<double, 7> goal_reward = {1, 3, 5, 7, 10, 30, 100};
inline constexpr std::array<double, 7> punishment_value = {1, 3, 5, 7, 10, 30, 100};
inline constexpr std::array<double, 6> range_of_movement = {0, 1, 2, 3, 4, 5};
inline constexpr std::array<double, 5> learning_rate = {0.1, 0.3, 0.5, 0.7, 0.9};
inline constexpr std::array<double, 5> discount_factor = {0.1, 0.3, 0.5, 0.7, 0.9};
}  // namespace legal

inline std::span<const double> legal_values(ParamId id) {
  switch (id) {
    case ParamId::goal_reward: return legal::goal_reward;
    case ParamId::punishment_value: return legal::punishment_value;
    case ParamId::range_of_movement: return legal::range_of_movement;
    case ParamId::learning_rate: return legal::learning_rate;
    case ParamId::discount_factor: return legal::discount_factor;
  }
  return {};
}

// Shortest round-trippable decimal for slider values: "10", "0.5".
inline std::string format_value(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  std::ostringstream out;
  out.precision(15);
  out << v;
  return out.str();
}

inline std::string describe_legal_set(ParamId id) {
  std::string out = "{";
  bool first = true;
  for (double v : legal_values(id)) {
    if (!first) out += ", ";
    out += format_value(v);
    first = false;
  }
  return out + "}";
}

inline bool is_legal(ParamId id, double value) {
  const auto values = legal_values(id);
  return std::find(values.begin(), values.end(), value) != values.end();
}

inline void require_legal(ParamId id, double value) {
  if (!is_legal(id, value)) {
    throw Error(ErrorCode::illegal_value,
                std::string(to_string(id)) + " must be one of " +
                    describe_legal_set(id) + ", got " + format_value(value));
  }
}

struct Parameters {
  double goal_reward = 10;
  double punishment_value = 10;  // magnitude; applied as a negative reward
  int range_of_movement = 1;
  double learning_rate = 0.5;
  double discount_factor = 0.9;

  double get(ParamId id) const {
    switch (id) {
      case ParamId::goal_reward: return goal_reward;
      case ParamId::punishment_value: return punishment_value;
      case ParamId::range_of_movement: return range_of_movement;
      case ParamId::learning_rate: return learning_rate;
      case ParamId::discount_factor: return discount_factor;
    }
    return 0;
  }

  // Numeric assignment without the slider check; see set_legal().
  void set(ParamId id, double value) {
    switch (id) {
      case ParamId::goal_reward: goal_reward = value; break;
      case ParamId::punishment_value: punishment_value = value; break;
      case ParamId::range_of_movement:
        range_of_movement = static_cast<int>(value);
        break;
      case ParamId::learning_rate: learning_rate = value; break;
      case ParamId::discount_factor: discount_factor = value; break;
    }
  }

  void set_legal(ParamId id, double value) {
    require_legal(id, value);
    set(id, value);
  }

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

// Numeric sanity of the learning parameters. The discrete slider sets are
// enforced where designers set values (session, CLI); the engine itself
// accepts any value in the mathematically meaningful range.
inline void require_in_range(const Parameters& p) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::illegal_value, msg); };
  if (!std::isfinite(p.goal_reward) || p.goal_reward <= 0) fail("goal_reward must be positive");
  if (!std::isfinite(p.punishment_value) || p.punishment_value < 0) {
    fail("punishment_value must be non-negative");
  }
  if (p.range_of_movement < 0) fail("range_of_movement must be non-negative");
  if (!(p.learning_rate >= 0 && p.learning_rate <= 1)) fail("learning_rate must lie in [0, 1]");
  if (!(p.discount_factor >= 0 && p.discount_factor < 1)) {
    fail("discount_factor must lie in [0, 1)");
  }
}

inline void require_legal(const Parameters& p) {
  for (ParamId id : kParamIds) require_legal(id, p.get(id));
}

// Knobs that are not designer-facing parameters.
struct TrainingConfig {
  double step_cost = 0.04;  // subtracted on every non-terminal step
  double epsilon_start = 1.0;
  double epsilon_decay = 0.995;  // multiplicative, per episode
  double epsilon_min = 0.05;
  int step_limit = 200;  // per episode
  int convergence_streak = 10;
  int episode_cap = 10000;
  int greedy_step_cap = 200;

  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

}  // namespace qube
