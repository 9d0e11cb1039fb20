#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>

#include "json.hpp"
#include "qube/core.hpp"

namespace qube {

// Service-level settings. Precedence, highest first:
//   command-line flag > environment variable > config file > default.
//
// Config file: a JSON object with any of the keys below.
// Environment: QUBE_PORT, QUBE_CONVERGENCE_STREAK, QUBE_STEP_COST,
// QUBE_EPISODE_CAP. QUBE_CONFIG names the config file when no --config flag
// is given.
struct AppConfig {
  int port = 8765;
  int convergence_streak = 10;
  double step_cost = 0.04;
  int episode_cap = 10000;

  friend bool operator==(const AppConfig&, const AppConfig&) = default;
};

struct ConfigOverrides {
  std::optional<int> port;
  std::optional<int> convergence_streak;
  std::optional<double> step_cost;
  std::optional<int> episode_cap;
};

using EnvLookup = std::function<const char*(const char*)>;

inline const char* process_env(const char* name) { return std::getenv(name); }

namespace detail {

template <typename T>
T parse_number(const std::string& text, const std::string& origin) {
  try {
    std::size_t used = 0;
    T value{};
    if constexpr (std::is_integral_v<T>) {
      value = static_cast<T>(std::stol(text, &used));
    } else {
      value = static_cast<T>(std::stod(text, &used));
    }
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::illegal_value, origin + ": '" + text + "' is not a number");
  }
}

}  // namespace detail

inline void check(const AppConfig& c) {
  if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::illegal_value, "port must be 0..65535");
  if (c.convergence_streak < 1) {
    throw Error(ErrorCode::illegal_value, "convergence_streak must be at least 1");
  }
  if (!(c.step_cost >= 0) || !std::isfinite(c.step_cost)) {
    throw Error(ErrorCode::illegal_value, "step_cost must be a non-negative number");
  }
  if (c.episode_cap < 1) throw Error(ErrorCode::illegal_value, "episode_cap must be positive");
}

inline AppConfig resolve_config(std::optional<std::filesystem::path> file,
                                const ConfigOverrides& cli = {},
                                const EnvLookup& env = process_env) {
  AppConfig c;
  if (!file) {
    if (const char* p = env("QUBE_CONFIG"); p && *p) file = p;
  }
  if (file) {
    std::ifstream in(*file);
    if (!in) throw Error(ErrorCode::io_error, "cannot read config file " + file->string());
    try {
      const auto j = nlohmann::json::parse(in);
      c.port = j.value("port", c.port);
      c.convergence_streak = j.value("convergence_streak", c.convergence_streak);
      c.step_cost = j.value("step_cost", c.step_cost);
      c.episode_cap = j.value("episode_cap", c.episode_cap);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::illegal_value,
                  "config file " + file->string() + " is malformed: " + e.what());
    }
  }
  auto from_env = [&](const char* name, auto& slot) {
    if (const char* v = env(name); v && *v) {
      slot = detail::parse_number<std::remove_reference_t<decltype(slot)>>(v, name);
    }
  };
  from_env("QUBE_PORT", c.port);
  from_env("QUBE_CONVERGENCE_STREAK", c.convergence_streak);
  from_env("QUBE_STEP_COST", c.step_cost);
  from_env("QUBE_EPISODE_CAP", c.episode_cap);
  if (cli.port) c.port = *cli.port;
  if (cli.convergence_streak) c.convergence_streak = *cli.convergence_streak;
  if (cli.step_cost) c.step_cost = *cli.step_cost;
  if (cli.episode_cap) c.episode_cap = *cli.episode_cap;
  check(c);
  return c;
}

}  // namespace qube
