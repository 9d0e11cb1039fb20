// qube: headless trainer, explainer, snapshot diff and session server.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"
#include "qube/config.hpp"
#include "qube/explain.hpp"
#include "qube/report.hpp"
#include "qube/server.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;

std::pair<qube::ParamId, double> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    throw qube::Error(qube::ErrorCode::malformed_command,
                      "expected NAME=VALUE, got '" + text + "'");
  }
  const std::string name = text.substr(0, eq);
  const auto id = qube::param_from_string(name);
  if (!id) {
    throw qube::Error(qube::ErrorCode::illegal_value,
                      "unknown parameter '" + name +
                          "'; expected goal_reward, punishment_value, range_of_movement, "
                          "learning_rate or discount_factor");
  }
  const std::string value = text.substr(eq + 1);
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || *end != '\0') {
    throw qube::Error(qube::ErrorCode::illegal_value, name + ": '" + value + "' is not a number");
  }
  return {*id, v};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qube::Error(qube::ErrorCode::io_error, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

qube::ConfigOverrides overrides(std::optional<int> port, std::optional<int> streak,
                                std::optional<double> step_cost,
                                std::optional<int> episode_cap) {
  return {port, streak, step_cost, episode_cap};
}

std::atomic<qube::LineServer*> g_server{nullptr};

void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive Q-Learning maze laboratory"};
  app.require_subcommand(1);

  std::optional<std::string> config_file;
  app.add_option("--config", config_file, "JSON config file (port, convergence_streak, "
                                          "step_cost, episode_cap)");

  // train
  auto* train = app.add_subcommand("train", "Train headlessly and print a JSON report");
  std::string maze_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_episodes;
  std::vector<std::string> params;
  bool ascii = false;
  std::optional<double> step_cost;
  std::optional<int> streak;
  train->add_option("--maze", maze_file, "Maze file in canonical text format")->required();
  train->add_option("--seed", seed, "RNG seed (drawn from entropy when omitted)");
  train->add_option("--max-episodes", max_episodes, "Episode cap");
  train->add_option("--param", params, "NAME=VALUE, repeatable");
  train->add_flag("--ascii", ascii, "Also print the maze with the greedy path");
  train->add_option("--step-cost", step_cost, "Penalty per non-terminal step");
  train->add_option("--convergence-streak", streak, "Stable episodes needed to converge");

  // explain
  auto* explain = app.add_subcommand("explain", "Print the mad-lib explainer for a value");
  std::vector<std::string> explain_params;
  std::optional<std::string> catalog_file;
  explain->add_option("--param", explain_params, "NAME=VALUE, repeatable")->required();
  explain->add_option("--catalog", catalog_file, "Alternative catalog file");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the session server");
  std::optional<int> port;
  std::optional<int> http_port;
  std::optional<std::string> static_dir;
  std::optional<std::string> snapshot_dir;
  bool any_size = false;
  serve->add_option("--port", port, "Line-protocol TCP port");
  serve->add_option("--static-dir", static_dir, "Serve UI assets from this directory over HTTP");
  serve->add_option("--http-port", http_port, "HTTP port for static assets (default port+1)");
  serve->add_option("--seed", seed, "Seed for every new session");
  serve->add_option("--snapshot-dir", snapshot_dir, "Persist snapshots under this directory");
  serve->add_flag("--allow-any-size", any_size, "Accept mazes other than 10x10");
  serve->add_option("--step-cost", step_cost, "Penalty per non-terminal step");
  serve->add_option("--convergence-streak", streak, "Stable episodes needed to converge");

  // diff
  auto* diff = app.add_subcommand("diff", "Compare two snapshot files");
  std::string snap_a;
  std::string snap_b;
  diff->add_option("a", snap_a, "Baseline snapshot")->required();
  diff->add_option("b", snap_b, "Snapshot to compare")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto cfg = qube::resolve_config(config_file,
                                            overrides(std::nullopt, streak, step_cost, max_episodes));
      qube::Maze maze;
      try {
        maze = qube::parse_maze(read_file(maze_file));
      } catch (const qube::Error& e) {
        std::cerr << "qube: " << maze_file << ": " << e.what() << "\n";
        return kExitInput;
      }
      qube::Parameters p;
      for (const auto& a : params) {
        const auto [id, v] = parse_assignment(a);
        p.set_legal(id, v);
      }
      qube::TrainingConfig training;
      training.step_cost = cfg.step_cost;
      training.convergence_streak = cfg.convergence_streak;
      training.episode_cap = cfg.episode_cap;
      const std::uint64_t s = seed.value_or(qube::entropy_seed());
      const auto report = qube::train_headless(maze, p, s, cfg.episode_cap, training);
      std::cout << qube::to_json(report) << "\n";
      if (ascii) std::cout << "\n" << qube::ascii_render(maze, report.path);
      return 0;
    }

    if (*explain) {
      const auto cat = catalog_file ? qube::explain::load_catalog(*catalog_file)
                                    : qube::explain::catalog();
      for (const auto& a : explain_params) {
        const auto [id, v] = parse_assignment(a);
        std::cout << qube::explain::render_madlib(qube::explain::descriptor(id, cat), v)
                         .rendered_text
                  << "\n";
      }
      return 0;
    }

    if (*diff) {
      const auto a = qube::load_snapshot(snap_a);
      const auto b = qube::load_snapshot(snap_b);
      std::cout << qube::protocol::diff_json(qube::diff(a, b)).dump(2) << "\n";
      return 0;
    }

    if (*serve) {
      const auto cfg =
          qube::resolve_config(config_file, overrides(port, streak, step_cost, std::nullopt));
      qube::SessionOptions options;
      options.training.step_cost = cfg.step_cost;
      options.training.convergence_streak = cfg.convergence_streak;
      options.training.episode_cap = cfg.episode_cap;
      options.require_standard_size = !any_size;
      std::atomic<long> session_counter{0};
      auto factory = [&] {
        qube::SessionOptions o = options;
        const long n = ++session_counter;
        if (snapshot_dir) o.snapshot_dir = std::filesystem::path(*snapshot_dir) /
                                           ("session-" + std::to_string(n));
        const std::uint64_t s = seed.value_or(qube::entropy_seed());
        std::cerr << "qube: session " << n << " seed " << s << "\n";
        return qube::Session(s, o);
      };
      qube::LineServer server(cfg.port, factory);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);

      httplib::Server http;
      std::thread http_thread;
      if (static_dir) {
        if (!http.set_mount_point("/", *static_dir)) {
          std::cerr << "qube: static dir " << *static_dir << " does not exist\n";
          return kExitUsage;
        }
        http.Get("/api/explain", [](const httplib::Request& req, httplib::Response& res) {
          try {
            const auto id = qube::param_from_string(req.get_param_value("name"));
            if (!id) throw qube::Error(qube::ErrorCode::illegal_value, "unknown parameter");
            const double v = std::stod(req.get_param_value("value"));
            res.set_content(qube::explain::render_madlib(*id, v).rendered_text, "text/plain");
          } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(e.what(), "text/plain");
          }
        });
        const int hp = http_port.value_or(server.port() + 1);
        http_thread = std::thread([&http, hp] { http.listen("0.0.0.0", hp); });
        std::cerr << "qube: static assets on http://0.0.0.0:" << hp << "\n";
      }
      std::cerr << "qube: line protocol on port " << server.port() << "\n";
      server.run();
      if (http_thread.joinable()) {
        http.stop();
        http_thread.join();
      }
      g_server = nullptr;
      return 0;
    }
  } catch (const qube::Error& e) {
    std::cerr << "qube: " << e.what() << "\n";
    return e.code() == qube::ErrorCode::io_error ? kExitInput : kExitUsage;
  }
  return 0;
}
