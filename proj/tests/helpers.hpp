#pragma once
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cosifl/config.hpp"

// Shared lookup helpers for the unit tests. Scenario files live in the source
// tree; the build injects its location so ctest can run from anywhere.

namespace testutil {

inline std::string scenario_path(const std::string& name) {
  return std::string(COSIFL_SOURCE_DIR) + "/scenarios/" + name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh per-test scratch directory under the build tree's cwd.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::path("test_scratch") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// A small hand-built scenario for planner/game tests: everything at defaults
// except what a test overrides. Clients get ready-made attributes elsewhere;
// this only carries the pricing knobs.
inline cosifl::ScenarioConfig tiny_config() {
  cosifl::ScenarioConfig cfg;
  cfg.seed = 1;
  cfg.time_budget = 100.0;
  cfg.max_rounds = 20;
  cfg.game.reward_min = 0.5;
  cfg.game.reward_max = 400.0;
  cfg.loss_proxy.gamma1 = 2.0;
  cfg.loss_proxy.gamma2 = 3.0;
  cfg.loss_proxy.gamma3 = 5.0;
  cfg.loss_proxy.mu = 0.5;
  cfg.loss_proxy.rho = 0.4;
  cfg.training.learning_rate = 0.1;
  return cfg;
}

inline cosifl::ClientAttributes attrs(int id, double alpha, double nu,
                                      double epsilon, double gamma,
                                      double cost, double latency) {
  cosifl::ClientAttributes a;
  a.id = id;
  a.alpha = alpha;
  a.nu = nu;
  a.epsilon = epsilon;
  a.gamma = gamma;
  a.cost = cost;
  a.latency = latency;
  return a;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace testutil
