#pragma once
#include <vector>

#include "cosifl/config.hpp"
#include "cosifl/game.hpp"

namespace cosifl {

// Planner side of the server: predicts training loss from the equilibrium
// batch profile, prices a (selection, rounds, reward) triple, and walks the
// latency/quality Pareto frontier to pick the cheapest plan.

// Share-weighted data-heterogeneity mass of a batch profile:
//   kappa = sum_k (B_k / sum_j B_j) * (1 - alpha_k), zero-batch clients skip.
double heterogeneity_kappa(const std::vector<ClientAttributes>& attrs,
                           const std::vector<double>& batch);

// Proxy for the final training loss after T rounds:
//   L = gamma1 * phi^T * theta
//     + (1 - phi^T) * (gamma2 * sum_k T^2 / (B_k^2 eps_k^2) + gamma3 * kappa)
// summed over clients with positive batch. theta must already be resolved
// (calibrated or configured).
double loss_proxy(const ScenarioConfig& cfg, double theta,
                  const std::vector<ClientAttributes>& attrs,
                  const std::vector<double>& batch, int rounds);

struct CostBreakdown {
  double loss = 0;
  double reward = 0;
  double risk = 0;
  double total = 0;
};

// Cost of offering reward R for T rounds to this candidate set: solves the
// contest at R, prices the predicted loss, and adds the reward bill plus the
// risk estimate (0 while planning; realized penalties at reporting time).
CostBreakdown server_cost(const ScenarioConfig& cfg, double theta,
                          const std::vector<ClientAttributes>& attrs,
                          int rounds, double reward, double risk_estimate = 0);

struct RewardOpt {
  double reward = 0;
  double cost = 0;
  bool convex = true;  // false: profile failed the second-difference check
                       // and the exhaustive grid fallback was used
};

// Golden-section minimizer of cost over [reward_min, reward_max]. The profile
// is convex for a fixed active set (the privacy term scales as 1/R^2), which
// a 50-point second-difference scan verifies; on failure the optimum is taken
// from a dense grid instead and the record is flagged.
RewardOpt optimal_reward(const ScenarioConfig& cfg, double theta,
                         const std::vector<ClientAttributes>& attrs,
                         int rounds);

struct PlanRecord {
  std::vector<int> pool;     // candidate ids the contest was solved over
  std::vector<int> active;   // equilibrium participants N*
  double conversion = 0;     // Y, reward-to-batch rate of the active set
  double t_max = 0;          // slowest active member, seconds per round
  bool feasible = false;     // a positive round count fits the time budget
  int rounds = 0;            // T*
  double reward = 0;         // R*
  double cost = 0;           // planned total at (T*, R*), risk 0
  bool convex = true;
};

struct PlanResult {
  std::vector<PlanRecord> records;  // non-dominated in (Y, -t_max), t_max desc
  PlanRecord best;                  // cheapest feasible record
  double theta = 0;
};

// Latency-pruning frontier walk: solve the full pool, record (N*, Y, t_max),
// drop everything slower than the slowest active member, then repeatedly
// remove the slowest remaining member and re-solve until fewer than two
// remain. Records with duplicate active sets collapse and dominated records
// are filtered (ties in latency can produce them); each survivor is priced
// with its own (T*, R*). Throws InfeasibleError when nothing fits the budget.
PlanResult pareto_select(const ScenarioConfig& cfg, double theta,
                         const std::vector<ClientAttributes>& attrs);

// Degenerate planner used by the fixed-round baseline rule: all candidates,
// round count pinned to cfg.max_rounds, time budget ignored, reward still
// optimized.
PlanResult plan_fixed_all(const ScenarioConfig& cfg, double theta,
                          const std::vector<ClientAttributes>& attrs);

}  // namespace cosifl
