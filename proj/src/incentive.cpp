#include "cosifl/incentive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cosifl/errors.hpp"

namespace cosifl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Player> players_of(const std::vector<ClientAttributes>& attrs) {
  std::vector<Player> ps;
  ps.reserve(attrs.size());
  for (const ClientAttributes& a : attrs) ps.push_back(to_player(a));
  return ps;
}

int eligible_count(const std::vector<ClientAttributes>& attrs) {
  int n = 0;
  for (const ClientAttributes& a : attrs)
    if (a.alpha * a.gamma > 0) ++n;
  return n;
}

}  // namespace

double heterogeneity_kappa(const std::vector<ClientAttributes>& attrs,
                           const std::vector<double>& batch) {
  if (attrs.size() != batch.size())
    throw ProtocolError("heterogeneity_kappa: profile size mismatch");
  double total = 0;
  for (double b : batch) total += b;
  if (total <= 0) return 0;
  double kappa = 0;
  for (std::size_t i = 0; i < attrs.size(); ++i)
    kappa += batch[i] / total * (1.0 - attrs[i].alpha);
  return kappa;
}

double loss_proxy(const ScenarioConfig& cfg, double theta,
                  const std::vector<ClientAttributes>& attrs,
                  const std::vector<double>& batch, int rounds) {
  if (attrs.size() != batch.size())
    throw ProtocolError("loss_proxy: profile size mismatch");
  const double phi = decay_factor(cfg.loss_proxy.mu, cfg.loss_proxy.rho,
                                  cfg.training.learning_rate);
  const double decay = std::pow(phi, rounds);
  double privacy = 0;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (batch[i] <= 0) continue;  // non-participants add no noise
    const double be = batch[i] * attrs[i].epsilon;
    privacy += static_cast<double>(rounds) * rounds / (be * be);
  }
  const double kappa = heterogeneity_kappa(attrs, batch);
  return cfg.loss_proxy.gamma1 * decay * theta +
         (1.0 - decay) *
             (cfg.loss_proxy.gamma2 * privacy + cfg.loss_proxy.gamma3 * kappa);
}

CostBreakdown server_cost(const ScenarioConfig& cfg, double theta,
                          const std::vector<ClientAttributes>& attrs,
                          int rounds, double reward, double risk_estimate) {
  const EquilibriumResult eq = nash_equilibrium(players_of(attrs), reward);
  CostBreakdown c;
  c.loss = loss_proxy(cfg, theta, attrs, eq.batch, rounds);
  c.reward = reward;
  c.risk = risk_estimate;
  c.total = c.loss + c.reward + c.risk;
  return c;
}

RewardOpt optimal_reward(const ScenarioConfig& cfg, double theta,
                         const std::vector<ClientAttributes>& attrs,
                         int rounds) {
  const double lo = cfg.game.reward_min;
  const double hi = cfg.game.reward_max;
  auto cost_at = [&](double r) {
    return server_cost(cfg, theta, attrs, rounds, r).total;
  };

  // The profile should be convex in the reward; verify by second differences
  // on a coarse scan before trusting a line search.
  constexpr int kScan = 50;
  double scan[kScan];
  const double step = (hi - lo) / (kScan - 1);
  for (int i = 0; i < kScan; ++i) scan[i] = cost_at(lo + i * step);
  bool convex = true;
  for (int i = 1; i + 1 < kScan && convex; ++i)
    if (scan[i + 1] - 2 * scan[i] + scan[i - 1] < -1e-6) convex = false;

  RewardOpt out;
  out.convex = convex;
  if (!convex) {
    // Fall back to brute force; flag the record so the plan shows it.
    constexpr int kDense = 2000;
    double best_r = lo, best_c = kInf;
    for (int i = 0; i < kDense; ++i) {
      const double r = lo + (hi - lo) * i / (kDense - 1);
      const double c = cost_at(r);
      if (c < best_c) { best_c = c; best_r = r; }
    }
    out.reward = best_r;
    out.cost = best_c;
    return out;
  }

  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = cost_at(x1), f2 = cost_at(x2);
  for (int it = 0; it < 90; ++it) {
    if (f1 <= f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - gr * (b - a);
      f1 = cost_at(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + gr * (b - a);
      f2 = cost_at(x2);
    }
  }
  out.reward = 0.5 * (a + b);
  out.cost = cost_at(out.reward);
  return out;
}

namespace {

// T range admitted by the wall-clock budget; empty (hi < 1) means infeasible.
int rounds_cap(const ScenarioConfig& cfg, double t_max) {
  const int by_budget = static_cast<int>(std::floor(cfg.time_budget / t_max));
  return std::min(cfg.max_rounds, by_budget);
}

// Fill (T*, R*, cost) for a record by scanning every admissible round count.
void price_record(const ScenarioConfig& cfg, double theta,
                  const std::vector<ClientAttributes>& pool_attrs,
                  PlanRecord& rec) {
  const int t_hi = rounds_cap(cfg, rec.t_max);
  if (t_hi < 1) {
    rec.feasible = false;
    rec.cost = kInf;
    return;
  }
  rec.feasible = true;
  rec.cost = kInf;
  for (int T = 1; T <= t_hi; ++T) {
    const RewardOpt ro = optimal_reward(cfg, theta, pool_attrs, T);
    if (ro.cost < rec.cost) {
      rec.cost = ro.cost;
      rec.rounds = T;
      rec.reward = ro.reward;
      rec.convex = ro.convex;
    }
  }
}

PlanRecord make_record(const std::vector<ClientAttributes>& pool,
                       const EquilibriumResult& eq) {
  PlanRecord rec;
  for (const ClientAttributes& a : pool) rec.pool.push_back(a.id);
  rec.conversion = eq.conversion;
  rec.t_max = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!eq.active[i]) continue;
    rec.active.push_back(pool[i].id);
    rec.t_max = std::max(rec.t_max, pool[i].latency);
  }
  return rec;
}

}  // namespace

PlanResult pareto_select(const ScenarioConfig& cfg, double theta,
                         const std::vector<ClientAttributes>& attrs) {
  std::vector<ClientAttributes> pool = attrs;
  if (eligible_count(pool) < 2)
    throw InfeasibleError(
        "pareto_select: fewer than 2 clients with positive quality weight");

  struct Raw {
    PlanRecord rec;
    std::vector<ClientAttributes> pool_attrs;
  };
  std::vector<Raw> raw;

  const double r_ref = cfg.game.reward_max;  // Y does not depend on it
  bool first = true;
  while (eligible_count(pool) >= 2) {
    const EquilibriumResult eq = nash_equilibrium(players_of(pool), r_ref);
    Raw r;
    r.rec = make_record(pool, eq);
    r.pool_attrs = pool;
    const double t_max = r.rec.t_max;
    raw.push_back(std::move(r));

    if (first) {
      // Members slower than the slowest active client are pure liabilities.
      std::erase_if(pool,
                    [&](const ClientAttributes& a) { return a.latency > t_max; });
      first = false;
    }
    // Drop the slowest remaining member (ties: larger id goes).
    if (pool.empty()) break;
    std::size_t slow = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
      if (pool[i].latency > pool[slow].latency ||
          (pool[i].latency == pool[slow].latency &&
           pool[i].id > pool[slow].id))
        slow = i;
    }
    pool.erase(pool.begin() + slow);
  }
  if (raw.empty())
    throw InfeasibleError("pareto_select: no contest could be solved");

  // Collapse duplicate active sets (removing an inactive member changes
  // nothing), then price and keep the non-dominated survivors.
  std::vector<Raw> unique;
  for (Raw& r : raw) {
    const bool dup =
        std::any_of(unique.begin(), unique.end(), [&](const Raw& u) {
          return u.rec.active == r.rec.active;
        });
    if (!dup) unique.push_back(std::move(r));
  }
  for (Raw& r : unique) price_record(cfg, theta, r.pool_attrs, r.rec);

  PlanResult out;
  out.theta = theta;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < unique.size() && !dominated; ++j) {
      if (i == j) continue;
      const PlanRecord& a = unique[i].rec;
      const PlanRecord& b = unique[j].rec;
      const bool weakly = b.conversion >= a.conversion && b.t_max <= a.t_max;
      const bool strictly = b.conversion > a.conversion || b.t_max < a.t_max;
      if (weakly && strictly) dominated = true;
    }
    if (!dominated) out.records.push_back(unique[i].rec);
  }
  std::sort(out.records.begin(), out.records.end(),
            [](const PlanRecord& a, const PlanRecord& b) {
              if (a.t_max != b.t_max) return a.t_max > b.t_max;
              return a.conversion > b.conversion;
            });

  const PlanRecord* best = nullptr;
  for (const PlanRecord& r : out.records) {
    if (!r.feasible) continue;
    if (!best || r.cost < best->cost ||
        (r.cost == best->cost && r.t_max < best->t_max))
      best = &r;
  }
  if (!best)
    throw InfeasibleError(
        "pareto_select: no selection fits the time budget; raise time_budget "
        "or lower latencies");
  out.best = *best;
  return out;
}

PlanResult plan_fixed_all(const ScenarioConfig& cfg, double theta,
                          const std::vector<ClientAttributes>& attrs) {
  if (eligible_count(attrs) < 2)
    throw InfeasibleError(
        "plan_fixed_all: fewer than 2 clients with positive quality weight");
  const EquilibriumResult eq =
      nash_equilibrium(players_of(attrs), cfg.game.reward_max);
  PlanRecord rec = make_record(attrs, eq);
  rec.feasible = true;
  rec.rounds = cfg.max_rounds;  // pinned; the time budget is ignored
  const RewardOpt ro = optimal_reward(cfg, theta, attrs, rec.rounds);
  rec.reward = ro.reward;
  rec.cost = ro.cost;
  rec.convex = ro.convex;
  PlanResult out;
  out.theta = theta;
  out.records.push_back(rec);
  out.best = rec;
  return out;
}

}  // namespace cosifl
