#include "cosifl/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cosifl/errors.hpp"

namespace cosifl {

Player to_player(const ClientAttributes& a) {
  return Player{a.id, a.alpha * a.gamma, a.cost};
}

double utility(const Player& p, double batch, double contribution_sum,
               double reward) {
  const double share =
      contribution_sum > 0 ? p.e * batch / contribution_sum : 0.0;
  return share * reward - p.s * batch;
}

double best_response(const Player& p, double others_q, double reward,
                     int min_batch) {
  if (p.e <= 0) return 0.0;  // no share to win, training only costs
  if (others_q <= 0) return static_cast<double>(min_batch);
  const double root = std::sqrt(p.e * others_q * reward / p.s);
  return std::max(0.0, (root - others_q) / p.e);
}

EquilibriumResult nash_equilibrium(const std::vector<Player>& players,
                                   double reward) {
  if (reward <= 0) throw ProtocolError("nash_equilibrium: reward must be > 0");
  const int n = static_cast<int>(players.size());

  // Unit cost per effective contribution; e = 0 players can never be active.
  struct Entry { double c; int pos; };
  std::vector<Entry> order;
  order.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Player& p = players[i];
    if (p.s <= 0) throw ProtocolError("nash_equilibrium: costs must be > 0");
    if (p.e > 0) order.push_back({p.s / p.e, i});
  }
  if (order.size() < 2)
    throw ProtocolError(
        "nash_equilibrium: needs at least 2 players with positive "
        "effectiveness");
  std::sort(order.begin(), order.end(), [&](const Entry& a, const Entry& b) {
    if (a.c != b.c) return a.c < b.c;
    return players[a.pos].id < players[b.pos].id;  // deterministic tie order
  });

  // Largest ascending-cost prefix that is internally consistent. The m = 2
  // prefix always qualifies (0 < c_1), and the same inequality evaluated at
  // the first excluded player certifies that staying out is optimal for it.
  int m = 2;
  double prefix = order[0].c + order[1].c;
  double active_sum = prefix;
  for (int i = 2; i < static_cast<int>(order.size()); ++i) {
    prefix += order[i].c;
    if (order[i].c * i < prefix) {
      m = i + 1;
      active_sum = prefix;
    }
  }

  EquilibriumResult r;
  r.reward = reward;
  r.batch.assign(n, 0.0);
  r.active.assign(n, false);
  const double q_total = (m - 1) * reward / active_sum;
  for (int i = 0; i < m; ++i) {
    const int pos = order[i].pos;
    const double q = q_total * (1.0 - order[i].c * (m - 1) / active_sum);
    r.batch[pos] = q / players[pos].e;
    r.active[pos] = true;
    r.total_batch += r.batch[pos];
  }
  r.conversion = r.total_batch / reward;
  return r;
}

std::vector<double> tullock_shares(const std::vector<Player>& players,
                                   const std::vector<double>& batches) {
  if (players.size() != batches.size())
    throw ProtocolError("tullock_shares: profile size mismatch");
  double denom = 0;
  for (std::size_t i = 0; i < players.size(); ++i)
    denom += players[i].e * batches[i];
  std::vector<double> shares(players.size(), 0.0);
  if (denom <= 0) return shares;
  for (std::size_t i = 0; i < players.size(); ++i)
    shares[i] = players[i].e * batches[i] / denom;
  return shares;
}

}  // namespace cosifl
