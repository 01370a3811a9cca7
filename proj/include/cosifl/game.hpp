#pragma once
#include <vector>

#include "cosifl/config.hpp"

namespace cosifl {

// Batch-size contest between selected clients. A client's effective
// contribution is e_k * B_k with e_k = alpha_k * gamma_k; the reward R is
// shared in proportion to effective contributions and training costs s_k * B_k
// are paid out of pocket:
//   U_k = e_k B_k / (sum_j e_j B_j) * R - s_k B_k.

struct Player {
  int id = 0;
  double e = 1.0;  // alpha * gamma, contribution effectiveness
  double s = 0.01; // marginal cost per sample
};

Player to_player(const ClientAttributes& a);

// Utility of one client given the full-profile contribution sum (which
// includes its own e_k * B_k). A zero denominator means nobody contributes;
// the share is defined as zero.
double utility(const Player& p, double batch, double contribution_sum,
               double reward);

// Unique maximizer of U_k against fixed opponents' contribution mass
// others_q = sum_{j != k} e_j B_j:
//   B_k = (sqrt(e_k * others_q * R / s_k) - others_q) / e_k, clamped at 0.
// others_q = 0 degenerates (any positive batch takes the whole reward, the
// supremum walks toward 0), so the configured minimum batch is returned.
double best_response(const Player& p, double others_q, double reward,
                     int min_batch);

struct EquilibriumResult {
  std::vector<double> batch;   // B_k*, aligned with the input player order
  std::vector<bool> active;    // strictly positive equilibrium batch
  double reward = 0;
  double total_batch = 0;
  double conversion = 0;       // Y = total_batch / reward, invariant in R
};

// Closed-form Nash equilibrium. With unit costs c_k = s_k / e_k sorted
// ascending, the active set is the largest prefix M with
// c_m * (|M| - 1) < sum_{i in M} c_i; total contribution mass is
// Q = (|M| - 1) R / sum_{i in M} c_i and members play
// q_k = Q (1 - c_k Q / R), B_k = q_k / e_k. Players with e_k = 0 can never
// earn a share and are excluded up front. Needs >= 2 eligible players.
EquilibriumResult nash_equilibrium(const std::vector<Player>& players,
                                   double reward);

// Realized reward fractions for a (possibly off-equilibrium) batch profile;
// zeros when nobody contributes. Sums to 1 otherwise.
std::vector<double> tullock_shares(const std::vector<Player>& players,
                                   const std::vector<double>& batches);

}  // namespace cosifl
