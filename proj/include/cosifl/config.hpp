#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cosifl/errors.hpp"

namespace cosifl {

// Scenario schema. One JSON file describes everything a run needs; unknown
// keys are hard errors so typos can't silently fall back to defaults.
// See README for the field-by-field description.

enum class Rule { kCosifl, kNd, kNdt };

enum class AttackKind { kNone, kSignFlip, kLabelFlip, kAdaptive, kTargeted };

// How malicious clients use the alarm channel. Accuracy reports stay honest;
// lying is confined to the alarm bit (and a fabricated "global looks broken"
// reading under kAlwaysAlarm).
enum class AlarmPolicy { kHonest, kAlwaysAlarm, kNeverAlarm };

struct AttackSpec {
  AttackKind kind = AttackKind::kNone;
  double fraction = 0.0;       // malicious share of the candidate pool, < 0.5
  double sign_constant = -1.0; // multiplier for sign-flip updates, < 0
  double beta = 1.0;           // adaptive attack: scale on previous global delta
  int source_class = 0;        // targeted: relabel this...
  int target_class = 1;        // ...as this
  AlarmPolicy alarm_policy = AlarmPolicy::kHonest;
};

struct AlarmConfig {
  double client_tolerance = 0.05;   // C_c: accepted relative accuracy slack
  double server_similarity = 0.1;   // C_s: similarity band for alarm accuracies
};

struct PenaltyConfig {
  int ban_threshold = 2;            // C_p, in whole points
  double rejoin_probability = 0.1;  // chance a banned client is re-admitted
};

struct DpConfig {
  bool enabled = true;
  double delta = 1e-5;             // failure probability in the (eps, delta) pair
  double clip = 1.0;               // gradient clipping norm C
  double noise_multiplier = 1.0;   // extra scale on sigma_k; 0 = clip only
};

struct TrainingConfig {
  double learning_rate = 0.1;
  double server_learning_rate = 1.0;  // scales the aggregated delta
  int local_epochs = 1;
  double l2_reg = 0.01;
};

struct LossProxyConfig {
  double gamma1 = 1.0;  // weight of the decaying optimality-gap term
  double gamma2 = 1.0;  // weight of the privacy-noise term
  double gamma3 = 1.0;  // weight of the data-heterogeneity term
  double mu = 1.0;      // curvature constant in the decay factor
  double rho = 0.4;     // smoothness constant in the decay factor
  std::optional<double> theta;  // initial optimality gap; absent => calibrated
};

struct RiskConfig {
  double delta1 = 1.0;  // price per malicious verdict
  double delta2 = 1.0;  // price per unit false-alarm rate
};

struct CapsConfig {
  double epsilon_max = 8.0;
  double lambda_max = 0.0;  // 0 => estimate as max over client divergences
};

enum class Denominator { kSelected, kAll };

struct GameConfig {
  double reward_min = 1.0;
  double reward_max = 400.0;
  int min_batch = 1;  // floor for best responses when nobody else contributes
  Denominator denominator = Denominator::kSelected;
};

struct DataConfig {
  int feature_dim = 6;
  int num_classes = 4;
  int samples_per_client = 150;
  double noniid_p = 0.5;          // label-to-home-group concentration
  double class_separation = 4.0;  // distance between adjacent class means
  int min_shard = 100;            // re-deal until every client has this many
  double holdout_fraction = 0.1;  // server-side test split, never sharded
  double test_fraction = 0.2;     // per-client test split
};

struct DefenseConfig {
  bool enabled = true;
  int start_round = 1;  // rounds before this aggregate without detection
};

struct ReportConfig {
  bool diagnostics = true;  // convergence-bound diagnostics in the summary
};

struct ClientConfig {
  double epsilon = 1.0;  // local privacy budget, <= caps.epsilon_max
  double gamma = 1.0;    // alarm reliability in (0, 1]
  double cost = 0.01;    // marginal cost per training sample
  double latency = 1.0;  // wall-clock seconds per round
  std::optional<double> lambda;  // gradient divergence; absent => estimated
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  double time_budget = 40.0;  // wall-clock budget the plan must fit
  int max_rounds = 40;        // cap on planned global rounds
  Rule rule = Rule::kCosifl;
  AlarmConfig alarm;
  PenaltyConfig penalty;
  DpConfig dp;
  TrainingConfig training;
  LossProxyConfig loss_proxy;
  RiskConfig risk;
  CapsConfig caps;
  GameConfig game;
  AttackSpec attack;
  DataConfig data;
  DefenseConfig defense;
  ReportConfig report;
  std::vector<ClientConfig> clients;

  int num_clients() const { return static_cast<int>(clients.size()); }
};

// Parse + validate. Both throw IoError (unreadable / not JSON) or ConfigError
// (schema violation; message names the offending field and constraint).
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const std::string& json_text);

// Stable serialization; load(dump(cfg)) reproduces cfg exactly.
std::string dump_scenario(const ScenarioConfig& cfg);

// Runtime per-client attributes after derivation/estimation.
struct ClientAttributes {
  int id = 0;
  double alpha = 1.0;    // data-quality weight from gradient divergence
  double nu = 1.0;       // privacy-attitude weight from epsilon
  double epsilon = 1.0;
  double gamma = 1.0;
  double cost = 0.01;
  double latency = 1.0;
  double lambda = 0.0;
  bool lambda_estimated = false;  // false when the scenario supplied lambda
};

// nu = 1 - (1 - eps/eps_max)^2, increasing in eps, nu(eps_max) = 1.
double derive_nu(double epsilon, double epsilon_max);

// alpha = 1 - (lambda/lambda_max)^2, decreasing in lambda, alpha(0) = 1.
// lambda above the tolerance throws ProtocolError: such a client is rejected
// from candidacy. lambda_max = 0 demands lambda = 0 (identical shards).
double derive_alpha(double lambda, double lambda_max);

// Per-round decay factor phi = 1 - 2*mu*eta + 2*mu*rho*eta^2 of the planner's
// optimality-gap term. Validated to lie in (0,1) at scenario load.
double decay_factor(double mu, double rho, double eta);

}  // namespace cosifl
