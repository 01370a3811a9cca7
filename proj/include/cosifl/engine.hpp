#pragma once
#include <map>
#include <string>
#include <vector>

#include "cosifl/audit.hpp"
#include "cosifl/config.hpp"
#include "cosifl/dataset.hpp"
#include "cosifl/incentive.hpp"
#include "cosifl/learner.hpp"
#include "cosifl/security.hpp"

namespace cosifl {

// Full simulation: data synthesis, attribute derivation, planning, the round
// loop with alarming/detection/penalties, metrics, and post-run audits. One
// scenario + seed determines every byte of output.

// Planning bundle shared by `plan` and `run`.
struct PlanBundle {
  std::vector<ClientAttributes> candidates;  // accepted, with derived weights
  std::vector<int> rejected;                 // ids over the divergence cap
  double theta = 0;                          // resolved optimality gap
  PlanResult plan;
};

PlanBundle plan_scenario(const ScenarioConfig& cfg);

struct Participant {
  int id = 0;
  bool alarm = false;
  double local_acc = 0;   // reported cached-model accuracy
  double global_acc = 0;  // the client's own reading of the broadcast model
  int batch = 0;
  double sigma = 0;       // per-step noise scale used this round
  double reward_share = 0;
  bool malicious = false;
  Verdict verdict = Verdict::kIgnored;
  bool has_verdict = false;
};

struct RoundReport {
  int round = 0;          // 1-based
  double sim_time = 0;    // cumulative simulated seconds after this round
  bool defense_active = false;
  std::vector<int> pool;      // ids eligible this round (selected minus bans)
  std::vector<int> rejoined;  // banned ids given a second chance this round
  std::vector<Participant> participants;  // ascending id; only actual trainers
  DetectCase kase = DetectCase::kAllSilent;
  bool base_previous = false;
  std::vector<int> aggregated;
  std::vector<int> banned_after;
  double ma = 0;            // holdout accuracy of the new global model
  double mr = 0;            // targeted attacks: source->target flip rate
  double confidence = 0;    // targeted attacks: mean p(target | source sample)
  double false_alarm_rate = 0;  // cumulative
  int malicious_verdicts = 0;   // cumulative
  double cost_so_far = 0;
};

struct Diagnostics {
  bool computed = false;
  double r0 = 0;                 // squared start distance to pooled optimum
  double empirical_dist_sq = 0;  // squared final distance to pooled optimum
  double bound = 0;
  double grad_bound = 0;
  double lambda_bar = 0;
};

struct RunSummary {
  ScenarioConfig cfg;
  PlanBundle plan;
  std::vector<int> malicious;  // ground-truth adversary ids
  std::vector<RoundReport> rounds;
  Model final_model;
  double final_ma = 0;
  double final_mr = 0;
  double final_confidence = 0;
  double sim_time_total = 0;
  std::vector<int> final_banned;
  CostBreakdown realized_cost;  // loss proxy at true attributes + reward + risk
  // Realized alarm precision per client (correct alarms / alarms raised);
  // only clients that alarmed at least once appear.
  std::map<int, double> alarm_precision;
  double auc_threshold = 0;
  double auc_logistic = 0;
  Diagnostics diagnostics;
};

RunSummary run_scenario(const ScenarioConfig& cfg);

// Convenience entry points: same run with one field overridden.
RunSummary run_discrimination_rule(const ScenarioConfig& cfg, Rule rule);
RunSummary run_self_recovery(const ScenarioConfig& cfg, int defense_start);

// Two-phase run: execute once, replace each alarming client's configured
// gamma with its realized alarm precision, plan and run again. The returned
// summary is from the second run.
RunSummary run_adaptive_gamma(const ScenarioConfig& cfg);

// Writes summary.json, rounds.jsonl, metrics.csv and model.json into out_dir
// (created if missing); optionally shards.csv. Deterministic byte-for-byte
// for a given scenario.
void emit_outputs(const RunSummary& s, const std::string& out_dir,
                  bool dump_shards = false);

// Re-runs the membership audits of a finished run directory (summary.json +
// model.json) and writes roc_threshold.csv, roc_logistic.csv and
// auc_summary.json into audit_dir.
void audit_run_dir(const std::string& run_dir, const std::string& audit_dir);

// Noise-multiplier sweep used for privacy trend studies: rows of
// (multiplier, seed, threshold-attack AUC, logistic-attack AUC, final MA).
struct SweepRow {
  double multiplier = 0;
  std::uint64_t seed = 0;
  double auc_threshold = 0;
  double auc_logistic = 0;
  double final_ma = 0;
};

std::vector<SweepRow> sweep_noise(const ScenarioConfig& cfg,
                                  const std::vector<double>& multipliers,
                                  int seeds_per_value);

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path);

}  // namespace cosifl
