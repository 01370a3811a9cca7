#pragma once
#include <map>
#include <vector>

#include "cosifl/rng.hpp"

namespace cosifl {

// Proactive alarming: a client compares the broadcast global model against its
// cached local model on its own test shard and raises an alarm when the global
// one is more than the tolerated fraction worse. The server cross-checks the
// alarming and silent camps and decides whom to aggregate and whom to punish.

struct AlarmDecision {
  bool alarm = false;            // accuracy dropped beyond the tolerance
  bool train_from_cache = false; // alarmers resume from their cached model
};

// alarm iff global_acc < cached_acc * (1 - tolerance); the boundary passes.
AlarmDecision client_alarm(double global_acc, double cached_acc,
                           double tolerance);

struct ClientReport {
  int id = 0;
  bool alarm = false;
  double local_acc = 0;       // cached-local-model accuracy, as reported
  int batch = 0;              // realized batch size, used as aggregation weight
  std::vector<double> delta;  // update relative to the broadcast global model
};

enum class Verdict { kBenign, kMalicious, kFalseAlarm, kIgnored };

// Named by what the server does, not by case number.
enum class DetectCase {
  kAllSilent,      // nobody alarmed: aggregate everyone onto the current model
  kTrustSilent,    // alarms look wrong (silent camp is at least as accurate):
                   // aggregate the silent camp, alarms were false
  kTrustAlarmers,  // alarms agree and the silent camp lags: silent clients are
                   // the suspects; aggregate alarmers onto the previous model
  kFilterAlarmers, // alarm camp disagrees internally: keep only its top band,
                   // ignore the silent camp entirely
};

struct DetectOutcome {
  DetectCase kase = DetectCase::kAllSilent;
  std::vector<int> alarmed;     // ids, ascending
  std::vector<int> silent;
  std::vector<int> aggregated;  // ids whose updates built the new model
  bool base_previous = false;   // aggregation base: previous vs current global
  std::vector<double> new_global;
  std::map<int, Verdict> verdicts;
};

// Cross-analysis of one round of reports. Weights are batch-proportional over
// the aggregated set; server_lr scales the summed delta. The similarity band
// C_s controls both the internal-agreement test of the alarm camp and the
// comparison against the silent camp's best accuracy. Reported deltas are
// relative to the current broadcast; on a rollback they are re-anchored to
// the previous global so they keep describing the same trained position.
DetectOutcome server_detect(const std::vector<double>& prev_global,
                            const std::vector<double>& cur_global,
                            const std::vector<ClientReport>& reports,
                            double server_similarity, double server_lr);

// Penalty bookkeeping in half-points so a false alarm can cost half a point
// without floating arithmetic. Banned means points >= ban_threshold, and the
// flag is recomputed after every change, so a benign verdict while banned can
// lift the ban again.
class PenaltyLedger {
 public:
  explicit PenaltyLedger(int ban_threshold) : threshold_(ban_threshold) {}

  void add_malicious(int id) { scaled_[id] += 2; }
  void add_false_alarm(int id) { scaled_[id] += 1; }
  void redeem(int id) {  // benign while banned: one full point back
    auto it = scaled_.find(id);
    if (it != scaled_.end()) it->second = std::max(0, it->second - 2);
  }

  bool banned(int id) const {
    auto it = scaled_.find(id);
    return it != scaled_.end() && it->second >= 2 * threshold_;
  }
  double points(int id) const {
    auto it = scaled_.find(id);
    return it == scaled_.end() ? 0.0 : it->second / 2.0;
  }
  std::vector<int> banned_ids() const;

 private:
  int threshold_;
  std::map<int, int> scaled_;
};

// Fold one round of verdicts into the ledger. Clients banned *before* this
// round that are judged benign (they were sampled back in) earn a point back.
void apply_penalties(PenaltyLedger& ledger, const DetectOutcome& outcome);

// Banned clients flip a coin each round for a second chance; returns the
// re-admitted ids (ascending — iteration order is part of determinism).
std::vector<int> sample_rejoins(const PenaltyLedger& ledger,
                                double rejoin_probability, Rng& rng);

// Reference robust aggregators for side-by-side comparisons.
enum class Aggregator { kFedAvg, kCoordMedian, kKrum };

// kFedAvg: weight-proportional mean. kCoordMedian: unweighted per-coordinate
// median (mean of the middle pair on even counts). kKrum: the update with the
// smallest sum of squared distances to its n - f_est - 2 nearest neighbours;
// requires n >= 2*f_est + 3.
std::vector<double> baseline_aggregate(Aggregator kind,
                                       const std::vector<std::vector<double>>& updates,
                                       const std::vector<double>& weights,
                                       int f_est);

}  // namespace cosifl
