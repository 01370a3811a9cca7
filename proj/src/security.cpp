#include "cosifl/security.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cosifl/errors.hpp"

namespace cosifl {

AlarmDecision client_alarm(double global_acc, double cached_acc,
                           double tolerance) {
  AlarmDecision d;
  d.alarm = global_acc < cached_acc * (1.0 - tolerance);
  d.train_from_cache = d.alarm;
  return d;
}

namespace {

double max_acc(const std::vector<const ClientReport*>& rs) {
  double m = -std::numeric_limits<double>::infinity();
  for (const ClientReport* r : rs) m = std::max(m, r->local_acc);
  return m;
}

// Folds the members' updates into `base`. Updates were measured against the
// broadcast model (`reported_base`), so when the server rolls back to the
// previous global each delta is translated by (reported_base - base) first;
// it then describes the same trained position it did before. Without this a
// rollback injects a spurious -(w_t - w_{t-1}) term whose recurrence diverges
// under repeated rollbacks.
void weighted_apply(const std::vector<double>& base,
                    const std::vector<double>& reported_base,
                    const std::vector<const ClientReport*>& members,
                    double server_lr, std::vector<double>& out) {
  out = base;
  double total = 0;
  for (const ClientReport* r : members) total += r->batch;
  if (total <= 0) return;  // nothing to fold in
  for (const ClientReport* r : members) {
    const double w = server_lr * r->batch / total;
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] += w * (r->delta[j] + (reported_base[j] - base[j]));
  }
}

}  // namespace

DetectOutcome server_detect(const std::vector<double>& prev_global,
                            const std::vector<double>& cur_global,
                            const std::vector<ClientReport>& reports,
                            double server_similarity, double server_lr) {
  for (const ClientReport& r : reports)
    if (r.delta.size() != cur_global.size())
      throw ProtocolError("server_detect: update dimension mismatch");

  DetectOutcome out;
  std::vector<const ClientReport*> alarmers, silents, members;
  for (const ClientReport& r : reports)
    (r.alarm ? alarmers : silents).push_back(&r);
  for (const ClientReport* r : alarmers) out.alarmed.push_back(r->id);
  for (const ClientReport* r : silents) out.silent.push_back(r->id);
  std::sort(out.alarmed.begin(), out.alarmed.end());
  std::sort(out.silent.begin(), out.silent.end());

  if (alarmers.empty()) {
    out.kase = DetectCase::kAllSilent;
    out.base_previous = false;
    members = silents;
    for (const ClientReport* r : silents)
      out.verdicts[r->id] = Verdict::kBenign;
  } else {
    const double band = max_acc(alarmers) * (1.0 - server_similarity);
    const bool internally_similar =
        std::all_of(alarmers.begin(), alarmers.end(),
                    [&](const ClientReport* r) { return band < r->local_acc; });
    if (internally_similar) {
      const bool silent_keeps_up = !silents.empty() && band <= max_acc(silents);
      if (silent_keeps_up) {
        // The quiet camp is doing at least as well: alarms were mistaken.
        out.kase = DetectCase::kTrustSilent;
        out.base_previous = false;
        members = silents;
        for (const ClientReport* r : silents)
          out.verdicts[r->id] = Verdict::kBenign;
        for (const ClientReport* r : alarmers)
          out.verdicts[r->id] = Verdict::kFalseAlarm;
      } else {
        // Consistent alarms and a lagging silent camp: roll back and rebuild
        // from the alarmers; silence looks like complicity.
        out.kase = DetectCase::kTrustAlarmers;
        out.base_previous = true;
        members = alarmers;
        for (const ClientReport* r : alarmers)
          out.verdicts[r->id] = Verdict::kBenign;
        for (const ClientReport* r : silents)
          out.verdicts[r->id] = Verdict::kMalicious;
      }
    } else {
      // The alarm camp can't agree with itself; keep only its top accuracy
      // band and treat the rest of it as hostile. No verdict on the silent
      // camp: with the global model in doubt there is nothing to clear
      // them with.
      out.kase = DetectCase::kFilterAlarmers;
      out.base_previous = true;
      for (const ClientReport* r : alarmers) {
        if (r->local_acc > band) {
          members.push_back(r);
          out.verdicts[r->id] = Verdict::kBenign;
        } else {
          out.verdicts[r->id] = Verdict::kMalicious;
        }
      }
      for (const ClientReport* r : silents)
        out.verdicts[r->id] = Verdict::kIgnored;
    }
  }

  for (const ClientReport* r : members) out.aggregated.push_back(r->id);
  std::sort(out.aggregated.begin(), out.aggregated.end());
  std::sort(members.begin(), members.end(),
            [](const ClientReport* a, const ClientReport* b) {
              return a->id < b->id;  // stable summation order
            });
  weighted_apply(out.base_previous ? prev_global : cur_global, cur_global,
                 members, server_lr, out.new_global);
  return out;
}

std::vector<int> PenaltyLedger::banned_ids() const {
  std::vector<int> out;
  for (const auto& [id, scaled] : scaled_)
    if (scaled >= 2 * threshold_) out.push_back(id);
  return out;
}

void apply_penalties(PenaltyLedger& ledger, const DetectOutcome& outcome) {
  for (const auto& [id, verdict] : outcome.verdicts) {
    switch (verdict) {
      case Verdict::kMalicious:
        ledger.add_malicious(id);
        break;
      case Verdict::kFalseAlarm:
        ledger.add_false_alarm(id);
        break;
      case Verdict::kBenign:
        if (ledger.banned(id)) ledger.redeem(id);
        break;
      case Verdict::kIgnored:
        break;
    }
  }
}

std::vector<int> sample_rejoins(const PenaltyLedger& ledger,
                                double rejoin_probability, Rng& rng) {
  std::vector<int> out;
  for (int id : ledger.banned_ids())
    if (rng.bernoulli(rejoin_probability)) out.push_back(id);
  return out;
}

std::vector<double> baseline_aggregate(
    Aggregator kind, const std::vector<std::vector<double>>& updates,
    const std::vector<double>& weights, int f_est) {
  if (updates.empty()) throw ProtocolError("baseline_aggregate: no updates");
  const std::size_t dim = updates[0].size();
  for (const auto& u : updates)
    if (u.size() != dim)
      throw ProtocolError("baseline_aggregate: dimension mismatch");
  const int n = static_cast<int>(updates.size());

  switch (kind) {
    case Aggregator::kFedAvg: {
      if (static_cast<int>(weights.size()) != n)
        throw ProtocolError("baseline_aggregate: weight count mismatch");
      double total = 0;
      for (double w : weights) total += w;
      if (total <= 0)
        throw ProtocolError("baseline_aggregate: weights must sum > 0");
      std::vector<double> out(dim, 0.0);
      for (int i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j)
          out[j] += weights[i] / total * updates[i][j];
      return out;
    }
    case Aggregator::kCoordMedian: {
      std::vector<double> out(dim, 0.0);
      std::vector<double> col(n);
      for (std::size_t j = 0; j < dim; ++j) {
        for (int i = 0; i < n; ++i) col[i] = updates[i][j];
        std::sort(col.begin(), col.end());
        out[j] = (n % 2) ? col[n / 2]
                         : 0.5 * (col[n / 2 - 1] + col[n / 2]);
      }
      return out;
    }
    case Aggregator::kKrum: {
      if (n < 2 * f_est + 3)
        throw ProtocolError(
            "baseline_aggregate: krum needs n >= 2f + 3 updates");
      std::vector<std::vector<double>> d2(n, std::vector<double>(n, 0.0));
      for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) {
          double sq = 0;
          for (std::size_t j = 0; j < dim; ++j) {
            const double diff = updates[i][j] - updates[k][j];
            sq += diff * diff;
          }
          d2[i][k] = d2[k][i] = sq;
        }
      int best = 0;
      double best_score = std::numeric_limits<double>::infinity();
      const int neighbours = n - f_est - 2;
      for (int i = 0; i < n; ++i) {
        std::vector<double> row;
        row.reserve(n - 1);
        for (int k = 0; k < n; ++k)
          if (k != i) row.push_back(d2[i][k]);
        std::sort(row.begin(), row.end());
        double score = 0;
        for (int k = 0; k < neighbours; ++k) score += row[k];
        if (score < best_score) {
          best_score = score;
          best = i;
        }
      }
      return updates[best];
    }
  }
  throw ProtocolError("baseline_aggregate: unknown aggregator");
}

}  // namespace cosifl
