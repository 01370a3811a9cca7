#include "cosifl/attacks.hpp"

#include <algorithm>
#include <cmath>

#include "cosifl/rng.hpp"

namespace cosifl {

std::vector<int> pick_malicious(const std::vector<int>& candidate_ids,
                                double fraction, std::uint64_t seed) {
  const int count =
      static_cast<int>(std::floor(fraction * candidate_ids.size()));
  if (count <= 0) return {};
  std::vector<int> ids = candidate_ids;
  Rng rng(seed, stream::kMaliciousPick);
  for (std::size_t i = ids.size(); i > 1; --i)
    std::swap(ids[i - 1], ids[rng.uniform_u64(i)]);
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

void poison_labels(const AttackSpec& spec, Dataset& ds,
                   const std::vector<int>& idx) {
  switch (spec.kind) {
    case AttackKind::kLabelFlip:
      for (int i : idx) ds.y[i] = ds.classes - 1 - ds.y[i];
      break;
    case AttackKind::kTargeted:
      for (int i : idx)
        if (ds.y[i] == spec.source_class) ds.y[i] = spec.target_class;
      break;
    default:
      break;
  }
}

void poison_update(const AttackSpec& spec, std::vector<double>& delta,
                   const std::vector<double>& prev_global_delta) {
  switch (spec.kind) {
    case AttackKind::kSignFlip:
      for (double& v : delta) v *= spec.sign_constant;
      break;
    case AttackKind::kAdaptive:
      // Aim opposite to where the crowd just moved; round one has no
      // history, so the update degenerates to zero.
      for (std::size_t j = 0; j < delta.size(); ++j)
        delta[j] = prev_global_delta.empty()
                       ? 0.0
                       : -spec.beta * prev_global_delta[j];
      break;
    default:
      break;
  }
}

bool malicious_alarm(AlarmPolicy policy, bool honest_alarm) {
  switch (policy) {
    case AlarmPolicy::kAlwaysAlarm: return true;
    case AlarmPolicy::kNeverAlarm: return false;
    case AlarmPolicy::kHonest: return honest_alarm;
  }
  return honest_alarm;
}

}  // namespace cosifl
