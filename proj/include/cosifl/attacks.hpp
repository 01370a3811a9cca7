#pragma once
#include <cstdint>
#include <vector>

#include "cosifl/config.hpp"
#include "cosifl/dataset.hpp"

namespace cosifl {

// Adversary behaviors. Data-level attacks relabel the malicious clients'
// training shards once at setup; update-level attacks transform the honest
// update just before upload. With fraction 0 every entry point is a no-op and
// trajectories are bit-identical to a clean run (selection draws from its own
// substream).

// floor(fraction * K) distinct client ids, sampled from the candidate list.
std::vector<int> pick_malicious(const std::vector<int>& candidate_ids,
                                double fraction, std::uint64_t seed);

// In-place relabeling of the given samples: label-flip maps y to
// (classes-1-y) (an involution), targeted maps source_class to target_class.
// Update-level kinds leave the data alone.
void poison_labels(const AttackSpec& spec, Dataset& ds,
                   const std::vector<int>& idx);

// In-place transformation of the uploaded update. Sign-flip scales by the
// (negative) sign constant; adaptive replaces the update with -beta times the
// previous round's aggregated global delta (zero vector on round one).
void poison_update(const AttackSpec& spec, std::vector<double>& delta,
                   const std::vector<double>& prev_global_delta);

// The alarm bit a malicious client actually sends.
bool malicious_alarm(AlarmPolicy policy, bool honest_alarm);

}  // namespace cosifl
