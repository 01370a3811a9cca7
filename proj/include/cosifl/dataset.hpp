#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "cosifl/config.hpp"

namespace cosifl {

// Row-major design matrix with integer labels.
struct Dataset {
  int n = 0;
  int dim = 0;
  int classes = 0;
  std::vector<double> x;  // n * dim
  std::vector<int> y;     // n

  const double* row(int i) const { return x.data() + static_cast<std::size_t>(i) * dim; }
};

// Index views into a Dataset; shards never copy samples.
struct Shard {
  std::vector<int> train;
  std::vector<int> test;
};

struct ClientShards {
  std::vector<Shard> per_client;
  std::vector<int> server_holdout;  // global test split, never sharded
};

// Gaussian mixture, one unit-variance component per class. Class means sit on
// a circle in the first two feature dimensions with chord `class_separation`
// between neighbours, so pooled linear softmax accuracy stays high; remaining
// dimensions are pure noise. Labels are drawn uniformly.
Dataset make_dataset(const DataConfig& d, int num_clients, std::uint64_t seed);

// Holdout split + label-skewed partition + per-client train/test split, all
// derived from the scenario seed. A sample with label l lands with probability
// p on a uniformly chosen member of l's home group {k : k mod classes == l}
// (uniform over all clients when that group is empty), otherwise on a uniform
// client. Re-deals with a fresh substream until every client holds at least
// min_shard samples; gives up after a bounded number of attempts.
ClientShards shard_dataset(const Dataset& ds, const DataConfig& d,
                           int num_clients, std::uint64_t seed);

// Max-over-probes divergence between client k's training gradient and the
// pooled training gradient, probed at the zero model plus four random
// perturbations. This is the heterogeneity score the quality weight alpha is
// derived from.
std::vector<double> estimate_lambda(const Dataset& ds,
                                    const ClientShards& shards, double l2_reg,
                                    std::uint64_t seed);

// One-file CSV export of the sharding (client id, role, label, features...).
void dump_shards_csv(const Dataset& ds, const ClientShards& shards,
                     const std::string& path);

}  // namespace cosifl
