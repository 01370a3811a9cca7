#include "cosifl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "cosifl/learner.hpp"
#include "cosifl/rng.hpp"
#include "cosifl/textio.hpp"

namespace cosifl {
namespace {

void shuffle_indices(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_u64(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

Dataset make_dataset(const DataConfig& d, int num_clients, std::uint64_t seed) {
  Dataset ds;
  ds.dim = d.feature_dim;
  ds.classes = d.num_classes;
  ds.n = num_clients * d.samples_per_client;
  ds.x.resize(static_cast<std::size_t>(ds.n) * ds.dim);
  ds.y.resize(ds.n);

  // Adjacent means sit `class_separation` apart on a circle in dims 0-1.
  const double radius =
      d.class_separation / (2.0 * std::sin(M_PI / d.num_classes));
  std::vector<double> means(static_cast<std::size_t>(d.num_classes) * ds.dim,
                            0.0);
  for (int c = 0; c < d.num_classes; ++c) {
    const double angle = 2.0 * M_PI * c / d.num_classes;
    means[static_cast<std::size_t>(c) * ds.dim + 0] = radius * std::cos(angle);
    means[static_cast<std::size_t>(c) * ds.dim + 1] = radius * std::sin(angle);
  }

  Rng rng(seed, stream::kDataGen);
  for (int i = 0; i < ds.n; ++i) {
    const int label = static_cast<int>(rng.uniform_u64(d.num_classes));
    ds.y[i] = label;
    double* row = ds.x.data() + static_cast<std::size_t>(i) * ds.dim;
    const double* mean = means.data() + static_cast<std::size_t>(label) * ds.dim;
    for (int j = 0; j < ds.dim; ++j) row[j] = mean[j] + rng.normal();
  }
  return ds;
}

ClientShards shard_dataset(const Dataset& ds, const DataConfig& d,
                           int num_clients, std::uint64_t seed) {
  ClientShards out;

  std::vector<int> all(ds.n);
  std::iota(all.begin(), all.end(), 0);
  Rng hold_rng(seed, stream::kHoldout);
  shuffle_indices(all, hold_rng);
  const int n_hold = static_cast<int>(std::llround(d.holdout_fraction * ds.n));
  out.server_holdout.assign(all.begin(), all.begin() + n_hold);
  std::sort(out.server_holdout.begin(), out.server_holdout.end());
  std::vector<int> pool(all.begin() + n_hold, all.end());
  std::sort(pool.begin(), pool.end());

  // Home groups: label l belongs to clients {k : k mod classes == l}.
  std::vector<std::vector<int>> home(ds.classes);
  for (int k = 0; k < num_clients; ++k) home[k % ds.classes].push_back(k);

  constexpr int kMaxDeals = 50;
  std::vector<std::vector<int>> assign;
  bool ok = false;
  for (int attempt = 0; attempt < kMaxDeals && !ok; ++attempt) {
    Rng rng(seed, stream::kPartition, static_cast<std::uint64_t>(attempt));
    assign.assign(num_clients, {});
    for (int i : pool) {
      const std::vector<int>& h = home[ds.y[i]];
      int k;
      if (!h.empty() && rng.bernoulli(d.noniid_p))
        k = h[rng.uniform_u64(h.size())];
      else
        k = static_cast<int>(rng.uniform_u64(num_clients));
      assign[k].push_back(i);
    }
    ok = std::all_of(assign.begin(), assign.end(), [&](const auto& s) {
      return static_cast<int>(s.size()) >= d.min_shard;
    });
  }
  if (!ok)
    throw ProtocolError(
        "partition could not satisfy data.min_shard for every client; "
        "increase samples_per_client or lower min_shard");

  out.per_client.resize(num_clients);
  for (int k = 0; k < num_clients; ++k) {
    std::vector<int>& shard = assign[k];
    Rng rng(seed, stream::kSplit, static_cast<std::uint64_t>(k));
    shuffle_indices(shard, rng);
    const int n_test =
        static_cast<int>(std::llround(d.test_fraction * shard.size()));
    Shard& s = out.per_client[k];
    s.test.assign(shard.begin(), shard.begin() + n_test);
    s.train.assign(shard.begin() + n_test, shard.end());
    std::sort(s.test.begin(), s.test.end());
    std::sort(s.train.begin(), s.train.end());
    if (n_test < 20)
      throw ProtocolError("client test shard below 20 samples; "
                          "accuracy estimates would be meaningless");
  }
  return out;
}

std::vector<double> estimate_lambda(const Dataset& ds,
                                    const ClientShards& shards, double l2_reg,
                                    std::uint64_t seed) {
  const int num_clients = static_cast<int>(shards.per_client.size());
  std::vector<int> pooled;
  for (const Shard& s : shards.per_client)
    pooled.insert(pooled.end(), s.train.begin(), s.train.end());
  std::sort(pooled.begin(), pooled.end());

  // Probe at the initial model and four random perturbations of it.
  const Model base = zero_model(ds.dim, ds.classes);
  std::vector<Model> probes = {base};
  for (int p = 0; p < 4; ++p) {
    Rng rng(seed, stream::kLambdaProbe, static_cast<std::uint64_t>(p));
    Model m = base;
    for (double& w : m.w) w = rng.normal(0.0, 0.5);
    probes.push_back(std::move(m));
  }

  std::vector<double> lambda(num_clients, 0.0);
  std::vector<double> g_global, g_k;
  for (const Model& m : probes) {
    loss_and_grad(m, ds, pooled, l2_reg, &g_global);
    for (int k = 0; k < num_clients; ++k) {
      loss_and_grad(m, ds, shards.per_client[k].train, l2_reg, &g_k);
      double sq = 0;
      for (std::size_t j = 0; j < g_k.size(); ++j) {
        const double diff = g_k[j] - g_global[j];
        sq += diff * diff;
      }
      lambda[k] = std::max(lambda[k], std::sqrt(sq));
    }
  }
  return lambda;
}

void dump_shards_csv(const Dataset& ds, const ClientShards& shards,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write shard dump: " + path);
  out << "client,role,sample,label";
  for (int j = 0; j < ds.dim; ++j) out << ",x" << j;
  out << "\n";
  auto emit = [&](int client, const char* role, const std::vector<int>& idx) {
    for (int i : idx) {
      out << client << "," << role << "," << i << "," << ds.y[i];
      for (int j = 0; j < ds.dim; ++j) out << "," << fmt_double(ds.row(i)[j]);
      out << "\n";
    }
  };
  emit(-1, "holdout", shards.server_holdout);
  for (std::size_t k = 0; k < shards.per_client.size(); ++k) {
    emit(static_cast<int>(k), "train", shards.per_client[k].train);
    emit(static_cast<int>(k), "test", shards.per_client[k].test);
  }
}

}  // namespace cosifl
