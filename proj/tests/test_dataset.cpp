#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "cosifl/dataset.hpp"
#include "cosifl/learner.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cosifl;

namespace {

DataConfig small_data() {
  DataConfig d;
  d.feature_dim = 4;
  d.num_classes = 4;
  d.samples_per_client = 150;
  d.noniid_p = 0.3;
  d.class_separation = 4.0;
  d.min_shard = 100;
  d.holdout_fraction = 0.1;
  d.test_fraction = 0.2;
  return d;
}

}  // namespace

TEST_CASE("dataset has the advertised shape and is seed-deterministic") {
  const DataConfig d = small_data();
  const Dataset a = make_dataset(d, 4, 7);
  CHECK(a.n == 4 * 150);
  CHECK(a.dim == 4);
  CHECK(a.classes == 4);
  CHECK(a.x.size() == static_cast<std::size_t>(a.n) * a.dim);
  CHECK(a.y.size() == static_cast<std::size_t>(a.n));
  for (int y : a.y) {
    CHECK(y >= 0);
    CHECK(y < 4);
  }

  const Dataset b = make_dataset(d, 4, 7);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  const Dataset c = make_dataset(d, 4, 8);
  CHECK(a.x != c.x);
}

TEST_CASE("class means are separated as configured") {
  DataConfig d = small_data();
  d.samples_per_client = 2000;
  const Dataset ds = make_dataset(d, 2, 3);
  // Empirical means of neighbouring classes in the first two dims should sit
  // ~class_separation apart (chord distance on the circle of means).
  std::vector<double> mx(d.num_classes, 0), my(d.num_classes, 0);
  std::vector<int> cnt(d.num_classes, 0);
  for (int i = 0; i < ds.n; ++i) {
    mx[ds.y[i]] += ds.row(i)[0];
    my[ds.y[i]] += ds.row(i)[1];
    ++cnt[ds.y[i]];
  }
  for (int c = 0; c < d.num_classes; ++c) {
    REQUIRE(cnt[c] > 0);
    mx[c] /= cnt[c];
    my[c] /= cnt[c];
  }
  const int next = 1;
  const double dist = std::hypot(mx[0] - mx[next], my[0] - my[next]);
  CHECK(dist == doctest::Approx(4.0).epsilon(0.1));
  // A separable mixture must be nearly linearly separable: the pooled model
  // trained briefly should clear 90%.
  std::vector<int> all(ds.n);
  std::iota(all.begin(), all.end(), 0);
  const Model m = train_pooled(zero_model(ds.dim, ds.classes), ds, all,
                               /*steps=*/150, /*eta=*/0.5, /*l2=*/0.0);
  CHECK(accuracy(m, ds, all) > 0.9);
}

TEST_CASE("sharding partitions every sample exactly once") {
  const DataConfig d = small_data();
  const int K = 5;
  const Dataset ds = make_dataset(d, K, 11);
  const ClientShards sh = shard_dataset(ds, d, K, 11);

  CHECK(static_cast<int>(sh.per_client.size()) == K);
  CHECK(static_cast<int>(sh.server_holdout.size()) ==
        std::llround(d.holdout_fraction * ds.n));

  std::vector<int> seen(ds.n, 0);
  for (int i : sh.server_holdout) ++seen[i];
  for (const Shard& s : sh.per_client) {
    for (int i : s.train) ++seen[i];
    for (int i : s.test) ++seen[i];
    // Every client must hold at least min_shard samples, with a test split
    // big enough to estimate accuracy from.
    CHECK(static_cast<int>(s.train.size() + s.test.size()) >= d.min_shard);
    CHECK(static_cast<int>(s.test.size()) >= 20);
    CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    CHECK(std::is_sorted(s.test.begin(), s.test.end()));
  }
  for (int c : seen) CHECK(c == 1);

  // Deterministic under the same seed.
  const ClientShards sh2 = shard_dataset(ds, d, K, 11);
  CHECK(sh2.server_holdout == sh.server_holdout);
  for (int k = 0; k < K; ++k) {
    CHECK(sh2.per_client[k].train == sh.per_client[k].train);
    CHECK(sh2.per_client[k].test == sh.per_client[k].test);
  }
}

TEST_CASE("full label concentration sends each class to its home client") {
  DataConfig d = small_data();
  d.noniid_p = 1.0;  // every sample goes to its label's home group
  const int K = 4;   // one home client per class: k mod 4 == label
  const Dataset ds = make_dataset(d, K, 5);
  const ClientShards sh = shard_dataset(ds, d, K, 5);
  for (int k = 0; k < K; ++k) {
    for (int i : sh.per_client[k].train) CHECK(ds.y[i] == k);
    for (int i : sh.per_client[k].test) CHECK(ds.y[i] == k);
  }
}

TEST_CASE("uniform sharding spreads labels evenly") {
  DataConfig d = small_data();
  d.noniid_p = 0.0;
  d.samples_per_client = 400;
  const int K = 4;
  const Dataset ds = make_dataset(d, K, 9);
  const ClientShards sh = shard_dataset(ds, d, K, 9);
  for (int k = 0; k < K; ++k) {
    std::vector<int> cnt(d.num_classes, 0);
    int total = 0;
    for (int i : sh.per_client[k].train) {
      ++cnt[ds.y[i]];
      ++total;
    }
    for (int c : cnt)
      CHECK(c / static_cast<double>(total) ==
            doctest::Approx(0.25).epsilon(0.35));
  }
}

TEST_CASE("infeasible shard floors are reported, not silently shrunk") {
  DataConfig d = small_data();
  d.samples_per_client = 110;  // 5*110 = 550 total, holdout 55; 495 for 5
  d.min_shard = 120;           // clients of >= 120 each is impossible
  const Dataset ds = make_dataset(d, 5, 3);
  CHECK_THROWS_AS((void)shard_dataset(ds, d, 5, 3), ProtocolError);
}

TEST_CASE("divergence estimate is zero for identical shards") {
  const DataConfig d = small_data();
  const Dataset ds = make_dataset(d, 2, 13);
  std::vector<int> all(ds.n);
  std::iota(all.begin(), all.end(), 0);
  // Two clients holding the full pool each: per-client and pooled gradients
  // coincide at every probe, so the divergence must vanish identically.
  ClientShards same;
  same.per_client.resize(2);
  same.per_client[0].train = all;
  same.per_client[1].train = all;
  const std::vector<double> lam = estimate_lambda(ds, same, 0.01, 13);
  REQUIRE(lam.size() == 2);
  CHECK(lam[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lam[1] == doctest::Approx(0.0).epsilon(1e-12));

  // Disjoint label-skewed shards must diverge measurably.
  DataConfig skew = d;
  skew.noniid_p = 1.0;
  const Dataset ds4 = make_dataset(skew, 4, 13);
  const ClientShards sh = shard_dataset(ds4, skew, 4, 13);
  const std::vector<double> lam4 = estimate_lambda(ds4, sh, 0.01, 13);
  for (double l : lam4) CHECK(l > 0.1);
}

TEST_CASE("shard dump lists one row per sample") {
  const DataConfig d = small_data();
  const Dataset ds = make_dataset(d, 3, 4);
  const ClientShards sh = shard_dataset(ds, d, 3, 4);
  const auto dir = testutil::scratch_dir("shard_dump");
  const std::string path = (dir / "shards.csv").string();
  dump_shards_csv(ds, sh, path);
  const std::string text = testutil::slurp(path);
  const std::size_t rows = std::count(text.begin(), text.end(), '\n');
  CHECK(rows == static_cast<std::size_t>(ds.n) + 1);  // header + samples
  CHECK(text.rfind("client,role,sample,label", 0) == 0);
}
