#include "cosifl/audit.hpp"

#include <algorithm>
#include <cmath>

#include "cosifl/errors.hpp"
#include "cosifl/rng.hpp"

namespace cosifl {

RocCurve roc_from_scores(const std::vector<double>& member_scores,
                         const std::vector<double>& non_member_scores) {
  if (member_scores.empty() || non_member_scores.empty())
    throw ProtocolError("roc_from_scores: both score pools must be non-empty");

  struct Tagged { double score; bool member; };
  std::vector<Tagged> all;
  all.reserve(member_scores.size() + non_member_scores.size());
  for (double s : member_scores) all.push_back({s, true});
  for (double s : non_member_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) {
    return a.score > b.score;
  });

  RocCurve roc;
  roc.points.emplace_back(0.0, 0.0);
  const double np = static_cast<double>(member_scores.size());
  const double nn = static_cast<double>(non_member_scores.size());
  double tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < all.size()) {
    const double s = all[i].score;
    for (; i < all.size() && all[i].score == s; ++i)
      (all[i].member ? tp : fp) += 1;  // whole tie group moves together
    roc.points.emplace_back(fp / nn, tp / np);
  }
  for (std::size_t k = 1; k < roc.points.size(); ++k) {
    const auto& [x0, y0] = roc.points[k - 1];
    const auto& [x1, y1] = roc.points[k];
    roc.auc += 0.5 * (x1 - x0) * (y1 + y0);
  }
  return roc;
}

namespace {

struct SampleStats {
  double confidence;  // top softmax probability
  double loss;        // cross-entropy against the recorded label
  double entropy;     // of the softmax distribution
};

SampleStats stats_for(const Model& m, const Dataset& ds, int i) {
  std::vector<double> p(m.classes);
  softmax_probs(m, ds.row(i), p.data());
  SampleStats s{};
  s.confidence = *std::max_element(p.begin(), p.end());
  s.loss = -std::log(std::max(p[ds.y[i]], 1e-300));
  for (double v : p)
    if (v > 0) s.entropy -= v * std::log(v);
  return s;
}

}  // namespace

RocCurve mia_threshold(const Model& m, const Dataset& ds,
                       const std::vector<int>& members,
                       const std::vector<int>& non_members) {
  std::vector<double> ms, ns;
  ms.reserve(members.size());
  ns.reserve(non_members.size());
  for (int i : members) ms.push_back(stats_for(m, ds, i).confidence);
  for (int i : non_members) ns.push_back(stats_for(m, ds, i).confidence);
  return roc_from_scores(ms, ns);
}

RocCurve mia_logistic(const Model& m, const Dataset& ds,
                      const std::vector<int>& members,
                      const std::vector<int>& non_members,
                      std::uint64_t seed) {
  if (members.size() < 4 || non_members.size() < 4)
    throw ProtocolError("mia_logistic: pools too small to split");

  // Attacker's dataset: one 3-feature row per sample, label = membership.
  Dataset feat;
  feat.dim = 3;
  feat.classes = 2;
  feat.n = static_cast<int>(members.size() + non_members.size());
  feat.x.resize(static_cast<std::size_t>(feat.n) * 3);
  feat.y.resize(feat.n);
  int row = 0;
  auto add = [&](const std::vector<int>& pool, int label) {
    for (int i : pool) {
      const SampleStats s = stats_for(m, ds, i);
      feat.x[row * 3 + 0] = s.confidence;
      feat.x[row * 3 + 1] = s.loss;
      feat.x[row * 3 + 2] = s.entropy;
      feat.y[row] = label;
      ++row;
    }
  };
  add(members, 1);
  add(non_members, 0);

  // Half of each pool trains the attacker, the other half is scored.
  Rng rng(seed, stream::kAuditModel);
  auto split = [&](int begin, int count, std::vector<int>& train,
                   std::vector<int>& eval) {
    std::vector<int> idx(count);
    for (int i = 0; i < count; ++i) idx[i] = begin + i;
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.uniform_u64(i)]);
    const int half = count / 2;
    train.insert(train.end(), idx.begin(), idx.begin() + half);
    eval.insert(eval.end(), idx.begin() + half, idx.end());
  };
  std::vector<int> train, eval;
  split(0, static_cast<int>(members.size()), train, eval);
  split(static_cast<int>(members.size()),
        static_cast<int>(non_members.size()), train, eval);

  // Standardize features on the attacker's training half.
  double mean[3] = {0, 0, 0}, var[3] = {0, 0, 0};
  for (int i : train)
    for (int j = 0; j < 3; ++j) mean[j] += feat.x[i * 3 + j];
  for (int j = 0; j < 3; ++j) mean[j] /= train.size();
  for (int i : train)
    for (int j = 0; j < 3; ++j) {
      const double d = feat.x[i * 3 + j] - mean[j];
      var[j] += d * d;
    }
  for (int j = 0; j < 3; ++j)
    var[j] = std::sqrt(var[j] / train.size()) + 1e-12;
  for (int i = 0; i < feat.n; ++i)
    for (int j = 0; j < 3; ++j)
      feat.x[i * 3 + j] = (feat.x[i * 3 + j] - mean[j]) / var[j];

  const Model head = train_pooled(zero_model(3, 2), feat, train,
                                  /*steps=*/600, /*eta=*/0.5, /*l2=*/1e-3);

  std::vector<double> ms, ns;
  std::vector<double> p(2);
  for (int i : eval) {
    softmax_probs(head, feat.row(i), p.data());
    (feat.y[i] == 1 ? ms : ns).push_back(p[1]);
  }
  return roc_from_scores(ms, ns);
}

double convergence_bound(double mu, double grad_bound, double r0,
                         double lambda_bar, const std::vector<double>& sigmas,
                         int n_benign, int dim, int rounds) {
  if (mu <= 0) throw ProtocolError("convergence_bound: mu must be > 0");
  if (n_benign < 1)
    throw ProtocolError("convergence_bound: need a non-empty benign set");
  if (rounds < 1) throw ProtocolError("convergence_bound: rounds must be >= 1");
  double noise = 0;
  for (double s : sigmas) noise += s * s;
  return std::exp(-1.0) * r0 + 2.0 * lambda_bar * std::sqrt(r0) / mu +
         (grad_bound * grad_bound +
          static_cast<double>(dim) / (static_cast<double>(n_benign) * n_benign) *
              noise) /
             (mu * mu * rounds);
}

}  // namespace cosifl
