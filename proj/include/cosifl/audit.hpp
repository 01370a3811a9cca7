#pragma once
#include <cstdint>
#include <utility>
#include <vector>

#include "cosifl/learner.hpp"

namespace cosifl {

// Post-hoc privacy auditing: membership-inference attacks against a trained
// model, plus the analytic convergence bound logged as a diagnostic.

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0)..(1,1)
  double auc = 0;                                 // trapezoidal
};

// Members are the positive class; a sample is predicted "member" when its
// score clears the threshold, swept over every distinct score. Ties are
// grouped, so negating all scores maps auc to 1 - auc exactly.
RocCurve roc_from_scores(const std::vector<double>& member_scores,
                         const std::vector<double>& non_member_scores);

// Score = the model's top softmax confidence on the sample.
RocCurve mia_threshold(const Model& m, const Dataset& ds,
                       const std::vector<int>& members,
                       const std::vector<int>& non_members);

// Learned attack: per-sample features (top confidence, cross-entropy loss,
// prediction entropy) feed a two-class logistic head trained on half of each
// pool and scored on the held-back half.
RocCurve mia_logistic(const Model& m, const Dataset& ds,
                      const std::vector<int>& members,
                      const std::vector<int>& non_members, std::uint64_t seed);

// Analytic bound on the expected squared distance to the optimum after
// `rounds` rounds:
//   exp(-1) * r0 + 2 * lambda_bar * sqrt(r0) / mu
//   + (grad_bound^2 + (dim / n_benign^2) * sum sigma_k^2) / (mu^2 * rounds).
double convergence_bound(double mu, double grad_bound, double r0,
                         double lambda_bar, const std::vector<double>& sigmas,
                         int n_benign, int dim, int rounds);

}  // namespace cosifl
