#pragma once
#include <vector>

#include "cosifl/config.hpp"
#include "cosifl/dataset.hpp"
#include "cosifl/rng.hpp"

namespace cosifl {

// Multinomial softmax regression on a flat parameter vector. Parameters are
// class-major blocks of (dim + 1) with the bias last in each block, so the
// whole model is one vector and update deltas are plain vector arithmetic.
struct Model {
  int dim = 0;
  int classes = 0;
  std::vector<double> w;  // classes * (dim + 1)

  int size() const { return classes * (dim + 1); }
};

Model zero_model(int dim, int classes);

// probs must hold `classes` doubles. Max-subtracted for stability.
void softmax_probs(const Model& m, const double* x, double* probs);

// argmax class; ties resolve to the lower class index.
int predict_class(const Model& m, const double* x);

// Mean cross-entropy over idx plus (l2/2)*||w||^2 (bias included — the ridge
// term is what makes the objective strongly convex in every coordinate).
// When grad is non-null it receives the exact analytic gradient.
double loss_and_grad(const Model& m, const Dataset& ds,
                     const std::vector<int>& idx, double l2_reg,
                     std::vector<double>* grad);

double accuracy(const Model& m, const Dataset& ds, const std::vector<int>& idx);

// In-place L2 clipping: g *= 1 / max(1, ||g||/clip). No-op on zero gradients.
void clip_gradient(std::vector<double>& g, double clip);

// Per-step Gaussian noise scale for the local privacy budget:
//   sigma = 2*sqrt(2*ln(1.25/delta)) * eta * clip * rounds / (batch * eps).
double noise_scale(double eta, double clip, int rounds, int batch,
                   double epsilon, double delta);

struct LocalTrainResult {
  Model model;                // trained local model
  std::vector<double> delta;  // model - start, the uploaded update
};

// Minibatch SGD over the client's training indices: `epochs` passes, each on a
// fresh without-replacement shuffle, batch size `batch` (final short batch
// included). With dp.enabled every batch gradient is clipped to dp.clip and
// perturbed with N(0, (sigma*clip)^2) per coordinate before the step.
LocalTrainResult local_train(const Model& start, const Dataset& ds,
                             const std::vector<int>& train_idx, int batch,
                             const TrainingConfig& tc, const DpConfig& dp,
                             double sigma, Rng& rng);

// Full-batch gradient descent for `steps` iterations (calibration runs).
Model train_pooled(const Model& start, const Dataset& ds,
                   const std::vector<int>& idx, int steps, double eta,
                   double l2_reg);

// Nesterov-accelerated descent to ||grad||_2 <= tol. Needs l2_reg > 0 for a
// bounded minimizer; throws ProtocolError otherwise or if max_iters runs out.
Model find_optimum(const Dataset& ds, const std::vector<int>& idx,
                   double l2_reg, double tol, int max_iters = 400000);

}  // namespace cosifl
