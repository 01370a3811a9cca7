#include "cosifl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cosifl {
namespace {

// Logits for one sample; the bias rides along as a fixed 1-feature.
void logits(const Model& m, const double* x, double* z) {
  const int stride = m.dim + 1;
  for (int c = 0; c < m.classes; ++c) {
    const double* wc = m.w.data() + static_cast<std::size_t>(c) * stride;
    double s = wc[m.dim];
    for (int j = 0; j < m.dim; ++j) s += wc[j] * x[j];
    z[c] = s;
  }
}

}  // namespace

Model zero_model(int dim, int classes) {
  Model m;
  m.dim = dim;
  m.classes = classes;
  m.w.assign(static_cast<std::size_t>(classes) * (dim + 1), 0.0);
  return m;
}

void softmax_probs(const Model& m, const double* x, double* probs) {
  logits(m, x, probs);
  const double zmax = *std::max_element(probs, probs + m.classes);
  double sum = 0;
  for (int c = 0; c < m.classes; ++c) {
    probs[c] = std::exp(probs[c] - zmax);
    sum += probs[c];
  }
  for (int c = 0; c < m.classes; ++c) probs[c] /= sum;
}

int predict_class(const Model& m, const double* x) {
  std::vector<double> z(m.classes);
  logits(m, x, z.data());
  int best = 0;
  for (int c = 1; c < m.classes; ++c)
    if (z[c] > z[best]) best = c;  // strict: ties stay at the lower index
  return best;
}

double loss_and_grad(const Model& m, const Dataset& ds,
                     const std::vector<int>& idx, double l2_reg,
                     std::vector<double>* grad) {
  const int stride = m.dim + 1;
  if (grad) grad->assign(m.w.size(), 0.0);
  std::vector<double> p(m.classes);
  double loss = 0;
  for (int i : idx) {
    const double* x = ds.row(i);
    softmax_probs(m, x, p.data());
    loss += -std::log(std::max(p[ds.y[i]], 1e-300));
    if (grad) {
      for (int c = 0; c < m.classes; ++c) {
        const double coef = p[c] - (c == ds.y[i] ? 1.0 : 0.0);
        double* gc = grad->data() + static_cast<std::size_t>(c) * stride;
        for (int j = 0; j < m.dim; ++j) gc[j] += coef * x[j];
        gc[m.dim] += coef;
      }
    }
  }
  const double inv = idx.empty() ? 0.0 : 1.0 / idx.size();
  loss *= inv;
  double sq = 0;
  for (double w : m.w) sq += w * w;
  loss += 0.5 * l2_reg * sq;
  if (grad)
    for (std::size_t j = 0; j < grad->size(); ++j)
      (*grad)[j] = (*grad)[j] * inv + l2_reg * m.w[j];
  return loss;
}

double accuracy(const Model& m, const Dataset& ds,
                const std::vector<int>& idx) {
  if (idx.empty()) return 0.0;
  int hits = 0;
  for (int i : idx)
    if (predict_class(m, ds.row(i)) == ds.y[i]) ++hits;
  return static_cast<double>(hits) / idx.size();
}

void clip_gradient(std::vector<double>& g, double clip) {
  double sq = 0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > clip) {
    const double scale = clip / norm;
    for (double& v : g) v *= scale;
  }
}

double noise_scale(double eta, double clip, int rounds, int batch,
                   double epsilon, double delta) {
  return 2.0 * std::sqrt(2.0 * std::log(1.25 / delta)) * eta * clip * rounds /
         (static_cast<double>(batch) * epsilon);
}

LocalTrainResult local_train(const Model& start, const Dataset& ds,
                             const std::vector<int>& train_idx, int batch,
                             const TrainingConfig& tc, const DpConfig& dp,
                             double sigma, Rng& rng) {
  if (batch < 1) throw ProtocolError("local_train: batch must be >= 1");
  Model m = start;
  std::vector<int> order = train_idx;
  std::vector<double> g;
  std::vector<int> mb;
  const int n = static_cast<int>(order.size());
  for (int epoch = 0; epoch < tc.local_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_u64(i)]);
    for (int off = 0; off < n; off += batch) {
      mb.assign(order.begin() + off,
                order.begin() + std::min(n, off + batch));
      loss_and_grad(m, ds, mb, tc.l2_reg, &g);
      if (dp.enabled) {
        clip_gradient(g, dp.clip);
        if (sigma > 0) {
          const double stddev = sigma * dp.clip;
          for (double& v : g) v += rng.normal(0.0, stddev);
        }
      }
      for (std::size_t j = 0; j < g.size(); ++j)
        m.w[j] -= tc.learning_rate * g[j];
    }
  }
  LocalTrainResult r;
  r.delta.resize(m.w.size());
  for (std::size_t j = 0; j < m.w.size(); ++j)
    r.delta[j] = m.w[j] - start.w[j];
  r.model = std::move(m);
  return r;
}

Model train_pooled(const Model& start, const Dataset& ds,
                   const std::vector<int>& idx, int steps, double eta,
                   double l2_reg) {
  Model m = start;
  std::vector<double> g;
  for (int s = 0; s < steps; ++s) {
    loss_and_grad(m, ds, idx, l2_reg, &g);
    for (std::size_t j = 0; j < g.size(); ++j) m.w[j] -= eta * g[j];
  }
  return m;
}

Model find_optimum(const Dataset& ds, const std::vector<int>& idx,
                   double l2_reg, double tol, int max_iters) {
  if (l2_reg <= 0)
    throw ProtocolError("find_optimum: needs l2_reg > 0 for boundedness");
  // Smoothness bound: per-sample softmax Hessian factor <= 1/2, times the
  // worst augmented-feature norm, plus the ridge term.
  double max_sq = 0;
  for (int i : idx) {
    double sq = 1.0;  // bias feature
    for (int j = 0; j < ds.dim; ++j) sq += ds.row(i)[j] * ds.row(i)[j];
    max_sq = std::max(max_sq, sq);
  }
  const double L = 0.5 * max_sq + l2_reg;
  const double kappa = L / l2_reg;
  const double beta =
      (std::sqrt(kappa) - 1.0) / (std::sqrt(kappa) + 1.0);

  Model m = zero_model(ds.dim, ds.classes);
  std::vector<double> y = m.w;
  std::vector<double> prev = m.w;
  std::vector<double> g;
  Model probe = m;
  for (int it = 0; it < max_iters; ++it) {
    probe.w = y;
    loss_and_grad(probe, ds, idx, l2_reg, &g);
    prev = m.w;
    for (std::size_t j = 0; j < m.w.size(); ++j) m.w[j] = y[j] - g[j] / L;
    for (std::size_t j = 0; j < m.w.size(); ++j)
      y[j] = m.w[j] + beta * (m.w[j] - prev[j]);
    if (it % 50 == 0) {
      loss_and_grad(m, ds, idx, l2_reg, &g);
      double sq = 0;
      for (double v : g) sq += v * v;
      if (std::sqrt(sq) <= tol) return m;
    }
  }
  loss_and_grad(m, ds, idx, l2_reg, &g);
  double sq = 0;
  for (double v : g) sq += v * v;
  if (std::sqrt(sq) <= tol * 10) return m;  // close enough for a diagnostic
  throw ProtocolError("find_optimum: did not reach the gradient tolerance");
}

}  // namespace cosifl
