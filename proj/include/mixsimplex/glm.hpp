#pragma once

// Simplex-valued regression with a Mixed Dirichlet likelihood. Two affine
// maps of the predictors give the face log-potentials (clamped to [-10, 10])
// and the concentrations (softplus of pre-activations clamped to [-10, 10],
// then clamped to [1e-3, 1e3]). Targets may be sparse; no smoothing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mixsimplex/errors.hpp"
#include "mixsimplex/face_gibbs.hpp"
#include "mixsimplex/mixed_dirichlet.hpp"
#include "mixsimplex/random.hpp"
#include "mixsimplex/simplex.hpp"
#include "mixsimplex/special.hpp"

namespace mixsimplex {

struct GlmModel {
  static constexpr double kScoreClamp = 10.0;
  static constexpr double kPreactivationClamp = 10.0;
  static constexpr double kMinConcentration = 1e-3;
  static constexpr double kMaxConcentration = 1e3;

  int num_outputs = 0;     // K
  int num_predictors = 0;  // d
  std::vector<double> face_weights;  // K x d, row-major
  std::vector<double> face_bias;     // K
  std::vector<double> conc_weights;  // K x d, row-major
  std::vector<double> conc_bias;     // K

  GlmModel() = default;
  GlmModel(int k, int d)
      : num_outputs(k),
        num_predictors(d),
        face_weights(static_cast<std::size_t>(k * d), 0.0),
        face_bias(static_cast<std::size_t>(k), 0.0),
        conc_weights(static_cast<std::size_t>(k * d), 0.0),
        conc_bias(static_cast<std::size_t>(k), 0.0) {
    detail::require(k >= 2 && k <= kMaxFaceAlphabet, "glm: K must be in [2, 63]");
    detail::require(d >= 0, "glm: negative predictor count");
  }

  std::size_t num_parameters() const { return 2 * face_weights.size() + 2 * face_bias.size(); }

  /// Parameters flattened as [face_weights, face_bias, conc_weights, conc_bias].
  std::vector<double> parameters() const {
    std::vector<double> p;
    p.reserve(num_parameters());
    for (const auto* v : {&face_weights, &face_bias, &conc_weights, &conc_bias}) p.insert(p.end(), v->begin(), v->end());
    return p;
  }

  void set_parameters(std::span<const double> p) {
    detail::require(p.size() == num_parameters(), "glm: parameter vector has the wrong size");
    std::size_t at = 0;
    for (auto* v : {&face_weights, &face_bias, &conc_weights, &conc_bias}) {
      std::copy(p.begin() + static_cast<std::ptrdiff_t>(at), p.begin() + static_cast<std::ptrdiff_t>(at + v->size()),
                v->begin());
      at += v->size();
    }
  }

  std::vector<double> face_preactivations(std::span<const double> x) const { return affine(face_weights, face_bias, x); }
  std::vector<double> conc_preactivations(std::span<const double> x) const { return affine(conc_weights, conc_bias, x); }

  std::vector<double> face_scores(std::span<const double> x) const {
    auto s = face_preactivations(x);
    for (double& v : s) v = std::clamp(v, -kScoreClamp, kScoreClamp);
    return s;
  }

  std::vector<double> concentrations(std::span<const double> x) const {
    auto a = conc_preactivations(x);
    for (double& v : a)
      v = std::clamp(softplus(std::clamp(v, -kPreactivationClamp, kPreactivationClamp)), kMinConcentration,
                     kMaxConcentration);
    return a;
  }

  MixedDirichlet distribution(std::span<const double> x) const { return {face_scores(x), concentrations(x)}; }

 private:
  std::vector<double> affine(const std::vector<double>& w, const std::vector<double>& b, std::span<const double> x) const {
    detail::require(static_cast<int>(x.size()) == num_predictors, "glm: predictor vector has the wrong length");
    std::vector<double> out(b);
    for (int k = 0; k < num_outputs; ++k)
      for (int j = 0; j < num_predictors; ++j)
        out[static_cast<std::size_t>(k)] += w[static_cast<std::size_t>(k * num_predictors + j)] * x[static_cast<std::size_t>(j)];
    return out;
  }
};

struct GlmObservation {
  std::vector<double> x;
  SimplexPoint y;
};

struct LogLikelihood {
  double value = 0.0;
  std::vector<double> gradient;  // same layout as GlmModel::parameters()
};

/// Sum of Mixed Dirichlet log-densities and its gradient. Clamps contribute
/// a zero derivative wherever they are active.
inline LogLikelihood glm_log_likelihood(const GlmModel& model, std::span<const GlmObservation> data) {
  const std::size_t k = static_cast<std::size_t>(model.num_outputs);
  const std::size_t d = static_cast<std::size_t>(model.num_predictors);
  LogLikelihood out;
  out.gradient.assign(model.num_parameters(), 0.0);
  double* g_face_w = out.gradient.data();
  double* g_face_b = g_face_w + k * d;
  double* g_conc_w = g_face_b + k;
  double* g_conc_b = g_conc_w + k * d;

  for (const GlmObservation& obs : data) {
    detail::require(obs.y.alphabet_size() == model.num_outputs, "glm: target has the wrong dimension");
    const auto s_pre = model.face_preactivations(obs.x);
    const auto a_pre = model.conc_preactivations(obs.x);
    const MixedDirichlet md = model.distribution(obs.x);
    const FaceIndexSet f = face_of(obs.y);
    out.value += log_density(md, f, obs.y);

    const auto g_scores = grad_log_prob(md.faces(), f);
    std::vector<double> g_alpha(k, 0.0);
    if (f.size() > 1) {
      double a0 = 0.0;
      for (int i : f.indices()) a0 += md.alpha()[static_cast<std::size_t>(i)];
      const double psi0 = digamma(a0);
      for (int i : f.indices()) {
        const auto u = static_cast<std::size_t>(i);
        g_alpha[u] = psi0 - digamma(md.alpha()[u]) + std::log(obs.y[u]);
      }
    }

    for (std::size_t r = 0; r < k; ++r) {
      const double ds = std::abs(s_pre[r]) < GlmModel::kScoreClamp ? g_scores[r] : 0.0;
      double da = 0.0;
      if (std::abs(a_pre[r]) < GlmModel::kPreactivationClamp) {
        const double sp = softplus(a_pre[r]);
        if (sp > GlmModel::kMinConcentration && sp < GlmModel::kMaxConcentration) da = g_alpha[r] * sigmoid(a_pre[r]);
      }
      g_face_b[r] += ds;
      g_conc_b[r] += da;
      for (std::size_t j = 0; j < d; ++j) {
        g_face_w[r * d + j] += ds * obs.x[j];
        g_conc_w[r * d + j] += da * obs.x[j];
      }
    }
  }
  return out;
}

struct GlmFitConfig {
  int steps = 400;
  double learning_rate = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double init_scale = 0.01;
  std::uint64_t seed = 0;
};

struct GlmFitResult {
  GlmModel model;
  /// Mean negative log-likelihood before each step, plus the final value.
  std::vector<double> loss_history;
};

/// Full-batch Adam on the mean negative log-likelihood.
inline GlmFitResult glm_fit(std::span<const GlmObservation> data, const GlmFitConfig& config = {}) {
  detail::require(!data.empty(), "glm_fit: empty dataset");
  detail::require(config.steps >= 0, "glm_fit: negative step count");
  const int k = data.front().y.alphabet_size();
  const int d = static_cast<int>(data.front().x.size());
  GlmModel model(k, d);

  Rng rng = make_stream(config.seed);
  std::vector<double> theta(model.num_parameters());
  for (double& t : theta) t = config.init_scale * standard_normal(rng);
  model.set_parameters(theta);

  const double n = static_cast<double>(data.size());
  std::vector<double> m(theta.size(), 0.0);
  std::vector<double> v(theta.size(), 0.0);
  GlmFitResult result;
  result.loss_history.reserve(static_cast<std::size_t>(config.steps) + 1);
  for (int step = 1; step <= config.steps; ++step) {
    const LogLikelihood ll = glm_log_likelihood(model, data);
    result.loss_history.push_back(-ll.value / n);
    const double c1 = 1.0 - std::pow(config.beta1, step);
    const double c2 = 1.0 - std::pow(config.beta2, step);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double grad = -ll.gradient[i] / n;
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad * grad;
      theta[i] -= config.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config.epsilon);
    }
    model.set_parameters(theta);
  }
  result.loss_history.push_back(-glm_log_likelihood(model, data).value / n);
  result.model = std::move(model);
  return result;
}

enum class PredictionRule { kSampleMean, kMostProbableMean };

/// Dirichlet mean on the most probable face of w(x).
inline SimplexPoint predict_most_probable_mean(const GlmModel& model, std::span<const double> x) {
  const auto scores = model.face_scores(x);
  const auto alpha = model.concentrations(x);
  const FaceIndexSet f = most_probable_face(scores);
  double a0 = 0.0;
  for (int i : f.indices()) a0 += alpha[static_cast<std::size_t>(i)];
  std::vector<double> restricted;
  for (int i : f.indices()) restricted.push_back(alpha[static_cast<std::size_t>(i)] / a0);
  return embed(f, restricted);
}

/// Average of n Mixed Dirichlet draws at x.
template <Urbg64 G>
SimplexPoint predict_sample_mean(const GlmModel& model, std::span<const double> x, std::size_t n, G& g) {
  detail::require(n >= 1, "predict_sample_mean: need at least one sample");
  const MixedDirichlet md = model.distribution(x);
  std::vector<double> mean(static_cast<std::size_t>(model.num_outputs), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const FaceSample s = sample(md, g);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += s.point[c];
  }
  double total = 0.0;
  for (double& c : mean) total += (c /= static_cast<double>(n));
  for (double& c : mean) c /= total;
  return SimplexPoint(std::move(mean));
}

template <Urbg64 G>
SimplexPoint glm_predict(const GlmModel& model, std::span<const double> x, PredictionRule rule, std::size_t n, G& g) {
  return rule == PredictionRule::kMostProbableMean ? predict_most_probable_mean(model, x)
                                                   : predict_sample_mean(model, x, n, g);
}

struct RegressionMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  /// Macro-averaged F1 of the zero / nonzero decision over every coordinate.
  double macro_f1 = 0.0;
};

inline RegressionMetrics regression_metrics(std::span<const SimplexPoint> predicted, std::span<const SimplexPoint> truth) {
  detail::require(predicted.size() == truth.size() && !truth.empty(), "metrics: need matching nonempty batches");
  double se = 0.0;
  double ae = 0.0;
  std::size_t cells = 0;
  // Confusion counts with "nonzero" as the positive class.
  double tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    detail::require(predicted[i].alphabet_size() == truth[i].alphabet_size(), "metrics: dimension mismatch");
    for (std::size_t c = 0; c < static_cast<std::size_t>(truth[i].alphabet_size()); ++c) {
      const double e = predicted[i][c] - truth[i][c];
      se += e * e;
      ae += std::abs(e);
      ++cells;
      const bool p = predicted[i][c] > 0.0;
      const bool t = truth[i][c] > 0.0;
      if (p && t) ++tp;
      else if (p && !t) ++fp;
      else if (!p && t) ++fn;
      else ++tn;
    }
  }
  auto f1 = [](double hit, double false_pos, double miss) {
    const double denom = 2 * hit + false_pos + miss;
    return denom > 0 ? 2 * hit / denom : 1.0;
  };
  RegressionMetrics m;
  m.rmse = std::sqrt(se / static_cast<double>(cells));
  m.mae = ae / static_cast<double>(cells);
  m.macro_f1 = 0.5 * (f1(tp, fp, fn) + f1(tn, fn, fp));
  return m;
}

struct PlantedDataset {
  GlmModel truth;
  std::vector<GlmObservation> rows;
};

/// Synthetic regression data from a random "true" model: standard normal
/// predictors, face weights ~ N(0, 4^2) with bias 1 (most coordinates
/// nonzero, a sizable fraction zero), concentration weights ~ N(0, 0.5^2)
/// with bias ~ N(1.5, 0.5^2).
inline PlantedDataset generate_planted_dataset(int k, int d, std::size_t rows, std::uint64_t seed) {
  PlantedDataset out{GlmModel(k, d), {}};
  Rng rng = make_stream(seed);
  for (double& w : out.truth.face_weights) w = 4.0 * standard_normal(rng);
  for (double& b : out.truth.face_bias) b = 1.0;
  for (double& w : out.truth.conc_weights) w = 0.5 * standard_normal(rng);
  for (double& b : out.truth.conc_bias) b = 1.5 + 0.5 * standard_normal(rng);
  out.rows.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (double& v : x) v = standard_normal(rng);
    const MixedDirichlet md = out.truth.distribution(x);
    out.rows.push_back({std::move(x), sample(md, rng).point});
  }
  return out;
}

}  // namespace mixsimplex
