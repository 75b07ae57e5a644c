#pragma once

// Exponential-family distribution over the 2^K - 1 proper faces of the
// simplex,
//
//   P(f_I; w) = exp(<w, phi(f_I)> - log Z(w)),   phi_k(f_I) = +1 if k in I else -1,
//
// evaluated on a DAG with O(K) states in which every source-to-sink path
// spells out one nonempty index set. Forward/backward passes give log Z and
// E[phi]; the backward table drives exact ancestral sampling.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mixsimplex/errors.hpp"
#include "mixsimplex/random.hpp"
#include "mixsimplex/simplex.hpp"
#include "mixsimplex/special.hpp"

namespace mixsimplex {

/// State (level, b, s): after deciding vertices 1..level, b says whether
/// vertex `level` was included, s whether any vertex was included so far.
struct DagState {
  int level = 0;
  int b = 0;
  int s = 0;
  friend bool operator==(const DagState&, const DagState&) = default;
};

struct DagArc {
  std::size_t from = 0;
  std::size_t to = 0;
  /// Coordinate whose potential the arc carries, or -1 for arcs into the sink.
  int coordinate = -1;
  /// +1 when the destination includes the vertex, -1 when it excludes it.
  int sign = 0;
};

/// The face-lattice DAG for an alphabet of size K. States that lie on no
/// complete path ((1,0,1) and (K,0,0)) are omitted, so every state has a
/// path from the source and a path to the sink.
class FaceLatticeDag {
 public:
  explicit FaceLatticeDag(int alphabet_size) : k_(alphabet_size) {
    detail::require(alphabet_size >= 1, "face lattice: K must be positive");
    add_state({0, 0, 0});
    std::vector<std::size_t> previous{0};
    for (int level = 1; level <= k_; ++level) {
      std::vector<std::size_t> current;
      const std::size_t excl0 = level < k_ ? add_state({level, 0, 0}) : kNone;
      const std::size_t excl1 = level >= 2 ? add_state({level, 0, 1}) : kNone;
      const std::size_t incl = add_state({level, 1, 1});
      for (std::size_t u : previous) {
        arcs_.push_back({u, incl, level - 1, +1});
        const std::size_t excl = states_[u].s == 1 ? excl1 : excl0;
        if (excl != kNone) arcs_.push_back({u, excl, level - 1, -1});
      }
      for (std::size_t v : {excl0, excl1, incl})
        if (v != kNone) current.push_back(v);
      previous = std::move(current);
    }
    sink_ = add_state({k_ + 1, 0, 1});
    for (std::size_t u : previous)
      if (states_[u].s == 1) arcs_.push_back({u, sink_, -1, 0});
  }

  int alphabet_size() const { return k_; }
  std::span<const DagState> states() const { return states_; }
  /// Arcs sorted by the level of their origin (a topological order).
  std::span<const DagArc> arcs() const { return arcs_; }
  std::size_t source() const { return 0; }
  std::size_t sink() const { return sink_; }

  static double arc_weight(const DagArc& a, std::span<const double> w) {
    return a.coordinate < 0 ? 0.0 : a.sign * w[static_cast<std::size_t>(a.coordinate)];
  }

  /// Log-space forward values: log of the summed weight of all source-to-state paths.
  std::vector<double> forward(std::span<const double> w) const {
    std::vector<double> alpha(states_.size(), kNegInf);
    alpha[source()] = 0.0;
    for (const DagArc& a : arcs_) alpha[a.to] = log_add_exp(alpha[a.to], alpha[a.from] + arc_weight(a, w));
    return alpha;
  }

  /// Log-space backward values: log of the summed weight of all state-to-sink paths.
  std::vector<double> backward(std::span<const double> w) const {
    std::vector<double> beta(states_.size(), kNegInf);
    beta[sink()] = 0.0;
    for (auto it = arcs_.rbegin(); it != arcs_.rend(); ++it)
      beta[it->from] = log_add_exp(beta[it->from], beta[it->to] + arc_weight(*it, w));
    return beta;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::size_t add_state(DagState s) {
    states_.push_back(s);
    return states_.size() - 1;
  }

  int k_;
  std::vector<DagState> states_;
  std::vector<DagArc> arcs_;
  std::size_t sink_ = 0;
};

/// log Z(w) by the forward algorithm.
inline double log_normalizer(std::span<const double> w) {
  const FaceLatticeDag dag(static_cast<int>(w.size()));
  return dag.forward(w)[dag.sink()];
}

/// log(prod_k 2 cosh(w_k) - exp(-sum_k w_k)): every subset minus the empty one.
inline double log_normalizer_closed_form(std::span<const double> w) {
  double log_all = 0.0;
  double log_empty = 0.0;
  for (double v : w) {
    log_all += log_add_exp(v, -v);
    log_empty -= v;
  }
  return log_sub_exp(log_all, log_empty);
}

class GibbsFaceDistribution {
 public:
  explicit GibbsFaceDistribution(std::vector<double> w) : w_(std::move(w)), dag_(static_cast<int>(w_.size())) {
    detail::require(!w_.empty() && static_cast<int>(w_.size()) <= kMaxFaceAlphabet,
                    "gibbs: need 1 <= K <= 63 log-potentials");
    for (double v : w_) detail::require(std::isfinite(v), "gibbs: non-finite log-potential");
    const std::vector<double> alpha = dag_.forward(w_);
    beta_ = dag_.backward(w_);
    log_z_ = alpha[dag_.sink()];

    // E[phi_k] = P(k in F) - P(k not in F), each from its own marginal so
    // that neither side loses precision when the other is close to one.
    std::vector<double> log_in(w_.size(), kNegInf);
    std::vector<double> log_out(w_.size(), kNegInf);
    const auto states = dag_.states();
    for (std::size_t i = 0; i < states.size(); ++i) {
      const DagState& st = states[i];
      if (st.level < 1 || st.level > alphabet_size()) continue;
      auto& slot = st.b == 1 ? log_in : log_out;
      auto& cell = slot[static_cast<std::size_t>(st.level - 1)];
      cell = log_add_exp(cell, alpha[i] + beta_[i] - log_z_);
    }
    expected_phi_.resize(w_.size());
    for (std::size_t k = 0; k < w_.size(); ++k) expected_phi_[k] = std::exp(log_in[k]) - std::exp(log_out[k]);
  }

  int alphabet_size() const { return static_cast<int>(w_.size()); }
  std::span<const double> weights() const { return w_; }
  double log_normalizer() const { return log_z_; }
  /// E[phi(F)] = grad_w log Z(w).
  std::span<const double> expected_phi() const { return expected_phi_; }
  const FaceLatticeDag& dag() const { return dag_; }
  std::span<const double> backward_values() const { return beta_; }

 private:
  std::vector<double> w_;
  FaceLatticeDag dag_;
  std::vector<double> beta_;
  double log_z_ = 0.0;
  std::vector<double> expected_phi_;
};

inline std::vector<double> expected_suff_stats(std::span<const double> w) {
  const GibbsFaceDistribution d(std::vector<double>(w.begin(), w.end()));
  return {d.expected_phi().begin(), d.expected_phi().end()};
}

inline double face_score(std::span<const double> w, const FaceIndexSet& f) {
  double acc = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) acc += f.contains(static_cast<int>(k)) ? w[k] : -w[k];
  return acc;
}

inline double face_log_prob(const GibbsFaceDistribution& d, const FaceIndexSet& f) {
  detail::require(f.alphabet_size() == d.alphabet_size(), "face_log_prob: alphabet size mismatch");
  return face_score(d.weights(), f) - d.log_normalizer();
}

/// Ancestral sampling through the DAG. Consumes exactly K uniforms.
template <Urbg64 G>
FaceIndexSet sample_face(const GibbsFaceDistribution& d, G& g) {
  const FaceLatticeDag& dag = d.dag();
  const auto arcs = dag.arcs();
  const auto beta = d.backward_values();
  const auto w = d.weights();
  std::uint64_t mask = 0;
  std::size_t state = dag.source();
  std::size_t cursor = 0;  // arcs are grouped by origin in construction order
  while (state != dag.sink()) {
    while (arcs[cursor].from != state) ++cursor;
    std::size_t end = cursor;
    while (end < arcs.size() && arcs[end].from == state) ++end;
    std::size_t chosen = cursor;
    if (arcs[cursor].to != dag.sink()) {
      const double u = uniform01(g);
      double acc = 0.0;
      for (std::size_t a = cursor; a < end; ++a) {
        acc += std::exp(FaceLatticeDag::arc_weight(arcs[a], w) + beta[arcs[a].to] - beta[state]);
        chosen = a;
        if (u < acc) break;
      }
    }
    const DagArc& arc = arcs[chosen];
    if (arc.sign > 0) mask |= std::uint64_t{1} << arc.coordinate;
    state = arc.to;
    cursor = end;
  }
  return {mask, d.alphabet_size()};
}

/// H(F) = log Z(w) - <w, E[phi]>.
inline double entropy(const GibbsFaceDistribution& d) {
  double dot = 0.0;
  for (std::size_t k = 0; k < d.weights().size(); ++k) dot += d.weights()[k] * d.expected_phi()[k];
  return std::max(0.0, d.log_normalizer() - dot);
}

/// KL(P_w || P_v) = log Z(v) - log Z(w) - <v - w, E_w[phi]>.
inline double kl(const GibbsFaceDistribution& p, const GibbsFaceDistribution& q) {
  detail::require(p.alphabet_size() == q.alphabet_size(), "kl: alphabet size mismatch");
  double dot = 0.0;
  for (std::size_t k = 0; k < p.weights().size(); ++k)
    dot += (q.weights()[k] - p.weights()[k]) * p.expected_phi()[k];
  return std::max(0.0, q.log_normalizer() - p.log_normalizer() - dot);
}

/// d/dw log P(f; w) = phi(f) - E[phi].
inline std::vector<double> grad_log_prob(const GibbsFaceDistribution& d, const FaceIndexSet& f) {
  detail::require(f.alphabet_size() == d.alphabet_size(), "grad_log_prob: alphabet size mismatch");
  std::vector<double> g(d.weights().size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = (f.contains(static_cast<int>(k)) ? 1.0 : -1.0) - d.expected_phi()[k];
  return g;
}

/// Mode of P_F: every vertex with a strictly positive potential, or the best
/// single vertex (lowest index on ties) when there is none.
inline FaceIndexSet most_probable_face(std::span<const double> w) {
  std::uint64_t mask = 0;
  std::size_t best = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k] > 0.0) mask |= std::uint64_t{1} << k;
    if (w[k] > w[best]) best = k;
  }
  if (mask == 0) mask = std::uint64_t{1} << best;
  return {mask, static_cast<int>(w.size())};
}

inline FaceIndexSet most_probable_face(const GibbsFaceDistribution& d) { return most_probable_face(d.weights()); }

enum class ScoreBaseline { kNone, kSelfCritic };

/// Monte Carlo estimate of grad_w E_F[loss(F)] with the score-function
/// estimator. With the self-critic baseline each term is
/// (loss(f) - loss(f')) * grad log P(f) for an independent face f'.
/// `loss` is called as loss(face, g) so it may itself be stochastic.
template <class Loss, Urbg64 G>
std::vector<double> score_function_gradient(const GibbsFaceDistribution& d, Loss&& loss, G& g, std::size_t samples,
                                            ScoreBaseline baseline = ScoreBaseline::kSelfCritic) {
  detail::require(samples >= 1, "score_function_gradient: need at least one sample");
  std::vector<double> acc(d.weights().size(), 0.0);
  for (std::size_t i = 0; i < samples; ++i) {
    const FaceIndexSet f = sample_face(d, g);
    double value = loss(f, g);
    if (baseline == ScoreBaseline::kSelfCritic) {
      const FaceIndexSet critic = sample_face(d, g);
      value -= loss(critic, g);
    }
    const auto score = grad_log_prob(d, f);
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += value * score[k];
  }
  for (double& v : acc) v /= static_cast<double>(samples);
  return acc;
}

}  // namespace mixsimplex
