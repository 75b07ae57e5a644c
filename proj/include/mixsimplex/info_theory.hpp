#pragma once

// Direct sum information measures for any mixed distribution, coding
// entropy at N-bit precision, and the maximum entropy mixed distribution.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mixsimplex/errors.hpp"
#include "mixsimplex/mixed_dirichlet.hpp"
#include "mixsimplex/random.hpp"
#include "mixsimplex/simplex.hpp"
#include "mixsimplex/special.hpp"
#include "mixsimplex/stats.hpp"

namespace mixsimplex {

/// Anything with free functions sample(d, rng) -> {face, point} and
/// log_density(d, y) w.r.t. the direct sum measure.
template <class D>
concept MixedDistribution = requires(const D& d, Rng& g, const SimplexPoint& y) {
  { sample(d, g).face } -> std::convertible_to<FaceIndexSet>;
  { sample(d, g).point } -> std::convertible_to<SimplexPoint>;
  { log_density(d, y) } -> std::convertible_to<double>;
};

// ---------------------------------------------------------------------------
// Chunked Monte Carlo

/// Monte Carlo loops are split into this many chunks, each with its own
/// stream, and merged in chunk order. Results depend on the seed only, never
/// on the number of worker threads.
inline constexpr std::size_t kMonteCarloChunks = 16;

/// Worker count from MIXSIMPLEX_THREADS (default 1).
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("MIXSIMPLEX_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(std::min<long>(v, 256));
  }
  return 1;
}

namespace detail {

/// Runs body(chunk, count, stream) for every chunk and returns the results in chunk order.
template <class R, class Body>
std::vector<R> run_chunks(std::size_t n, std::uint64_t seed, Body&& body, unsigned threads) {
  std::vector<R> results(kMonteCarloChunks);
  auto chunk_size = [&](std::size_t c) { return n / kMonteCarloChunks + (c < n % kMonteCarloChunks ? 1 : 0); };
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < kMonteCarloChunks; c = next++) {
      Rng stream = make_stream(seed, c + 1);
      results[c] = body(chunk_size(c), stream);
    }
  };
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(kMonteCarloChunks)));
  if (threads == 1) {
    worker();
    return results;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace detail

/// -(1/n) sum log p(Y_i), Y_i ~ p.
template <MixedDistribution D, Urbg64 G>
Estimate direct_sum_entropy_mc(const D& dist, std::size_t n, G& g, unsigned threads = default_thread_count()) {
  detail::require(n >= 2, "direct_sum_entropy_mc: need at least two samples");
  const std::uint64_t seed = g();
  auto parts = detail::run_chunks<RunningMoments>(
      n, seed,
      [&](std::size_t count, Rng& stream) {
        RunningMoments m;
        for (std::size_t i = 0; i < count; ++i) m.add(-log_density(dist, sample(dist, stream).point));
        return m;
      },
      threads);
  RunningMoments total;
  for (const auto& m : parts) total.merge(m);
  return total.estimate();
}

struct KlOutcome {
  Estimate estimate;
  /// Set when q has zero density at a point drawn from p; the divergence is +inf.
  bool support_violation = false;
  std::optional<FaceIndexSet> witness;
};

/// (1/n) sum [log p(Y_i) - log q(Y_i)], Y_i ~ p.
template <MixedDistribution P, MixedDistribution Q, Urbg64 G>
KlOutcome direct_sum_kl_mc(const P& p, const Q& q, std::size_t n, G& g, unsigned threads = default_thread_count()) {
  detail::require(n >= 2, "direct_sum_kl_mc: need at least two samples");
  struct Part {
    RunningMoments m;
    std::optional<FaceIndexSet> witness;
  };
  const std::uint64_t seed = g();
  auto parts = detail::run_chunks<Part>(
      n, seed,
      [&](std::size_t count, Rng& stream) {
        Part part;
        for (std::size_t i = 0; i < count; ++i) {
          const auto s = sample(p, stream);
          const double lq = log_density(q, s.point);
          if (lq == kNegInf) {
            part.witness = s.face;
            return part;
          }
          part.m.add(log_density(p, s.point) - lq);
        }
        return part;
      },
      threads);
  KlOutcome out;
  RunningMoments total;
  for (const auto& part : parts) {
    if (part.witness && !out.support_violation) {
      out.support_violation = true;
      out.witness = part.witness;
    }
    total.merge(part.m);
  }
  if (out.support_violation) {
    out.estimate = {std::numeric_limits<double>::infinity(), 0.0};
  } else {
    out.estimate = total.estimate();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coding entropy

/// H + N log 2 * E[dim F], with probabilities indexed by face dimension.
inline double coding_entropy_by_dimension(std::span<const double> dim_probs, double base_entropy, int n_bits) {
  detail::require(n_bits >= 0, "coding_entropy: N must be non-negative");
  detail::require(std::isfinite(base_entropy), "coding_entropy: base entropy must be finite");
  double total = 0.0;
  double mean_dim = 0.0;
  for (std::size_t k = 0; k < dim_probs.size(); ++k) {
    const double p = dim_probs[k];
    detail::require(std::isfinite(p) && p >= 0.0 && p <= 1.0 + 1e-10, "coding_entropy: invalid probability");
    total += p;
    mean_dim += static_cast<double>(k) * p;
  }
  detail::require(std::abs(total - 1.0) <= 1e-10, "coding_entropy: probabilities must sum to 1");
  return base_entropy + static_cast<double>(n_bits) * std::numbers::ln2 * mean_dim;
}

/// Coding entropy (nats) of a mixed distribution with face law `face_probs`
/// and direct sum entropy `base_entropy`, every continuous dimension coded to N bits.
inline double coding_entropy(const std::map<FaceIndexSet, double>& face_probs, double base_entropy, int n_bits) {
  detail::require(!face_probs.empty(), "coding_entropy: empty face distribution");
  std::vector<double> by_dim(static_cast<std::size_t>(face_probs.begin()->first.alphabet_size()), 0.0);
  for (const auto& [f, p] : face_probs) {
    detail::require(f.alphabet_size() == static_cast<int>(by_dim.size()), "coding_entropy: mixed alphabet sizes");
    detail::require(std::isfinite(p) && p >= 0.0 && p <= 1.0 + 1e-10, "coding_entropy: invalid probability");
    by_dim[static_cast<std::size_t>(f.dimension())] += p;
  }
  return coding_entropy_by_dimension(by_dim, base_entropy, n_bits);
}

// ---------------------------------------------------------------------------
// Maximum entropy mixed distribution

/// Generalized Laguerre polynomial L_n^(alpha)(x) by the three-term recurrence.
inline double laguerre_generalized(int n, double alpha, double x) {
  detail::require(n >= 0, "laguerre: degree must be non-negative");
  double prev = 1.0;
  if (n == 0) return prev;
  double cur = 1.0 + alpha - x;
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

namespace detail {

/// log L_n^(alpha)(x) for x <= 0, alpha > -1, where every term is positive.
/// The recurrence is rescaled to stay in range for large n or |x|.
inline double log_laguerre_nonpositive(int n, double alpha, double x) {
  double prev = 1.0;
  if (n == 0) return 0.0;
  double cur = 1.0 + alpha - x;
  double log_scale = 0.0;
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
    prev = cur;
    cur = next;
    if (cur > 1e150) {
      prev /= cur;
      log_scale += std::log(cur);
      cur = 1.0;
    }
  }
  return log_scale + std::log(cur);
}

/// log of the unnormalized dimension-class weight C(K,k) 2^(N(k-1)) / (k-1)!.
inline double maxent_log_weight(int k_total, int n_bits, int k) {
  return log_binomial(static_cast<unsigned>(k_total), static_cast<unsigned>(k)) +
         static_cast<double>(n_bits) * (k - 1) * std::numbers::ln2 - log_factorial(static_cast<unsigned>(k - 1));
}

inline void require_maxent_args(int k, int n_bits) {
  require(k >= 2 && k <= kMaxFaceAlphabet, "maxent: K must be in [2, 63]");
  require(n_bits >= 0, "maxent: N must be non-negative");
}

}  // namespace detail

/// Maximum coding entropy at N-bit precision, log L_{K-1}^(1)(-2^N).
inline double maxent_entropy(int k, int n_bits) {
  detail::require_maxent_args(k, n_bits);
  return detail::log_laguerre_nonpositive(k - 1, 1.0, -std::ldexp(1.0, n_bits));
}

/// Same value from log sum_k C(K,k) 2^(N(k-1)) / (k-1)!.
inline double maxent_entropy_series(int k, int n_bits) {
  detail::require_maxent_args(k, n_bits);
  std::vector<double> terms;
  for (int j = 1; j <= k; ++j) terms.push_back(detail::maxent_log_weight(k, n_bits, j));
  return log_sum_exp(terms);
}

/// Mixed distribution maximizing the N-bit coding entropy: dimension class
/// k (number of vertices) has probability g(k), faces within a class are
/// equally likely, and the point is uniform (flat Dirichlet) on the face.
class MaxEntMixed {
 public:
  MaxEntMixed(int k, int n_bits) : k_(k), n_(n_bits) {
    detail::require_maxent_args(k, n_bits);
    log_g_.resize(static_cast<std::size_t>(k));
    for (int j = 1; j <= k; ++j) log_g_[static_cast<std::size_t>(j - 1)] = detail::maxent_log_weight(k, n_bits, j);
    const double lse = log_sum_exp(log_g_);
    for (double& v : log_g_) v -= lse;
  }

  int alphabet_size() const { return k_; }
  int bits() const { return n_; }

  /// Probability of the class of faces with `vertices` vertices.
  double g(int vertices) const { return std::exp(log_g(vertices)); }
  double log_g(int vertices) const {
    detail::require(vertices >= 1 && vertices <= k_, "maxent: vertex count out of range");
    return log_g_[static_cast<std::size_t>(vertices - 1)];
  }
  std::vector<double> g_vector() const {
    std::vector<double> out;
    for (double v : log_g_) out.push_back(std::exp(v));
    return out;
  }

  double face_log_prob(const FaceIndexSet& f) const {
    detail::require(f.alphabet_size() == k_, "maxent: alphabet size mismatch");
    return log_g(f.size()) - log_binomial(static_cast<unsigned>(k_), static_cast<unsigned>(f.size()));
  }

  /// H(F) + E[H(Y | F)], summed over dimension classes.
  double direct_sum_entropy() const {
    double h = 0.0;
    for (int j = 1; j <= k_; ++j) {
      const double lg = log_g(j);
      const double face = lg - log_binomial(static_cast<unsigned>(k_), static_cast<unsigned>(j));
      h -= std::exp(lg) * (face + log_factorial(static_cast<unsigned>(j - 1)));
    }
    return h;
  }

  /// Probabilities by face dimension (index 0 = vertices).
  std::vector<double> dimension_probs() const { return g_vector(); }

 private:
  int k_;
  int n_;
  std::vector<double> log_g_;
};

inline MaxEntMixed maxent_distribution(int k, int n_bits) { return MaxEntMixed(k, n_bits); }

/// Every face with its probability (K <= 20).
inline std::map<FaceIndexSet, double> exact_face_distribution(const MaxEntMixed& d) {
  std::map<FaceIndexSet, double> out;
  for (const FaceIndexSet& f : enumerate_faces(d.alphabet_size())) out.emplace(f, std::exp(d.face_log_prob(f)));
  return out;
}

inline std::map<FaceIndexSet, double> exact_face_distribution(const MixedDirichlet& d) {
  std::map<FaceIndexSet, double> out;
  expectation_over_faces(d.faces(), [&](const FaceIndexSet& f) {
    out.emplace(f, std::exp(face_log_prob(d.faces(), f)));
    return 0.0;
  });
  return out;
}

template <Urbg64 G>
FaceSample maxent_sample(const MaxEntMixed& d, G& g) {
  const int k = d.alphabet_size();
  double u = uniform01(g);
  int vertices = k;
  for (int j = 1; j < k; ++j) {
    u -= d.g(j);
    if (u < 0.0) {
      vertices = j;
      break;
    }
  }
  std::vector<int> pool(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < vertices; ++i) {
    const auto remaining = static_cast<double>(k - i);
    const int pick = i + std::min(static_cast<int>(uniform01(g) * remaining), k - i - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick)]);
  }
  std::vector<int> chosen(pool.begin(), pool.begin() + vertices);
  const FaceIndexSet f = FaceIndexSet::from_indices(chosen, k);
  if (vertices == 1) return {f, SimplexPoint::vertex(chosen.front(), k)};
  const std::vector<double> ones(static_cast<std::size_t>(vertices), 1.0);
  return {f, embed(f, sample_dirichlet(ones, g))};
}

template <Urbg64 G>
FaceSample sample(const MaxEntMixed& d, G& g) {
  return maxent_sample(d, g);
}

/// log P_F(f) + log (k - 1)!, the flat Dirichlet on a face with k vertices
/// having density (k - 1)!.
inline double log_density(const MaxEntMixed& d, const SimplexPoint& y) {
  detail::require(y.alphabet_size() == d.alphabet_size(), "log_density: alphabet size mismatch");
  const FaceIndexSet f = face_of(y);
  return d.face_log_prob(f) + log_factorial(static_cast<unsigned>(f.size() - 1));
}

/// KL between two maximum entropy distributions on the same simplex. Faces
/// within a class and the flat conditionals agree, so only the class laws differ.
inline double kl(const MaxEntMixed& p, const MaxEntMixed& q) {
  detail::require(p.alphabet_size() == q.alphabet_size(), "kl: alphabet size mismatch");
  double acc = 0.0;
  for (int k = 1; k <= p.alphabet_size(); ++k) acc += p.g(k) * (p.log_g(k) - q.log_g(k));
  return std::max(0.0, acc);
}

/// Objective maximized by the dimension-class law g at N bits, with flat
/// conditionals: H(g) + sum_k g(k) [log C(K,k) + N(k-1) log 2 - log (k-1)!].
inline double maxent_objective(int k, int n_bits, std::span<const double> g) {
  detail::require_maxent_args(k, n_bits);
  detail::require(g.size() == static_cast<std::size_t>(k), "maxent_objective: g must have K entries");
  double obj = 0.0;
  for (int j = 1; j <= k; ++j) {
    const double p = g[static_cast<std::size_t>(j - 1)];
    detail::require(p >= 0.0, "maxent_objective: negative probability");
    obj += -xlogx(p) + p * detail::maxent_log_weight(k, n_bits, j);
  }
  return obj;
}

}  // namespace mixsimplex
