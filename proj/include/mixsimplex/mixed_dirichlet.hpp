#pragma once

// Mixed Dirichlet: a Gibbs distribution over faces, then a Dirichlet over the
// relative interior of the sampled face whose concentrations are the
// per-vertex entries of alpha restricted to that face. Densities are with
// respect to the direct sum measure (counting measure on vertices, Lebesgue
// measure in the free coordinates of every higher face).

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mixsimplex/errors.hpp"
#include "mixsimplex/face_gibbs.hpp"
#include "mixsimplex/random.hpp"
#include "mixsimplex/simplex.hpp"
#include "mixsimplex/special.hpp"
#include "mixsimplex/stats.hpp"

namespace mixsimplex {

namespace detail {

inline void require_concentrations(std::span<const double> alpha, const char* what) {
  require(!alpha.empty(), what);
  for (double a : alpha) require(std::isfinite(a) && a > 0.0, what);
}

inline std::vector<double> restrict_to(std::span<const double> v, const FaceIndexSet& f) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(f.size()));
  for (int k : f.indices()) out.push_back(v[static_cast<std::size_t>(k)]);
  return out;
}

}  // namespace detail

/// Log-density of Dir(alpha) at y, with respect to Lebesgue measure on the
/// first n - 1 coordinates. A single coordinate is a point mass (returns 0).
inline double dirichlet_log_density(std::span<const double> y, std::span<const double> alpha) {
  detail::require(y.size() == alpha.size(), "dirichlet_log_density: dimension mismatch");
  detail::require_concentrations(alpha, "dirichlet_log_density: concentrations must be positive");
  if (alpha.size() == 1) return 0.0;
  double total = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    detail::require(y[i] > 0.0, "dirichlet_log_density: coordinate on the face boundary");
    acc += (alpha[i] - 1.0) * std::log(y[i]) - std::lgamma(alpha[i]);
    total += alpha[i];
  }
  return acc + std::lgamma(total);
}

/// Differential entropy log B(a) + (a0 - n) psi(a0) - sum (a_k - 1) psi(a_k).
inline double dirichlet_entropy(std::span<const double> alpha) {
  detail::require_concentrations(alpha, "dirichlet_entropy: concentrations must be positive");
  double a0 = 0.0;
  double acc = 0.0;
  for (double a : alpha) {
    a0 += a;
    acc -= (a - 1.0) * digamma(a);
  }
  return log_multivariate_beta(alpha) + (a0 - static_cast<double>(alpha.size())) * digamma(a0) + acc;
}

/// KL(Dir(p) || Dir(q)).
inline double dirichlet_kl(std::span<const double> alpha_p, std::span<const double> alpha_q) {
  detail::require(alpha_p.size() == alpha_q.size(), "dirichlet_kl: dimension mismatch");
  detail::require_concentrations(alpha_p, "dirichlet_kl: concentrations must be positive");
  detail::require_concentrations(alpha_q, "dirichlet_kl: concentrations must be positive");
  double p0 = 0.0;
  for (double a : alpha_p) p0 += a;
  const double psi0 = digamma(p0);
  double acc = log_multivariate_beta(alpha_q) - log_multivariate_beta(alpha_p);
  for (std::size_t k = 0; k < alpha_p.size(); ++k) acc += (alpha_p[k] - alpha_q[k]) * (digamma(alpha_p[k]) - psi0);
  return std::max(0.0, acc);
}

/// Dir(alpha) draw normalized from log-Gamma variates. A coordinate that
/// underflows to zero triggers one redraw; if it underflows again it is
/// floored at 1e-300 and the point renormalized.
template <Urbg64 G>
std::vector<double> sample_dirichlet(std::span<const double> alpha, G& g) {
  const std::size_t n = alpha.size();
  std::vector<double> y(n);
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<double> logs(n);
    for (std::size_t i = 0; i < n; ++i) logs[i] = log_gamma_draw(g, alpha[i]);
    const double lse = log_sum_exp(logs);
    bool underflow = false;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = std::exp(logs[i] - lse);
      underflow = underflow || y[i] == 0.0;
      sum += y[i];
    }
    for (double& v : y) v /= sum;
    if (!underflow) return y;
  }
  double sum = 0.0;
  for (double& v : y) {
    v = std::max(v, 1e-300);
    sum += v;
  }
  for (double& v : y) v /= sum;
  return y;
}

class MixedDirichlet {
 public:
  MixedDirichlet(std::vector<double> w, std::vector<double> alpha)
      : faces_(std::move(w)), alpha_(std::move(alpha)) {
    detail::require(alpha_.size() == static_cast<std::size_t>(faces_.alphabet_size()),
                    "mixed dirichlet: w and alpha must have the same length");
    detail::require_concentrations(alpha_, "mixed dirichlet: concentrations must be positive and finite");
  }

  int alphabet_size() const { return faces_.alphabet_size(); }
  const GibbsFaceDistribution& faces() const { return faces_; }
  std::span<const double> alpha() const { return alpha_; }
  std::vector<double> alpha_on(const FaceIndexSet& f) const { return detail::restrict_to(alpha_, f); }

 private:
  GibbsFaceDistribution faces_;
  std::vector<double> alpha_;
};

/// Embeds restricted coordinates into a K-vector with exact zeros off the face.
inline SimplexPoint embed(const FaceIndexSet& f, std::span<const double> restricted) {
  std::vector<double> y(static_cast<std::size_t>(f.alphabet_size()), 0.0);
  const auto idx = f.indices();
  for (std::size_t i = 0; i < idx.size(); ++i) y[static_cast<std::size_t>(idx[i])] = restricted[i];
  return SimplexPoint(std::move(y));
}

struct FaceSample {
  FaceIndexSet face;
  SimplexPoint point;
};

template <Urbg64 G>
FaceSample sample(const MixedDirichlet& md, G& g) {
  const FaceIndexSet f = sample_face(md.faces(), g);
  if (f.size() == 1) return {f, SimplexPoint::vertex(f.indices().front(), md.alphabet_size())};
  const auto alpha = md.alpha_on(f);
  return {f, embed(f, sample_dirichlet(alpha, g))};
}

/// log p(y) = log P_F(face) + log Dir(y restricted to face; alpha(face)).
inline double log_density(const MixedDirichlet& md, const FaceIndexSet& f, const SimplexPoint& y) {
  detail::require(y.alphabet_size() == md.alphabet_size(), "log_density: alphabet size mismatch");
  for (int k = 0; k < md.alphabet_size(); ++k) {
    const double c = y[static_cast<std::size_t>(k)];
    detail::require(f.contains(k) ? c > 0.0 : c == 0.0, "log_density: point does not lie in the relative interior of the face");
  }
  double lp = face_log_prob(md.faces(), f);
  if (f.size() > 1) lp += dirichlet_log_density(detail::restrict_to(y.coords(), f), md.alpha_on(f));
  return lp;
}

inline double log_density(const MixedDirichlet& md, const SimplexPoint& y) { return log_density(md, face_of(y), y); }

/// Sum over every face of P_F(f) * value(f). Throws past 14 vertices.
template <class F>
double expectation_over_faces(const GibbsFaceDistribution& d, F&& value) {
  constexpr int kMaxExact = 14;
  if (d.alphabet_size() > kMaxExact)
    throw resource_limit_error("exact face expectation: K = " + std::to_string(d.alphabet_size()) + " exceeds " +
                               std::to_string(kMaxExact));
  double acc = 0.0;
  for (const FaceIndexSet& f : enumerate_faces(d.alphabet_size())) acc += std::exp(face_log_prob(d, f)) * value(f);
  return acc;
}

/// Direct sum entropy H(F) + E_F[H(Y | F)], exact over all faces (K <= 14).
inline Estimate entropy_exact(const MixedDirichlet& md) {
  const double continuous = expectation_over_faces(md.faces(), [&](const FaceIndexSet& f) {
    return f.size() > 1 ? dirichlet_entropy(md.alpha_on(f)) : 0.0;
  });
  return {entropy(md.faces()) + continuous, 0.0};
}

/// Same quantity with E_F[H(Y | F)] estimated from n sampled faces.
template <Urbg64 G>
Estimate entropy_mc(const MixedDirichlet& md, std::size_t n, G& g) {
  detail::require(n >= 2, "entropy_mc: need at least two samples");
  RunningMoments m;
  for (std::size_t i = 0; i < n; ++i) {
    const FaceIndexSet f = sample_face(md.faces(), g);
    m.add(f.size() > 1 ? dirichlet_entropy(md.alpha_on(f)) : 0.0);
  }
  return {entropy(md.faces()) + m.mean(), m.std_error()};
}

/// KL(P_F || Q_F) + E_{P_F}[KL(Dir(alpha_p(f)) || Dir(alpha_q(f)))], exact.
inline Estimate kl_mixed_exact(const MixedDirichlet& p, const MixedDirichlet& q) {
  detail::require(p.alphabet_size() == q.alphabet_size(), "kl_mixed: alphabet size mismatch");
  const double continuous = expectation_over_faces(p.faces(), [&](const FaceIndexSet& f) {
    return f.size() > 1 ? dirichlet_kl(p.alpha_on(f), q.alpha_on(f)) : 0.0;
  });
  return {kl(p.faces(), q.faces()) + continuous, 0.0};
}

template <Urbg64 G>
Estimate kl_mixed_mc(const MixedDirichlet& p, const MixedDirichlet& q, std::size_t n, G& g) {
  detail::require(p.alphabet_size() == q.alphabet_size(), "kl_mixed: alphabet size mismatch");
  detail::require(n >= 2, "kl_mixed_mc: need at least two samples");
  RunningMoments m;
  for (std::size_t i = 0; i < n; ++i) {
    const FaceIndexSet f = sample_face(p.faces(), g);
    m.add(f.size() > 1 ? dirichlet_kl(p.alpha_on(f), q.alpha_on(f)) : 0.0);
  }
  return {kl(p.faces(), q.faces()) + m.mean(), m.std_error()};
}

/// Mean of the mixture: sum_f P(f) * alpha(f) / sum alpha(f), embedded.
inline std::vector<double> mixture_mean_exact(const MixedDirichlet& md) {
  std::vector<double> mean(static_cast<std::size_t>(md.alphabet_size()), 0.0);
  for (const FaceIndexSet& f : enumerate_faces(md.alphabet_size())) {
    const double p = std::exp(face_log_prob(md.faces(), f));
    double a0 = 0.0;
    for (int k : f.indices()) a0 += md.alpha()[static_cast<std::size_t>(k)];
    for (int k : f.indices()) mean[static_cast<std::size_t>(k)] += p * md.alpha()[static_cast<std::size_t>(k)] / a0;
  }
  return mean;
}

/// A plain Dirichlet viewed as a mixed distribution: all mass on the
/// maximal face, so every lower face has log-density -inf.
class FullFaceDirichlet {
 public:
  explicit FullFaceDirichlet(std::vector<double> alpha) : alpha_(std::move(alpha)) {
    detail::require(alpha_.size() >= 2, "dirichlet: need at least two concentrations");
    detail::require_concentrations(alpha_, "dirichlet: concentrations must be positive and finite");
  }
  int alphabet_size() const { return static_cast<int>(alpha_.size()); }
  std::span<const double> alpha() const { return alpha_; }

 private:
  std::vector<double> alpha_;
};

template <Urbg64 G>
FaceSample sample(const FullFaceDirichlet& d, G& g) {
  SimplexPoint y(sample_dirichlet(d.alpha(), g));
  return {face_of(y), y};
}

inline double log_density(const FullFaceDirichlet& d, const SimplexPoint& y) {
  detail::require(y.alphabet_size() == d.alphabet_size(), "log_density: alphabet size mismatch");
  if (y.support().size() != d.alphabet_size()) return kNegInf;
  return dirichlet_log_density(y.coords(), d.alpha());
}

}  // namespace mixsimplex
