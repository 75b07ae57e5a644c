#pragma once

// Sample-and-project mixed distributions: sparsemax of an independent
// Gaussian (Gaussian-Sparsemax), sparsemax of a stretched Concrete (K-D Hard
// Concrete), the binary Hard Concrete on [0, 1], and the Concrete itself.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "mixsimplex/errors.hpp"
#include "mixsimplex/quadrature.hpp"
#include "mixsimplex/random.hpp"
#include "mixsimplex/simplex.hpp"
#include "mixsimplex/special.hpp"

namespace mixsimplex {

// ---------------------------------------------------------------------------
// Gaussian-Sparsemax

/// Y = sparsemax(mu + diag(sigma) N), N standard normal.
class GaussianSparsemax {
 public:
  GaussianSparsemax(std::vector<double> mu, std::vector<double> sigma) : mu_(std::move(mu)), sigma_(std::move(sigma)) {
    detail::require(mu_.size() >= 2, "gaussian-sparsemax: need K >= 2");
    detail::require(mu_.size() == sigma_.size(), "gaussian-sparsemax: mu and sigma must have the same length");
    for (double m : mu_) detail::require(std::isfinite(m), "gaussian-sparsemax: non-finite mean");
    for (double s : sigma_) detail::require(std::isfinite(s) && s > 0.0, "gaussian-sparsemax: sigma must be positive");
  }

  int alphabet_size() const { return static_cast<int>(mu_.size()); }
  std::span<const double> mu() const { return mu_; }
  std::span<const double> sigma() const { return sigma_; }

  bool constant_variance() const {
    return std::all_of(sigma_.begin(), sigma_.end(), [&](double s) { return s == sigma_.front(); });
  }

 private:
  std::vector<double> mu_;
  std::vector<double> sigma_;
};

struct ExtrinsicSample {
  FaceIndexSet face;
  SimplexPoint point;
};

template <Urbg64 G>
ExtrinsicSample gs_sample(const GaussianSparsemax& d, G& g) {
  std::vector<double> z(d.mu().begin(), d.mu().end());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] += d.sigma()[k] * standard_normal(g);
  SimplexPoint y = sparsemax(z);
  return {face_of(y), std::move(y)};
}

template <Urbg64 G>
ExtrinsicSample sample(const GaussianSparsemax& d, G& g) {
  return gs_sample(d, g);
}

/// Two-coordinate view of a K = 2 Gaussian-Sparsemax, y = (y, 1 - y): the
/// first coordinate is clamp(z + sigma N, 0, 1).
struct GaussianSparsemax2 {
  double z = 0.5;
  double sigma = 1.0;

  /// Equivalent scalar parameters of a K = 2 GaussianSparsemax.
  static GaussianSparsemax2 from(const GaussianSparsemax& d) {
    detail::require(d.alphabet_size() == 2, "gaussian-sparsemax: the 2-D forms need K = 2");
    return {(d.mu()[0] - d.mu()[1] + 1.0) / 2.0,
            std::sqrt(d.sigma()[0] * d.sigma()[0] + d.sigma()[1] * d.sigma()[1]) / 2.0};
  }
};

struct FaceProbs2 {
  double p0 = 0.0;  // y = 0, i.e. vertex (0, 1)
  double p1 = 0.0;  // y = 1, i.e. vertex (1, 0)
  double pc = 0.0;  // open edge
};

inline FaceProbs2 gs2_face_probs(double z, double sigma) {
  detail::require(std::isfinite(sigma) && sigma > 0.0, "gs2_face_probs: sigma must be positive");
  FaceProbs2 p;
  p.p0 = 0.5 * std::erfc(z / (std::numbers::sqrt2 * sigma));
  p.p1 = 0.5 * std::erfc((1.0 - z) / (std::numbers::sqrt2 * sigma));
  p.pc = std::max(0.0, 1.0 - p.p0 - p.p1);
  return p;
}

namespace detail {

/// Moments of the standard normal over [a, b]: integral of phi(t) t^j dt for j = 0, 1, 2.
struct TruncatedMoments {
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
};

inline TruncatedMoments truncated_moments(double a, double b) {
  TruncatedMoments m;
  const double pa = normal_pdf(a);
  const double pb = normal_pdf(b);
  m.m0 = normal_cdf(b) - normal_cdf(a);
  m.m1 = pa - pb;
  m.m2 = m.m0 - (b * pb - a * pa);
  return m;
}

}  // namespace detail

/// Direct sum entropy of the 2-D Gaussian-Sparsemax in closed form:
///   -P0 log P0 - P1 log P1 + Pc log sqrt(2 pi sigma^2) + (1/2) int_a^b phi(t) t^2 dt
/// with a = -z / sigma, b = (1 - z) / sigma.
inline double gs2_entropy(double z, double sigma) {
  const FaceProbs2 p = gs2_face_probs(z, sigma);
  const auto m = detail::truncated_moments(-z / sigma, (1.0 - z) / sigma);
  return -xlogx(p.p0) - xlogx(p.p1) + m.m0 * 0.5 * std::log(2.0 * std::numbers::pi * sigma * sigma) + 0.5 * m.m2;
}

/// Direct sum KL between two 2-D Gaussian-Sparsemax distributions:
/// vertex terms plus int_0^1 N(y; zP, sP^2) log(N(y; zP, sP^2) / N(y; zQ, sQ^2)) dy.
inline double gs2_kl(double z_p, double sigma_p, double z_q, double sigma_q) {
  const FaceProbs2 p = gs2_face_probs(z_p, sigma_p);
  const FaceProbs2 q = gs2_face_probs(z_q, sigma_q);
  auto vertex_term = [](double a, double b) {
    if (a == 0.0) return 0.0;
    if (b == 0.0) return std::numeric_limits<double>::infinity();
    return a * (std::log(a) - std::log(b));
  };
  const auto m = detail::truncated_moments(-z_p / sigma_p, (1.0 - z_p) / sigma_p);
  // Under P on [0, 1]: y - zQ = sigma_p t + (zP - zQ).
  const double shift = z_p - z_q;
  const double cross = sigma_p * sigma_p * m.m2 + 2.0 * sigma_p * shift * m.m1 + shift * shift * m.m0;
  const double continuous =
      m.m0 * std::log(sigma_q / sigma_p) - 0.5 * m.m2 + cross / (2.0 * sigma_q * sigma_q);
  return std::max(0.0, vertex_term(p.p0, q.p0) + vertex_term(p.p1, q.p1) + continuous);
}

/// Log-density of the 2-D form at y = (y, 1 - y) (first coordinate given):
/// the Gaussian density inside (0, 1), log P0 / log P1 at the endpoints.
inline double gs2_log_density(double z, double sigma, double y) {
  detail::require(y >= 0.0 && y <= 1.0, "gs2_log_density: y outside [0, 1]");
  const FaceProbs2 p = gs2_face_probs(z, sigma);
  if (y == 0.0) return std::log(p.p0);
  if (y == 1.0) return std::log(p.p1);
  return normal_log_pdf(y, z, sigma);
}

/// Same density written intrinsically, log P_F(f) + log p(y | f), with the
/// conditional N(y; z, sigma^2) / Pc on the open edge.
inline double gs2_log_density_intrinsic(double z, double sigma, double y) {
  detail::require(y >= 0.0 && y <= 1.0, "gs2_log_density_intrinsic: y outside [0, 1]");
  const FaceProbs2 p = gs2_face_probs(z, sigma);
  if (y == 0.0) return std::log(p.p0);
  if (y == 1.0) return std::log(p.p1);
  return std::log(p.pc) + (normal_log_pdf(y, z, sigma) - std::log(p.pc));
}

namespace detail {

inline void require_quadrature(const QuadratureConfig& q) {
  require(q.panels >= 1 && q.nodes_per_panel >= 1 &&
              q.panels * q.nodes_per_panel >= QuadratureConfig::kMinDensityNodes,
          "quadrature: need at least 256 nodes for density evaluation");
  require(q.endpoint_inset > 0.0 && q.endpoint_inset < 0.5, "quadrature: endpoint inset must be in (0, 0.5)");
}

/// log of s * N(y_rest - y_p 1; mu_rest - mu_p 1, Diag(sigma_rest^2) + sigma_p^2 11^T),
/// evaluated with Sherman-Morrison and the matrix determinant lemma.
inline double gs_support_log_marginal(const GaussianSparsemax& d, const SimplexPoint& y, const std::vector<int>& support,
                                      int pivot) {
  const double s = static_cast<double>(support.size());
  const auto up = static_cast<std::size_t>(pivot);
  const double var_p = d.sigma()[up] * d.sigma()[up];
  double log_det = 0.0;
  double quad_diag = 0.0;
  double inv_sum = 0.0;
  double weighted_resid = 0.0;
  int dims = 0;
  for (int i : support) {
    if (i == pivot) continue;
    const auto ui = static_cast<std::size_t>(i);
    const double var = d.sigma()[ui] * d.sigma()[ui];
    const double r = (y[ui] - y[up]) - (d.mu()[ui] - d.mu()[up]);
    log_det += std::log(var);
    quad_diag += r * r / var;
    inv_sum += 1.0 / var;
    weighted_resid += r / var;
    ++dims;
  }
  const double lemma = 1.0 + var_p * inv_sum;
  log_det += std::log(lemma);
  const double quad = quad_diag - var_p * weighted_resid * weighted_resid / lemma;
  return std::log(s) - 0.5 * (dims * std::log(2.0 * std::numbers::pi) + log_det + quad);
}

}  // namespace detail

/// Log-density of a K-D Gaussian-Sparsemax with respect to the direct sum
/// measure (Lebesgue measure in the non-pivot support coordinates). The
/// off-support coordinates enter through a Gaussian orthant probability,
/// reduced to a one-dimensional integral over u in (0, 1):
///
///   int_0^1 prod_{j not in S} Phi( Phi^{-1}(u) / (sigma_j sqrt(P)) - (c + mu_j) / sigma_j ) du,
///   P = sum_{i in S} sigma_i^-2,  c = sum_{i in S} sigma_i^-2 (y_i - mu_i) / P.
///
/// For a vertex the Gaussian factor is empty and only the orthant term remains.
inline double gs_log_density_general(const GaussianSparsemax& d, const SimplexPoint& y, const QuadratureConfig& quad = {},
                                     std::optional<int> pivot = std::nullopt) {
  detail::require(y.alphabet_size() == d.alphabet_size(), "gs_log_density: alphabet size mismatch");
  detail::require_quadrature(quad);
  const std::vector<int> support = y.support().indices();
  const int p = pivot.value_or(support.front());
  detail::require(y.support().contains(p), "gs_log_density: pivot must be in the support");

  double log_density = detail::gs_support_log_marginal(d, y, support, p);
  if (static_cast<int>(support.size()) == d.alphabet_size()) return log_density;

  double precision = 0.0;
  double weighted = 0.0;
  for (int i : support) {
    const auto ui = static_cast<std::size_t>(i);
    const double inv = 1.0 / (d.sigma()[ui] * d.sigma()[ui]);
    precision += inv;
    weighted += inv * (y[ui] - d.mu()[ui]);
  }
  const double center = weighted / precision;
  const double root_precision = std::sqrt(precision);
  std::vector<double> scale;
  std::vector<double> offset;
  for (int j = 0; j < d.alphabet_size(); ++j) {
    if (y.support().contains(j)) continue;
    const auto uj = static_cast<std::size_t>(j);
    scale.push_back(1.0 / (d.sigma()[uj] * root_precision));
    offset.push_back((center + d.mu()[uj]) / d.sigma()[uj]);
  }
  const GaussLegendre rule(quad.nodes_per_panel);
  const double orthant = integrate_graded_unit(
      [&](double u) {
        const double t = normal_quantile(u);
        double prod = 1.0;
        for (std::size_t j = 0; j < scale.size(); ++j) prod *= normal_cdf(t * scale[j] - offset[j]);
        return prod;
      },
      quad.endpoint_inset, rule, quad.panels);
  return log_density + std::log(orthant);
}

/// The same density when every sigma equals one value sigma, where the
/// orthant integrand simplifies to
///   prod_j Phi( Phi^{-1}(u) / sqrt(s) - (mu_j + (1 - sum_{i in S} mu_i) / s) / sigma ).
inline double gs_log_density_constant_variance(const GaussianSparsemax& d, const SimplexPoint& y,
                                               const QuadratureConfig& quad = {}) {
  detail::require(d.constant_variance(), "gs_log_density_constant_variance: sigma is not constant");
  detail::require(y.alphabet_size() == d.alphabet_size(), "gs_log_density: alphabet size mismatch");
  detail::require_quadrature(quad);
  const std::vector<int> support = y.support().indices();
  double log_density = detail::gs_support_log_marginal(d, y, support, support.front());
  if (static_cast<int>(support.size()) == d.alphabet_size()) return log_density;

  const double sigma = d.sigma()[0];
  const double s = static_cast<double>(support.size());
  double mu_support = 0.0;
  for (int i : support) mu_support += d.mu()[static_cast<std::size_t>(i)];
  const double shift = (1.0 - mu_support) / s;
  std::vector<double> offset;
  for (int j = 0; j < d.alphabet_size(); ++j)
    if (!y.support().contains(j)) offset.push_back((d.mu()[static_cast<std::size_t>(j)] + shift) / sigma);
  const double inv_root_s = 1.0 / std::sqrt(s);
  const GaussLegendre rule(quad.nodes_per_panel);
  const double orthant = integrate_graded_unit(
      [&](double u) {
        const double t = normal_quantile(u) * inv_root_s;
        double prod = 1.0;
        for (double o : offset) prod *= normal_cdf(t - o);
        return prod;
      },
      quad.endpoint_inset, rule, quad.panels);
  return log_density + std::log(orthant);
}

/// Picks the constant-variance form when it applies.
inline double gs_log_density(const GaussianSparsemax& d, const SimplexPoint& y, const QuadratureConfig& quad = {}) {
  return d.constant_variance() ? gs_log_density_constant_variance(d, y, quad) : gs_log_density_general(d, y, quad);
}

inline double log_density(const GaussianSparsemax& d, const SimplexPoint& y) { return gs_log_density(d, y); }

// ---------------------------------------------------------------------------
// Concrete and Hard Concrete

/// softmax((z + G) / beta) with G_k ~ Gumbel(0, 1). Coordinates are floored
/// at the smallest normal double so the draw stays in the relative interior.
template <Urbg64 G>
SimplexPoint concrete_sample(std::span<const double> z, double beta, G& g) {
  detail::require(z.size() >= 2, "concrete: need K >= 2");
  detail::require(std::isfinite(beta) && beta > 0.0, "concrete: temperature must be positive");
  std::vector<double> logits(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) logits[k] = (z[k] + standard_gumbel(g)) / beta;
  const double lse = log_sum_exp(logits);
  std::vector<double> y(z.size());
  double total = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) total += (y[k] = std::max(std::exp(logits[k] - lse), std::numeric_limits<double>::min()));
  for (double& v : y) v /= total;
  return SimplexPoint(std::move(y));
}

/// Concrete (Gumbel-Softmax) distribution; always in the relative interior.
struct Concrete {
  std::vector<double> z;
  double beta = 1.0;

  Concrete(std::vector<double> logits, double temperature) : z(std::move(logits)), beta(temperature) {
    detail::require(z.size() >= 2, "concrete: need K >= 2");
    for (double v : z) detail::require(std::isfinite(v), "concrete: non-finite logit");
    detail::require(std::isfinite(beta) && beta > 0.0, "concrete: temperature must be positive");
  }
};

template <Urbg64 G>
ExtrinsicSample sample(const Concrete& d, G& g) {
  SimplexPoint y = concrete_sample(d.z, d.beta, g);
  return {face_of(y), std::move(y)};
}

/// Y' ~ Concrete(z, beta), Y = sparsemax(lambda Y').
struct KDHardConcrete {
  std::vector<double> z;
  double beta = 1.0;
  double lambda = 1.1;

  KDHardConcrete(std::vector<double> logits, double temperature, double stretch = 1.1)
      : z(std::move(logits)), beta(temperature), lambda(stretch) {
    detail::require(z.size() >= 2, "kd-hard-concrete: need K >= 2");
    for (double v : z) detail::require(std::isfinite(v), "kd-hard-concrete: non-finite logit");
    detail::require(std::isfinite(beta) && beta > 0.0, "kd-hard-concrete: temperature must be positive");
    detail::require(std::isfinite(lambda) && lambda >= 1.0, "kd-hard-concrete: stretch must be >= 1");
  }
};

/// Deterministic part of the K-D Hard Concrete given the Gumbel noise.
inline SimplexPoint khc_transform(const KDHardConcrete& d, std::span<const double> gumbels) {
  detail::require(gumbels.size() == d.z.size(), "khc_transform: noise has the wrong length");
  std::vector<double> logits(d.z.size());
  for (std::size_t k = 0; k < logits.size(); ++k) logits[k] = (d.z[k] + gumbels[k]) / d.beta;
  const double lse = log_sum_exp(logits);
  for (double& v : logits) v = d.lambda * std::exp(v - lse);
  return sparsemax(logits);
}

template <Urbg64 G>
ExtrinsicSample khc_sample(const KDHardConcrete& d, G& g) {
  std::vector<double> noise(d.z.size());
  for (double& v : noise) v = standard_gumbel(g);
  SimplexPoint y = khc_transform(d, noise);
  return {face_of(y), std::move(y)};
}

template <Urbg64 G>
ExtrinsicSample sample(const KDHardConcrete& d, G& g) {
  return khc_sample(d, g);
}

/// Binary Hard Concrete: s = sigmoid((logit(u) + log_alpha) / beta),
/// stretched to (l, r) and clamped to [0, 1].
struct BinaryHardConcrete {
  double log_alpha = 0.0;
  double beta = 2.0 / 3.0;
  double l = -0.1;
  double r = 1.1;

  BinaryHardConcrete(double log_alpha_, double beta_ = 2.0 / 3.0, double l_ = -0.1, double r_ = 1.1)
      : log_alpha(log_alpha_), beta(beta_), l(l_), r(r_) {
    detail::require(std::isfinite(log_alpha), "binary-hard-concrete: non-finite log_alpha");
    detail::require(std::isfinite(beta) && beta > 0.0, "binary-hard-concrete: temperature must be positive");
    detail::require(l < 0.0 && r > 1.0, "binary-hard-concrete: need l < 0 < 1 < r");
  }

  /// P(value = 0) = sigmoid(beta log(-l / r) - log_alpha).
  double prob_zero() const { return sigmoid(beta * std::log(-l / r) - log_alpha); }
  /// P(value = 1) = sigmoid(log_alpha - beta log((1 - l) / (r - 1))).
  double prob_one() const { return sigmoid(log_alpha - beta * std::log((1.0 - l) / (r - 1.0))); }
};

struct HardConcreteDraw {
  Trit trit = Trit::kInterior;
  double value = 0.0;
};

inline HardConcreteDraw binary_hard_concrete_transform(const BinaryHardConcrete& d, double u) {
  const double s = sigmoid((std::log(u) - std::log1p(-u) + d.log_alpha) / d.beta);
  const double v = std::clamp(s * (d.r - d.l) + d.l, 0.0, 1.0);
  return {trit_of(v), v};
}

template <Urbg64 G>
HardConcreteDraw binary_hard_concrete_sample(const BinaryHardConcrete& d, G& g) {
  return binary_hard_concrete_transform(d, uniform01(g));
}

/// The draw as the point (v, 1 - v) of the 1-simplex.
template <Urbg64 G>
ExtrinsicSample sample(const BinaryHardConcrete& d, G& g) {
  const HardConcreteDraw draw = binary_hard_concrete_sample(d, g);
  std::vector<double> y{draw.value, 1.0 - draw.value};
  if (draw.trit == Trit::kOne) y = {1.0, 0.0};
  if (draw.trit == Trit::kZero) y = {0.0, 1.0};
  SimplexPoint point(std::move(y));
  return {face_of(point), std::move(point)};
}

/// The binary Hard Concrete whose draws equal the first coordinate of a K = 2
/// K-D Hard Concrete with logits (z1, z2) under the coupling
/// gumbels = (logit(u), 0): log_alpha = z1 - z2, l = -(lambda - 1) / 2,
/// r = (lambda + 1) / 2.
inline BinaryHardConcrete binary_equivalent(const KDHardConcrete& d) {
  detail::require(d.z.size() == 2, "binary_equivalent: need K = 2");
  detail::require(d.lambda > 1.0, "binary_equivalent: need lambda > 1");
  return {d.z[0] - d.z[1], d.beta, -(d.lambda - 1.0) / 2.0, (d.lambda + 1.0) / 2.0};
}

}  // namespace mixsimplex
