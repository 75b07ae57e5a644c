#pragma once

// Slow, independent reference computations: brute-force face enumeration,
// an exhaustive active-set projection, finite differences and goodness of
// fit statistics. Used by the test suite and by `mixsimplex check`.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "mixsimplex/errors.hpp"
#include "mixsimplex/extrinsic.hpp"
#include "mixsimplex/quadrature.hpp"
#include "mixsimplex/random.hpp"
#include "mixsimplex/simplex.hpp"
#include "mixsimplex/special.hpp"

namespace mixsimplex::oracle {

/// Unnormalized log-weight sum_{k in I} w_k - sum_{k not in I} w_k.
inline double face_weight(std::span<const double> w, const FaceIndexSet& f) {
  double s = 0.0;
  for (int k = 0; k < static_cast<int>(w.size()); ++k) s += f.contains(k) ? w[static_cast<std::size_t>(k)] : -w[static_cast<std::size_t>(k)];
  return s;
}

/// Exact face probabilities by enumeration, in enumerate_faces order.
inline std::vector<double> face_probs(std::span<const double> w) {
  const auto faces = enumerate_faces(static_cast<int>(w.size()));
  std::vector<double> logs;
  logs.reserve(faces.size());
  for (const auto& f : faces) logs.push_back(face_weight(w, f));
  const double lz = log_sum_exp(logs);
  for (double& v : logs) v = std::exp(v - lz);
  return logs;
}

inline double log_normalizer(std::span<const double> w) {
  std::vector<double> logs;
  for (const auto& f : enumerate_faces(static_cast<int>(w.size()))) logs.push_back(face_weight(w, f));
  return log_sum_exp(logs);
}

inline std::vector<double> expected_phi(std::span<const double> w) {
  const auto faces = enumerate_faces(static_cast<int>(w.size()));
  const auto p = face_probs(w);
  std::vector<double> e(w.size(), 0.0);
  for (std::size_t i = 0; i < faces.size(); ++i)
    for (int k = 0; k < static_cast<int>(w.size()); ++k) e[static_cast<std::size_t>(k)] += p[i] * (faces[i].contains(k) ? 1.0 : -1.0);
  return e;
}

inline double entropy(std::span<const double> w) {
  double h = 0.0;
  for (double p : face_probs(w)) h -= xlogx(p);
  return h;
}

inline double kl(std::span<const double> w, std::span<const double> v) {
  const auto p = face_probs(w);
  const auto q = face_probs(v);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) acc += p[i] * (std::log(p[i]) - std::log(q[i]));
  return acc;
}

inline FaceIndexSet most_probable_face(std::span<const double> w) {
  const auto faces = enumerate_faces(static_cast<int>(w.size()));
  std::size_t best = 0;
  double best_w = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const double s = face_weight(w, faces[i]);
    if (s > best_w) {
      best_w = s;
      best = i;
    }
  }
  return faces[best];
}

/// Euclidean projection onto the simplex by trying every support S: the
/// candidate y_S = z_S - tau with tau = (sum z_S - 1) / |S| is optimal iff it
/// is positive on S and z_j <= tau off S.
inline std::vector<double> sparsemax_active_set(std::span<const double> z) {
  const int k = static_cast<int>(z.size());
  for (const auto& f : enumerate_faces(k)) {
    double sum = 0.0;
    for (int i : f.indices()) sum += z[static_cast<std::size_t>(i)];
    const double tau = (sum - 1.0) / f.size();
    bool ok = true;
    for (int i = 0; i < k && ok; ++i) {
      const double v = z[static_cast<std::size_t>(i)] - tau;
      ok = f.contains(i) ? v > 0.0 : v <= 1e-15;
    }
    if (!ok) continue;
    std::vector<double> y(z.size(), 0.0);
    for (int i : f.indices()) y[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] - tau;
    return y;
  }
  detail::fail("active-set oracle: no feasible support");
}

/// Central differences of a scalar function.
inline std::vector<double> gradient_fd(const std::function<double(std::span<const double>)>& f, std::span<const double> x,
                                       double h) {
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = xs[i];
    xs[i] = orig + h;
    const double up = f(xs);
    xs[i] = orig - h;
    const double down = f(xs);
    xs[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Central differences of a vector function: J(i, j) = d f_i / d x_j.
inline Matrix jacobian_fd(const std::function<std::vector<double>(std::span<const double>)>& f, std::span<const double> x,
                          double h) {
  std::vector<double> xs(x.begin(), x.end());
  const std::size_t m = f(xs).size();
  Matrix j(m, x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    const double orig = xs[c];
    xs[c] = orig + h;
    const auto up = f(xs);
    xs[c] = orig - h;
    const auto down = f(xs);
    xs[c] = orig;
    for (std::size_t r = 0; r < m; ++r) j(r, c) = (up[r] - down[r]) / (2.0 * h);
  }
  return j;
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit of observed counts against expected probabilities.
/// Cells with expected count below 5 are pooled into one.
inline ChiSquareResult chi_square(std::span<const double> counts, std::span<const double> probs) {
  detail::require(counts.size() == probs.size() && !counts.empty(), "chi_square: size mismatch");
  double n = 0.0;
  for (double c : counts) n += c;
  double stat = 0.0;
  int cells = 0;
  double pooled_obs = 0.0;
  double pooled_exp = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = n * probs[i];
    if (e < 5.0) {
      pooled_obs += counts[i];
      pooled_exp += e;
      continue;
    }
    stat += (counts[i] - e) * (counts[i] - e) / e;
    ++cells;
  }
  if (pooled_exp >= 5.0) {
    stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  }
  ChiSquareResult r;
  r.statistic = stat;
  r.dof = std::max(1, cells - 1);
  r.p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(r.dof), stat));
  return r;
}

/// Total variation distance between an empirical histogram and probabilities.
inline double total_variation(std::span<const double> counts, std::span<const double> probs) {
  double n = 0.0;
  for (double c : counts) n += c;
  double tv = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) tv += std::abs(counts[i] / n - probs[i]);
  return 0.5 * tv;
}

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a CDF, and its
/// asymptotic p-value.
inline std::pair<double, double> kolmogorov_smirnov(std::vector<double> xs, const std::function<double(double)>& cdf) {
  detail::require(!xs.empty(), "kolmogorov_smirnov: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double t = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) p += 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * t * t);
  return {d, std::clamp(p, 0.0, 1.0)};
}

/// Direct sum mass of a K = 3 Gaussian-Sparsemax split by face dimension:
/// the open triangle and the three open edges integrate exp(gs_log_density)
/// by Gauss-Legendre, the vertices use sampled face frequencies.
struct GsMass {
  double vertices = 0.0;
  double edges = 0.0;
  double interior = 0.0;
  double total() const { return vertices + edges + interior; }
};

template <Urbg64 G>
GsMass gs3_mass(const GaussianSparsemax& d, std::size_t vertex_samples, G& g, std::size_t panels = 32) {
  detail::require(d.alphabet_size() == 3, "gs3_mass: need K = 3");
  const GaussLegendre rule(8);
  GsMass m;
  // Triangle: y = (1 - a - (1 - a) b, a, (1 - a) b), density w.r.t. (y2, y3), Jacobian 1 - a.
  m.interior = integrate_composite(
      [&](double a) {
        return (1.0 - a) * integrate_composite(
                               [&](double b) {
                                 const double y2 = a;
                                 const double y3 = (1.0 - a) * b;
                                 const double y1 = 1.0 - y2 - y3;
                                 if (!(y1 > 0.0)) return 0.0;
                                 return std::exp(gs_log_density(d, SimplexPoint({y1, y2, y3})));
                               },
                               0.0, 1.0, rule, panels);
      },
      0.0, 1.0, rule, panels);
  // Edges {i, j}: y_i = 1 - t, y_j = t, density w.r.t. y_j.
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      m.edges += integrate_composite(
          [&](double t) {
            std::vector<double> y(3, 0.0);
            y[static_cast<std::size_t>(i)] = 1.0 - t;
            y[static_cast<std::size_t>(j)] = t;
            return std::exp(gs_log_density(d, SimplexPoint(std::move(y))));
          },
          0.0, 1.0, rule, panels);
    }
  }
  std::size_t hits = 0;
  for (std::size_t s = 0; s < vertex_samples; ++s) hits += gs_sample(d, g).face.size() == 1 ? 1 : 0;
  m.vertices = static_cast<double>(hits) / static_cast<double>(vertex_samples);
  return m;
}

}  // namespace mixsimplex::oracle
