#pragma once

// Geometry of the probability simplex and the unit hypercube: sparsemax
// projection, faces as index sets, face stratification of point batches.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mixsimplex/errors.hpp"

namespace mixsimplex {

/// Largest alphabet whose faces fit in one machine word. A multi-word
/// representation would only change FaceIndexSet's storage; lattice
/// algorithms never enumerate faces.
inline constexpr int kMaxFaceAlphabet = 63;
/// Largest alphabet enumerate_faces will materialize (2^20 - 1 faces).
inline constexpr int kMaxEnumerationAlphabet = 20;

/// A nonempty subset I of {0, ..., K-1}, i.e. the proper face f_I of the
/// simplex. Indices are zero-based in code; text output is one-based.
class FaceIndexSet {
 public:
  FaceIndexSet() = default;

  FaceIndexSet(std::uint64_t members, int alphabet_size) : members_(members), k_(alphabet_size) {
    detail::require(alphabet_size >= 1 && alphabet_size <= kMaxFaceAlphabet, "face: alphabet size must be in [1, 63]");
    detail::require(members != 0, "face: the empty face is not a proper face");
    detail::require((members >> alphabet_size) == 0, "face: member index out of range");
  }

  static FaceIndexSet from_indices(std::span<const int> indices, int alphabet_size) {
    std::uint64_t mask = 0;
    for (int i : indices) {
      detail::require(i >= 0 && i < alphabet_size, "face: member index out of range");
      mask |= std::uint64_t{1} << i;
    }
    return {mask, alphabet_size};
  }

  static FaceIndexSet full(int alphabet_size) {
    return {alphabet_size == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << alphabet_size) - 1, alphabet_size};
  }

  static FaceIndexSet vertex(int index, int alphabet_size) { return {std::uint64_t{1} << index, alphabet_size}; }

  std::uint64_t mask() const { return members_; }
  int alphabet_size() const { return k_; }
  int size() const { return std::popcount(members_); }
  int dimension() const { return size() - 1; }
  bool contains(int k) const { return ((members_ >> k) & 1U) != 0; }

  std::vector<int> indices() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (int k = 0; k < k_; ++k)
      if (contains(k)) out.push_back(k);
    return out;
  }

  /// Sufficient statistic: +1 for members, -1 otherwise.
  std::vector<double> phi() const {
    std::vector<double> out(static_cast<std::size_t>(k_));
    for (int k = 0; k < k_; ++k) out[static_cast<std::size_t>(k)] = contains(k) ? 1.0 : -1.0;
    return out;
  }

  /// "{1,3}" with one-based indices.
  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (int k : indices()) {
      if (!first) s += ',';
      s += std::to_string(k + 1);
      first = false;
    }
    return s + "}";
  }

  friend bool operator==(const FaceIndexSet&, const FaceIndexSet&) = default;
  friend auto operator<=>(const FaceIndexSet& a, const FaceIndexSet& b) {
    if (a.k_ != b.k_) return a.k_ <=> b.k_;
    return a.members_ <=> b.members_;
  }

 private:
  std::uint64_t members_ = 1;
  int k_ = 1;
};

/// A point of the simplex with its support face. Coordinates outside the
/// support are stored as exact zeros.
class SimplexPoint {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit SimplexPoint(std::vector<double> coords) : coords_(std::move(coords)) {
    const int k = static_cast<int>(coords_.size());
    detail::require(k >= 1 && k <= kMaxFaceAlphabet, "simplex point: dimension must be in [1, 63]");
    double sum = 0.0;
    std::uint64_t mask = 0;
    for (int i = 0; i < k; ++i) {
      const double c = coords_[static_cast<std::size_t>(i)];
      detail::require(std::isfinite(c), "simplex point: non-finite coordinate");
      detail::require(c >= 0.0, "simplex point: negative coordinate");
      if (c > 0.0) mask |= std::uint64_t{1} << i;
      sum += c;
    }
    detail::require(std::abs(sum - 1.0) <= kSumTolerance, "simplex point: coordinates must sum to one");
    support_ = FaceIndexSet(mask, k);
  }

  static SimplexPoint vertex(int index, int alphabet_size) {
    std::vector<double> c(static_cast<std::size_t>(alphabet_size), 0.0);
    c[static_cast<std::size_t>(index)] = 1.0;
    return SimplexPoint(std::move(c));
  }

  std::span<const double> coords() const { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }
  int alphabet_size() const { return static_cast<int>(coords_.size()); }
  const FaceIndexSet& support() const { return support_; }

  friend bool operator==(const SimplexPoint& a, const SimplexPoint& b) { return a.coords_ == b.coords_; }

 private:
  std::vector<double> coords_;
  FaceIndexSet support_;
};

/// Euclidean projection of z onto the simplex. Coordinates with z_k <= tau
/// (ties included) are written as exact zeros.
inline SimplexPoint sparsemax(std::span<const double> z) {
  const std::size_t k = z.size();
  detail::require(k >= 2, "sparsemax: need at least two coordinates");
  for (double v : z) detail::require(std::isfinite(v), "sparsemax: non-finite input");

  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] > candidate) tau = candidate;
    else break;
  }

  std::vector<double> y(k, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (z[i] > tau) {
      y[i] = z[i] - tau;
      total += y[i];
    }
  }
  // Rounding in tau can leave the sum a few ulps (scaled by |z|) off one.
  for (double& v : y) v /= total;
  return SimplexPoint(std::move(y));
}

/// Dense row-major K x K matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

/// Jacobian of sparsemax at z: diag(s) - s s^T / |S| with s the support
/// indicator. At a non-differentiable point this is the one-sided derivative
/// that treats ties as outside the support.
inline Matrix sparsemax_jacobian(std::span<const double> z) {
  const SimplexPoint y = sparsemax(z);
  const FaceIndexSet& s = y.support();
  const double inv = 1.0 / static_cast<double>(s.size());
  Matrix j(z.size(), z.size());
  for (std::size_t a = 0; a < z.size(); ++a) {
    if (!s.contains(static_cast<int>(a))) continue;
    for (std::size_t b = 0; b < z.size(); ++b) {
      if (!s.contains(static_cast<int>(b))) continue;
      j(a, b) = (a == b ? 1.0 : 0.0) - inv;
    }
  }
  return j;
}

inline FaceIndexSet face_of(const SimplexPoint& y) { return y.support(); }

/// All 2^K - 1 nonempty faces in ascending bitmask order.
inline std::vector<FaceIndexSet> enumerate_faces(int alphabet_size) {
  if (alphabet_size > kMaxEnumerationAlphabet)
    throw resource_limit_error("enumerate_faces: K = " + std::to_string(alphabet_size) + " exceeds the limit of " +
                               std::to_string(kMaxEnumerationAlphabet));
  detail::require(alphabet_size >= 1, "enumerate_faces: K must be positive");
  const std::uint64_t count = (std::uint64_t{1} << alphabet_size) - 1;
  std::vector<FaceIndexSet> out;
  out.reserve(count);
  for (std::uint64_t m = 1; m <= count; ++m) out.emplace_back(m, alphabet_size);
  return out;
}

enum class Trit : std::uint8_t { kZero, kOne, kInterior };

/// Face of the hypercube [0,1]^K: one trit per coordinate.
struct HypercubeFace {
  std::vector<Trit> trits;

  int dimension() const {
    return static_cast<int>(std::count(trits.begin(), trits.end(), Trit::kInterior));
  }
  friend bool operator==(const HypercubeFace&, const HypercubeFace&) = default;
};

inline Trit trit_of(double v) {
  if (v == 0.0) return Trit::kZero;
  if (v == 1.0) return Trit::kOne;
  return Trit::kInterior;
}

inline HypercubeFace hypercube_face_of(std::span<const double> y) {
  constexpr double kTol = 1e-12;
  HypercubeFace face;
  face.trits.reserve(y.size());
  for (double v : y) {
    detail::require(std::isfinite(v) && v >= -kTol && v <= 1.0 + kTol, "hypercube_face_of: coordinate outside [0, 1]");
    face.trits.push_back(trit_of(v));
  }
  return face;
}

struct FaceHistogram {
  std::map<FaceIndexSet, std::size_t> by_face;
  std::map<int, std::size_t> by_dimension;
  std::size_t total = 0;
};

inline FaceHistogram face_histogram(std::span<const SimplexPoint> points) {
  detail::require(!points.empty(), "face_histogram: empty batch");
  const int k = points.front().alphabet_size();
  FaceHistogram h;
  for (const auto& p : points) {
    detail::require(p.alphabet_size() == k, "face_histogram: inconsistent alphabet sizes");
    const FaceIndexSet f = face_of(p);
    ++h.by_face[f];
    ++h.by_dimension[f.dimension()];
    ++h.total;
  }
  return h;
}

}  // namespace mixsimplex
