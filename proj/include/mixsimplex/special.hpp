#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/erf.hpp>

namespace mixsimplex {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

inline double log_sum_exp(std::span<const double> xs) {
  double hi = kNegInf;
  for (double x : xs) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

/// log(exp(a) - exp(b)) for a >= b.
inline double log_sub_exp(double a, double b) {
  if (b == kNegInf) return a;
  return a + std::log1p(-std::exp(b - a));
}

inline double digamma(double x) { return boost::math::digamma(x); }

inline double log_factorial(unsigned n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline double log_binomial(unsigned n, unsigned k) {
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

/// log B(alpha) = sum_k log Gamma(alpha_k) - log Gamma(sum_k alpha_k).
inline double log_multivariate_beta(std::span<const double> alpha) {
  double total = 0.0;
  double acc = 0.0;
  for (double a : alpha) {
    acc += std::lgamma(a);
    total += a;
  }
  return acc - std::lgamma(total);
}

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_log_pdf(double x, double mean, double sd) {
  const double t = (x - mean) / sd;
  return -0.5 * t * t - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

/// Standard normal CDF; erfc keeps full relative accuracy in the lower tail.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Inverse of normal_cdf on (0, 1).
inline double normal_quantile(double u) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// x log x with the 0 log 0 = 0 convention.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace mixsimplex
