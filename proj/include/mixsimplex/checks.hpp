#pragma once

// The verification suite behind `mixsimplex check`: every algorithm run
// against an independent oracle (enumeration, closed form, finite
// differences, sampling). All randomness is seeded, so reports are
// reproducible byte for byte.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mixsimplex/extrinsic.hpp"
#include "mixsimplex/face_gibbs.hpp"
#include "mixsimplex/glm.hpp"
#include "mixsimplex/info_theory.hpp"
#include "mixsimplex/mixed_dirichlet.hpp"
#include "mixsimplex/oracles.hpp"
#include "mixsimplex/random.hpp"
#include "mixsimplex/simplex.hpp"

namespace mixsimplex::checks {

enum class Level { kFast, kFull };

/// Deliberate defects for exercising the suite itself.
struct Faults {
  bool flip_log_normalizer_sign = false;
};

struct Result {
  std::string id;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

inline std::vector<double> uniform_vector(Rng& g, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * uniform01(g);
  return v;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

/// (value, stderr) of a Bernoulli frequency.
inline std::pair<double, double> frequency(std::size_t hits, std::size_t n) {
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(n))};
}

template <class Sampler>
std::vector<double> face_counts(int k, std::size_t n, Rng& g, Sampler&& draw) {
  const auto faces = enumerate_faces(k);
  std::vector<double> counts(faces.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) counts[static_cast<std::size_t>(draw(g).mask() - 1)] += 1.0;
  return counts;
}

}  // namespace detail

struct Check {
  std::string id;
  Level level;
  std::function<Result(const Faults&)> run;
};

inline std::vector<Check> registry() {
  using detail::fmt;
  std::vector<Check> c;
  auto add = [&](std::string id, Level level, std::function<std::pair<bool, std::string>(const Faults&, Rng&)> body) {
    std::uint64_t seed = 0xcbf29ce484222325ULL;  // FNV-1a of the id
    for (unsigned char ch : id) seed = (seed ^ ch) * 0x100000001b3ULL;
    c.push_back({id, level, [id, body, seed](const Faults& f) {
                   Rng g = make_stream(seed);
                   auto [ok, detail] = body(f, g);
                   return Result{id, ok, detail};
                 }});
  };

  add("gibbs.log-normalizer.enumeration", Level::kFast, [](const Faults& f, Rng& g) {
    double worst = 0.0;
    double worst_closed = 0.0;
    for (int k = 2; k <= 10; ++k) {
      for (int t = 0; t < 20; ++t) {
        const auto w = detail::uniform_vector(g, static_cast<std::size_t>(k), -3.0, 3.0);
        double dag = log_normalizer(w);
        if (f.flip_log_normalizer_sign) dag = -dag;
        const double brute = oracle::log_normalizer(w);
        worst = std::max(worst, detail::rel_err(dag, brute));
        worst_closed = std::max(worst_closed, detail::rel_err(log_normalizer_closed_form(w), brute));
      }
    }
    return std::pair{worst < 1e-10 && worst_closed < 1e-12,
                     fmt("max rel err dag %.2e, closed form %.2e", worst, worst_closed)};
  });

  add("gibbs.expected-phi.enumeration", Level::kFast, [](const Faults&, Rng& g) {
    double worst = 0.0;
    for (int k = 2; k <= 10; ++k) {
      for (int t = 0; t < 10; ++t) {
        const auto w = detail::uniform_vector(g, static_cast<std::size_t>(k), -3.0, 3.0);
        const auto a = expected_suff_stats(w);
        const auto b = oracle::expected_phi(w);
        for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
      }
    }
    return std::pair{worst < 1e-10, fmt("max abs err %.2e", worst)};
  });

  add("gibbs.entropy-kl.enumeration", Level::kFast, [](const Faults&, Rng& g) {
    double worst_h = 0.0;
    double worst_kl = 0.0;
    for (int k = 2; k <= 10; ++k) {
      for (int t = 0; t < 10; ++t) {
        const auto w = detail::uniform_vector(g, static_cast<std::size_t>(k), -3.0, 3.0);
        const auto v = detail::uniform_vector(g, static_cast<std::size_t>(k), -3.0, 3.0);
        const GibbsFaceDistribution p(w);
        const GibbsFaceDistribution q(v);
        worst_h = std::max(worst_h, std::abs(entropy(p) - oracle::entropy(w)));
        worst_kl = std::max(worst_kl, std::abs(kl(p, q) - oracle::kl(w, v)));
      }
    }
    return std::pair{worst_h < 1e-10 && worst_kl < 1e-10, fmt("max abs err entropy %.2e, kl %.2e", worst_h, worst_kl)};
  });

  add("gibbs.most-probable-face.enumeration", Level::kFast, [](const Faults&, Rng& g) {
    int bad = 0;
    for (int k = 2; k <= 10; ++k) {
      for (int t = 0; t < 20; ++t) {
        const auto w = detail::uniform_vector(g, static_cast<std::size_t>(k), -2.0, 2.0);
        bad += most_probable_face(w) == oracle::most_probable_face(w) ? 0 : 1;
      }
    }
    return std::pair{bad == 0, fmt("%.0f mismatches", bad)};
  });

  add("gibbs.grad-log-prob.finite-difference", Level::kFast, [](const Faults&, Rng& g) {
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const int k = 2 + t % 5;
      const auto w = detail::uniform_vector(g, static_cast<std::size_t>(k), -2.0, 2.0);
      const FaceIndexSet f(1 + static_cast<std::uint64_t>(uniform01(g) * ((1ULL << k) - 1)), k);
      const auto analytic = grad_log_prob(GibbsFaceDistribution(w), f);
      const auto fd = oracle::gradient_fd(
          [&](std::span<const double> x) {
            return face_log_prob(GibbsFaceDistribution(std::vector<double>(x.begin(), x.end())), f);
          },
          w, 1e-6);
      for (std::size_t i = 0; i < fd.size(); ++i) worst = std::max(worst, std::abs(fd[i] - analytic[i]));
    }
    return std::pair{worst < 1e-5, fmt("max abs err %.2e", worst)};
  });

  add("sparsemax.active-set", Level::kFast, [](const Faults&, Rng& g) {
    double worst = 0.0;
    for (int t = 0; t < 300; ++t) {
      const int k = 2 + t % 5;
      const auto z = detail::uniform_vector(g, static_cast<std::size_t>(k), -1.5, 1.5);
      const auto y = sparsemax(z);
      const auto ref = oracle::sparsemax_active_set(z);
      for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(y[i] - ref[i]));
    }
    return std::pair{worst < 1e-9, fmt("max abs err %.2e", worst)};
  });

  add("sparsemax.jacobian.finite-difference", Level::kFast, [](const Faults&, Rng& g) {
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const int k = 2 + t % 5;
      const auto z = detail::uniform_vector(g, static_cast<std::size_t>(k), -1.0, 1.0);
      const Matrix j = sparsemax_jacobian(z);
      const Matrix fd = oracle::jacobian_fd([](std::span<const double> x) {
        const SimplexPoint y = sparsemax(x);
        return std::vector<double>(y.coords().begin(), y.coords().end());
      }, z, 1e-6);
      for (std::size_t i = 0; i < j.data.size(); ++i) worst = std::max(worst, std::abs(j.data[i] - fd.data[i]));
    }
    return std::pair{worst < 1e-5, fmt("max abs err %.2e", worst)};
  });

  add("gibbs.sampling.chi-square", Level::kFast, [](const Faults&, Rng& g) {
    const std::vector<double> w{0.4, -0.3, 0.1};
    const GibbsFaceDistribution d(w);
    const auto counts = detail::face_counts(3, 100000, g, [&](Rng& r) { return sample_face(d, r); });
    const auto res = oracle::chi_square(counts, oracle::face_probs(w));
    return std::pair{res.p_value > 1e-3, fmt("chi2 %.3f, p %.4f", res.statistic, res.p_value)};
  });

  add("dirichlet.flat-entropy", Level::kFast, [](const Faults&, Rng&) {
    double worst = 0.0;
    for (int k = 2; k <= 12; ++k) {
      const std::vector<double> ones(static_cast<std::size_t>(k), 1.0);
      worst = std::max(worst, std::abs(dirichlet_entropy(ones) + log_factorial(static_cast<unsigned>(k - 1))));
    }
    return std::pair{worst < 1e-12, fmt("max abs err %.2e", worst)};
  });

  add("mixed-dirichlet.entropy.mc", Level::kFast, [](const Faults&, Rng& g) {
    const MixedDirichlet md({0.5, -0.2, 0.3, -0.6}, {1.5, 0.7, 2.0, 1.1});
    const double exact = entropy_exact(md).value;
    const Estimate mc = direct_sum_entropy_mc(md, 40000, g, 1);
    const double z = std::abs(mc.value - exact) / mc.std_error;
    return std::pair{z < 3.0, fmt("exact %.5f, mc %.5f, z %.2f", exact, mc.value, z)};
  });

  add("gaussian-sparsemax.k2.density-paths", Level::kFast, [](const Faults&, Rng&) {
    double worst = 0.0;
    const GaussianSparsemax d({0.3, -0.1}, {0.8, 0.6});
    const auto p2 = GaussianSparsemax2::from(d);
    for (int i = 0; i < 20; ++i) {
      const double y = i == 0 ? 0.0 : (i == 19 ? 1.0 : i / 19.0);
      const SimplexPoint pt({y, 1.0 - y});
      const double a = gs2_log_density(p2.z, p2.sigma, y);
      const double b = gs2_log_density_intrinsic(p2.z, p2.sigma, y);
      const double c = gs_log_density_general(d, pt);
      worst = std::max({worst, std::abs(a - b), std::abs(a - c)});
    }
    return std::pair{worst < 1e-8, fmt("max abs err %.2e", worst)};
  });

  add("gaussian-sparsemax.k2.face-probs.mc", Level::kFast, [](const Faults&, Rng& g) {
    const GaussianSparsemax d({0.2, 0.1}, {0.5, 0.5});
    const auto p2 = GaussianSparsemax2::from(d);
    const auto exact = gs2_face_probs(p2.z, p2.sigma);
    std::size_t n0 = 0;
    std::size_t n1 = 0;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = gs_sample(d, g);
      if (s.point[0] == 0.0) ++n0;
      if (s.point[0] == 1.0) ++n1;
    }
    const auto [f0, e0] = detail::frequency(n0, n);
    const auto [f1, e1] = detail::frequency(n1, n);
    const double z = std::max(std::abs(f0 - exact.p0) / e0, std::abs(f1 - exact.p1) / e1);
    return std::pair{z < 4.0, fmt("P0 %.4f vs %.4f, max z %.2f", exact.p0, f0, z)};
  });

  add("gaussian-sparsemax.pivot-invariance", Level::kFast, [](const Faults&, Rng& g) {
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      const auto mu = detail::uniform_vector(g, 4, -0.5, 0.5);
      const auto sigma = detail::uniform_vector(g, 4, 0.4, 1.5);
      const GaussianSparsemax d(mu, sigma);
      const SimplexPoint y = sparsemax(detail::uniform_vector(g, 4, -0.2, 1.0));
      const auto support = y.support().indices();
      const double base = gs_log_density_general(d, y, {}, support.front());
      for (int p : support) worst = std::max(worst, std::abs(gs_log_density_general(d, y, {}, p) - base));
    }
    return std::pair{worst < 1e-8, fmt("max abs diff %.2e", worst)};
  });

  add("gaussian-sparsemax.constant-variance", Level::kFast, [](const Faults&, Rng& g) {
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const auto mu = detail::uniform_vector(g, 3, -0.5, 0.5);
      const GaussianSparsemax d(mu, {0.9, 0.9, 0.9});
      const SimplexPoint y = sparsemax(detail::uniform_vector(g, 3, -0.2, 1.0));
      worst = std::max(worst, std::abs(gs_log_density_constant_variance(d, y) - gs_log_density_general(d, y)));
    }
    return std::pair{worst < 1e-8, fmt("max abs diff %.2e", worst)};
  });

  add("maxent.laguerre-vs-series", Level::kFast, [](const Faults&, Rng&) {
    double worst = 0.0;
    for (int k = 2; k <= 30; ++k)
      for (int n = 0; n <= 8; ++n)
        worst = std::max(worst, std::abs(maxent_entropy(k, n) - maxent_entropy_series(k, n)) / std::abs(maxent_entropy_series(k, n)));
    double closed = std::abs(maxent_entropy(3, 0) - std::log(6.5));
    for (int n = 0; n <= 8; ++n) closed = std::max(closed, std::abs(maxent_entropy(2, n) - std::log(2.0 + std::ldexp(1.0, n))));
    return std::pair{worst < 1e-10 && closed < 1e-12, fmt("max rel diff %.2e, closed-form err %.2e", worst, closed)};
  });

  add("coding-entropy.maxent-k2", Level::kFast, [](const Faults&, Rng&) {
    double worst = 0.0;
    for (int n = 0; n <= 8; ++n) {
      const MaxEntMixed d(2, n);
      const double h = coding_entropy(exact_face_distribution(d), d.direct_sum_entropy(), n);
      worst = std::max(worst, std::abs(h - std::log(2.0 + std::ldexp(1.0, n))));
    }
    return std::pair{worst < 1e-12, fmt("max abs err %.2e", worst)};
  });

  add("hard-concrete.coupling", Level::kFast, [](const Faults&, Rng& g) {
    double worst = 0.0;
    const KDHardConcrete kd({0.4, -0.3}, 0.5, 1.1);
    const BinaryHardConcrete bin = binary_equivalent(kd);
    for (int t = 0; t < 2000; ++t) {
      const double u = uniform01(g);
      const std::vector<double> noise{std::log(u) - std::log1p(-u), 0.0};
      const double a = khc_transform(kd, noise)[0];
      const double b = binary_hard_concrete_transform(bin, u).value;
      worst = std::max(worst, std::abs(a - b));
    }
    return std::pair{worst < 1e-12, fmt("max abs diff %.2e", worst)};
  });

  add("hard-concrete.prob-zero", Level::kFast, [](const Faults&, Rng& g) {
    const BinaryHardConcrete d(0.3, 2.0 / 3.0);
    std::size_t zeros = 0;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) zeros += binary_hard_concrete_sample(d, g).trit == Trit::kZero ? 1 : 0;
    const auto [f, e] = detail::frequency(zeros, n);
    const double z = std::abs(f - d.prob_zero()) / e;
    return std::pair{z < 4.0, fmt("closed form %.5f, empirical %.5f, z %.2f", d.prob_zero(), f, z)};
  });

  add("glm.gradient.finite-difference", Level::kFast, [](const Faults&, Rng& g) {
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      const auto data = generate_planted_dataset(3, 2, 8, 100 + static_cast<std::uint64_t>(t)).rows;
      GlmModel m(3, 2);
      m.set_parameters(detail::uniform_vector(g, m.num_parameters(), -0.7, 0.7));
      const auto analytic = glm_log_likelihood(m, data).gradient;
      const auto fd = oracle::gradient_fd(
          [&](std::span<const double> p) {
            GlmModel q = m;
            q.set_parameters(p);
            return glm_log_likelihood(q, data).value;
          },
          m.parameters(), 1e-5);
      for (std::size_t i = 0; i < fd.size(); ++i) worst = std::max(worst, std::abs(fd[i] - analytic[i]));
    }
    return std::pair{worst < 1e-4, fmt("max abs err %.2e", worst)};
  });

  // Full level.

  add("gaussian-sparsemax.k3.normalization", Level::kFull, [](const Faults&, Rng& g) {
    const GaussianSparsemax d({0.3, 0.0, -0.2}, {1.0, 1.0, 1.0});
    const auto m = oracle::gs3_mass(d, 200000, g);
    return std::pair{std::abs(m.total() - 1.0) < 1e-2,
                     fmt("total mass %.5f (vertices %.4f, edges %.4f)", m.total(), m.vertices, m.edges)};
  });

  add("gaussian-sparsemax.quadrature-refinement", Level::kFull, [](const Faults&, Rng& g) {
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const GaussianSparsemax d(detail::uniform_vector(g, 4, -0.5, 0.5), detail::uniform_vector(g, 4, 0.4, 1.5));
      const SimplexPoint y = sparsemax(detail::uniform_vector(g, 4, -0.2, 1.0));
      QuadratureConfig fine;
      fine.panels *= 2;
      worst = std::max(worst, std::abs(gs_log_density(d, y) - gs_log_density(d, y, fine)));
    }
    return std::pair{worst < 1e-6, fmt("max change %.2e", worst)};
  });

  add("sampling.chi-square.1e6", Level::kFull, [](const Faults&, Rng& g) {
    const std::size_t n = 1000000;
    double worst_p = 1.0;
    for (int k = 2; k <= 4; ++k) {
      const auto w = detail::uniform_vector(g, static_cast<std::size_t>(k), -1.0, 1.0);
      const GibbsFaceDistribution d(w);
      const auto probs = oracle::face_probs(w);
      worst_p = std::min(worst_p, oracle::chi_square(detail::face_counts(k, n, g, [&](Rng& r) { return sample_face(d, r); }), probs).p_value);
      const MixedDirichlet md(w, std::vector<double>(static_cast<std::size_t>(k), 0.8));
      worst_p = std::min(worst_p, oracle::chi_square(detail::face_counts(k, n, g, [&](Rng& r) { return sample(md, r).face; }), probs).p_value);
      const MaxEntMixed me(k, 1);
      std::vector<double> me_probs;
      for (const auto& f : enumerate_faces(k)) me_probs.push_back(std::exp(me.face_log_prob(f)));
      worst_p = std::min(worst_p, oracle::chi_square(detail::face_counts(k, n, g, [&](Rng& r) { return maxent_sample(me, r).face; }), me_probs).p_value);
    }
    return std::pair{worst_p > 1e-3, fmt("smallest p %.4f", worst_p)};
  });

  add("gaussian-sparsemax.k2.entropy-kl.mc", Level::kFull, [](const Faults&, Rng& g) {
    const GaussianSparsemax p({0.3, 0.0}, {0.6, 0.6});
    const GaussianSparsemax q({0.1, 0.2}, {0.9, 0.5});
    const auto pp = GaussianSparsemax2::from(p);
    const auto qq = GaussianSparsemax2::from(q);
    const Estimate h = direct_sum_entropy_mc(p, 1000000, g, 1);
    const KlOutcome k = direct_sum_kl_mc(p, q, 1000000, g, 1);
    const double zh = std::abs(h.value - gs2_entropy(pp.z, pp.sigma)) / h.std_error;
    const double zk = std::abs(k.estimate.value - gs2_kl(pp.z, pp.sigma, qq.z, qq.sigma)) / k.estimate.std_error;
    return std::pair{zh < 3.0 && zk < 3.0, fmt("entropy z %.2f, kl z %.2f", zh, zk)};
  });

  add("glm.planted-recovery", Level::kFull, [](const Faults&, Rng& g) {
    double worst_f1 = 1.0;
    double worst_gap = -1.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto ds = generate_planted_dataset(5, 4, 500, seed);
      const std::vector<GlmObservation> train(ds.rows.begin(), ds.rows.begin() + 100);
      GlmFitConfig cfg;
      cfg.seed = seed;
      const auto fit = glm_fit(train, cfg);
      std::vector<SimplexPoint> mpm;
      std::vector<SimplexPoint> sm;
      std::vector<SimplexPoint> truth;
      for (auto it = ds.rows.begin() + 100; it != ds.rows.end(); ++it) {
        mpm.push_back(predict_most_probable_mean(fit.model, it->x));
        sm.push_back(predict_sample_mean(fit.model, it->x, 100, g));
        truth.push_back(it->y);
      }
      const auto a = regression_metrics(mpm, truth);
      const auto b = regression_metrics(sm, truth);
      worst_f1 = std::min(worst_f1, a.macro_f1);
      worst_gap = std::max(worst_gap, a.rmse - b.rmse);
    }
    return std::pair{worst_f1 > 0.9 && worst_gap < 0.02, fmt("min macro-F1 %.3f, max rmse gap %.4f", worst_f1, worst_gap)};
  });

  add("maxent.local-optimality", Level::kFull, [](const Faults&, Rng&) {
    double worst = -1.0;
    for (int k = 2; k <= 4; ++k) {
      for (int n = 0; n <= 1; ++n) {
        const auto g0 = MaxEntMixed(k, n).g_vector();
        const double best = maxent_objective(k, n, g0);
        for (int i = 0; i < k; ++i) {
          for (int j = 0; j < k; ++j) {
            if (i == j) continue;
            auto gp = g0;
            gp[static_cast<std::size_t>(i)] += 1e-3;
            gp[static_cast<std::size_t>(j)] -= 1e-3;
            if (gp[static_cast<std::size_t>(j)] < 0.0) continue;
            worst = std::max(worst, maxent_objective(k, n, gp) - best);
          }
        }
      }
    }
    return std::pair{worst <= 1e-9, fmt("max objective gain %.2e", worst)};
  });

  return c;
}

/// Runs every check of the level (full includes fast).
inline std::vector<Result> run(Level level, const Faults& faults = {}) {
  std::vector<Result> out;
  for (const auto& check : registry()) {
    if (level == Level::kFast && check.level == Level::kFull) continue;
    try {
      out.push_back(check.run(faults));
    } catch (const std::exception& e) {
      out.push_back({check.id, false, std::string("exception: ") + e.what()});
    }
  }
  return out;
}

}  // namespace mixsimplex::checks
