#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mixsimplex.hpp"
#include "mixsimplex/oracles.hpp"
#include "support.hpp"

using namespace mixsimplex;
using testing_support::binomial_z;
using testing_support::face_counts;

namespace {

std::vector<double> random_w(Rng& g, int k, double scale = 2.0) {
  std::vector<double> w(static_cast<std::size_t>(k));
  for (double& x : w) x = scale * standard_normal(g);
  return w;
}

FaceIndexSet face(std::vector<int> idx, int k) { return FaceIndexSet::from_indices(idx, k); }

}  // namespace

TEST(FaceLatticeDag, Shape) {
  for (int k = 1; k <= 30; ++k) {
    const FaceLatticeDag dag(k);
    EXPECT_EQ(dag.states()[dag.source()], (DagState{0, 0, 0}));
    EXPECT_EQ(dag.states()[dag.sink()], (DagState{k + 1, 0, 1}));
    EXPECT_LE(dag.states().size(), static_cast<std::size_t>(3 * k + 2));
    EXPECT_LE(dag.arcs().size(), static_cast<std::size_t>(6 * k + 2));
  }
}

TEST(LogNormalizer, ZeroWeights) {
  const std::vector<double> w3(3, 0.0);
  EXPECT_NEAR(log_normalizer(w3), std::log(7.0), 1e-14);
  for (int k = 1; k <= 40; ++k) {
    const std::vector<double> w(static_cast<std::size_t>(k), 0.0);
    EXPECT_NEAR(log_normalizer(w), std::log(std::ldexp(1.0, k) - 1.0), 1e-12) << k;
  }
}

TEST(LogNormalizer, MatchesEnumerationAndClosedForm) {
  Rng g = make_stream(21);
  for (int t = 0; t < 20; ++t) {
    const auto w = random_w(g, 12);
    const double ref = oracle::log_normalizer(w);
    EXPECT_NEAR(log_normalizer(w) / ref, 1.0, 1e-10);
    EXPECT_NEAR(log_normalizer_closed_form(w) / ref, 1.0, 1e-12);
  }
}

TEST(LogNormalizer, FiniteForExtremeWeights) {
  const std::vector<double> w{700.0, -700.0, 300.0};
  EXPECT_TRUE(std::isfinite(log_normalizer(w)));
}

TEST(ExpectedSuffStats, Examples) {
  const std::vector<double> w0(2, 0.0);
  const auto e = expected_suff_stats(w0);
  EXPECT_NEAR(e[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(e[1], 1.0 / 3.0, 1e-15);
  const std::vector<double> forced{30.0, 0.2, -0.4};
  EXPECT_NEAR(expected_suff_stats(forced)[0], 1.0, 1e-12);
}

TEST(ExpectedSuffStats, MatchesEnumerationAndStaysInOpenInterval) {
  Rng g = make_stream(22);
  for (int t = 0; t < 20; ++t) {
    const auto w = random_w(g, 10);
    const auto e = expected_suff_stats(w);
    const auto ref = oracle::expected_phi(w);
    for (std::size_t k = 0; k < w.size(); ++k) {
      EXPECT_NEAR(e[k], ref[k], 1e-10);
      EXPECT_GT(e[k], -1.0);
      EXPECT_LT(e[k], 1.0);
    }
  }
}

TEST(ExpectedSuffStats, IsGradientOfLogNormalizer) {
  Rng g = make_stream(23);
  const auto w = random_w(g, 6, 1.0);
  const auto fd = oracle::gradient_fd([](std::span<const double> x) { return log_normalizer(x); }, w, 1e-6);
  const auto e = expected_suff_stats(w);
  for (std::size_t k = 0; k < w.size(); ++k) EXPECT_NEAR(e[k], fd[k], 1e-8);
}

TEST(FaceLogProb, Examples) {
  const GibbsFaceDistribution uniform(std::vector<double>(3, 0.0));
  for (const auto& f : enumerate_faces(3)) EXPECT_NEAR(face_log_prob(uniform, f), -std::log(7.0), 1e-14);
  const GibbsFaceDistribution d({10.0, -10.0});
  const double expected = -std::log1p(std::exp(-40.0) + std::exp(-20.0));
  EXPECT_NEAR(face_log_prob(d, face({0}, 2)), expected, 1e-14);
  EXPECT_NEAR(face_log_prob(d, face({0}, 2)), -2.06e-9, 0.01e-9);
}

TEST(FaceLogProb, SumsToOne) {
  Rng g = make_stream(24);
  const GibbsFaceDistribution d(random_w(g, 8));
  double total = 0.0;
  for (const auto& f : enumerate_faces(8)) total += std::exp(face_log_prob(d, f));
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(SampleFace, UniformFrequencies) {
  const GibbsFaceDistribution d(std::vector<double>(3, 0.0));
  Rng g = make_stream(25);
  const double n = 1e6;
  const auto counts = face_counts(3, 1000000, g, [&](Rng& r) { return sample_face(d, r); });
  for (double c : counts) EXPECT_LT(binomial_z(c, n, 1.0 / 7.0), 4.0);
}

TEST(SampleFace, ForcedMembership) {
  const GibbsFaceDistribution d({30.0, 0.0, 0.0, 0.0});
  Rng g = make_stream(26);
  for (int i = 0; i < 10000; ++i) ASSERT_TRUE(sample_face(d, g).contains(0));
}

TEST(SampleFace, TotalVariationToExact) {
  Rng g = make_stream(27);
  const auto w = random_w(g, 4, 1.0);
  const GibbsFaceDistribution d(w);
  const auto counts = face_counts(4, 1000000, g, [&](Rng& r) { return sample_face(d, r); });
  EXPECT_LT(oracle::total_variation(counts, oracle::face_probs(w)), 0.005);
}

TEST(Entropy, Examples) {
  EXPECT_NEAR(entropy(GibbsFaceDistribution(std::vector<double>(3, 0.0))), std::log(7.0), 1e-14);
  EXPECT_NEAR(entropy(GibbsFaceDistribution(std::vector<double>(5, 30.0))), 0.0, 1e-20);
}

TEST(EntropyKl, MatchEnumeration) {
  Rng g = make_stream(28);
  for (int t = 0; t < 20; ++t) {
    const auto w = random_w(g, 10);
    const auto v = random_w(g, 10);
    const GibbsFaceDistribution p(w), q(v);
    EXPECT_NEAR(entropy(p), oracle::entropy(w), 1e-10);
    EXPECT_NEAR(kl(p, q), oracle::kl(w, v), 1e-10);
    EXPECT_NEAR(kl(p, p), 0.0, 1e-14);
  }
}

TEST(Kl, NonNegative) {
  Rng g = make_stream(29);
  for (int t = 0; t < 1000; ++t) {
    const int k = 2 + t % 8;
    EXPECT_GE(kl(GibbsFaceDistribution(random_w(g, k)), GibbsFaceDistribution(random_w(g, k))), 0.0);
  }
}

TEST(GradLogProb, Examples) {
  const GibbsFaceDistribution d(std::vector<double>(2, 0.0));
  const auto gr = grad_log_prob(d, face({0, 1}, 2));
  EXPECT_NEAR(gr[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(gr[1], 2.0 / 3.0, 1e-15);
}

TEST(GradLogProb, MatchesFiniteDifferences) {
  Rng g = make_stream(30);
  for (int t = 0; t < 50; ++t) {
    const int k = 2 + t % 6;
    const auto w = random_w(g, k, 1.0);
    const auto faces = enumerate_faces(k);
    const FaceIndexSet f = faces[static_cast<std::size_t>(g() % faces.size())];
    const auto gr = grad_log_prob(GibbsFaceDistribution(w), f);
    const auto fd = oracle::gradient_fd(
        [&](std::span<const double> x) {
          return face_log_prob(GibbsFaceDistribution(std::vector<double>(x.begin(), x.end())), f);
        },
        w, 1e-6);
    for (std::size_t i = 0; i < gr.size(); ++i) ASSERT_NEAR(gr[i], fd[i], 1e-5);
  }
}

TEST(GradLogProb, ExpectedScoreIsZero) {
  Rng g = make_stream(31);
  const auto w = random_w(g, 10);
  const GibbsFaceDistribution d(w);
  const auto faces = enumerate_faces(10);
  const auto p = oracle::face_probs(w);
  std::vector<double> acc(10, 0.0);
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const auto gr = grad_log_prob(d, faces[i]);
    for (std::size_t k = 0; k < 10; ++k) acc[k] += p[i] * gr[k];
  }
  for (double v : acc) EXPECT_NEAR(v, 0.0, 1e-10);
}

TEST(MostProbableFace, Examples) {
  EXPECT_EQ(most_probable_face(std::vector<double>{1.0, -1.0, 2.0}), face({0, 2}, 3));
  EXPECT_EQ(most_probable_face(std::vector<double>{-1.0, -2.0}), face({0}, 2));
}

TEST(MostProbableFace, MatchesEnumeration) {
  Rng g = make_stream(32);
  for (int t = 0; t < 200; ++t) {
    const int k = 1 + t % 12;
    const auto w = random_w(g, k);
    EXPECT_EQ(most_probable_face(w), oracle::most_probable_face(w));
  }
}

TEST(ScoreFunction, MatchesExactGradient) {
  // E[loss] with loss(F) = |F|: gradient by enumeration versus the estimator.
  const std::vector<double> w{0.3, -0.5, 0.8};
  const GibbsFaceDistribution d(w);
  const auto faces = enumerate_faces(3);
  const auto p = oracle::face_probs(w);
  std::vector<double> exact(3, 0.0);
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const auto gr = grad_log_prob(d, faces[i]);
    for (std::size_t k = 0; k < 3; ++k) exact[k] += p[i] * faces[i].size() * gr[k];
  }
  Rng g = make_stream(33);
  auto loss = [](const FaceIndexSet& f, Rng&) { return static_cast<double>(f.size()); };
  for (auto baseline : {ScoreBaseline::kNone, ScoreBaseline::kSelfCritic}) {
    const auto est = score_function_gradient(d, loss, g, 200000, baseline);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(est[k], exact[k], 0.02);
  }
}
