#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "mixsimplex.hpp"
#include "mixsimplex/oracles.hpp"
#include "support.hpp"

using namespace mixsimplex;

namespace {

std::vector<double> normals(Rng& g, int k, double scale) {
  std::vector<double> v(static_cast<std::size_t>(k));
  for (double& x : v) x = scale * standard_normal(g);
  return v;
}

std::vector<double> positives(Rng& g, int k, double lo, double hi) {
  std::vector<double> v(static_cast<std::size_t>(k));
  for (double& x : v) x = lo + (hi - lo) * uniform01(g);
  return v;
}

}  // namespace

TEST(MixedDirichletSample, ForcedVertex) {
  const MixedDirichlet md({30.0, -30.0, -30.0}, {1.0, 2.0, 3.0});
  Rng g = make_stream(41);
  for (int i = 0; i < 10000; ++i) {
    const auto s = sample(md, g);
    ASSERT_EQ(s.face, FaceIndexSet::vertex(0, 3));
    ASSERT_EQ(s.point, SimplexPoint::vertex(0, 3));
  }
}

TEST(MixedDirichletSample, FlatDirichletIsUniformOnEachFace) {
  const MixedDirichlet md({0.0, 0.0, 0.0, 0.0}, std::vector<double>(4, 1.0));
  Rng g = make_stream(42);
  std::map<FaceIndexSet, std::vector<double>> first_coord;
  for (int i = 0; i < 200000; ++i) {
    const auto s = sample(md, g);
    if (s.face.size() < 2) continue;
    first_coord[s.face].push_back(s.point[static_cast<std::size_t>(s.face.indices().front())]);
  }
  ASSERT_EQ(first_coord.size(), 11U);
  for (const auto& [f, xs] : first_coord) {
    const double m = f.size() - 1;
    const auto [stat, p] = oracle::kolmogorov_smirnov(xs, [m](double x) { return 1.0 - std::pow(1.0 - x, m); });
    EXPECT_GT(p, 1e-3) << f.to_string() << " D = " << stat;
  }
}

TEST(MixedDirichletSample, FaceHistogramMatchesGibbs) {
  Rng g = make_stream(43);
  const auto w = normals(g, 4, 1.0);
  const MixedDirichlet md(w, positives(g, 4, 0.5, 3.0));
  const auto counts = testing_support::face_counts(4, 1000000, g, [&](Rng& r) { return sample(md, r).face; });
  EXPECT_LT(oracle::total_variation(counts, oracle::face_probs(w)), 0.005);
}

TEST(MixedDirichletDensity, Examples) {
  const MixedDirichlet md({0.0, 0.0}, {1.0, 1.0});
  EXPECT_NEAR(log_density(md, SimplexPoint({0.5, 0.5})), -std::log(3.0), 1e-14);
  const MixedDirichlet md2({0.7, -0.2}, {2.0, 3.0});
  EXPECT_EQ(log_density(md2, SimplexPoint({1.0, 0.0})), face_log_prob(md2.faces(), FaceIndexSet::vertex(0, 2)));
}

TEST(MixedDirichletDensity, EdgeDensityIntegratesToFaceProbability) {
  const MixedDirichlet md({0.4, -0.1}, {2.5, 0.8});
  const double mass = integrate_graded_unit(
      [&](double t) { return std::exp(log_density(md, SimplexPoint({t, 1.0 - t}))); }, 1e-14, GaussLegendre(16), 64);
  EXPECT_NEAR(mass, std::exp(face_log_prob(md.faces(), FaceIndexSet::full(2))), 1e-6);
}

TEST(DirichletEntropy, FlatCases) {
  for (int k = 2; k <= 15; ++k) {
    const std::vector<double> ones(static_cast<std::size_t>(k), 1.0);
    EXPECT_NEAR(dirichlet_entropy(ones), -log_factorial(static_cast<unsigned>(k - 1)), 1e-12);
  }
  EXPECT_EQ(dirichlet_entropy(std::vector<double>{1.0, 1.0}), 0.0);
}

TEST(DirichletEntropy, MatchesMonteCarlo) {
  Rng g = make_stream(44);
  const auto alpha = positives(g, 3, 0.5, 4.0);
  RunningMoments m;
  for (int i = 0; i < 1000000; ++i) m.add(-dirichlet_log_density(sample_dirichlet(alpha, g), alpha));
  EXPECT_LT(std::abs(m.mean() - dirichlet_entropy(alpha)), 3.0 * m.std_error());
}

TEST(DirichletKl, Properties) {
  Rng g = make_stream(45);
  const auto a = positives(g, 3, 0.5, 4.0);
  const auto b = positives(g, 3, 0.5, 4.0);
  EXPECT_NEAR(dirichlet_kl(a, a), 0.0, 1e-14);
  RunningMoments m;
  for (int i = 0; i < 1000000; ++i) {
    const auto y = sample_dirichlet(a, g);
    m.add(dirichlet_log_density(y, a) - dirichlet_log_density(y, b));
  }
  EXPECT_LT(std::abs(m.mean() - dirichlet_kl(a, b)), 3.0 * m.std_error());
  for (int t = 0; t < 1000; ++t) {
    const int k = 2 + t % 6;
    EXPECT_GE(dirichlet_kl(positives(g, k, 0.1, 10.0), positives(g, k, 0.1, 10.0)), 0.0);
  }
}

TEST(MixedEntropy, Examples) {
  EXPECT_NEAR(entropy_exact(MixedDirichlet({0.0, 0.0}, {1.0, 1.0})).value, std::log(3.0), 1e-14);
  for (int k = 2; k <= 6; ++k) {
    const MixedDirichlet md(std::vector<double>(static_cast<std::size_t>(k), 30.0),
                            std::vector<double>(static_cast<std::size_t>(k), 1.0));
    EXPECT_NEAR(entropy_exact(md).value, -log_factorial(static_cast<unsigned>(k - 1)), 1e-9);
  }
}

TEST(MixedEntropy, MonteCarloAgreesWithExact) {
  Rng g = make_stream(46);
  const MixedDirichlet md(normals(g, 6, 1.0), positives(g, 6, 0.5, 3.0));
  const Estimate mc = entropy_mc(md, 100000, g);
  EXPECT_LT(std::abs(mc.value - entropy_exact(md).value), 3.0 * mc.std_error);
}

TEST(MixedKl, ExactAndMonteCarlo) {
  Rng g = make_stream(47);
  const MixedDirichlet p(normals(g, 8, 1.0), positives(g, 8, 0.5, 3.0));
  const MixedDirichlet q(normals(g, 8, 1.0), positives(g, 8, 0.5, 3.0));
  EXPECT_NEAR(kl_mixed_exact(p, p).value, 0.0, 1e-12);
  const double exact = kl_mixed_exact(p, q).value;
  EXPECT_GE(exact, 0.0);
  const Estimate mc = kl_mixed_mc(p, q, 100000, g);
  EXPECT_LT(std::abs(mc.value - exact), 3.0 * mc.std_error);
}

TEST(MixedKl, NonNegative) {
  Rng g = make_stream(48);
  for (int t = 0; t < 200; ++t) {
    const int k = 2 + t % 5;
    const MixedDirichlet p(normals(g, k, 1.5), positives(g, k, 0.2, 5.0));
    const MixedDirichlet q(normals(g, k, 1.5), positives(g, k, 0.2, 5.0));
    EXPECT_GE(kl_mixed_exact(p, q).value, 0.0);
  }
}

TEST(MixtureMean, SumsToOne) {
  const MixedDirichlet md({0.3, -0.4, 0.9, 0.1}, {1.0, 2.0, 0.5, 3.0});
  double s = 0.0;
  for (double v : mixture_mean_exact(md)) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(SampleDirichlet, TinyConcentrationsStayPositive) {
  Rng g = make_stream(49);
  const std::vector<double> alpha{1e-3, 2e-3, 1e-3};
  for (int i = 0; i < 20000; ++i) {
    const auto y = sample_dirichlet(alpha, g);
    double s = 0.0;
    for (double v : y) {
      ASSERT_GT(v, 0.0);
      s += v;
    }
    ASSERT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(MixedDirichletDensity, UsesOnlyTheFaceConcentrations) {
  const MixedDirichlet md({0.2, -0.5, 0.4, 0.1}, {0.7, 2.0, 1.3, 4.0});
  const SimplexPoint y({0.3, 0.0, 0.7, 0.0});
  const FaceIndexSet f = y.support();
  const std::vector<double> restricted_y{0.3, 0.7};
  const std::vector<double> restricted_alpha{0.7, 1.3};
  EXPECT_NEAR(log_density(md, y), face_log_prob(md.faces(), f) + dirichlet_log_density(restricted_y, restricted_alpha),
              1e-14);
}
