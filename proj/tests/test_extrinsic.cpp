#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mixsimplex.hpp"
#include "mixsimplex/oracles.hpp"
#include "support.hpp"

using namespace mixsimplex;
using testing_support::binomial_z;

namespace {

struct Gs2Counts {
  double p0 = 0, p1 = 0, pc = 0;
};

Gs2Counts gs2_counts(const GaussianSparsemax& d, std::size_t n, Rng& g) {
  Gs2Counts c;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = gs_sample(d, g).point[0];
    if (y == 0.0) ++c.p0;
    else if (y == 1.0) ++c.p1;
    else ++c.pc;
  }
  return c;
}

}  // namespace

TEST(GsSample, VanishingNoiseReturnsMean) {
  const GaussianSparsemax d({0.2, 0.3, 0.5}, {1e-12, 1e-12, 1e-12});
  Rng g = make_stream(71);
  const auto s = gs_sample(d, g);
  EXPECT_NEAR(s.point[0], 0.2, 1e-9);
  EXPECT_NEAR(s.point[1], 0.3, 1e-9);
  EXPECT_NEAR(s.point[2], 0.5, 1e-9);
}

TEST(GsSample, SymmetricVertices) {
  const GaussianSparsemax d({0.5, 0.5}, {0.7, 0.7});
  Rng g = make_stream(72);
  const double n = 200000;
  const auto c = gs2_counts(d, 200000, g);
  const double p = (c.p0 + c.p1) / (2 * n);
  EXPECT_LT(std::abs(c.p0 - c.p1) / std::sqrt(2 * n * p), 4.0);
}

TEST(GsSample, FaceFrequenciesMatchClosedForm) {
  const GaussianSparsemax d({0.4, 0.1}, {0.5, 0.3});
  const auto p2 = GaussianSparsemax2::from(d);
  const FaceProbs2 p = gs2_face_probs(p2.z, p2.sigma);
  Rng g = make_stream(73);
  const double n = 1e6;
  const auto c = gs2_counts(d, 1000000, g);
  EXPECT_LT(binomial_z(c.p0, n, p.p0), 4.0);
  EXPECT_LT(binomial_z(c.p1, n, p.p1), 4.0);
  EXPECT_LT(binomial_z(c.pc, n, p.pc), 4.0);
}

TEST(Gs2FaceProbs, Examples) {
  EXPECT_DOUBLE_EQ(gs2_face_probs(0.0, 0.8).p0, 0.5);
  const auto sym = gs2_face_probs(0.5, 0.8);
  EXPECT_DOUBLE_EQ(sym.p0, sym.p1);
  const auto sharp = gs2_face_probs(0.5, 0.1);
  EXPECT_NEAR(sharp.p0, 2.8665e-7, 0.001e-7);
  EXPECT_NEAR(sharp.p1, 2.8665e-7, 0.001e-7);
  EXPECT_NEAR(sharp.pc, 1.0, 1e-6);
}

TEST(Gs2Entropy, MatchesMonteCarlo) {
  const double z = 0.3, sigma = 0.6;
  const GaussianSparsemax d({z - 0.5, 0.5 - z}, {sigma * std::numbers::sqrt2, sigma * std::numbers::sqrt2});
  ASSERT_NEAR(GaussianSparsemax2::from(d).z, z, 1e-15);
  ASSERT_NEAR(GaussianSparsemax2::from(d).sigma, sigma, 1e-15);
  Rng g = make_stream(74);
  RunningMoments m;
  for (int i = 0; i < 1000000; ++i) m.add(-gs2_log_density_intrinsic(z, sigma, gs_sample(d, g).point[0]));
  EXPECT_LT(std::abs(m.mean() - gs2_entropy(z, sigma)), 3.0 * m.std_error());
}

TEST(Gs2Entropy, Limits) {
  const double sigma = 0.05;
  EXPECT_NEAR(gs2_entropy(0.5, sigma), 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * sigma * sigma), 1e-4);
  EXPECT_NEAR(gs2_entropy(10.0, 1.0), 0.0, 1e-6);
}

TEST(Gs2Kl, Properties) {
  EXPECT_NEAR(gs2_kl(0.3, 0.4, 0.3, 0.4), 0.0, 1e-14);
  Rng g = make_stream(75);
  for (int t = 0; t < 1000; ++t) {
    const double zp = -1.0 + 3.0 * uniform01(g), sp = 0.05 + 2.0 * uniform01(g);
    const double zq = -1.0 + 3.0 * uniform01(g), sq = 0.05 + 2.0 * uniform01(g);
    EXPECT_GE(gs2_kl(zp, sp, zq, sq), 0.0);
  }
}

TEST(Gs2Kl, MatchesMonteCarlo) {
  Rng g = make_stream(76);
  for (int t = 0; t < 3; ++t) {
    const double zp = -0.2 + 1.4 * uniform01(g), sp = 0.2 + 0.8 * uniform01(g);
    const double zq = -0.2 + 1.4 * uniform01(g), sq = 0.2 + 0.8 * uniform01(g);
    const GaussianSparsemax p({zp - 0.5, 0.5 - zp}, {sp * std::numbers::sqrt2, sp * std::numbers::sqrt2});
    RunningMoments m;
    for (int i = 0; i < 300000; ++i) {
      const double y = gs_sample(p, g).point[0];
      m.add(gs2_log_density(zp, sp, y) - gs2_log_density(zq, sq, y));
    }
    EXPECT_LT(std::abs(m.mean() - gs2_kl(zp, sp, zq, sq)), 3.0 * m.std_error()) << t;
  }
}

TEST(GsLogDensity, TwoDimensionalPathsAgree) {
  const GaussianSparsemax d({0.35, -0.1}, {0.6, 0.9});
  const auto p2 = GaussianSparsemax2::from(d);
  for (int i = 0; i <= 19; ++i) {
    const double y = i / 19.0;
    const SimplexPoint pt({y, 1.0 - y});
    const double a = gs_log_density(d, pt);
    EXPECT_NEAR(a, gs2_log_density(p2.z, p2.sigma, y), 1e-8) << y;
    EXPECT_NEAR(a, gs2_log_density_intrinsic(p2.z, p2.sigma, y), 1e-8) << y;
  }
}

TEST(GsLogDensity, ConstantVarianceFormulaAgrees) {
  const GaussianSparsemax d({0.1, 0.5, -0.2}, {0.4, 0.4, 0.4});
  ASSERT_TRUE(d.constant_variance());
  for (const auto& y : {SimplexPoint({0.2, 0.5, 0.3}), SimplexPoint({0.0, 0.6, 0.4}), SimplexPoint({0.0, 1.0, 0.0}),
                        SimplexPoint({1.0, 0.0, 0.0})}) {
    EXPECT_NEAR(gs_log_density_constant_variance(d, y), gs_log_density_general(d, y), 1e-8);
  }
}

TEST(GsLogDensity, PivotChoiceDoesNotMatter) {
  const GaussianSparsemax d({0.1, 0.5, -0.2, 0.3}, {0.4, 0.9, 0.5, 0.7});
  const SimplexPoint y({0.2, 0.5, 0.0, 0.3});
  const double ref = gs_log_density_general(d, y);
  for (int pivot : {0, 1, 3}) EXPECT_NEAR(gs_log_density_general(d, y, {}, pivot), ref, 1e-10);
}

TEST(GsLogDensity, RejectsCoarseQuadrature) {
  const GaussianSparsemax d({0.1, 0.5, -0.2}, {0.4, 0.4, 0.4});
  QuadratureConfig q;
  q.panels = 2;
  q.nodes_per_panel = 4;
  EXPECT_THROW(gs_log_density(d, SimplexPoint({1.0, 0.0, 0.0}), q), std::invalid_argument);
}

TEST(GsLogDensity, ThreeDimensionalNormalization) {
  const GaussianSparsemax d({0.3, 0.1, -0.2}, {0.5, 0.4, 0.6});
  Rng g = make_stream(77);
  const auto mass = oracle::gs3_mass(d, 200000, g, 8);
  EXPECT_NEAR(mass.total(), 1.0, 1e-2);
}

TEST(ConcreteSample, GumbelMaxFrequencies) {
  const std::vector<double> z{0.5, -0.3, 1.0, 0.0};
  std::vector<double> probs(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += probs[i] = std::exp(z[i]);
  for (double& p : probs) p /= total;
  Rng g = make_stream(78);
  std::vector<double> counts(z.size(), 0.0);
  for (int i = 0; i < 1000000; ++i) {
    const SimplexPoint y = concrete_sample(z, 0.7, g);
    const auto c = y.coords();
    counts[static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin())] += 1.0;
  }
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_LT(binomial_z(counts[i], 1e6, probs[i]), 4.0);
}

TEST(ConcreteSample, HighTemperatureIsNearUniform) {
  Rng g = make_stream(79);
  std::vector<double> z(10);
  for (double& v : z) v = standard_normal(g);
  int near = 0;
  for (int i = 0; i < 10000; ++i) {
    const SimplexPoint y = concrete_sample(z, 1e3, g);
    const auto c = y.coords();
    if (*std::max_element(c.begin(), c.end()) < 0.12) ++near;
  }
  EXPECT_GE(near, 9900);
}

TEST(ConcreteSample, StaysInInterior) {
  Rng g = make_stream(80);
  const std::vector<double> z{50.0, -50.0, 0.0};
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(concrete_sample(z, 0.05, g).support(), FaceIndexSet::full(3));
}

TEST(KdHardConcrete, UnitStretchGivesFullFace) {
  const KDHardConcrete d({0.3, -1.0, 2.0}, 0.5, 1.0);
  Rng g = make_stream(81);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(khc_sample(d, g).face, FaceIndexSet::full(3));
}

TEST(KdHardConcrete, CouplingWithBinaryHardConcrete) {
  Rng g = make_stream(82);
  for (int t = 0; t < 2000; ++t) {
    const KDHardConcrete d({standard_normal(g), standard_normal(g)}, 0.2 + uniform01(g), 1.1);
    const BinaryHardConcrete b = binary_equivalent(d);
    const double u = uniform01(g);
    const std::vector<double> noise{std::log(u) - std::log1p(-u), 0.0};
    const SimplexPoint y = khc_transform(d, noise);
    const HardConcreteDraw draw = binary_hard_concrete_transform(b, u);
    ASSERT_NEAR(y[0], draw.value, 1e-12);
    ASSERT_EQ(y[0] == 1.0, draw.trit == Trit::kOne);
    ASSERT_EQ(y[0] == 0.0, draw.trit == Trit::kZero);
  }
}

TEST(KdHardConcrete, LargerStretchMeansMoreVertices) {
  const std::vector<double> z{0.4, -0.2, 0.1};
  std::vector<double> probs(3);
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) total += probs[i] = std::exp(z[i]);
  for (double& p : probs) p /= total;
  auto vertex_rate = [&](double lambda, std::vector<double>* argmax_counts) {
    const KDHardConcrete d(z, 0.5, lambda);
    Rng g = make_stream(83);
    int hits = 0;
    for (int i = 0; i < 200000; ++i) {
      const auto s = khc_sample(d, g);
      if (s.face.size() == 1) ++hits;
      if (argmax_counts) {
        const auto c = s.point.coords();
        (*argmax_counts)[static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin())] += 1.0;
      }
    }
    return hits / 200000.0;
  };
  std::vector<double> argmax(3, 0.0);
  const double wide = vertex_rate(10.0, &argmax);
  EXPECT_GT(wide, vertex_rate(1.1, nullptr));
  EXPECT_GT(wide, 0.5);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_LT(binomial_z(argmax[i], 200000, probs[i]), 4.0);
}

TEST(BinaryHardConcrete, SaturatedLogAlpha) {
  const BinaryHardConcrete d(30.0);
  Rng g = make_stream(84);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(binary_hard_concrete_sample(d, g).trit, Trit::kOne);
}

TEST(BinaryHardConcrete, SymmetryAndClosedForm) {
  const BinaryHardConcrete d(0.0);
  EXPECT_NEAR(d.prob_zero(), d.prob_one(), 1e-15);
  Rng g = make_stream(85);
  const double n = 1e6;
  double zeros = 0, ones = 0;
  for (int i = 0; i < 1000000; ++i) {
    const auto t = binary_hard_concrete_sample(d, g).trit;
    zeros += t == Trit::kZero;
    ones += t == Trit::kOne;
  }
  const double p = d.prob_zero();
  EXPECT_LT(binomial_z(zeros, n, p), 4.0);
  EXPECT_LT(std::abs(zeros - ones) / std::sqrt(2 * n * p), 4.0);

  const BinaryHardConcrete skew(0.8, 0.5);
  double skew_zeros = 0;
  for (int i = 0; i < 1000000; ++i) skew_zeros += binary_hard_concrete_sample(skew, g).trit == Trit::kZero;
  EXPECT_LT(binomial_z(skew_zeros, n, skew.prob_zero()), 4.0);
}
