#include <gtest/gtest.h>

#include <vector>

#include "mixsimplex.hpp"
#include "mixsimplex/oracles.hpp"

using namespace mixsimplex;

namespace {

FaceIndexSet face(std::vector<int> idx, int k) { return FaceIndexSet::from_indices(idx, k); }

std::vector<double> uniform_vec(Rng& g, int k, double lo, double hi) {
  std::vector<double> v(static_cast<std::size_t>(k));
  for (double& x : v) x = lo + (hi - lo) * uniform01(g);
  return v;
}

}  // namespace

TEST(SimplexPoint, RejectsInvalidCoordinates) {
  EXPECT_THROW(SimplexPoint({0.5, 0.6}), std::invalid_argument);
  EXPECT_THROW(SimplexPoint({1.5, -0.5}), std::invalid_argument);
  EXPECT_NO_THROW(SimplexPoint({0.5, 0.5 + 1e-13}));
}

TEST(SimplexPoint, SupportIsExactNonzeros) {
  const SimplexPoint y({0.25, 0.0, 0.75});
  EXPECT_EQ(y.support(), face({0, 2}, 3));
}

TEST(FaceIndexSet, EmptyFaceIsRejected) {
  EXPECT_THROW(FaceIndexSet(0, 3), std::invalid_argument);
  EXPECT_EQ(face({0, 2}, 3).dimension(), 1);
  EXPECT_EQ(face({0, 2}, 3).to_string(), "{1,3}");
}

TEST(Sparsemax, InteriorPointIsFixed) {
  const std::vector<double> z{0.5, 0.3, 0.2};
  const SimplexPoint y = sparsemax(z);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(y[i], z[i], 1e-15);
}

TEST(Sparsemax, HardSigmoidCase) {
  const std::vector<double> z{2.0, 0.0};
  const SimplexPoint y = sparsemax(z);
  EXPECT_EQ(y[0], 1.0);
  EXPECT_EQ(y[1], 0.0);
}

TEST(Sparsemax, MatchesActiveSetOracle) {
  Rng g = make_stream(11);
  for (int t = 0; t < 500; ++t) {
    const int k = 2 + t % 5;
    const auto z = uniform_vec(g, k, -2.0, 2.0);
    const SimplexPoint y = sparsemax(z);
    const auto ref = oracle::sparsemax_active_set(z);
    for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-9);
  }
}

TEST(SparsemaxJacobian, Examples) {
  const std::vector<double> interior{0.6, 0.4};
  const Matrix j = sparsemax_jacobian(interior);
  EXPECT_DOUBLE_EQ(j(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(j(0, 1), -0.5);
  EXPECT_DOUBLE_EQ(j(1, 0), -0.5);
  EXPECT_DOUBLE_EQ(j(1, 1), 0.5);
  const std::vector<double> vertex{2.0, 0.0};
  for (double v : sparsemax_jacobian(vertex).data) EXPECT_EQ(v, 0.0);
}

TEST(SparsemaxJacobian, MatchesFiniteDifferences) {
  Rng g = make_stream(12);
  for (int t = 0; t < 50; ++t) {
    const int k = 2 + t % 5;
    const auto z = uniform_vec(g, k, -1.0, 1.0);
    const Matrix j = sparsemax_jacobian(z);
    const Matrix fd = oracle::jacobian_fd(
        [](std::span<const double> x) {
          const SimplexPoint y = sparsemax(x);
          return std::vector<double>(y.coords().begin(), y.coords().end());
        },
        z, 1e-6);
    for (std::size_t i = 0; i < j.data.size(); ++i) ASSERT_NEAR(j.data[i], fd.data[i], 1e-5);
  }
}

TEST(FaceOf, Examples) {
  EXPECT_EQ(face_of(SimplexPoint({1.0, 0.0, 0.0})), face({0}, 3));
  EXPECT_EQ(face_of(SimplexPoint({0.5, 0.5, 0.0})), face({0, 1}, 3));
  EXPECT_EQ(face_of(SimplexPoint({0.2, 0.3, 0.5})), face({0, 1, 2}, 3));
}

TEST(EnumerateFaces, Counts) {
  const auto two = enumerate_faces(2);
  ASSERT_EQ(two.size(), 3U);
  EXPECT_EQ(two[0], face({0}, 2));
  EXPECT_EQ(two[1], face({1}, 2));
  EXPECT_EQ(two[2], face({0, 1}, 2));
  EXPECT_EQ(enumerate_faces(3).size(), 7U);
  EXPECT_EQ(enumerate_faces(10).size(), 1023U);
}

TEST(EnumerateFaces, ResourceLimit) {
  EXPECT_THROW(enumerate_faces(kMaxEnumerationAlphabet + 1), resource_limit_error);
}

TEST(HypercubeFace, Examples) {
  const std::vector<double> mixed{0.0, 1.0, 0.5};
  EXPECT_EQ(hypercube_face_of(mixed).trits, (std::vector<Trit>{Trit::kZero, Trit::kOne, Trit::kInterior}));
  const std::vector<double> zeros(4, 0.0);
  EXPECT_EQ(hypercube_face_of(zeros).dimension(), 0);
  const std::vector<double> halves(4, 0.5);
  EXPECT_EQ(hypercube_face_of(halves).dimension(), 4);
  const std::vector<double> bad{1.5};
  EXPECT_THROW(hypercube_face_of(bad), std::invalid_argument);
}

TEST(FaceHistogram, Examples) {
  const std::vector<SimplexPoint> two{SimplexPoint({1.0, 0.0, 0.0}), SimplexPoint({1.0, 0.0, 0.0})};
  const auto h = face_histogram(two);
  EXPECT_EQ(h.by_face.size(), 1U);
  EXPECT_EQ(h.by_face.at(face({0}, 3)), 2U);
  EXPECT_EQ(h.by_dimension.at(0), 2U);
  const std::vector<SimplexPoint> one{SimplexPoint({0.5, 0.5, 0.0})};
  const auto h1 = face_histogram(one);
  EXPECT_EQ(h1.by_face.at(face({0, 1}, 3)), 1U);
  EXPECT_EQ(h1.by_dimension.at(1), 1U);
}

TEST(FaceHistogram, GaussianSparsemaxHitsEveryDimension) {
  const GaussianSparsemax d({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});
  Rng g = make_stream(13);
  std::vector<SimplexPoint> pts;
  pts.reserve(100000);
  for (int i = 0; i < 100000; ++i) pts.push_back(gs_sample(d, g).point);
  const auto h = face_histogram(pts);
  for (int dim = 0; dim <= 2; ++dim) {
    ASSERT_TRUE(h.by_dimension.count(dim)) << dim;
    EXPECT_GT(h.by_dimension.at(dim), 0U);
  }
}
