#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mfcluster/measures.hpp"
#include "support.hpp"

using namespace mfcluster;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

}  // namespace

TEST(EmpiricalMeasure, SingleAtom) {
  const auto m = EmpiricalMeasure::from_atoms({0.0}, {1.0});
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.positions()[0], 0.0);
  EXPECT_EQ(m.weights()[0], 1.0);
}

TEST(EmpiricalMeasure, SortsPositionsWithWeights) {
  const auto m = EmpiricalMeasure::from_atoms({2.0, -1.0}, {0.25, 0.75});
  EXPECT_EQ(m.positions(), (std::vector<double>{-1.0, 2.0}));
  EXPECT_EQ(m.weights(), (std::vector<double>{0.75, 0.25}));
}

TEST(EmpiricalMeasure, Errors) {
  EXPECT_EQ(code_of([] { EmpiricalMeasure::from_atoms({0, 1}, {0.7, 0.4}); }), ErrorCode::WeightSumOutOfTolerance);
  EXPECT_EQ(code_of([] { EmpiricalMeasure::from_atoms({0, 1}, {1.0}); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([] { EmpiricalMeasure::from_atoms({}, {}); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([] { EmpiricalMeasure::from_atoms({0, 1}, {1.5, -0.5}); }), ErrorCode::NegativeWeight);
}

TEST(EmpiricalMeasure, RenormalizesOnlyWithinTolerance) {
  const auto m = EmpiricalMeasure::from_atoms({0, 1}, {0.5, 0.5 + 5e-10});
  EXPECT_NEAR(m.weights()[0] + m.weights()[1], 1.0, 1e-15);
  EXPECT_THROW(EmpiricalMeasure::from_atoms({0, 1}, {0.5, 0.5 + 2e-9}), Error);
}

TEST(EmpiricalMeasure, DropsZeroWeights) {
  const auto m = EmpiricalMeasure::from_atoms({-1, 0, 1}, {0, 1, 0});
  EXPECT_EQ(m.positions(), (std::vector<double>{0.0}));
}

TEST(W1, Examples) {
  const auto m = EmpiricalMeasure::from_atoms({-1, 0.5, 3}, {0.2, 0.3, 0.5});
  EXPECT_EQ(w1_distance(m, m), 0.0);
  EXPECT_DOUBLE_EQ(w1_distance(EmpiricalMeasure::dirac(0), EmpiricalMeasure::dirac(-2.5)), 2.5);
  EXPECT_NEAR(w1_distance(EmpiricalMeasure::uniform({0, 1}), EmpiricalMeasure::uniform({0, 2})), 0.5, 1e-15);
}

TEST(W1, MatchesCdfIntegralOnWeightedMeasures) {
  gen::Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t na = gen::uniform_int(rng, 1, 8), nb = gen::uniform_int(rng, 1, 8);
    const auto xa = gen::sorted_positions(rng, na, -3, 3), xb = gen::sorted_positions(rng, nb, -3, 3);
    const auto wa = gen::random_weights(rng, na), wb = gen::random_weights(rng, nb);
    const auto a = EmpiricalMeasure::from_atoms(xa, wa), b = EmpiricalMeasure::from_atoms(xb, wb);
    EXPECT_NEAR(w1_distance(a, b), oracle::w1_cdf(a.positions(), a.weights(), b.positions(), b.weights()), 1e-12);
  }
}

TEST(W1, MetricProperties) {
  gen::Rng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    auto make = [&] {
      const std::size_t n = gen::uniform_int(rng, 1, 10);
      return EmpiricalMeasure::from_atoms(gen::sorted_positions(rng, n, -5, 5), gen::random_weights(rng, n));
    };
    const auto a = make(), b = make(), c = make();
    EXPECT_NEAR(w1_distance(a, b), w1_distance(b, a), 1e-12);
    EXPECT_LE(w1_distance(a, c), w1_distance(a, b) + w1_distance(b, c) + 1e-10);
    EXPECT_GE(w1_distance(a, b), 0.0);
  }
}

TEST(W1, TranslationCostsShift) {
  gen::Rng rng(13);
  const auto m = EmpiricalMeasure::from_atoms(gen::sorted_positions(rng, 7, -2, 2), gen::random_weights(rng, 7));
  for (double c : {-3.0, -0.125, 0.0, 1e-6, 0.7, 4.0}) EXPECT_NEAR(w1_distance(m, m.translated(c)), std::abs(c), 1e-12);
}

TEST(W1, UniformEqualCountIsMeanSortedGap) {
  gen::Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = gen::uniform_int(rng, 1, 40);
    const auto x = gen::sorted_positions(rng, n, -3, 3), y = gen::sorted_positions(rng, n, -3, 3);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(x[i] - y[i]);
    EXPECT_NEAR(w1_distance(EmpiricalMeasure::uniform(x), EmpiricalMeasure::uniform(y)), s / double(n), 1e-12);
  }
}

TEST(Grid, Examples) {
  EXPECT_EQ(grid(3, {0, 1}), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(grid(2, {-1, 1}), (std::vector<double>{-1.0, 1.0}));
  EXPECT_EQ(grid(1, {-1, 3}), (std::vector<double>{1.0}));
  const auto g = grid(1000, {-4.995, 4.995});
  EXPECT_EQ(g.front(), -4.995);
  EXPECT_EQ(g.back(), 4.995);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] - g[i - 1], 0.01, 1e-12);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], -g[g.size() - 1 - i]);
  try {
    grid(0, {0, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyGrid);
  }
}

TEST(InitialDistribution, UniformWeights) {
  const auto m = initial_distribution({DistributionTag::Uniform, {-4.995, 4.995}}, 1000);
  ASSERT_EQ(m.size(), 1000u);
  for (double w : m.weights()) EXPECT_NEAR(w, 1e-3, 1e-15);
}

TEST(InitialDistribution, SemiCircleShape) {
  const auto m = initial_distribution({DistributionTag::SemiCircle, {-2, 2}}, 9);
  // Endpoints carry zero density and are dropped.
  ASSERT_EQ(m.size(), 7u);
  const double ref = m.weights()[3];
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double s = m.positions()[i] / 2.0;
    EXPECT_NEAR(m.weights()[i] / ref, std::sqrt(1.0 - s * s), 1e-14);
  }
}

TEST(InitialDistribution, TriangularDegenerate) {
  const auto m = initial_distribution({DistributionTag::Triangular, {-1, 1}}, 3);
  EXPECT_EQ(m.positions(), (std::vector<double>{0.0}));
  EXPECT_EQ(m.weights(), (std::vector<double>{1.0}));
}

TEST(InitialDistribution, InvertedSemiCirclePeaksAtCenter) {
  const auto m = initial_distribution({DistributionTag::InvertedSemiCircle, {-1, 1}}, 101);
  const auto& w = m.weights();
  const std::size_t mid = w.size() / 2;
  EXPECT_EQ(m.positions()[mid], 0.0);
  for (std::size_t i = 0; i < mid; ++i) EXPECT_LT(w[i], w[i + 1]);
}

TEST(InitialDistribution, AllKindsSymmetric) {
  for (auto tag : {DistributionTag::Uniform, DistributionTag::SemiCircle, DistributionTag::Triangular,
                   DistributionTag::InvertedSemiCircle}) {
    for (std::size_t n : {5u, 100u, 1000u, 1001u}) {
      const auto m = initial_distribution({tag, {-4.995, 4.995}}, n);
      const auto& x = m.positions();
      const auto& w = m.weights();
      EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
      for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_NEAR(x[i], -x[x.size() - 1 - i], 1e-12) << to_string(tag);
        EXPECT_NEAR(w[i], w[w.size() - 1 - i], 1e-12) << to_string(tag);
      }
    }
  }
}

TEST(InitialDistribution, RejectsBadSupport) {
  EXPECT_THROW(initial_distribution({DistributionTag::Uniform, {1, 1}}, 3), Error);
  EXPECT_THROW(initial_distribution({DistributionTag::Uniform, {0, 1}}, 0), Error);
}
