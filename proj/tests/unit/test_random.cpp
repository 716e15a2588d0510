#include <gtest/gtest.h>

#include <set>

#include "faircredit/random.hpp"

using faircredit::RandomStream;

TEST(RandomStream, SameSeedSameSequence) {
  RandomStream a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(RandomStream, DerivedStreamsDiffer) {
  std::set<double> firsts;
  for (std::uint64_t id = 0; id < 64; ++id) firsts.insert(RandomStream::derive(7, id).uniform());
  EXPECT_EQ(firsts.size(), 64u);
  EXPECT_NE(RandomStream::derive(7, 0).uniform(), RandomStream::derive(8, 0).uniform());
}

TEST(RandomStream, DeriveIsReproducible) {
  auto a = RandomStream::derive(123, 5);
  auto b = RandomStream::derive(123, 5);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.normal(), b.normal());
}

TEST(RandomStream, UniformRangeAndMean) {
  RandomStream rng(1);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
}

TEST(RandomStream, BelowStaysInRange) {
  RandomStream rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto k = rng.below(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}
