#include "sfolab/schedule.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sfolab;

TEST(LogitNormal, MedianAndHandValue) {
  EXPECT_DOUBLE_EQ(logit_normal_t(0, 1, 0), 0.5);
  EXPECT_NEAR(logit_normal_t(0, 1, 1), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(logit_normal_t(0, 1, 1), 0.73106, 1e-5);
}

TEST(LogitNormal, MonotoneInZ) {
  double prev = 0;
  for (double z = -8; z <= 8; z += 0.25) {
    const double t = logit_normal_t(0.3, 1.7, z);
    EXPECT_GT(t, prev);
    prev = t;
  }
}

TEST(LogitNormal, ExtremesAreClampedInsideOpenInterval) {
  EXPECT_EQ(logit_normal_t(0, 1, -1e4), kTimestepClamp);
  EXPECT_EQ(logit_normal_t(0, 1, 1e4), 1 - kTimestepClamp);
}

TEST(LogitNormal, DefaultIsStandard) {
  const TimestepDist d;
  EXPECT_EQ(d.variant, TimestepDist::Variant::logit_normal);
  EXPECT_EQ(d.mu, 0.0);
  EXPECT_EQ(d.sigma, 1.0);
  EXPECT_THROW(TimestepDist::logit_normal(0, 0).validate(), ValueError);
}

TEST(LogitMoments, ConstantHalf) {
  const LogitMoments m = logit_moments(std::vector<double>(10, 0.5));
  EXPECT_EQ(m.mean, 0.0);
  EXPECT_EQ(m.std, 0.0);
}

namespace {

std::vector<double> draws(const TimestepDist& d, int n, std::uint64_t seed) {
  RngStream rng(seed, tag_of("t"));
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(sample_t(d, rng));
  return out;
}

}  // namespace

TEST(LogitMoments, StandardDraws) {
  const LogitMoments m = logit_moments(draws(TimestepDist::logit_normal(0, 1), 100000, 1));
  EXPECT_NEAR(m.mean, 0, 0.02);
  EXPECT_NEAR(m.std, 1, 0.02);
}

TEST(LogitMoments, ShiftedDraws) {
  const LogitMoments m = logit_moments(draws(TimestepDist::logit_normal(-2, 1), 100000, 2));
  EXPECT_NEAR(m.mean, -2, 0.02);
}

TEST(Ks, UniformPasses) {
  const KsResult r = ks_uniform(draws(TimestepDist::uniform(), 100000, 3));
  EXPECT_GT(r.p_value, 0.01);
}

TEST(Ks, SkewedFails) {
  // Logit-normal draws are far from uniform.
  const KsResult r = ks_uniform(draws(TimestepDist::logit_normal(0, 1), 5000, 4));
  EXPECT_LT(r.p_value, 0.01);
}

TEST(Batch, MatchesScalarDraws) {
  RngStream a(9), b(9);
  const Vector v = sample_t_batch(TimestepDist{}, a, 50);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(v[i], sample_t(TimestepDist{}, b));
}
