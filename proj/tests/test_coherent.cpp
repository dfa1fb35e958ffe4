#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qslrand/coherent.hpp"

using namespace qslrand;

namespace {

// Maclaurin series in long double; fine for |x| <= 3.
long double erf_maclaurin(long double x) {
  long double sum = 0, term = x;
  for (int n = 0; n < 200; ++n) {
    sum += term / (2 * n + 1);
    term *= -x * x / (n + 1);
  }
  return 2 / std::sqrt(std::numbers::pi_v<long double>) * sum;
}

} // namespace

TEST(Erf, Examples) {
  EXPECT_EQ(qslrand::erf(0.0), 0.0);
  EXPECT_NEAR(qslrand::erf(0.27536), 0.30304, 1e-4);
  EXPECT_NEAR(qslrand::erf(6.0), 1.0, 1e-12);
  EXPECT_NEAR(qslrand::erf(-7.5), -1.0, 1e-12);
  EXPECT_TRUE(std::isnan(qslrand::erf(std::nan(""))));
}

TEST(Erf, AgainstIndependentReferences) {
  for (int i = 0; i <= 3000; ++i) {
    const double x = i * 1e-3;
    EXPECT_NEAR(qslrand::erf(x), static_cast<double>(erf_maclaurin(x)), 1e-13) << x;
  }
  for (int i = -6000; i <= 6000; ++i) {
    const double x = i * 1e-3;
    EXPECT_NEAR(qslrand::erf(x), std::erf(x), 1e-12) << x;
  }
}

TEST(Erf, OddMonotoneBounded) {
  double prev = -1.0;
  for (int i = -500; i <= 500; ++i) {
    const double x = i * 0.01;
    const double v = qslrand::erf(x);
    EXPECT_EQ(qslrand::erf(-x), -v);
    EXPECT_GE(v, prev);
    EXPECT_LT(std::abs(v), 1.0);
    prev = v;
  }
}

TEST(Coherent, Correlations) {
  const Correlation a = coherent_correlations({0.5, 0.4, 0.2});
  EXPECT_EQ(a.c0, 0.0);
  EXPECT_NEAR(a.c1, 0.3032, 1e-3);
  EXPECT_EQ(coherent_correlations({0.7, 0.0, 0.2}).c1, 0.0);
  EXPECT_NEAR(coherent_correlations({1.0, std::numbers::pi / 2, 1.0}).c1, 0.95450, 1e-5);
  EXPECT_THROW(coherent_correlations({-0.1, 0.4, 0.2}), DomainError);
}

TEST(Coherent, CorrelationAtPhase) {
  EXPECT_EQ(correlation_at_phase(0.8, 0.0), 0.0);
  EXPECT_NEAR(correlation_at_phase(0.8, std::numbers::pi), 0.0, 1e-15);
  EXPECT_NEAR(correlation_at_phase(0.5, 0.4), 0.3032, 1e-3);
  for (int i = 0; i < 200; ++i) {
    const double ph = -3 + 0.05 * i;
    EXPECT_NEAR(correlation_at_phase(0.9, ph), correlation_at_phase(0.9, ph + 2 * std::numbers::pi), 1e-12);
  }
}

TEST(Coherent, NonzeroCondition) {
  EXPECT_TRUE(nonzero_randomness_condition({0.5, 0.4, 0.2}));
  EXPECT_FALSE(nonzero_randomness_condition({0.5, 0.0, 0.2}));
  EXPECT_FALSE(nonzero_randomness_condition({0.5, 0.4, 0.3}));
  EXPECT_FALSE(nonzero_randomness_condition({0.5, 0.4, 0.1}));  // xi * omega_dt > e_dt
  EXPECT_FALSE(nonzero_randomness_condition({3.0, 0.5, 1.6}));  // trivial regime
}

TEST(Coherent, ConsistentWithSets) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> xi(0, 3), ph(0, std::numbers::pi), ue(0, half_pi);
  for (int i = 0; i < 2000; ++i) {
    const double x = xi(rng), w = ph(rng);
    // Honest budget e_dt = xi * omega_dt never yields super-quantum points.
    const CoherentPoint honest{x, w, x * w};
    EXPECT_TRUE(quantum_contains(coherent_correlations(honest), EnergyTimeBudget(x * w), 1e-9))
        << x << ' ' << w;
    const CoherentPoint p{x, w, ue(rng)};
    if (!p.physically_consistent())
      continue;
    const bool outside = !classical_contains(coherent_correlations(p), EnergyTimeBudget(p.e_dt));
    EXPECT_EQ(nonzero_randomness_condition(p), outside && p.e_dt < half_pi);
  }
}

TEST(Coherent, RegionMask) {
  const auto m = region_mask(0.5, 101, 51, 2);
  ASSERT_EQ(m.omega_dt.size(), 101u);
  ASSERT_EQ(m.e_dt.size(), 51u);
  for (std::size_t c = 0; c < 101; ++c)
    EXPECT_FALSE(m.at(0, c));
  for (std::size_t r = 0; r < 51; ++r)
    EXPECT_FALSE(m.at(r, 0));
  EXPECT_TRUE(nonzero_randomness_condition({0.5, 0.4, 0.2}));
  // Cells around (0.4, 0.2) on this grid.
  bool any = false;
  for (std::size_t r = 0; r < 51; ++r)
    for (std::size_t c = 0; c < 101; ++c)
      if (std::abs(m.omega_dt[c] - 0.4) < 0.05 && std::abs(m.e_dt[r] - 0.2) < 0.05)
        any |= m.at(r, c);
  EXPECT_TRUE(any);
  EXPECT_DOUBLE_EQ(m.constraint_e_dt[100], 0.5 * std::numbers::pi);
  EXPECT_EQ(region_mask(0.5, 101, 51, 1).nonzero, m.nonzero);
}

TEST(Coherent, Certify) {
  const DiscretizationParams p{6, 2, 60, 60};
  EXPECT_EQ(coherent_certify({0.5, 0.0, 0.2}, p).h_cert, 0.0);
  EXPECT_EQ(coherent_certify({0.5, 0.4, 0.3}, p).h_cert, 0.0);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> xi(0, 2), ph(0, 1.2), ue(0.05, 0.6);
  for (int i = 0; i < 20; ++i) {
    const CoherentPoint q{xi(rng), ph(rng), ue(rng)};
    if (!q.physically_consistent() ||
        !quantum_contains(coherent_correlations(q), EnergyTimeBudget(q.e_dt), 1e-9))
      continue;
    if (coherent_certify(q, p).h_cert > 0) {
      EXPECT_TRUE(nonzero_randomness_condition(q));
    }
  }
}
