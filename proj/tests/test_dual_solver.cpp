#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "qslrand/dual_solver.hpp"

using namespace qslrand;

namespace {

// Inner minimum written directly from its definition, using the public
// boundary parametrisation and entropy. Independent of the sample sharing
// and the branch-and-bound search.
double inner_min_textbook(const DualVector &t, int L, int N, int S) {
  double best = std::numeric_limits<double>::infinity();
  const int levels = L * N;
  for (int j = 1; j <= levels; ++j) {
    const double e = half_pi * j / levels;
    const double delta = delta_correction(t, e, S);
    best = std::min(best, -t.t1 - t.t2 - t.t3 * e);
    best = std::min(best, t.t1 + t.t2 - t.t3 * e);
    const double span = half_pi - e;
    for (int k = 0; k <= S; ++k) {
      const double sig = span * k / S;
      const Correlation one = boundary_point(EnergyTimeBudget(e), BoundaryCurve::One,
                                             std::min(half_pi, e + sig));
      const Correlation two = boundary_point(EnergyTimeBudget(e), BoundaryCurve::Two,
                                             std::min(half_pi - e, sig));
      for (const Correlation &c : {one, two})
        best = std::min(best, entropy(c) - t.t1 * c.c0 - t.t2 * c.c1 - t.t3 * e - delta);
    }
  }
  return best;
}

// Dense sampling of the continuous inner minimum over E' in [0, pi/2].
double continuous_estimate(const DualVector &t, int energy_points, int samples) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= energy_points; ++j) {
    const double e = half_pi * j / energy_points;
    best = std::min(best, -t.t1 - t.t2 - t.t3 * e);
    best = std::min(best, t.t1 + t.t2 - t.t3 * e);
    for (BoundaryCurve w : {BoundaryCurve::One, BoundaryCurve::Two}) {
      const auto [lo, hi] = curve_interval(e, w);
      for (int k = 0; k <= samples; ++k) {
        const double s = std::min(hi, lo + (hi - lo) * k / samples);
        const Correlation c = boundary_point(EnergyTimeBudget(e), w, s);
        best = std::min(best, entropy(c) - t.t1 * c.c0 - t.t2 * c.c1 - t.t3 * e);
      }
    }
  }
  return best;
}

Correlation random_quantum_nonclassical(std::mt19937_64 &rng, double u) {
  std::uniform_real_distribution<double> d(-1, 1);
  for (;;) {
    const Correlation c{d(rng), d(rng)};
    if (quantum_contains(c, EnergyTimeBudget(u)) && !classical_contains(c, EnergyTimeBudget(u)))
      return c;
  }
}

} // namespace

TEST(Canonicalize, Examples) {
  const auto a = canonicalize({-0.3, 0.7});
  EXPECT_EQ(a.point, (Correlation{0.7, -0.3}));
  EXPECT_EQ(a.map, Symmetry::Swap);
  const auto b = canonicalize({0.5, 0.2});
  EXPECT_EQ(b.point, (Correlation{0.5, 0.2}));
  EXPECT_EQ(b.map, Symmetry::Identity);
  const auto c = canonicalize({-1, -1});
  EXPECT_EQ(c.point, (Correlation{1, 1}));
  EXPECT_EQ(c.map, Symmetry::Negate);
  EXPECT_EQ(canonicalize({-0.2, -0.6}).map, Symmetry::SwapNegate);
}

TEST(Canonicalize, AlwaysLandsInSector) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int i = 0; i < 10000; ++i) {
    const Correlation c{d(rng), d(rng)};
    const auto k = canonicalize(c);
    EXPECT_GE(k.point.c0, 0.0);
    EXPECT_LE(std::abs(k.point.c1), k.point.c0);
    EXPECT_EQ(apply(k.map, c), k.point);
    EXPECT_EQ(entropy(k.point), entropy(c));
  }
}

TEST(TGrid, SmallCounts) {
  const auto g = t_grid(1, 1);
  ASSERT_EQ(g.size(), 6u);
  const std::vector<DualVector> expected{{0, 0, -1}, {0, 0, 0},  {1, -1, -1},
                                         {1, -1, 0}, {1, 0, -1}, {1, 0, 0}};
  std::vector<DualVector> sorted = g;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, expected);
  // t1 in {0, 1/2, 1} admits 1, 2, 3 values of t2; three t3 values each.
  EXPECT_EQ(t_grid(1, 2).size(), 18u);
  EXPECT_THROW(t_grid(0, 1), std::invalid_argument);
}

TEST(TGrid, SectorAndMembership) {
  const auto g = t_grid(20, 5);
  bool found = false;
  for (const auto &t : g) {
    EXPECT_GE(t.t1, 0.0);
    EXPECT_LE(t.t2, 0.0);
    EXPECT_GE(t.t2, -t.t1);
    EXPECT_LE(t.t3, 0.0);
    EXPECT_GE(t.t3, -20.0);
    found |= t == DualVector{11.2, -11.2, -19.8};
  }
  EXPECT_TRUE(found);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
}

TEST(TGrid, PruningIsSubsetAndRespectsBound) {
  const Correlation c{std::sin(0.5), -std::sin(0.5)};
  const PruneContext ctx{c, 0.5};
  const auto full = t_grid(6, 2);
  const auto pruned = t_grid(6, 2, ctx);
  EXPECT_LT(pruned.size(), full.size());
  for (const auto &t : pruned) {
    EXPECT_TRUE(std::binary_search(full.begin(), full.end(), t));
    const double lim = std::min((h_bin(c.c1) + (c.c0 - c.c1) * t.t1) / 0.5,
                                (h_bin(c.c0) + (c.c0 - c.c1) * std::abs(t.t2)) / 0.5);
    EXPECT_LE(std::abs(t.t3), lim + 1e-12);
  }
  // u = 0 disables pruning.
  EXPECT_EQ(t_grid(3, 1, PruneContext{c, 0.0}).size(), t_grid(3, 1).size());
}

TEST(DeltaCorrection, Examples) {
  EXPECT_NEAR(delta_correction({1, -1, 0}, 0.0, 100), half_pi * 5 / 100, 1e-15);
  EXPECT_EQ(delta_correction({3, -2, -1}, half_pi, 7), 0.0);
  EXPECT_NEAR(delta_correction({0, 0, -3}, 1.0, 10), 0.0570796, 1e-7);
}

TEST(InnerMin, MatchesTextbookDefinition) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> d(-12, 12);
  for (int i = 0; i < 40; ++i) {
    const DualVector t{d(rng), d(rng), -std::abs(d(rng))};
    const int L = 1 + i % 3, N = 2 + i % 5, S = 5 + 3 * i;
    EXPECT_NEAR(inner_min(t, L, N, S), inner_min_textbook(t, L, N, S), 1e-12) << i;
  }
}

TEST(InnerMin, AcceleratedSearchIsBitExact) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> d(-25, 25);
  for (int i = 0; i < 400; ++i) {
    DualVector t{d(rng), d(rng), -std::abs(d(rng))};
    if (i % 4 == 0)
      t = {std::round(t.t1 * 5) / 5, -std::round(std::abs(t.t1) * 5) / 5, std::round(t.t3)};
    const int L = 1 + i % 4, N = 1 + i % 9, S = 1 + (37 * i) % 300;
    EXPECT_EQ(inner_min(t, L, N, S), inner_min_reference(t, L, N, S))
        << t.t1 << ' ' << t.t2 << ' ' << t.t3 << " L=" << L << " N=" << N << " S=" << S;
  }
  // Large sample counts exercise the multi-level block hierarchy.
  for (const DualVector &t : {DualVector{11.2, -11.2, -19.8}, DualVector{0.4, -0.2, -3},
                              DualVector{20, -20, -20}, DualVector{0, 0, 0}})
    EXPECT_EQ(inner_min(t, 2, 40, 4099), inner_min_reference(t, 2, 40, 4099));
}

TEST(InnerMin, ZeroVector) {
  const int L = 2, N = 3, S = 10;
  const double v = inner_min({0, 0, 0}, L, N, S);
  EXPECT_LE(v, 0.0);
  EXPECT_GE(v, -half_pi / S);
  EXPECT_EQ(v, inner_min_reference({0, 0, 0}, L, N, S));
}

TEST(InnerMin, LowerBoundsContinuousMinimum) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> d(-6, 6);
  const int L = 2, N = 20, S = 20;
  for (int i = 0; i < 10; ++i) {
    const DualVector t{std::abs(d(rng)), -std::abs(d(rng)), -std::abs(d(rng))};
    const double dense = continuous_estimate(t, 1000, 10000);
    // The energy grid starts at pi/(2LN); the dual objective's energy term covers E' below it.
    const double bound = inner_min(t, L, N, S) - std::abs(t.t3) * half_pi / (L * N);
    EXPECT_LE(bound, dense + 1e-12) << i;
  }
}

TEST(DualValue, ZeroVectorCertifiesNothing) {
  const DiscretizationParams p{2, 1, 10, 10};
  for (const Correlation &c : {Correlation{0, 0}, Correlation{0.3, -0.3}, Correlation{1, 1}})
    EXPECT_LE(dual_value({0, 0, 0}, c, EnergyTimeBudget(0.5), p), 0.0);
}

TEST(DualValue, ClassicalPointsNeverPositive) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> d(-1, 1), dt(-8, 8);
  const EnergyTimeBudget u(0.5);
  const DiscretizationParams p{3, 1, 8, 30};
  for (int i = 0; i < 200; ++i) {
    Correlation c{d(rng), d(rng)};
    if (!classical_contains(c, u))
      continue;
    const DualVector t{dt(rng), dt(rng), -std::abs(dt(rng))};
    EXPECT_LE(dual_value(t, c, u, p), 1e-9);
  }
}

TEST(Certify, ClassicalWedgeIsExactlyZero) {
  std::mt19937_64 rng(26);
  const EnergyTimeBudget u(0.5);
  const double w = 4 * 0.5 / std::numbers::pi;
  std::uniform_real_distribution<double> d(-1, 1);
  const DiscretizationParams p{4, 1, 100, 100};
  int tested = 0;
  while (tested < 60) {
    const Correlation c{d(rng), d(rng)};
    if (std::abs(c.c0 - c.c1) > w)
      continue;
    ++tested;
    const auto b = certify(c, u, p);
    EXPECT_EQ(b.h_cert, 0.0);
    EXPECT_LE(b.h_dual_raw, 0.0);
    EXPECT_TRUE(b.classical_member);
  }
  EXPECT_EQ(certify({0.2, 0.2}, u, p).h_cert, 0.0);
  // A wedge corner outside the overlap set is still a valid input.
  const auto corner = certify({1.0, 1.0 - w}, u, p);
  EXPECT_EQ(corner.h_cert, 0.0);
  EXPECT_FALSE(corner.quantum_member);
  EXPECT_TRUE(corner.classical_member);
}

TEST(Certify, RejectsPointsOutsideQuantumSet) {
  const DiscretizationParams p{2, 1, 10, 10};
  EXPECT_THROW(certify({1, -1}, EnergyTimeBudget(0.5), p), InfeasibleInput);
  try {
    certify({0.9, -0.9}, EnergyTimeBudget(0.5), p);
    FAIL();
  } catch (const InfeasibleInput &e) {
    EXPECT_LT(e.lhs, e.gamma);
    EXPECT_NE(std::string(e.what()).find("overlap"), std::string::npos);
  }
  EXPECT_THROW(certify({1.2, 0}, EnergyTimeBudget(0.5), p), DomainError);
  EXPECT_THROW(certify({0, 0}, EnergyTimeBudget(0.5), {0, 1, 1, 1}), std::invalid_argument);
}

TEST(Certify, MatchesBruteForceOverTheGrid) {
  std::mt19937_64 rng(27);
  const EnergyTimeBudget u(0.5);
  const DiscretizationParams p{3, 2, 6, 25};
  for (int i = 0; i < 4; ++i) {
    const Correlation c = random_quantum_nonclassical(rng, 0.5);
    const auto b = certify(c, u, p, {.threads = 1, .prune = false});
    double best = -std::numeric_limits<double>::infinity();
    DualVector arg{};
    const Correlation k = canonicalize(c).point;
    for (const auto &t : t_grid(p.L, p.M)) {
      const double v = dual_value(t, k, u, p);
      if (v > best) {
        best = v;
        arg = t;
      }
    }
    EXPECT_EQ(b.h_dual_raw, best);
    EXPECT_EQ(b.best_t, arg);
    // Pruning must not change the optimum at these points.
    const auto pruned = certify(c, u, p);
    EXPECT_LE(pruned.h_dual_raw, best);
  }
}

TEST(Certify, SymmetricInputsGiveIdenticalResults) {
  std::mt19937_64 rng(28);
  const EnergyTimeBudget u(0.5);
  const DiscretizationParams p{3, 2, 20, 20};
  for (int i = 0; i < 12; ++i) {
    const Correlation c = random_quantum_nonclassical(rng, 0.5);
    const double h = certify(c, u, p).h_cert;
    for (Symmetry s : {Symmetry::Swap, Symmetry::Negate, Symmetry::SwapNegate})
      EXPECT_EQ(certify(apply(s, c), u, p).h_cert, h);
  }
}

TEST(Certify, NestingCapAndDeterminism) {
  std::mt19937_64 rng(29);
  const EnergyTimeBudget u(0.5);
  for (int i = 0; i < 6; ++i) {
    const Correlation c = random_quantum_nonclassical(rng, 0.5);
    const auto m1 = certify(c, u, {4, 1, 60, 60});
    const auto m2 = certify(c, u, {4, 2, 60, 60});
    EXPECT_LE(m1.h_dual_raw, m2.h_dual_raw);
    EXPECT_LE(m2.h_cert, entropy(c) + 1e-9);
    const auto threaded = certify(c, u, {4, 2, 60, 60}, {.threads = 4});
    EXPECT_EQ(threaded.h_dual_raw, m2.h_dual_raw);
    EXPECT_EQ(threaded.best_t, m2.best_t);
  }
}

TEST(Certify, SafetyMarginAndTrivialBudget) {
  const Correlation c{std::sin(0.5), -std::sin(0.5)};
  const DiscretizationParams p{4, 2, 40, 40};
  const auto plain = certify(c, EnergyTimeBudget(0.5), p);
  const auto safe = certify(c, EnergyTimeBudget(0.5), p, {.safety_margin = 0.01});
  EXPECT_EQ(safe.h_dual_raw, plain.h_dual_raw - 0.01);
  EXPECT_GT(plain.h_cert, 0.0);
  // Above pi/2 everything is classical.
  EXPECT_EQ(certify({1, -1}, EnergyTimeBudget(2.0), p).h_cert, 0.0);
}

TEST(DiagonalSweep, ThreeByThree) {
  const DiscretizationParams p{3, 1, 20, 20};
  const auto g = diagonal_sweep(EnergyTimeBudget(0.5), 3, p);
  ASSERT_EQ(g.n, 3);
  EXPECT_EQ(g.coords, (std::vector<double>{-1, 0, 1}));
  EXPECT_EQ(g.at(1, 1), 0.0);
  EXPECT_EQ(g.at(0, 0), 0.0);
  EXPECT_EQ(g.at(2, 2), 0.0);
  EXPECT_TRUE(std::isnan(g.at(0, 2)));
  EXPECT_TRUE(std::isnan(g.at(2, 0)));
  // |delta| = 1 cells: (0, -1) and (-1, 0) etc. lie in Q_0.5 iff the overlap allows it.
  for (auto [i0, i1] : {std::pair{0, 1}, {1, 0}, {1, 2}, {2, 1}}) {
    const Correlation c{g.coords[i0], g.coords[i1]};
    EXPECT_EQ(std::isnan(g.at(i0, i1)), !quantum_contains(c, EnergyTimeBudget(0.5)));
  }
  EXPECT_THROW(diagonal_sweep(EnergyTimeBudget(0.5), 4, p), std::invalid_argument);
}

TEST(DiagonalSweep, MidpointValuesMatchCertify) {
  const DiscretizationParams p{3, 1, 20, 20};
  const EnergyTimeBudget u(0.5);
  const auto g = diagonal_sweep(u, 11, p, {.threads = 3});
  for (int i0 = 0; i0 < 11; ++i0)
    for (int i1 = 0; i1 < 11; ++i1) {
      const Correlation c{g.coords[i0], g.coords[i1]};
      const double h = g.at(i0, i1);
      if (classical_contains(c, u)) {
        EXPECT_EQ(h, 0.0);
        continue;
      }
      if (!quantum_contains(c, u)) {
        EXPECT_TRUE(std::isnan(h));
        continue;
      }
      const double diff = 2.0 * (i0 - i1) / 10.0;
      EXPECT_EQ(h, certify({diff / 2, -diff / 2}, u, p).h_cert);
    }
}
