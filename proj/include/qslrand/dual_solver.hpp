#ifndef QSLRAND_DUAL_SOLVER_HPP
#define QSLRAND_DUAL_SOLVER_HPP

// Certified lower bounds on the minimal conditional entropy H* via the
// discretised Lagrange dual.
//
// For a dual vector t = (t1, t2, t3) the inner minimum
//
//   inner_min(t) = min_{E' in E_{L,N}} [ psi_t(E') - t3 E' ]
//   psi_t(E')    = min{ -t1-t2, t1+t2,
//                       min_k g(curve sample k) - delta_t(E') }
//   g(C')        = H(C') - t1 C0' - t2 C1'
//
// lower-bounds the continuous infimum, so that
//
//   D(t) = inner_min(t) - |t3| (pi/2)/(LN) + t . (C0, C1, u)
//
// is a certified lower bound on H* for every t. certify() returns the exact
// maximum of D over the restricted grid I_{L,M}^3. The search is a
// branch-and-bound over curve-sample blocks and dual vectors whose pruning is
// backed by rigorous lower bounds; it returns the same floating-point value
// as the exhaustive loop in inner_min_reference().

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qslrand/core_sets.hpp"
#include "qslrand/parallel.hpp"

namespace qslrand {

/// Lagrange multipliers for the C0, C1 and energy constraints.
struct DualVector {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;

  friend bool operator==(const DualVector &, const DualVector &) = default;
  friend auto operator<=>(const DualVector &, const DualVector &) = default;
};

/// Grid sizes: t-cube half-width L, t step 1/M, L*N energy levels, S+1 samples per curve.
struct DiscretizationParams {
  int L = 20;
  int M = 5;
  int N = 5000;
  int S = 5000;

  void validate() const {
    if (L < 1 || M < 1 || N < 1 || S < 1)
      throw std::invalid_argument("discretisation parameters L, M, N, S must all be >= 1");
    if (static_cast<std::int64_t>(L) * N > std::numeric_limits<int>::max())
      throw std::invalid_argument("L*N too large");
  }
  [[nodiscard]] int energy_levels() const { return L * N; }

  friend bool operator==(const DiscretizationParams &,
                         const DiscretizationParams &) = default;
};

/// Thrown by certify() when the observed point is outside the quantum set and the classical wedge.
class InfeasibleInput : public std::runtime_error {
public:
  InfeasibleInput(Correlation c, double u, double lhs, double gamma_value)
      : std::runtime_error(
            "correlation (" + std::to_string(c.c0) + ", " + std::to_string(c.c1) +
            ") violates the overlap inequality at u=" + std::to_string(u) +
            ": lhs=" + std::to_string(lhs) + " < gamma=" + std::to_string(gamma_value)),
        point(c), budget(u), lhs(lhs), gamma(gamma_value) {}

  Correlation point;
  double budget;
  double lhs;
  double gamma;
};

// ---------------------------------------------------------------------------
// Symmetries

enum class Symmetry { Identity, Swap, Negate, SwapNegate };

inline const char *to_string(Symmetry s) {
  switch (s) {
  case Symmetry::Identity: return "identity";
  case Symmetry::Swap: return "swap";
  case Symmetry::Negate: return "negate";
  case Symmetry::SwapNegate: return "swap_negate";
  }
  return "?";
}

inline Correlation apply(Symmetry s, Correlation c) {
  switch (s) {
  case Symmetry::Identity: return c;
  case Symmetry::Swap: return {c.c1, c.c0};
  case Symmetry::Negate: return {-c.c0, -c.c1};
  case Symmetry::SwapNegate: return {-c.c1, -c.c0};
  }
  return c;
}

struct CanonicalPoint {
  Correlation point;
  Symmetry map = Symmetry::Identity;
};

/// Maps c into the sector C0 >= 0, |C1| <= C0. Ties go to the earliest map
/// in the order identity, swap, negate, swap-negate.
inline CanonicalPoint canonicalize(Correlation c) {
  for (Symmetry s : {Symmetry::Identity, Symmetry::Swap, Symmetry::Negate,
                     Symmetry::SwapNegate}) {
    const Correlation m = apply(s, c);
    if (m.c0 >= 0.0 && std::abs(m.c1) <= m.c0)
      return {m, s};
  }
  // Unreachable for finite input: max(|c0|, |c1|) is attained by one of the images.
  return {c, Symmetry::Identity};
}

// ---------------------------------------------------------------------------
// Restricted t-grid

/// Observed point (canonical) and budget used to prune the t-grid.
struct PruneContext {
  Correlation canonical;
  double u = 0.0;
};

inline constexpr int probe_count = 8;

/// Probe points on the C0 >= C1 boundary curve of Q_u.
inline std::vector<Correlation> probe_points(double u) {
  std::vector<Correlation> probes;
  if (!(u > 0.0 && u < half_pi))
    return probes;
  const EnergyTimeBudget budget(u);
  const double hi = half_pi - u;
  for (int i = 0; i < probe_count; ++i) {
    const double s = hi * (i + 0.5) / probe_count;
    probes.push_back(boundary_point(budget, BoundaryCurve::Two, s));
  }
  return probes;
}

/// Sector restrictions that hold for some maximiser of the continuous dual.
class GridPruner {
public:
  explicit GridPruner(const PruneContext &ctx) : c_(ctx.canonical), u_(ctx.u) {
    active_ = u_ > 0.0 && u_ < half_pi && std::abs(c_.c0) < 1.0 &&
              std::abs(c_.c1) < 1.0;
    if (!active_)
      return;
    h0_ = h_bin(c_.c0);
    h1_ = h_bin(c_.c1);
    for (const Correlation &p : probe_points(u_))
      if (p.c0 > c_.c0 && p.c1 < c_.c1)
        probes_.push_back({p, entropy(p)});
  }

  [[nodiscard]] bool active() const { return active_; }

  /// Pair-level test (t3 independent).
  [[nodiscard]] bool admits_pair(double t1, double t2) const {
    if (!active_)
      return true;
    for (const auto &[p, hp] : probes_)
      if (std::abs(t1) * (p.c0 - c_.c0) + std::abs(t2) * (c_.c1 - p.c1) > hp + slack)
        return false;
    return true;
  }

  /// Largest admissible |t3| for the pair.
  [[nodiscard]] double t3_bound(double t1, double t2) const {
    if (!active_)
      return std::numeric_limits<double>::infinity();
    const double diff = c_.c0 - c_.c1;
    const double a = (h1_ + diff * t1) / u_;
    const double b = (h0_ + diff * std::abs(t2)) / u_;
    return std::min(a, b);
  }

  [[nodiscard]] bool admits(const DualVector &t) const {
    return admits_pair(t.t1, t.t2) && std::abs(t.t3) <= t3_bound(t.t1, t.t2) + slack;
  }

  static constexpr double slack = 1e-12;

private:
  struct Probe {
    Correlation point;
    double entropy;
  };
  Correlation c_;
  double u_;
  bool active_ = false;
  double h0_ = 0.0;
  double h1_ = 0.0;
  std::vector<Probe> probes_;
};

inline double grid_value(int index, int M) {
  return static_cast<double>(index) / static_cast<double>(M);
}

/// Visits t1 = i/M in [0, L], t2 = -j/M in [-t1, 0], t3 = -k/M in [-L, 0]
/// in lexicographic order (ascending t1, t2, t3).
template <typename Visit>
void for_each_dual_vector(int L, int M, const PruneContext *prune, Visit &&visit) {
  if (L < 1 || M < 1)
    throw std::invalid_argument("t-grid requires L, M >= 1");
  std::optional<GridPruner> pruner;
  if (prune)
    pruner.emplace(*prune);
  const int top = L * M;
  for (int i = 0; i <= top; ++i) {
    const double t1 = grid_value(i, M);
    for (int j = i; j >= 0; --j) {
      const double t2 = -grid_value(j, M);
      if (pruner && !pruner->admits_pair(t1, t2))
        continue;
      const double bound = pruner ? pruner->t3_bound(t1, t2) : 0.0;
      for (int k = top; k >= 0; --k) {
        const double t3 = -grid_value(k, M);
        if (pruner && std::abs(t3) > bound + GridPruner::slack)
          continue;
        visit(DualVector{t1, t2, t3});
      }
    }
  }
}

inline std::vector<DualVector> t_grid(int L, int M,
                                      std::optional<PruneContext> prune = std::nullopt) {
  std::vector<DualVector> out;
  for_each_dual_vector(L, M, prune ? &*prune : nullptr,
                       [&](const DualVector &t) { out.push_back(t); });
  return out;
}

// ---------------------------------------------------------------------------
// Discretised inner minimum

/// Curve-discretisation correction (pi/2 - u')(1 + 2|t1| + 2|t2|)/S.
inline double delta_correction(const DualVector &t, double u_prime, int S) {
  const double coef = 1.0 + 2.0 * std::abs(t.t1) + 2.0 * std::abs(t.t2);
  return (half_pi - u_prime) * coef / static_cast<double>(S);
}

namespace detail {

/// Energy level j of E_{L,N}, j = 1..LN.
inline double energy_level(int j, int levels) {
  return half_pi * static_cast<double>(j) / static_cast<double>(levels);
}

/// Sample k of both curves at one energy level. With sigma = k*Delta/S the
/// first curve sits at (x, y) and the second at (y, x), where x is the bias
/// at angle E' + sigma and y the bias at angle sigma. Both share the entropy.
struct CurveSample {
  double x;
  double y;
  double h;
};

inline CurveSample curve_sample(double energy, double span, int k, int S) {
  const double sigma = span * static_cast<double>(k) / static_cast<double>(S);
  const double a = energy + sigma;
  const double ca = std::cos(a), sa = std::sin(a);
  const double cs = std::cos(sigma), ss = std::sin(sigma);
  const double pa = ca * ca, qa = sa * sa;
  const double ps = cs * cs, qs = ss * ss;
  return {2.0 * pa - 1.0, 2.0 * ps - 1.0,
          0.5 * (binary_entropy_pq(pa, qa) + binary_entropy_pq(ps, qs))};
}

/// Objective on curve one, point (x, y).
inline double curve_one_value(const CurveSample &p, double t1, double t2) {
  return (p.h - t1 * p.x) - t2 * p.y;
}
/// Objective on curve two, point (y, x).
inline double curve_two_value(const CurveSample &p, double t1, double t2) {
  return (p.h - t1 * p.y) - t2 * p.x;
}

inline double corner_min(double t1, double t2) {
  return std::min(-t1 - t2, t1 + t2);
}

/// Curve-scan correction at one level, same expression as delta_correction().
inline double level_correction(double span, double coef, int S) {
  return span * coef / static_cast<double>(S);
}

} // namespace detail

/// Exhaustive evaluation of the discretised inner minimum. Reference for the
/// accelerated path; cost L*N*(S+1) curve samples.
inline double inner_min_reference(const DualVector &t, int L, int N, int S) {
  DiscretizationParams{L, 1, N, S}.validate();
  const int levels = L * N;
  const double coef = 1.0 + 2.0 * std::abs(t.t1) + 2.0 * std::abs(t.t2);
  const double corners = detail::corner_min(t.t1, t.t2);
  double best = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= levels; ++j) {
    const double energy = detail::energy_level(j, levels);
    const double span = half_pi - energy;
    const double delta = detail::level_correction(span, coef, S);
    double psi = corners;
    for (int k = 0; k <= S; ++k) {
      const auto p = detail::curve_sample(energy, span, k, S);
      psi = std::min(psi, detail::curve_one_value(p, t.t1, t.t2) - delta);
      psi = std::min(psi, detail::curve_two_value(p, t.t1, t.t2) - delta);
    }
    best = std::min(best, psi + (-t.t3 * energy));
  }
  return best;
}

namespace detail {

/// Absolute slack absorbed by every pruning comparison; covers rounding in
/// sample values and bounds.
inline constexpr double prune_margin = 1e-9;
/// Upper bound on |dH/dsigma| along either boundary curve.
inline constexpr double entropy_lipschitz = 2.0;
/// Leaf size below which blocks are scanned exhaustively.
inline constexpr int leaf_size = 8;
inline constexpr int branching = 8;

/// Energy level data shared by all dual vectors.
struct Level {
  double energy;
  double span; // pi/2 - E'
  double cos2e;
};

/// Block centres per energy level, optionally cached. Centre values are
/// exact curve samples, so they also serve as upper bounds.
class CurveTable {
public:
  CurveTable(int L, int N, int S, std::size_t cache_budget_bytes)
      : levels_(L * N), S_(S) {
    level_.reserve(levels_);
    for (int j = 1; j <= levels_; ++j) {
      const double e = energy_level(j, levels_);
      level_.push_back({e, half_pi - e, std::cos(2.0 * e)});
    }
    // Pick the smallest power-of-two block (>= 64) whose centre cache fits.
    block_ = 64;
    while (block_ < S_ + 1 && cache_bytes(block_) > cache_budget_bytes)
      block_ *= 2;
    if (cache_budget_bytes == 0 || cache_bytes(block_) > cache_budget_bytes) {
      block_ = std::max(64, (S_ + 1 + branching - 1) / branching);
      cached_ = false;
    } else {
      cached_ = true;
    }
    blocks_ = (S_ + 1 + block_ - 1) / block_;
    if (cached_) {
      centres_.resize(static_cast<std::size_t>(levels_) * blocks_);
      for (int j = 0; j < levels_; ++j)
        for (int q = 0; q < blocks_; ++q)
          centres_[static_cast<std::size_t>(j) * blocks_ + q] =
              curve_sample(level_[j].energy, level_[j].span, centre_of(q), S_);
    }
  }

  [[nodiscard]] int levels() const { return levels_; }
  [[nodiscard]] int S() const { return S_; }
  [[nodiscard]] int blocks() const { return blocks_; }
  [[nodiscard]] bool cached() const { return cached_; }
  [[nodiscard]] const Level &level(int j) const { return level_[j]; }

  [[nodiscard]] int block_lo(int q) const { return q * block_; }
  [[nodiscard]] int block_hi(int q) const { return std::min(S_, q * block_ + block_ - 1); }
  [[nodiscard]] int centre_of(int q) const {
    const int lo = block_lo(q), hi = block_hi(q);
    return lo + (hi - lo) / 2;
  }

  [[nodiscard]] CurveSample centre(int j, int q) const {
    if (cached_)
      return centres_[static_cast<std::size_t>(j) * blocks_ + q];
    return curve_sample(level_[j].energy, level_[j].span, centre_of(q), S_);
  }

  [[nodiscard]] CurveSample sample(int j, int k) const {
    return curve_sample(level_[j].energy, level_[j].span, k, S_);
  }

private:
  [[nodiscard]] std::size_t cache_bytes(int block) const {
    const std::size_t nb = static_cast<std::size_t>((S_ + 1 + block - 1) / block);
    return nb * static_cast<std::size_t>(levels_) * sizeof(CurveSample);
  }

  int levels_;
  int S_;
  int block_ = 64;
  int blocks_ = 1;
  bool cached_ = false;
  std::vector<Level> level_;
  std::vector<CurveSample> centres_;
};

/// Per-(t1, t2) quantities at one energy level.
struct LevelView {
  double delta;     // curve correction
  double amplitude; // amplitude R of the sinusoid -t1 c0 - t2 c1 along a curve
  double step;      // sample spacing in sigma
};

/// Lower bound of a curve objective over samples within `radius` (sigma units)
/// of a centre with value g and linear part lin.
inline double block_lower_bound(double g, double lin, double amplitude, double radius,
                                double rounding) {
  const double slope =
      2.0 * std::sqrt(std::max(0.0, amplitude * amplitude - lin * lin) + rounding);
  return g - (slope + entropy_lipschitz) * radius - 2.0 * amplitude * radius * radius -
         prune_margin;
}

/// Branch-and-bound scan of the curve samples of one pair (t1, t2).
class PairScanner {
public:
  PairScanner(const CurveTable &table, double t1, double t2)
      : table_(table), t1_(t1), t2_(t2),
        coef_(1.0 + 2.0 * std::abs(t1) + 2.0 * std::abs(t2)), corners_(corner_min(t1, t2)),
        rounding_(1e-13 * (std::abs(t1) + std::abs(t2)) * (std::abs(t1) + std::abs(t2))) {}

  [[nodiscard]] double corners() const { return corners_; }

  [[nodiscard]] LevelView view(int j) const {
    const Level &lv = table_.level(j);
    const double r2 = t1_ * t1_ + t2_ * t2_ + 2.0 * t1_ * t2_ * lv.cos2e;
    return {level_correction(lv.span, coef_, table_.S()), std::sqrt(std::max(0.0, r2)),
            lv.span / static_cast<double>(table_.S())};
  }

  /// Values (minus correction) of both curves at a sample, and their lower
  /// bound over a block of the given sample radius around it.
  struct Probe {
    double value;
    double lower;
  };

  [[nodiscard]] Probe probe(const CurveSample &p, const LevelView &v, int radius) const {
    const double g1 = curve_one_value(p, t1_, t2_);
    const double g2 = curve_two_value(p, t1_, t2_);
    const double value = std::min(g1 - v.delta, g2 - v.delta);
    if (radius == 0)
      return {value, value};
    const double r = v.step * static_cast<double>(radius) * (1.0 + 1e-12);
    const double lin1 = -t1_ * p.x - t2_ * p.y;
    const double lin2 = -t1_ * p.y - t2_ * p.x;
    const double lb = std::min(block_lower_bound(g1, lin1, v.amplitude, r, rounding_),
                               block_lower_bound(g2, lin2, v.amplitude, r, rounding_)) -
                      v.delta;
    return {value, lb};
  }

  /// psi at level j restricted to the cached block centres (exact samples),
  /// and the lower bound of psi over all samples.
  void coarse(int j, double &psi_value, double &psi_lower) const {
    const LevelView v = view(j);
    double val = corners_, low = corners_;
    for (int q = 0; q < table_.blocks(); ++q) {
      const Probe pr = probe(table_.centre(j, q), v, block_radius(q));
      val = std::min(val, pr.value);
      low = std::min(low, pr.lower);
    }
    psi_value = val;
    psi_lower = low;
  }

  /// Centre-only psi value (upper bound on psi).
  [[nodiscard]] double coarse_value(int j) const {
    const LevelView v = view(j);
    double val = corners_;
    for (int q = 0; q < table_.blocks(); ++q)
      val = std::min(val, probe(table_.centre(j, q), v, 0).value);
    return val;
  }

  /// Refines level j. `psi` enters as the current known value (an exact
  /// sample minimum) and leaves lowered by every sample that could matter.
  /// A block is skipped when its lower bound is at least min(threshold, psi).
  void refine(int j, double threshold, double &psi) const {
    const LevelView v = view(j);
    std::vector<Node> &order = scratch_;
    order.clear();
    for (int q = 0; q < table_.blocks(); ++q) {
      const Probe pr = probe(table_.centre(j, q), v, block_radius(q));
      psi = std::min(psi, pr.value);
      order.push_back({q, pr.lower});
    }
    std::sort(order.begin(), order.end(),
              [](const Node &a, const Node &b) { return a.lower < b.lower || (a.lower == b.lower && a.q < b.q); });
    for (const Node &n : order) {
      if (n.lower >= std::min(threshold, psi))
        break;
      descend(j, v, table_.block_lo(n.q), table_.block_hi(n.q), threshold, psi);
    }
  }

  [[nodiscard]] int block_radius(int q) const {
    return table_.block_hi(q) - table_.centre_of(q);
  }

  [[nodiscard]] std::uint64_t samples_evaluated() const { return samples_; }

private:
  void descend(int j, const LevelView &v, int lo, int hi, double threshold, double &psi) const {
    const int len = hi - lo + 1;
    if (len <= leaf_size) {
      for (int k = lo; k <= hi; ++k) {
        psi = std::min(psi, probe(table_.sample(j, k), v, 0).value);
      }
      samples_ += static_cast<std::uint64_t>(len);
      return;
    }
    const int width = (len + branching - 1) / branching;
    std::array<int, branching> los{}, his{};
    std::array<double, branching> lows{};
    std::array<int, branching> idx{};
    int count = 0;
    for (int a = lo; a <= hi; a += width, ++count) {
      const int b = std::min(hi, a + width - 1);
      const int c = a + (b - a) / 2;
      const Probe pr = probe(table_.sample(j, c), v, b - c);
      ++samples_;
      psi = std::min(psi, pr.value);
      los[count] = a;
      his[count] = b;
      lows[count] = pr.lower;
      idx[count] = count;
    }
    std::sort(idx.begin(), idx.begin() + count,
              [&](int a, int b) { return lows[a] < lows[b] || (lows[a] == lows[b] && a < b); });
    for (int n = 0; n < count; ++n) {
      const int c = idx[n];
      if (lows[c] >= std::min(threshold, psi))
        break;
      descend(j, v, los[c], his[c], threshold, psi);
    }
  }

  struct Node {
    int q;
    double lower;
  };

  const CurveTable &table_;
  double t1_, t2_;
  double coef_;
  double corners_;
  double rounding_;
  mutable std::vector<Node> scratch_;
  mutable std::uint64_t samples_ = 0;
};

/// Order in which energy levels are visited: a coarse stride first so that
/// the running minimum settles early, then the rest.
inline std::vector<int> level_order(int levels) {
  std::vector<int> order;
  order.reserve(levels);
  const int stride = std::max(1, std::min(64, levels / 16));
  for (int j = 0; j < levels; j += stride)
    order.push_back(j);
  for (int j = 0; j < levels; ++j)
    if (j % stride != 0)
      order.push_back(j);
  return order;
}

/// Exact inner minimum for one dual vector on a prepared table.
inline double inner_min_on(const CurveTable &table, const DualVector &t) {
  const PairScanner scan(table, t.t1, t.t2);
  double best = std::numeric_limits<double>::infinity();
  for (int j : level_order(table.levels())) {
    const double c = -t.t3 * table.level(j).energy;
    double psi = scan.corners();
    // Blocks whose values v satisfy v + c >= best cannot lower the minimum.
    const double threshold = best - c;
    scan.refine(j, threshold, psi);
    best = std::min(best, psi + c);
  }
  return best;
}

inline constexpr std::size_t default_cache_budget = std::size_t{1} << 30;

} // namespace detail

/// Discretised inner minimum t_{L,N,S}(t); equal to inner_min_reference()
/// bit for bit.
inline double inner_min(const DualVector &t, int L, int N, int S) {
  DiscretizationParams{L, 1, N, S}.validate();
  const detail::CurveTable table(L, N, S, 0);
  return detail::inner_min_on(table, t);
}

namespace detail {
inline double dual_objective(double inner, const DualVector &t, Correlation c, double u,
                             int levels) {
  return (inner - std::abs(t.t3) * half_pi / static_cast<double>(levels)) +
         (t.t1 * c.c0 + t.t2 * c.c1 + t.t3 * u);
}
} // namespace detail

/// Dual objective D(t) at the observed point; a certified lower bound on H*
/// for any t when (c, u) is quantum-feasible and u <= pi/2.
inline double dual_value(const DualVector &t, Correlation c, EnergyTimeBudget u,
                         const DiscretizationParams &params) {
  params.validate();
  const double inner = inner_min(t, params.L, params.N, params.S);
  return detail::dual_objective(inner, t, c, u.effective(), params.energy_levels());
}

// ---------------------------------------------------------------------------
// Certification

struct SolverOptions {
  unsigned threads = 1;          ///< 0 = auto
  double safety_margin = 0.0;    ///< subtracted from the raw dual value
  bool prune = true;             ///< apply the sector restrictions on |t3| and probe points
  std::size_t cache_budget_bytes = detail::default_cache_budget;
};

struct CertifiedBound {
  double h_cert = 0.0;
  double h_dual_raw = 0.0;
  DualVector best_t;
  DiscretizationParams params;
  Correlation input;
  EnergyTimeBudget budget;
  Correlation canonical_input;
  Symmetry symmetry_applied = Symmetry::Identity;
  bool classical_member = false;
  bool quantum_member = true;
};

inline constexpr double certify_feasibility_tol = 1e-9;

/// Inputs accepted by certify(): the overlap set, plus the classical wedge.
/// Wedge points outside the overlap set (near the corners) are still produced
/// by deterministic ensembles with mean budget u, so the primal problem is
/// feasible there and its optimum is 0.
inline bool certifiable(Correlation c, EnergyTimeBudget u) {
  return quantum_contains(c, u, certify_feasibility_tol) || classical_contains(c, u);
}

namespace detail {

/// Shared best (value, t) with lexicographic tie-break on t.
class BestTracker {
public:
  struct Entry {
    double value = -std::numeric_limits<double>::infinity();
    DualVector t{};
    bool set = false;
  };

  [[nodiscard]] Entry get() const {
    std::lock_guard lock(mutex_);
    return best_;
  }

  void offer(double value, const DualVector &t) {
    std::lock_guard lock(mutex_);
    if (!best_.set || value > best_.value || (value == best_.value && t < best_.t))
      best_ = {value, t, true};
  }

  /// True when an upper bound `ub` for vector t proves it cannot win.
  static bool cannot_win(const Entry &b, double ub, const DualVector &t) {
    if (!b.set)
      return false;
    return ub < b.value || (ub == b.value && b.t < t);
  }

private:
  mutable std::mutex mutex_;
  Entry best_;
};

struct PairTask {
  double t1;
  double t2;
  std::vector<double> t3; // candidate values, ascending
  double screen = std::numeric_limits<double>::infinity();
};

class Certifier {
public:
  Certifier(Correlation canonical, double u, const DiscretizationParams &params,
            const SolverOptions &options)
      : c_(canonical), u_(u), params_(params), options_(options),
        table_(params.L, params.N, params.S, options.cache_budget_bytes) {}

  BestTracker::Entry run() {
    std::vector<PairTask> tasks = build_tasks();
    const unsigned threads = resolve_threads(options_.threads);
    // Screening: cheap upper bound per pair from a subset of levels.
    parallel_for(tasks.size(), threads, [&](std::size_t i) { tasks[i].screen = screen(tasks[i]); });
    std::vector<std::size_t> order(tasks.size());
    for (std::size_t i = 0; i < order.size(); ++i)
      order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return tasks[a].screen > tasks[b].screen;
    });
    parallel_for(order.size(), threads, [&](std::size_t i) { solve(tasks[order[i]]); });
    return best_.get();
  }

private:
  std::vector<PairTask> build_tasks() const {
    std::optional<GridPruner> pruner;
    if (options_.prune)
      pruner.emplace(PruneContext{c_, u_});
    std::vector<PairTask> tasks;
    const int top = params_.L * params_.M;
    for (int i = 0; i <= top; ++i) {
      const double t1 = grid_value(i, params_.M);
      for (int j = i; j >= 0; --j) {
        const double t2 = -grid_value(j, params_.M);
        if (pruner && !pruner->admits_pair(t1, t2))
          continue;
        const double bound = pruner ? pruner->t3_bound(t1, t2) : 0.0;
        PairTask task{t1, t2, {}};
        for (int k = top; k >= 0; --k) {
          const double t3 = -grid_value(k, params_.M);
          if (pruner && std::abs(t3) > bound + GridPruner::slack)
            continue;
          task.t3.push_back(t3);
        }
        if (!task.t3.empty())
          tasks.push_back(std::move(task));
      }
    }
    return tasks;
  }

  [[nodiscard]] int screen_stride() const {
    return std::max(1, std::min(16, table_.levels() / 64));
  }

  double objective(double inner, double t1, double t2, double t3) const {
    return dual_objective(inner, {t1, t2, t3}, c_, u_, table_.levels());
  }

  /// Upper bound on max_t3 D over the pair.
  double screen(const PairTask &task) const {
    const PairScanner scan(table_, task.t1, task.t2);
    std::vector<double> m(task.t3.size(), std::numeric_limits<double>::infinity());
    for (int j = 0; j < table_.levels(); j += screen_stride()) {
      const double psi = scan.coarse_value(j);
      const double e = table_.level(j).energy;
      for (std::size_t a = 0; a < m.size(); ++a)
        m[a] = std::min(m[a], psi + (-task.t3[a] * e));
    }
    double ub = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m.size(); ++a)
      ub = std::max(ub, objective(m[a], task.t1, task.t2, task.t3[a]));
    return ub;
  }

  /// Drops t3 candidates whose upper bound cannot beat the current best.
  void drop_losers(const PairTask &task, std::vector<std::size_t> &active,
                   const std::vector<double> &m) const {
    const auto b = best_.get();
    std::erase_if(active, [&](std::size_t a) {
      const double ub = objective(m[a], task.t1, task.t2, task.t3[a]);
      return BestTracker::cannot_win(b, ub, {task.t1, task.t2, task.t3[a]});
    });
  }

  void solve(const PairTask &task) {
    if (const auto b = best_.get(); b.set && task.screen < b.value)
      return;
    const int levels = table_.levels();
    const PairScanner scan(table_, task.t1, task.t2);
    std::vector<double> psi(levels), low(levels);
    for (int j = 0; j < levels; ++j)
      scan.coarse(j, psi[j], low[j]);

    std::vector<double> m(task.t3.size(), std::numeric_limits<double>::infinity());
    std::vector<std::size_t> active(task.t3.size());
    for (std::size_t a = 0; a < active.size(); ++a)
      active[a] = a;
    // Upper bounds on the inner minimum from centre values on a level subset.
    for (int j = 0; j < levels; j += screen_stride()) {
      const double e = table_.level(j).energy;
      for (std::size_t a : active)
        m[a] = std::min(m[a], psi[j] + (-task.t3[a] * e));
    }
    drop_losers(task, active, m);
    if (active.empty())
      return;
    for (int j = 0; j < levels; ++j) {
      const double e = table_.level(j).energy;
      for (std::size_t a : active)
        m[a] = std::min(m[a], psi[j] + (-task.t3[a] * e));
    }
    drop_losers(task, active, m);

    // Refinement: a level needs work only if its lower bound can undercut
    // some active m(t3).
    std::size_t since_drop = 0;
    for (int j : level_order(levels)) {
      if (active.empty())
        return;
      const double e = table_.level(j).energy;
      double threshold = -std::numeric_limits<double>::infinity();
      for (std::size_t a : active)
        threshold = std::max(threshold, m[a] - (-task.t3[a] * e));
      if (low[j] >= std::min(threshold, psi[j]))
        continue;
      double value = psi[j];
      scan.refine(j, threshold, value);
      if (value < psi[j]) {
        psi[j] = value;
        for (std::size_t a : active)
          m[a] = std::min(m[a], value + (-task.t3[a] * e));
        if (++since_drop >= 256) {
          drop_losers(task, active, m);
          since_drop = 0;
        }
      }
    }
    for (std::size_t a : active)
      best_.offer(objective(m[a], task.t1, task.t2, task.t3[a]), {task.t1, task.t2, task.t3[a]});
  }

  Correlation c_;
  double u_;
  DiscretizationParams params_;
  SolverOptions options_;
  CurveTable table_;
  BestTracker best_;
};

} // namespace detail

/// Certified lower bound on H* at (c, u).
inline CertifiedBound certify(Correlation c, EnergyTimeBudget u,
                              const DiscretizationParams &params,
                              const SolverOptions &options = {}) {
  params.validate();
  if (!c.valid())
    throw DomainError("correlation components must lie in [-1, 1]");
  if (!certifiable(c, u))
    throw InfeasibleInput(c, u.value(), quantum_overlap_lhs(c), gamma(u));

  const CanonicalPoint canon = canonicalize(c);
  detail::Certifier solver(canon.point, u.effective(), params, options);
  const auto best = solver.run();

  CertifiedBound out;
  out.h_dual_raw = best.value - options.safety_margin;
  out.h_cert = std::max(0.0, out.h_dual_raw);
  out.best_t = best.t;
  out.params = params;
  out.input = c;
  out.budget = u;
  out.canonical_input = canon.point;
  out.symmetry_applied = canon.map;
  out.classical_member = classical_contains(c, u);
  out.quantum_member = quantum_contains(c, u, certify_feasibility_tol);
  return out;
}

// ---------------------------------------------------------------------------
// Diagonal sweep

struct SweepGrid {
  int n = 0;
  EnergyTimeBudget budget;
  std::vector<double> coords;  ///< -1 + 2i/(n-1)
  std::vector<double> h_cert;  ///< row-major [i0 * n + i1]; NaN outside Q and the wedge
  [[nodiscard]] double at(int i0, int i1) const { return h_cert[static_cast<std::size_t>(i0) * n + i1]; }
};

inline double sweep_coordinate(int i, int n) {
  return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
}

/// Certified values over an n x n grid of [-1, 1]^2, computed once per
/// difference C0 - C1 at the antidiagonal midpoint and propagated along the line.
inline SweepGrid diagonal_sweep(EnergyTimeBudget u, int grid_n, const DiscretizationParams &params,
                                const SolverOptions &options = {}) {
  if (grid_n < 1 || grid_n % 2 == 0)
    throw std::invalid_argument("sweep grid size must be odd, got " + std::to_string(grid_n));
  params.validate();
  SweepGrid grid;
  grid.n = grid_n;
  grid.budget = u;
  grid.coords.resize(grid_n);
  for (int i = 0; i < grid_n; ++i)
    grid.coords[i] = grid_n == 1 ? 0.0 : sweep_coordinate(i, grid_n);
  grid.h_cert.assign(static_cast<std::size_t>(grid_n) * grid_n,
                     std::numeric_limits<double>::quiet_NaN());

  // d = i0 - i1 indexes the difference; |d| and -|d| share a canonical midpoint.
  const int span = grid_n - 1;
  std::vector<double> by_gap(span + 1, std::numeric_limits<double>::quiet_NaN());
  std::vector<int> needed;
  for (int d = 0; d <= span; ++d) {
    const double diff = span == 0 ? 0.0 : 2.0 * static_cast<double>(d) / static_cast<double>(span);
    const Correlation mid{diff / 2.0, -diff / 2.0};
    if (classical_contains(mid, u))
      by_gap[d] = 0.0;
    else if (quantum_contains(mid, u))
      needed.push_back(d);
  }
  SolverOptions inner = options;
  inner.threads = 1;
  parallel_for(needed.size(), resolve_threads(options.threads), [&](std::size_t i) {
    const int d = needed[i];
    const double diff = 2.0 * static_cast<double>(d) / static_cast<double>(span);
    by_gap[d] = certify({diff / 2.0, -diff / 2.0}, u, params, inner).h_cert;
  });

  for (int i0 = 0; i0 < grid_n; ++i0)
    for (int i1 = 0; i1 < grid_n; ++i1) {
      const Correlation c{grid.coords[i0], grid.coords[i1]};
      double &cell = grid.h_cert[static_cast<std::size_t>(i0) * grid_n + i1];
      if (classical_contains(c, u))
        cell = 0.0;
      else if (quantum_contains(c, u))
        cell = by_gap[std::abs(i0 - i1)];
    }
  return grid;
}

} // namespace qslrand

#endif // QSLRAND_DUAL_SOLVER_HPP
