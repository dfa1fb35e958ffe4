#ifndef QSLRAND_PRIMAL_ORACLE_HPP
#define QSLRAND_PRIMAL_ORACLE_HPP

// Independent cross-checks for the dual solver: explicit primal ensembles
// (upper bounds on H*), the two-level quantum model realising the boundary
// curves, and the concavity of the energy standard deviation.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qslrand/core_sets.hpp"
#include "qslrand/dual_solver.hpp"
#include "qslrand/parallel.hpp"

namespace qslrand {

struct EnsembleComponent {
  double weight = 0.0;
  Correlation correlation;
  double budget = 0.0; ///< u^lambda
};

/// Hidden-variable decomposition {p(lambda), C^lambda, u^lambda}.
struct Ensemble {
  std::vector<EnsembleComponent> components;

  [[nodiscard]] double total_weight() const {
    double w = 0.0;
    for (const auto &c : components)
      w += c.weight;
    return w;
  }
  [[nodiscard]] double mean_entropy() const {
    double h = 0.0;
    for (const auto &c : components)
      h += c.weight * entropy(c.correlation);
    return h;
  }
  [[nodiscard]] double mean_budget() const {
    double u = 0.0;
    for (const auto &c : components)
      u += c.weight * c.budget;
    return u;
  }
  [[nodiscard]] Correlation mean_correlation() const {
    Correlation m{0.0, 0.0};
    for (const auto &c : components) {
      m.c0 += c.weight * c.correlation.c0;
      m.c1 += c.weight * c.correlation.c1;
    }
    return m;
  }
};

/// Constraint check of the primal problem with the energy constraint at equality.
inline bool ensemble_feasible(const Ensemble &e, Correlation c, EnergyTimeBudget u,
                              double tol = 1e-9) {
  if (e.components.empty())
    return false;
  for (const auto &comp : e.components) {
    if (comp.weight < 0.0 || comp.budget < 0.0)
      return false;
    if (!quantum_contains(comp.correlation, EnergyTimeBudget(comp.budget), tol))
      return false;
  }
  if (std::abs(e.total_weight() - 1.0) > tol)
    return false;
  const Correlation m = e.mean_correlation();
  return std::abs(m.c0 - c.c0) <= tol && std::abs(m.c1 - c.c1) <= tol &&
         std::abs(e.mean_budget() - u.value()) <= tol;
}

/// Raises member budgets (allowed because Q_u grows with u) until the mean
/// budget equals u. Requires mean budget <= u <= pi/2 or members able to reach u.
inline void raise_budgets_to(Ensemble &e, double u) {
  const double deficit = u - e.mean_budget();
  if (deficit <= 0.0)
    return;
  double room = 0.0;
  for (const auto &c : e.components)
    room += c.weight * std::max(0.0, half_pi - c.budget);
  if (u > half_pi || room <= 0.0) {
    // Beyond pi/2 every set is the full square; shift all budgets uniformly.
    for (auto &c : e.components)
      c.budget += deficit;
    return;
  }
  const double theta = std::min(1.0, deficit / room);
  for (auto &c : e.components)
    c.budget += theta * std::max(0.0, half_pi - c.budget);
}

struct PrimalOptions {
  int samples_per_curve = 6; ///< s-values per curve and budget level
  unsigned threads = 1;
  double weight_floor = -1e-12;
};

struct PrimalResult {
  double value = std::numeric_limits<double>::infinity();
  Ensemble ensemble;
  [[nodiscard]] bool found() const { return std::isfinite(value); }
};

namespace detail {

struct PoolPoint {
  Correlation c;
  double budget;
  double h;
};

/// Candidate pool: the four vertices of the square plus boundary samples.
inline std::vector<PoolPoint> primal_pool(double u, int samples_per_curve) {
  std::vector<PoolPoint> pool;
  auto add = [&](Correlation c, double b) { pool.push_back({c, b, entropy(c)}); };
  add({1.0, 1.0}, 0.0);
  add({-1.0, -1.0}, 0.0);
  add({1.0, -1.0}, half_pi);
  add({-1.0, 1.0}, half_pi);
  const double uu = std::min(u, half_pi);
  const std::array<double, 5> levels{uu / 4.0, uu / 2.0, uu, std::min(2.0 * uu, half_pi), half_pi};
  for (double level : levels) {
    for (BoundaryCurve curve : {BoundaryCurve::One, BoundaryCurve::Two}) {
      const auto [lo, hi] = curve_interval(level, curve);
      for (int i = 0; i < samples_per_curve; ++i) {
        const double s = samples_per_curve == 1
                             ? lo
                             : lo + (hi - lo) * static_cast<double>(i) /
                                        static_cast<double>(samples_per_curve - 1);
        add(boundary_point(EnergyTimeBudget(level), curve, std::clamp(s, lo, hi)), level);
      }
    }
  }
  return pool;
}

/// Solves the n x n system a x = b by Gaussian elimination with partial
/// pivoting. Returns false when a pivot falls below `singular`.
template <std::size_t Size>
bool solve_dense(std::array<std::array<double, Size>, Size> a, std::array<double, Size> b,
                 std::array<double, Size> &x, double singular = 1e-12) {
  for (std::size_t col = 0; col < Size; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < Size; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col]))
        piv = r;
    if (std::abs(a[piv][col]) < singular)
      return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < Size; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < Size; ++k)
        a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = Size; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < Size; ++k)
      s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return true;
}

/// Clamps weights in [floor, 0) to zero and renormalises; false if any weight is below floor.
template <std::size_t Size>
bool clean_weights(std::array<double, Size> &p, double floor) {
  double sum = 0.0;
  for (double &w : p) {
    if (w < floor || !std::isfinite(w))
      return false;
    if (w < 0.0)
      w = 0.0;
    sum += w;
  }
  if (!(sum > 0.0))
    return false;
  for (double &w : p)
    w /= sum;
  return true;
}

} // namespace detail

/// Best explicit ensemble over all 3- and 4-point subsets of the candidate
/// pool. 3-point subsets match (1, C0, C1) with the mean budget at most u
/// (budgets are then raised to equality); 4-point subsets match the budget
/// exactly. Together these are the vertices of the pool's feasible polytope.
inline PrimalResult primal_search(Correlation c, EnergyTimeBudget u,
                                  const PrimalOptions &options = {}) {
  if (!c.valid())
    throw DomainError("correlation components must lie in [-1, 1]");
  if (!certifiable(c, u))
    throw InfeasibleInput(c, u.value(), quantum_overlap_lhs(c), gamma(u));
  const double uu = u.value();
  const auto pool = detail::primal_pool(uu, options.samples_per_curve);
  const std::size_t n = pool.size();

  PrimalResult best;
  // Ties go to the lowest first pool index so the ensemble is thread-count independent.
  std::size_t best_index = n;
  if (quantum_contains(c, u, certify_feasibility_tol)) {
    // The observed point itself is a singleton ensemble.
    best.value = entropy(c);
    best.ensemble.components = {{1.0, c, uu}};
  }

  std::mutex mutex;
  auto offer = [&](double value, std::size_t index, Ensemble &&e) {
    std::lock_guard lock(mutex);
    if (value < best.value || (value == best.value && index < best_index)) {
      best.value = value;
      best_index = index;
      best.ensemble = std::move(e);
    }
  };
  const unsigned threads = resolve_threads(options.threads);
  parallel_for(n, threads, [&](std::size_t a) {
    double local_best = std::numeric_limits<double>::infinity();
    Ensemble local;
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t d = b + 1; d < n; ++d) {
        const std::array<const detail::PoolPoint *, 3> pts{&pool[a], &pool[b], &pool[d]};
        std::array<std::array<double, 3>, 3> m{};
        for (std::size_t k = 0; k < 3; ++k) {
          m[0][k] = 1.0;
          m[1][k] = pts[k]->c.c0;
          m[2][k] = pts[k]->c.c1;
        }
        std::array<double, 3> p{};
        if (!detail::solve_dense<3>(m, {1.0, c.c0, c.c1}, p) ||
            !detail::clean_weights<3>(p, options.weight_floor))
          continue;
        double budget = 0.0, h = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
          budget += p[k] * pts[k]->budget;
          h += p[k] * pts[k]->h;
        }
        if (budget > uu + 1e-12 || h >= local_best)
          continue;
        local_best = h;
        local.components.clear();
        for (std::size_t k = 0; k < 3; ++k)
          if (p[k] > 0.0)
            local.components.push_back({p[k], pts[k]->c, pts[k]->budget});
        raise_budgets_to(local, uu);
      }
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t d = b + 1; d < n; ++d)
        for (std::size_t e = d + 1; e < n; ++e) {
          const std::array<const detail::PoolPoint *, 4> pts{&pool[a], &pool[b], &pool[d], &pool[e]};
          std::array<std::array<double, 4>, 4> m{};
          for (std::size_t k = 0; k < 4; ++k) {
            m[0][k] = 1.0;
            m[1][k] = pts[k]->c.c0;
            m[2][k] = pts[k]->c.c1;
            m[3][k] = pts[k]->budget;
          }
          std::array<double, 4> p{};
          if (!detail::solve_dense<4>(m, {1.0, c.c0, c.c1, uu}, p) ||
              !detail::clean_weights<4>(p, options.weight_floor))
            continue;
          double h = 0.0;
          for (std::size_t k = 0; k < 4; ++k)
            h += p[k] * pts[k]->h;
          if (h >= local_best)
            continue;
          local_best = h;
          local.components.clear();
          for (std::size_t k = 0; k < 4; ++k)
            if (p[k] > 0.0)
              local.components.push_back({p[k], pts[k]->c, pts[k]->budget});
        }
    if (std::isfinite(local_best))
      offer(local_best, a, std::move(local));
  });
  return best;
}

/// Upper bound on H* from the best pool ensemble.
inline double primal_upper_bound(Correlation c, EnergyTimeBudget u,
                                 const PrimalOptions &options = {}) {
  return primal_search(c, u, options).value;
}

// ---------------------------------------------------------------------------
// Two-level model

/// Equal superposition of energies 0 and 2u (time unit dt = 1), measured
/// against the initial state translated by tau. `which` selects the boundary
/// curve reproduced; the curve parameter is s = u * tau.
struct TwoLevelModel {
  EnergyTimeBudget u;
  double tau = 0.0;
  BoundaryCurve which = BoundaryCurve::Two;

  [[nodiscard]] double curve_parameter() const { return u.value() * tau; }
  [[nodiscard]] bool valid() const {
    if (u.value() > half_pi)
      return false;
    const auto [lo, hi] = curve_interval(u.value(), which);
    const double s = curve_parameter();
    return s >= lo - 1e-15 && s <= hi + 1e-15;
  }
};

/// P(+1 | x) for x = 0, 1, obtained by explicit amplitude evolution.
inline std::pair<double, double> two_level_probabilities(const TwoLevelModel &m,
                                                         double delta_t = 1.0) {
  if (!m.valid())
    throw DomainError("two-level model parameter outside the curve interval");
  if (!(delta_t > 0.0))
    throw DomainError("time delay must be positive");
  using cplx = std::complex<double>;
  const double energy = m.u.value() / delta_t;
  const std::array<double, 2> levels{0.0, 2.0 * energy};
  const double amp = 1.0 / std::sqrt(2.0);
  const std::array<cplx, 2> psi0{amp, amp};

  auto evolve = [&](const std::array<cplx, 2> &psi, double t) {
    std::array<cplx, 2> out{};
    for (std::size_t k = 0; k < 2; ++k)
      out[k] = psi[k] * std::exp(cplx(0.0, -levels[k] * t));
    return out;
  };
  auto overlap = [](const std::array<cplx, 2> &a, const std::array<cplx, 2> &b) {
    return std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1];
  };
  const auto psi1 = evolve(psi0, delta_t);
  // M+ = U_theta^dagger |psi0><psi0| U_theta, so P(+|psi) = |<psi0|U_theta|psi>|^2.
  const double theta = (m.which == BoundaryCurve::One ? -m.tau : m.tau) * delta_t;
  auto p_plus = [&](const std::array<cplx, 2> &psi) {
    return std::norm(overlap(psi0, evolve(psi, theta)));
  };
  return {p_plus(psi0), p_plus(psi1)};
}

// ---------------------------------------------------------------------------
// Concavity of the energy standard deviation

/// Finite energy distribution as (energy, probability) pairs.
using EnergyDistribution = std::vector<std::pair<double, double>>;

inline double energy_stddev(const EnergyDistribution &d) {
  double mean = 0.0;
  for (const auto &[e, p] : d)
    mean += p * e;
  double var = 0.0;
  for (const auto &[e, p] : d)
    var += p * (e - mean) * (e - mean);
  return std::sqrt(var);
}

inline constexpr double normalization_tol = 1e-12;

/// True iff the mixture's energy spread is at least the weighted mean of the
/// components' spreads (within 1e-12).
inline bool stddev_concavity_check(const std::vector<EnergyDistribution> &dists,
                                   const std::vector<double> &weights) {
  if (dists.size() != weights.size() || dists.empty())
    throw DomainError("need one weight per distribution");
  auto check_norm = [](double total, const char *what) {
    if (std::abs(total - 1.0) > normalization_tol)
      throw DomainError(std::string(what) + " not normalised");
  };
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0)
      throw DomainError("negative mixture weight");
    wsum += w;
  }
  check_norm(wsum, "mixture weights");
  EnergyDistribution mixture;
  double average = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    double total = 0.0;
    for (const auto &[e, p] : dists[i]) {
      if (p < 0.0)
        throw DomainError("negative probability");
      total += p;
      mixture.emplace_back(e, weights[i] * p);
    }
    check_norm(total, "energy distribution");
    average += weights[i] * energy_stddev(dists[i]);
  }
  return energy_stddev(mixture) >= average - 1e-12;
}

} // namespace qslrand

#endif // QSLRAND_PRIMAL_ORACLE_HPP
