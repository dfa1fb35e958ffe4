#ifndef QSLRAND_CORE_SETS_HPP
#define QSLRAND_CORE_SETS_HPP

// Correlations, the entropy objective, and the quantum / classical
// correlation sets of the time-delayed prepare-and-measure scenario.
//
// Units: hbar = 1. Every set depends on the energy bound E and the delay dt
// only through the product u = E * dt, so the public types carry u alone.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qslrand {

inline constexpr double half_pi = std::numbers::pi / 2.0;

/// Thrown when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Outcome biases C_x = P(+1|x) - P(-1|x) for the two inputs.
struct Correlation {
  double c0 = 0.0;
  double c1 = 0.0;

  [[nodiscard]] bool valid() const noexcept {
    return std::isfinite(c0) && std::isfinite(c1) && std::abs(c0) <= 1.0 &&
           std::abs(c1) <= 1.0;
  }

  friend bool operator==(const Correlation &, const Correlation &) = default;
};

/// Dimensionless energy-time product u = E * dt.
///
/// Values above pi/2 are legal; both correlation sets are then the full square
/// and the budget is reported as trivial.
class EnergyTimeBudget {
public:
  constexpr EnergyTimeBudget() = default;
  explicit EnergyTimeBudget(double u) : u_(u) {
    if (!(u >= 0.0) || !std::isfinite(u))
      throw DomainError("energy-time budget must be finite and >= 0, got " +
                        std::to_string(u));
  }

  static EnergyTimeBudget from_energy_and_delay(double energy, double dt) {
    return EnergyTimeBudget(energy * dt);
  }

  [[nodiscard]] constexpr double value() const noexcept { return u_; }
  [[nodiscard]] constexpr bool trivial() const noexcept { return u_ >= half_pi; }
  /// The budget as seen by the dual problem; budgets above pi/2 are equivalent to pi/2.
  [[nodiscard]] constexpr double effective() const noexcept {
    return u_ < half_pi ? u_ : half_pi;
  }

  friend bool operator==(const EnergyTimeBudget &,
                         const EnergyTimeBudget &) = default;

private:
  double u_ = 0.0;
};

/// The two curves bounding Q_u. CurveOne has C1 >= C0, CurveTwo has C0 >= C1.
enum class BoundaryCurve { One, Two };

inline const char *to_string(BoundaryCurve c) {
  return c == BoundaryCurve::One ? "q1" : "q2";
}

/// Smallest overlap |<psi0|psi1>| reachable within the budget.
inline double gamma(EnergyTimeBudget u) {
  return u.value() < half_pi ? std::cos(u.value()) : 0.0;
}

/// Left-hand side of the overlap inequality defining the quantum set.
inline double quantum_overlap_lhs(Correlation c) {
  return 0.5 * (std::sqrt(1.0 + c.c0) * std::sqrt(1.0 + c.c1) +
                std::sqrt(1.0 - c.c0) * std::sqrt(1.0 - c.c1));
}

inline constexpr double default_quantum_tol = 1e-12;

inline bool quantum_contains(Correlation c, EnergyTimeBudget u,
                             double tol = default_quantum_tol) {
  if (!c.valid())
    return false;
  return quantum_overlap_lhs(c) >= gamma(u) - tol;
}

/// Classical max-average wedge |C0 - C1| <= min(2, 4u/pi). No tolerance.
inline bool classical_contains(Correlation c, EnergyTimeBudget u) {
  if (!c.valid())
    return false;
  const double threshold = std::min(2.0, 4.0 * u.value() / std::numbers::pi);
  return std::abs(c.c0 - c.c1) <= threshold;
}

/// Valid parameter interval for boundary_point.
struct CurveInterval {
  double lo;
  double hi;
};

inline CurveInterval curve_interval(double u_prime, BoundaryCurve which) {
  const double u = std::min(u_prime, half_pi);
  if (which == BoundaryCurve::One)
    return {u, half_pi};
  return {0.0, half_pi - u};
}

inline double twice_cos_sq_minus_one(double x) {
  const double c = std::cos(x);
  return 2.0 * c * c - 1.0;
}

/// Point on a boundary curve of Q_{u'}.
///
/// CurveOne: (2cos^2 s - 1, 2cos^2(s - u') - 1), s in [u', pi/2].
/// CurveTwo: (2cos^2 s - 1, 2cos^2(s + u') - 1), s in [0, pi/2 - u'].
inline Correlation boundary_point(EnergyTimeBudget u_prime, BoundaryCurve which,
                                  double s) {
  const double u = u_prime.value();
  if (u > half_pi)
    throw DomainError("boundary curves are defined for u' <= pi/2");
  const auto [lo, hi] = curve_interval(u, which);
  if (!(s >= lo && s <= hi))
    throw DomainError("curve parameter s=" + std::to_string(s) +
                      " outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  const double shifted = which == BoundaryCurve::One ? s - u : s + u;
  return {twice_cos_sq_minus_one(s), twice_cos_sq_minus_one(shifted)};
}

/// Binary entropy in bits of the distribution (p, q), p + q = 1, with 0 log 0 = 0.
inline double binary_entropy_pq(double p, double q) noexcept {
  double h = 0.0;
  if (p > 0.0)
    h -= p * std::log2(p);
  if (q > 0.0)
    h -= q * std::log2(q);
  return h;
}

/// Binary entropy of the outcome for bias c.
inline double h_bin(double c) {
  if (!(std::abs(c) <= 1.0))
    throw DomainError("h_bin: bias must lie in [-1, 1], got " +
                      std::to_string(c));
  return binary_entropy_pq(0.5 * (1.0 + c), 0.5 * (1.0 - c));
}

/// Conditional Shannon entropy of the outcome with uniform inputs.
inline double entropy(Correlation c) { return 0.5 * (h_bin(c.c0) + h_bin(c.c1)); }

} // namespace qslrand

#endif // QSLRAND_CORE_SETS_HPP
