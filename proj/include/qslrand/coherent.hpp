#ifndef QSLRAND_COHERENT_HPP
#define QSLRAND_COHERENT_HPP

// Coherent-state carrier: |alpha> with alpha = i*xi, evolved by a harmonic
// oscillator of frequency omega and measured by the sign of a quadrature.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "qslrand/core_sets.hpp"
#include "qslrand/dual_solver.hpp"
#include "qslrand/parallel.hpp"

namespace qslrand {

/// Error function.
///
/// Uses the all-positive series
///   erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n 2^n x^(2n+1) / (1*3*...*(2n+1)),
/// summed until terms stop changing the sum. Every term is positive, so there
/// is no cancellation and the relative error stays within a few ulp for
/// |x| < 6. Beyond that erfc(x) < 2.2e-17 and the result is +-1.
/// Oddness holds exactly because only |x| is evaluated.
inline double erf(double x) {
  if (std::isnan(x))
    return x;
  const double ax = std::abs(x);
  double r;
  if (ax >= 6.0) {
    r = 1.0;
  } else {
    const double x2 = ax * ax;
    double term = ax;
    double sum = ax;
    for (int n = 1; n < 400; ++n) {
      term *= 2.0 * x2 / static_cast<double>(2 * n + 1);
      const double next = sum + term;
      if (next == sum)
        break;
      sum = next;
    }
    r = std::min(1.0, 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x2) * sum);
  }
  return x < 0.0 ? -r : r;
}

struct CoherentPoint {
  double xi = 0.0;       ///< |alpha|, alpha = i*xi
  double omega_dt = 0.0; ///< phase omega*dt
  double e_dt = 0.0;     ///< assumed energy bound times delay

  [[nodiscard]] bool valid() const {
    return std::isfinite(xi) && std::isfinite(omega_dt) && std::isfinite(e_dt) && xi >= 0.0 &&
           omega_dt >= 0.0 && e_dt >= 0.0;
  }
  /// The energy spread hbar*omega*xi, times dt, respects the assumed bound.
  [[nodiscard]] bool physically_consistent() const { return xi * omega_dt <= e_dt; }
};

/// E[b] at phase omega*t: erf(sqrt2 * Re(i*xi*exp(-i*phase))).
inline double correlation_at_phase(double xi, double phase) {
  return erf(std::numbers::sqrt2 * xi * std::sin(phase));
}

inline Correlation coherent_correlations(const CoherentPoint &p) {
  if (!p.valid())
    throw DomainError("coherent point parameters must be finite and >= 0");
  return {correlation_at_phase(p.xi, 0.0), correlation_at_phase(p.xi, p.omega_dt)};
}

/// Non-zero certifiable randomness: the observed correlations leave the
/// classical wedge under an honest, non-trivial energy bound.
inline bool nonzero_randomness_condition(const CoherentPoint &p) {
  if (!p.valid())
    throw DomainError("coherent point parameters must be finite and >= 0");
  if (!(p.e_dt < half_pi) || !p.physically_consistent())
    return false;
  const double c1 = correlation_at_phase(p.xi, p.omega_dt);
  return std::abs(c1) > 4.0 * p.e_dt / std::numbers::pi;
}

/// Cellwise evaluation of the condition over [0, pi] x [0, pi/2].
struct RegionMask {
  double xi = 0.0;
  std::vector<double> omega_dt; ///< columns
  std::vector<double> e_dt;     ///< rows
  std::vector<char> nonzero;    ///< row-major [row * columns + column]
  /// Constraint line e_dt = xi * omega_dt, one value per column.
  std::vector<double> constraint_e_dt;

  [[nodiscard]] bool at(std::size_t row, std::size_t column) const {
    return nonzero[row * omega_dt.size() + column] != 0;
  }
};

inline RegionMask region_mask(double xi, int omega_points, int e_points, unsigned threads = 1) {
  if (!(xi >= 0.0) || !std::isfinite(xi))
    throw DomainError("xi must be finite and >= 0");
  if (omega_points < 2 || e_points < 2)
    throw DomainError("region grid needs at least 2 points per axis");
  RegionMask m;
  m.xi = xi;
  for (int i = 0; i < omega_points; ++i)
    m.omega_dt.push_back(std::numbers::pi * i / (omega_points - 1));
  for (int i = 0; i < e_points; ++i)
    m.e_dt.push_back(half_pi * i / (e_points - 1));
  m.nonzero.assign(static_cast<std::size_t>(omega_points) * e_points, 0);
  parallel_for(static_cast<std::size_t>(e_points), resolve_threads(threads), [&](std::size_t r) {
    for (std::size_t c = 0; c < m.omega_dt.size(); ++c)
      m.nonzero[r * m.omega_dt.size() + c] =
          nonzero_randomness_condition({xi, m.omega_dt[c], m.e_dt[r]}) ? 1 : 0;
  });
  for (double w : m.omega_dt)
    m.constraint_e_dt.push_back(xi * w);
  return m;
}

inline CertifiedBound coherent_certify(const CoherentPoint &p, const DiscretizationParams &params,
                                       const SolverOptions &options = {}) {
  return certify(coherent_correlations(p), EnergyTimeBudget(p.e_dt), params, options);
}

} // namespace qslrand

#endif // QSLRAND_COHERENT_HPP
