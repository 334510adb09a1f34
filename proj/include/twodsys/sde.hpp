#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "twodsys/errors.hpp"
#include "twodsys/kernel.hpp"

namespace twodsys {

/// dx/dt = [[-A, B], [C, -D]] x + xi,  <xi_i(s) xi_j(t)> = K_ij delta(t - s).
template <typename Scalar>
struct SystemSpec {
  Scalar A{1};
  Scalar B{0};
  Scalar C{0};
  Scalar D{1};
  Eigen::Matrix<Scalar, 2, 2> K = Eigen::Matrix<Scalar, 2, 2>::Identity();

  using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

  [[nodiscard]] Matrix2 drift() const {
    Matrix2 m;
    m << -A, B, C, -D;
    return m;
  }
  [[nodiscard]] Scalar trace_rate() const { return A + D; }
  [[nodiscard]] Scalar det() const { return A * D - B * C; }
  [[nodiscard]] Scalar sigma() const { return (A + D) / Scalar(2); }
  [[nodiscard]] Scalar discriminant() const {
    return (A - D) * (A - D) / Scalar(4) + B * C;
  }
};

using SystemSpecd = SystemSpec<double>;

template <typename Scalar>
struct StabilityReport {
  bool stable;
  Scalar trace;  // A + D, must be > 0
  Scalar det;    // AD - BC, must be > 0
};

template <typename Scalar>
StabilityReport<Scalar> check_stability(const SystemSpec<Scalar>& spec) {
  const Scalar tr = spec.trace_rate();
  const Scalar det = spec.det();
  return {tr > Scalar(0) && det > Scalar(0), tr, det};
}

namespace detail {

template <typename Scalar>
void require_finite(const SystemSpec<Scalar>& spec) {
  using std::isfinite;
  if (!isfinite(spec.A) || !isfinite(spec.B) || !isfinite(spec.C) ||
      !isfinite(spec.D) || !spec.K.allFinite()) {
    throw InvalidSystem("system: entries must be finite");
  }
}

template <typename Scalar>
void require_stable(const SystemSpec<Scalar>& spec) {
  require_finite(spec);
  const auto report = check_stability(spec);
  if (!report.stable) {
    throw InvalidSystem("system is not stable (A+D = " +
                        std::to_string(double(report.trace)) +
                        ", AD-BC = " + std::to_string(double(report.det)) + ")");
  }
}

template <typename Scalar>
void require_psd_noise(const SystemSpec<Scalar>& spec) {
  using std::abs;
  const auto& K = spec.K;
  const Scalar trace = abs(K(0, 0)) + abs(K(1, 1));
  const Scalar tol = Scalar(1e-12) * trace;
  const Scalar minor = K(0, 0) * K(1, 1) - K(0, 1) * K(1, 0);
  if (abs(K(0, 1) - K(1, 0)) > tol || K(0, 0) < -tol || K(1, 1) < -tol ||
      minor < -tol * trace) {
    throw InvalidSystem("noise covariance K must be symmetric positive semi-definite");
  }
}

// e^{-sigma t} cosh(sqrt(Delta) t) and e^{-sigma t} sinh(sqrt(Delta) t)/sqrt(Delta)
// for any sign of sigma.
template <typename Scalar>
std::pair<Scalar, Scalar> propagator_terms(Scalar sigma, Scalar Delta, Scalar t) {
  using std::abs;
  using std::cos;
  using std::cosh;
  using std::exp;
  using std::sin;
  using std::sinh;
  using std::sqrt;
  if (sigma > Scalar(0)) {
    const auto terms = damped_terms(sigma * t, Delta / (sigma * sigma));
    return {terms.c, terms.g / sigma};
  }
  const Scalar decay = exp(-sigma * t);
  const Scalar q = Delta * t * t;
  if (abs(q) < kSeriesRadius<Scalar>) {
    Scalar tc = 1, tg = t, c = 1, g = t;
    for (int n = 1; n < 12; ++n) {
      tc *= q / Scalar((2 * n - 1) * (2 * n));
      tg *= q / Scalar((2 * n) * (2 * n + 1));
      c += tc;
      g += tg;
    }
    return {decay * c, decay * g};
  }
  if (Delta > Scalar(0)) {
    const Scalar r = sqrt(Delta);
    return {decay * cosh(r * t), decay * sinh(r * t) / r};
  }
  const Scalar w = sqrt(-Delta);
  return {decay * cos(w * t), decay * sin(w * t) / w};
}

}  // namespace detail

/// h(t) = exp(t M) for t >= 0, via the eigenvalues -sigma +- sqrt(Delta):
/// h(t) = e^{-sigma t} (cosh(sqrt(Delta) t) I + sinh(sqrt(Delta) t)/sqrt(Delta) (M + sigma I)).
/// The critical case reduces to the Jordan form (I + (M + sigma I) t) e^{-sigma t}.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> impulse_response(const SystemSpec<Scalar>& spec, Scalar t) {
  detail::require_finite(spec);
  if (!(t >= Scalar(0))) {
    throw InvalidParameter("impulse_response: t must be >= 0");
  }
  using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;
  const Scalar sigma = spec.sigma();
  const auto [c, g] = detail::propagator_terms(sigma, spec.discriminant(), t);
  const Matrix2 nilpotent_part = spec.drift() + sigma * Matrix2::Identity();
  return c * Matrix2::Identity() + g * nilpotent_part;
}

/// Solution S of M S + S M^T = -K, i.e. the integral of h(s) K h(s)^T over s >= 0.
/// For 2x2 stable M: S = (det(M) K + adj(M) K adj(M)^T) / (-2 tr(M) det(M)).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> stationary_covariance(const SystemSpec<Scalar>& spec) {
  detail::require_stable(spec);
  detail::require_psd_noise(spec);
  using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;
  Matrix2 K = (spec.K + spec.K.transpose()) / Scalar(2);
  Matrix2 adj;
  adj << -spec.D, -spec.B, -spec.C, -spec.A;
  const Scalar det = spec.det();
  Matrix2 S = (det * K + adj * K * adj.transpose()) /
              (Scalar(2) * spec.trace_rate() * det);
  S(1, 0) = S(0, 1);
  return S;
}

/// Kernel parameters of the x1 marginal covariance of a stable system.
template <typename Scalar>
NaturalParams<Scalar> system_to_kernel(const SystemSpec<Scalar>& spec) {
  const auto S = stationary_covariance(spec);
  const auto& K = spec.K;
  const Scalar det = spec.det();
  // (D, B) K (D, B)^T is >= 0 for psd K; clamp rounding noise at the boundary.
  const Scalar indirect = std::max(
      Scalar(0), spec.D * spec.D * K(0, 0) + Scalar(2) * spec.B * spec.D * K(0, 1) +
                     spec.B * spec.B * K(1, 1));
  const Scalar direct = std::max(Scalar(0), K(0, 0)) * det;
  const Scalar scale = (std::abs(K(0, 0)) + std::abs(K(1, 1))) / spec.trace_rate();
  if (!(S(0, 0) > std::numeric_limits<Scalar>::epsilon() * scale) ||
      !(indirect + direct > Scalar(0))) {
    throw DegenerateSystem("system_to_kernel: x1 has zero stationary variance");
  }
  const Scalar j = (indirect - direct) / (indirect + direct);
  return {spec.sigma(), spec.discriminant(), S(0, 0), S(0, 0) * j};
}

struct SimConfig {
  double dt = 0.01;
  double total_time = 100.0;
  double burn_in = 0.0;
  std::uint64_t seed = 0;
  /// Start here instead of a draw from the stationary distribution.
  std::optional<Eigen::Vector2d> initial_state;
};

/// Two rows (x1, x2), one column per step; column i is at time i * dt.
using Path = Eigen::Matrix<double, 2, Eigen::Dynamic>;

/// L with L L^T = M for symmetric psd M; eigenvalues above -1e-12 trace
/// are clamped to zero.
Eigen::Matrix2d psd_sqrt(const Eigen::Matrix2d& m);

/// Euler-Maruyama: x_{n+1} = x_n + dt M x_n + sqrt(dt) L z_n.
Path simulate(const SystemSpecd& spec, const SimConfig& cfg);

struct AutocovPoint {
  double lag;
  double estimate;
  double standard_error;
};

/// Biased (1/N) autocovariance after mean removal at lags 0, dt, ..., max_lag,
/// with batch-means standard errors.
std::vector<AutocovPoint> empirical_autocov(std::span<const double> path, double dt,
                                            double max_lag, int batches = 20);

}  // namespace twodsys
