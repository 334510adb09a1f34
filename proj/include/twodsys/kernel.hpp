#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Core>

#include "twodsys/errors.hpp"

namespace twodsys {

/// Unconstrained coordinates of the covariance family.
///
/// sigma = e^h is the decay rate, s sets the eigenvalue separation
/// (s > 0 underdamped, s = 0 critical, s < 0 overdamped), e^{2k} is the
/// stationary variance and j = sin(pi p / 2) weights the direct noise drive.
template <typename Scalar>
struct HyperParams {
  Scalar h{0};
  Scalar s{0};
  Scalar k{0};
  Scalar p{0};

  using Vector = Eigen::Matrix<Scalar, 4, 1>;

  [[nodiscard]] Scalar j() const {
    using std::sin;
    return sin(std::numbers::pi_v<Scalar> * p / Scalar(2));
  }

  [[nodiscard]] bool is_finite() const {
    using std::isfinite;
    return isfinite(h) && isfinite(s) && isfinite(k) && isfinite(p);
  }

  [[nodiscard]] Vector vector() const { return Vector(h, s, k, p); }

  static HyperParams from_vector(const Eigen::Ref<const Vector>& v) {
    return {v(0), v(1), v(2), v(3)};
  }

  /// Same covariance, with p folded onto the principal branch [-1, 1].
  [[nodiscard]] HyperParams principal() const {
    using std::asin;
    HyperParams out = *this;
    Scalar jj = j();
    if (jj > Scalar(1)) jj = Scalar(1);
    if (jj < Scalar(-1)) jj = Scalar(-1);
    out.p = Scalar(2) / std::numbers::pi_v<Scalar> * asin(jj);
    return out;
  }
};

/// Constrained parameters: decay rate, discriminant, variance, asymmetry.
template <typename Scalar>
struct NaturalParams {
  Scalar sigma{1};
  Scalar Delta{0};
  Scalar S11{1};
  Scalar J{0};

  [[nodiscard]] bool satisfies_constraints() const {
    return sigma > Scalar(0) && Delta < sigma * sigma && S11 > Scalar(0) &&
           (J < Scalar(0) ? -J : J) <= S11;
  }
};

using HyperParamsd = HyperParams<double>;
using NaturalParamsd = NaturalParams<double>;

template <typename Scalar>
NaturalParams<Scalar> to_natural(const HyperParams<Scalar>& theta) {
  using std::exp;
  using std::expm1;
  if (!theta.is_finite()) {
    throw InvalidParameter("to_natural: hyperparameters must be finite");
  }
  const Scalar sigma = exp(theta.h);
  const Scalar S11 = exp(Scalar(2) * theta.k);
  return {sigma, -sigma * sigma * expm1(theta.s), S11, S11 * theta.j()};
}

template <typename Scalar>
HyperParams<Scalar> from_natural(const NaturalParams<Scalar>& np) {
  using std::asin;
  using std::isfinite;
  using std::log;
  using std::log1p;
  constexpr Scalar kSlack = Scalar(8) * std::numeric_limits<Scalar>::epsilon();
  if (!isfinite(np.sigma) || !isfinite(np.Delta) || !isfinite(np.S11) ||
      !isfinite(np.J) || !(np.sigma > Scalar(0)) || !(np.S11 > Scalar(0)) ||
      !(np.Delta < np.sigma * np.sigma)) {
    throw InvalidParameter(
        "from_natural: require sigma > 0, Delta < sigma^2, S11 > 0");
  }
  Scalar ratio = np.J / np.S11;
  if (ratio > Scalar(1) + kSlack || ratio < Scalar(-1) - kSlack) {
    throw InvalidParameter("from_natural: require |J| <= S11");
  }
  ratio = std::clamp(ratio, Scalar(-1), Scalar(1));
  return {log(np.sigma),
          log1p(-np.Delta / (np.sigma * np.sigma)),
          log(np.S11) / Scalar(2),
          Scalar(2) / std::numbers::pi_v<Scalar> * asin(ratio)};
}

namespace detail {

// With u = sigma |tau| and x = Delta / sigma^2:
//   c = e^{-u} cosh(sqrt(x) u)
//   g = e^{-u} sinh(sqrt(x) u) / sqrt(x)
//   dg_dx = d g / d x   (and d c / d x = u g / 2)
// continued analytically through x = 0.
template <typename Scalar>
struct DampedTerms {
  Scalar c;
  Scalar g;
  Scalar dg_dx;
};

// Below this |x| u^2 the power series in x is used. It contains the
// critical-damping limit (1 + j u) e^{-u} as its leading term.
template <typename Scalar>
inline constexpr Scalar kSeriesRadius = Scalar(0.1);

template <typename Scalar>
DampedTerms<Scalar> damped_terms_series(Scalar u, Scalar x) {
  using std::exp;
  const Scalar z = x * u * u;
  Scalar tc = 1;
  Scalar tg = u;
  Scalar td = u * u * u / Scalar(6);
  Scalar c = tc;
  Scalar g = tg;
  Scalar d = td;
  // |z| < 0.1 makes the 12th term far below machine precision.
  for (int n = 1; n < 12; ++n) {
    tc *= z / Scalar((2 * n - 1) * (2 * n));
    tg *= z / Scalar((2 * n) * (2 * n + 1));
    td *= z / Scalar((2 * n + 2) * (2 * n + 3));
    c += tc;
    g += tg;
    d += Scalar(n + 1) * td;
  }
  const Scalar decay = exp(-u);
  return {decay * c, decay * g, decay * d};
}

template <typename Scalar>
DampedTerms<Scalar> damped_terms_oscillatory(Scalar u, Scalar x) {
  using std::cos;
  using std::exp;
  using std::sin;
  using std::sqrt;
  const Scalar omega = sqrt(-x);
  const Scalar decay = exp(-u);
  const Scalar c = decay * cos(omega * u);
  const Scalar g = decay * sin(omega * u) / omega;
  return {c, g, (u * c - g) / (Scalar(2) * x)};
}

// Both exponentials e^{-(1 -+ r) u} decay, so nothing overflows for large u.
template <typename Scalar>
DampedTerms<Scalar> damped_terms_overdamped(Scalar u, Scalar x) {
  using std::exp;
  using std::expm1;
  using std::sqrt;
  const Scalar r = sqrt(x);
  const Scalar slow = exp(-(Scalar(1) - r) * u);
  const Scalar fast = exp(-(Scalar(1) + r) * u);
  const Scalar c = (slow + fast) / Scalar(2);
  const Scalar g = slow * -expm1(Scalar(-2) * r * u) / (Scalar(2) * r);
  return {c, g, (u * c - g) / (Scalar(2) * x)};
}

template <typename Scalar>
DampedTerms<Scalar> damped_terms(Scalar u, Scalar x) {
  using std::abs;
  if (abs(x) * u * u < kSeriesRadius<Scalar>) return damped_terms_series(u, x);
  if (x < Scalar(0)) return damped_terms_oscillatory(u, x);
  return damped_terms_overdamped(u, x);
}

}  // namespace detail

template <typename Scalar>
struct KernelValueGrad {
  Scalar value;
  /// Partial derivatives with respect to (h, s, k, p).
  Eigen::Matrix<Scalar, 4, 1> gradient;
};

/// Covariance function with its parameter-dependent constants precomputed,
/// for evaluation over many lags.
template <typename Scalar>
class Covariance {
 public:
  explicit Covariance(const HyperParams<Scalar>& theta) : theta_(theta) {
    using std::cos;
    using std::exp;
    using std::expm1;
    if (!theta.is_finite()) {
      throw InvalidParameter("covariance: hyperparameters must be finite");
    }
    sigma_ = exp(theta.h);
    x_ = -expm1(theta.s);
    variance_ = exp(Scalar(2) * theta.k);
    j_ = theta.j();
    dj_dp_ = std::numbers::pi_v<Scalar> / Scalar(2) *
             cos(std::numbers::pi_v<Scalar> * theta.p / Scalar(2));
    dx_ds_ = -exp(theta.s);
  }

  Scalar operator()(Scalar tau) const {
    using std::abs;
    const auto t = detail::damped_terms(sigma_ * abs(tau), x_);
    return variance_ * (t.c + j_ * t.g);
  }

  KernelValueGrad<Scalar> with_gradient(Scalar tau) const {
    using std::abs;
    const Scalar u = sigma_ * abs(tau);
    const auto t = detail::damped_terms(u, x_);
    const Scalar f = t.c + j_ * t.g;
    const Scalar df_du = (j_ - Scalar(1)) * t.c + (x_ - j_) * t.g;
    const Scalar df_dx = u * t.g / Scalar(2) + j_ * t.dg_dx;
    KernelValueGrad<Scalar> out;
    out.value = variance_ * f;
    out.gradient << variance_ * df_du * u,  //
        variance_ * df_dx * dx_ds_,         //
        Scalar(2) * out.value,              //
        variance_ * t.g * dj_dp_;
    return out;
  }

  [[nodiscard]] Scalar variance() const { return variance_; }
  [[nodiscard]] Scalar sigma() const { return sigma_; }
  [[nodiscard]] const HyperParams<Scalar>& params() const { return theta_; }

 private:
  HyperParams<Scalar> theta_;
  Scalar sigma_;
  Scalar x_;
  Scalar variance_;
  Scalar j_;
  Scalar dj_dp_;
  Scalar dx_ds_;
};

/// C(tau) of the family. Even in tau; finite for every finite tau.
template <typename Scalar>
Scalar eval(const HyperParams<Scalar>& theta, Scalar tau) {
  return Covariance<Scalar>(theta)(tau);
}

/// C(tau) in the constrained parametrisation:
/// e^{-sigma|tau|} (S11 cosh(sqrt(Delta) tau) + sigma J sinh(sqrt(Delta)|tau|)/sqrt(Delta)).
template <typename Scalar>
Scalar eval(const NaturalParams<Scalar>& np, Scalar tau) {
  using std::abs;
  if (!(np.sigma > Scalar(0))) {
    throw InvalidParameter("covariance: sigma must be positive");
  }
  const auto t =
      detail::damped_terms(np.sigma * abs(tau), np.Delta / (np.sigma * np.sigma));
  return np.S11 * t.c + np.J * t.g;
}

template <typename Scalar>
KernelValueGrad<Scalar> eval_grad(const HyperParams<Scalar>& theta, Scalar tau) {
  return Covariance<Scalar>(theta).with_gradient(tau);
}

/// C'(0+) = e^{2k} sigma (j - 1); zero exactly when j = 1.
template <typename Scalar>
Scalar right_derivative_at_zero(const HyperParams<Scalar>& theta) {
  using std::exp;
  return exp(Scalar(2) * theta.k) * exp(theta.h) * (theta.j() - Scalar(1));
}

template <typename Scalar>
Scalar q_factor(const HyperParams<Scalar>& theta) {
  using std::exp;
  return exp(theta.s / Scalar(2)) / Scalar(2);
}

}  // namespace twodsys
