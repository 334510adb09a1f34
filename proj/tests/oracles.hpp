#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

// C(tau) straight from the cosh/sinh form, in complex long double so that the
// oscillatory side needs no separate branch.
inline double kernel(double h, double s, double k, double p, double tau) {
  using C = std::complex<long double>;
  const long double sigma = std::exp(static_cast<long double>(h));
  const long double j = std::sin(std::numbers::pi_v<long double> * p / 2);
  const long double x = 1.0L - std::exp(static_cast<long double>(s));
  const long double at = std::fabs(static_cast<long double>(tau)) * sigma;
  const long double amp = std::exp(2.0L * k) * std::exp(-at);
  if (x == 0.0L) return static_cast<double>(amp * (1.0L + j * at));
  const C r = std::sqrt(C(x, 0.0L));
  const C z = r * at;
  const C val = std::cosh(z) + j * std::sinh(z) / r;
  return static_cast<double>(amp * val.real());
}

// Ornstein-Uhlenbeck covariance a^2 e^{-mu |tau|}.
inline double ou(double a2, double mu, double tau) { return a2 * std::exp(-mu * std::fabs(tau)); }

// Central difference of a scalar function of a vector.
inline Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                        const Eigen::VectorXd& x, double step = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    g(i) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

// ||a - b||_inf / max(||b||_inf, floor)
inline double vector_rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor) {
  return (a - b).lpNorm<Eigen::Infinity>() / std::max(b.lpNorm<Eigen::Infinity>(), floor);
}

inline Eigen::Matrix2d drift(double A, double B, double C, double D) {
  Eigen::Matrix2d m;
  m << -A, B, C, -D;
  return m;
}

// General-purpose Pade matrix exponential.
inline Eigen::Matrix2d expm(const Eigen::Matrix2d& m) { return m.exp(); }

// Lyapunov equation M S + S M^T = -K solved as a 4x4 linear system.
inline Eigen::Matrix2d lyapunov_kron(const Eigen::Matrix2d& M, const Eigen::Matrix2d& K) {
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  Eigen::Matrix4d big;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      // column-major vec: vec(M S) = (I kron M) vec S, vec(S M^T) = (M kron I) vec S
      big.block<2, 2>(2 * a, 2 * b) = I(a, b) * M + M(a, b) * I;
    }
  }
  const Eigen::Vector4d vk = Eigen::Map<const Eigen::Vector4d>(K.data());
  const Eigen::Vector4d vs = big.fullPivLu().solve(-vk);
  Eigen::Matrix2d S = Eigen::Map<const Eigen::Matrix2d>(vs.data());
  return 0.5 * (S + S.transpose());
}

// Gaussian log density by a dense LDLT, from any covariance.
inline double gaussian_logpdf(const Eigen::MatrixXd& c, const Eigen::VectorXd& r) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
  const double logdet = ldlt.vectorD().array().log().sum();
  return -0.5 * r.dot(ldlt.solve(r)) - 0.5 * logdet -
         0.5 * static_cast<double>(r.size()) * std::log(2.0 * std::numbers::pi);
}

// Composite Simpson rule for the integral of h K h^T over [0, T].
inline Eigen::Matrix2d stationary_quadrature(const Eigen::Matrix2d& M, const Eigen::Matrix2d& K,
                                             double T, int intervals) {
  if (intervals % 2) ++intervals;
  const double step = T / intervals;
  const Eigen::Matrix2d stepper = expm(M * step);
  Eigen::Matrix2d h = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d sum = Eigen::Matrix2d::Zero();
  for (int i = 0; i <= intervals; ++i) {
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * h * K * h.transpose();
    h = stepper * h;
  }
  return sum * step / 3.0;
}

// Gaussian conditioning of the last coordinate on the others, by block
// formulas on the full joint covariance.
struct Conditional {
  double mean;
  double variance;
};

inline Conditional condition_last(const Eigen::MatrixXd& joint, const Eigen::VectorXd& observed,
                                  double prior_mean) {
  const Eigen::Index n = observed.size();
  const Eigen::MatrixXd Koo = joint.topLeftCorner(n, n);
  const Eigen::VectorXd kqo = joint.block(n, 0, 1, n).transpose();
  const double kqq = joint(n, n);
  const Eigen::VectorXd w = Koo.fullPivLu().solve(kqo);
  return {prior_mean + w.dot(observed - Eigen::VectorXd::Constant(n, prior_mean)),
          kqq - w.dot(kqo)};
}

// Gaussian log density with an explicit 2x2 inverse.
inline double gaussian_logpdf_2(const Eigen::Matrix2d& c, const Eigen::Vector2d& r) {
  const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
  Eigen::Matrix2d inv;
  inv << c(1, 1), -c(0, 1), -c(1, 0), c(0, 0);
  inv /= det;
  return -0.5 * r.dot(inv * r) - 0.5 * std::log(det) - std::log(2.0 * std::numbers::pi);
}

}  // namespace oracle
