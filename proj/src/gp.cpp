#include "twodsys/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "twodsys/errors.hpp"
#include "twodsys/random.hpp"

namespace twodsys {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void require_finite_times(const Eigen::Ref<const Eigen::VectorXd>& times) {
  if (!times.allFinite()) throw InvalidInput("gram: times must be finite");
}

// Common step when the times form an arithmetic progression. The Gram matrix
// is then Toeplitz and only n lags need the kernel.
std::optional<double> uniform_step(const Eigen::Ref<const Eigen::VectorXd>& times) {
  const Eigen::Index n = times.size();
  if (n < 3) return std::nullopt;
  const double step = (times(n - 1) - times(0)) / static_cast<double>(n - 1);
  if (!(step > 0.0)) return std::nullopt;
  const double tol = 1e-10 * step;
  for (Eigen::Index i = 1; i < n - 1; ++i) {
    if (std::abs(times(i) - times(0) - static_cast<double>(i) * step) > tol) {
      return std::nullopt;
    }
  }
  return step;
}

void fill_toeplitz(const Eigen::VectorXd& lags, Eigen::MatrixXd& out) {
  const Eigen::Index n = lags.size();
  out.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      out(i, j) = lags(i - j);
      out(j, i) = lags(i - j);
    }
  }
}

// Sums of W over each diagonal |i - j| = m.
Eigen::VectorXd diagonal_sums(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    sums(0) += w(j, j);
    for (Eigen::Index i = j + 1; i < n; ++i) sums(i - j) += w(i, j) + w(j, i);
  }
  return sums;
}

Eigen::MatrixXd model_covariance(const GPModel& model, const TimeSeries& data) {
  Eigen::MatrixXd c = gram(model.theta, data.times());
  c.diagonal().array() += model.noise_var;
  return c;
}

void gram_into(const HyperParamsd& theta, const Eigen::Ref<const Eigen::VectorXd>& times,
               Eigen::MatrixXd& out) {
  require_finite_times(times);
  const Covariance<double> cov(theta);
  const Eigen::Index n = times.size();
  out.resize(n, n);
  if (uniform_step(times)) {
    Eigen::VectorXd lags(n);
    for (Eigen::Index m = 0; m < n; ++m) lags(m) = cov(times(m) - times(0));
    fill_toeplitz(lags, out);
    return;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    out(j, j) = cov.variance();
    for (Eigen::Index i = j + 1; i < n; ++i) {
      out(i, j) = cov(times(i) - times(j));
      out(j, i) = out(i, j);
    }
  }
}

double jitter_at(double mean_diag, int level) {
  return level == 0 ? 0.0 : mean_diag * std::pow(10.0, level - 13);
}

[[noreturn]] void throw_conditioning(const std::vector<double>& attempted) {
  std::ostringstream msg;
  msg << "covariance is not numerically positive definite after jitter up to "
      << attempted.back();
  throw ConditioningError(msg.str(), attempted);
}

}  // namespace

TimeSeries::TimeSeries(Eigen::VectorXd times, Eigen::VectorXd values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size()) {
    throw InvalidInput("time series: times and values differ in length");
  }
  if (times_.size() < 1) throw InvalidInput("time series: need at least one point");
  if (!times_.allFinite() || !values_.allFinite()) {
    throw InvalidInput("time series: entries must be finite");
  }
  for (Eigen::Index i = 1; i < times_.size(); ++i) {
    if (!(times_(i) > times_(i - 1))) {
      std::ostringstream msg;
      msg << "time series: times must be strictly increasing (index " << i << ")";
      throw InvalidInput(msg.str());
    }
  }
}

double TimeSeries::time_span() const { return times_(times_.size() - 1) - times_(0); }

double TimeSeries::min_spacing() const {
  if (times_.size() < 2) return 0.0;
  const Eigen::Index n = times_.size();
  return (times_.tail(n - 1) - times_.head(n - 1)).minCoeff();
}

double TimeSeries::mean() const { return values_.mean(); }

double TimeSeries::stddev() const {
  const Eigen::Index n = values_.size();
  if (n < 2) return 0.0;
  return std::sqrt((values_.array() - values_.mean()).square().sum() /
                   static_cast<double>(n - 1));
}

void GPModel::validate() const {
  if (!theta.is_finite() || !std::isfinite(mean) || !std::isfinite(noise_var)) {
    throw InvalidParameter("model: parameters must be finite");
  }
  if (noise_var < 0.0) throw InvalidParameter("model: noise_var must be >= 0");
}

Eigen::MatrixXd gram(const HyperParamsd& theta, const Eigen::Ref<const Eigen::VectorXd>& times) {
  Eigen::MatrixXd out;
  gram_into(theta, times, out);
  return out;
}

Eigen::MatrixXd gram(const HyperParamsd& theta, const Eigen::Ref<const Eigen::VectorXd>& times_a,
                     const Eigen::Ref<const Eigen::VectorXd>& times_b) {
  if (times_a.size() == times_b.size() && times_a == times_b) return gram(theta, times_a);
  require_finite_times(times_a);
  require_finite_times(times_b);
  const Covariance<double> cov(theta);
  Eigen::MatrixXd out(times_a.size(), times_b.size());
  for (Eigen::Index j = 0; j < times_b.size(); ++j) {
    for (Eigen::Index i = 0; i < times_a.size(); ++i) out(i, j) = cov(times_a(i) - times_b(j));
  }
  return out;
}

GramDerivatives gram_with_gradient(const HyperParamsd& theta,
                                   const Eigen::Ref<const Eigen::VectorXd>& times) {
  require_finite_times(times);
  const Covariance<double> cov(theta);
  const Eigen::Index n = times.size();
  GramDerivatives out;
  if (uniform_step(times)) {
    Eigen::VectorXd value(n);
    std::array<Eigen::VectorXd, 4> partial;
    for (auto& p : partial) p.resize(n);
    for (Eigen::Index m = 0; m < n; ++m) {
      const auto vg = cov.with_gradient(times(m) - times(0));
      value(m) = vg.value;
      for (int q = 0; q < 4; ++q) partial[q](m) = vg.gradient(q);
    }
    fill_toeplitz(value, out.value);
    for (int q = 0; q < 4; ++q) fill_toeplitz(partial[q], out.partial[q]);
    return out;
  }
  out.value.resize(n, n);
  for (auto& p : out.partial) p.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const auto vg = cov.with_gradient(times(i) - times(j));
      out.value(i, j) = out.value(j, i) = vg.value;
      for (int q = 0; q < 4; ++q) out.partial[q](i, j) = out.partial[q](j, i) = vg.gradient(q);
    }
  }
  return out;
}

double Cholesky::log_det() const {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Cholesky factorize(const Eigen::MatrixXd& covariance) {
  const Eigen::Index n = covariance.rows();
  const double mean_diag = covariance.diagonal().mean();
  std::vector<double> attempted;
  Cholesky out;
  for (int level = 0; level <= 7; ++level) {
    const double jitter = jitter_at(mean_diag, level);
    attempted.push_back(jitter);
    if (level == 0) {
      out.llt.compute(covariance);
    } else {
      out.llt.compute(covariance + jitter * Eigen::MatrixXd::Identity(n, n));
    }
    if (out.llt.info() == Eigen::Success &&
        out.llt.matrixLLT().diagonal().allFinite()) {
      out.jitter = jitter;
      return out;
    }
  }
  throw_conditioning(attempted);
}

// Hot path of the prior sweeps: buffers are reused across calls and the
// factorization runs in place.
double log_marginal_likelihood_value(const GPModel& model, const TimeSeries& data) {
  model.validate();
  thread_local Eigen::MatrixXd cov;
  thread_local Eigen::MatrixXd work;
  thread_local Eigen::VectorXd half;
  gram_into(model.theta, data.times(), cov);
  cov.diagonal().array() += model.noise_var;
  const double mean_diag = cov.diagonal().mean();
  std::vector<double> attempted;
  for (int level = 0; level <= 7; ++level) {
    const double jitter = jitter_at(mean_diag, level);
    attempted.push_back(jitter);
    work = cov;
    work.diagonal().array() += jitter;
    const Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(work);
    if (llt.info() != Eigen::Success || !work.diagonal().allFinite()) continue;
    half = data.values().array() - model.mean;
    llt.matrixL().solveInPlace(half);
    const double log_det = 2.0 * work.diagonal().array().log().sum();
    const auto n = static_cast<double>(data.size());
    return -0.5 * half.squaredNorm() - 0.5 * log_det - 0.5 * n * kLog2Pi;
  }
  throw_conditioning(attempted);
}

LogLikelihood log_marginal_likelihood(const GPModel& model, const TimeSeries& data) {
  model.validate();
  GramDerivatives grams = gram_with_gradient(model.theta, data.times());
  Eigen::MatrixXd c = std::move(grams.value);
  c.diagonal().array() += model.noise_var;
  const Cholesky chol = factorize(c);
  const Eigen::Index n = data.size();
  const Eigen::VectorXd residual = data.values().array() - model.mean;
  const Eigen::VectorXd alpha = chol.llt.solve(residual);

  LogLikelihood out;
  out.jitter = chol.jitter;
  out.value = -0.5 * residual.dot(alpha) - 0.5 * chol.log_det() -
              0.5 * static_cast<double>(n) * kLog2Pi;

  // dL/dq = 1/2 tr((alpha alpha^T - c^{-1}) dc/dq)
  Eigen::MatrixXd w = -chol.llt.solve(Eigen::MatrixXd::Identity(n, n));
  w.noalias() += alpha * alpha.transpose();
  if (uniform_step(data.times())) {
    const Eigen::VectorXd sums = diagonal_sums(w);
    for (int q = 0; q < 4; ++q) {
      out.gradient(q) = 0.5 * grams.partial[q].col(0).dot(sums);
    }
  } else {
    for (int q = 0; q < 4; ++q) {
      out.gradient(q) = 0.5 * w.cwiseProduct(grams.partial[q]).sum();
    }
  }
  out.gradient(4) = alpha.sum();
  out.gradient(5) = 0.5 * w.trace();
  return out;
}

Eigen::MatrixXd sample(const HyperParamsd& theta, const Eigen::Ref<const Eigen::VectorXd>& times,
                       std::uint64_t seed, int count) {
  if (count < 1) throw ConfigError("sample: count must be >= 1");
  const Cholesky chol = factorize(gram(theta, times));
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(times.size(), count);
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, c) = normal(rng);
  }
  return chol.llt.matrixL() * z;
}

Prediction predict(const GPModel& model, const TimeSeries& data,
                   const Eigen::Ref<const Eigen::VectorXd>& query_times) {
  model.validate();
  const Cholesky chol = factorize(model_covariance(model, data));
  const Eigen::VectorXd residual = data.values().array() - model.mean;
  const Eigen::VectorXd alpha = chol.llt.solve(residual);
  const Eigen::MatrixXd cross = gram(model.theta, query_times, data.times());
  const Eigen::MatrixXd v = chol.llt.matrixL().solve(cross.transpose());
  const double prior_var = std::exp(2.0 * model.theta.k);

  Prediction out;
  out.mean = (cross * alpha).array() + model.mean;
  out.variance = (prior_var - v.colwise().squaredNorm().transpose().array()).cwiseMax(0.0);
  return out;
}

namespace {

// Optimisation coordinates: (h, s, k, p[, mean][, log noise_var]).
class FitProblem {
 public:
  FitProblem(const TimeSeries& data, const FitConfig& config) : data_(data), config_(config) {}

  [[nodiscard]] Eigen::Index dimension() const {
    return 4 + (config_.fit_mean ? 1 : 0) + (config_.fit_noise ? 1 : 0);
  }

  [[nodiscard]] Eigen::VectorXd encode(const GPModel& model) const {
    Eigen::VectorXd x(dimension());
    x.head<4>() = model.theta.vector();
    Eigen::Index i = 4;
    if (config_.fit_mean) x(i++) = model.mean;
    if (config_.fit_noise) x(i++) = std::log(std::max(model.noise_var, 1e-300));
    return x;
  }

  [[nodiscard]] GPModel decode(const Eigen::VectorXd& x) const {
    GPModel model;
    model.theta = HyperParamsd::from_vector(x.head<4>());
    model.mean = data_.mean();
    model.noise_var = config_.noise_var;
    Eigen::Index i = 4;
    if (config_.fit_mean) model.mean = x(i++);
    if (config_.fit_noise) model.noise_var = std::exp(x(i++));
    return model;
  }

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    const GPModel model = decode(x);
    try {
      const LogLikelihood lml = log_marginal_likelihood(model, data_);
      grad.head<4>() = -lml.gradient.head<4>();
      Eigen::Index i = 4;
      if (config_.fit_mean) grad(i++) = -lml.gradient(4);
      if (config_.fit_noise) grad(i++) = -lml.gradient(5) * model.noise_var;
      return -lml.value;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  }

 private:
  const TimeSeries& data_;
  const FitConfig& config_;
};

}  // namespace

FitResult fit(const TimeSeries& data, const FitConfig& config, int restarts,
              std::uint64_t seed) {
  if (data.size() < 4) {
    throw InsufficientData("fit: need at least 4 data points");
  }
  if (restarts < 0 || (restarts == 0 && config.initial.empty())) {
    throw ConfigError("fit: need at least one start");
  }
  if (!config.fit_noise && !(config.noise_var >= 0.0)) {
    throw ConfigError("fit: noise_var must be >= 0");
  }
  const FitProblem problem(data, config);
  const Objective objective = [&problem](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    return problem(x, g);
  };

  std::vector<GPModel> starts = config.initial;
  for (int r = 0; r < restarts; ++r) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(r));
    std::uniform_real_distribution<double> box(-2.0, 2.0);
    std::uniform_real_distribution<double> angle(-1.0, 1.0);
    std::uniform_real_distribution<double> log_noise(-6.0, 0.0);
    GPModel start;
    start.theta.h = box(rng);
    start.theta.s = box(rng);
    start.theta.k = box(rng);
    start.theta.p = angle(rng);
    start.mean = data.mean();
    start.noise_var = config.fit_noise ? std::exp(log_noise(rng)) : config.noise_var;
    starts.push_back(start);
  }

  FitResult result;
  std::optional<OptimizerReport> best;
  std::vector<std::string> failures;
  for (std::size_t r = 0; r < starts.size(); ++r) {
    OptimizerReport report = minimize_bfgs(objective, problem.encode(starts[r]), config.optimizer);
    const bool ok = std::isfinite(report.value);
    result.restarts.push_back({static_cast<int>(r), ok ? -report.value : -INFINITY,
                               report.converged, report.iterations, report.status});
    if (!ok) {
      failures.push_back("restart " + std::to_string(r) + ": " + report.status);
      continue;
    }
    if (!best || report.value < best->value) best = std::move(report);
  }
  result.n_restarts_used = static_cast<int>(starts.size());
  if (!best) throw FitFailure("fit: every restart failed", failures);

  result.model = problem.decode(best->x);
  result.model.theta = result.model.theta.principal();
  result.log_marginal_likelihood = log_marginal_likelihood_value(result.model, data);
  result.converged = best->converged;
  result.optimizer_trace = std::move(best->trace);
  return result;
}

}  // namespace twodsys
