#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "twodsys/kernel.hpp"
#include "twodsys/optimizer.hpp"

namespace twodsys {

/// Observation times (strictly increasing) and values, all finite.
class TimeSeries {
 public:
  TimeSeries() = default;
  TimeSeries(Eigen::VectorXd times, Eigen::VectorXd values);

  [[nodiscard]] const Eigen::VectorXd& times() const { return times_; }
  [[nodiscard]] const Eigen::VectorXd& values() const { return values_; }
  [[nodiscard]] Eigen::Index size() const { return times_.size(); }

  [[nodiscard]] double time_span() const;
  [[nodiscard]] double min_spacing() const;
  [[nodiscard]] double mean() const;
  /// Sample standard deviation (n - 1 denominator); 0 for n = 1.
  [[nodiscard]] double stddev() const;

 private:
  Eigen::VectorXd times_;
  Eigen::VectorXd values_;
};

/// Covariance parameters plus a constant mean and white observation noise.
struct GPModel {
  HyperParamsd theta;
  double mean = 0.0;
  double noise_var = 0.0;

  void validate() const;
};

/// Gradient order: (h, s, k, p, mean, noise_var).
using ModelGradient = Eigen::Matrix<double, 6, 1>;

Eigen::MatrixXd gram(const HyperParamsd& theta, const Eigen::Ref<const Eigen::VectorXd>& times);
Eigen::MatrixXd gram(const HyperParamsd& theta, const Eigen::Ref<const Eigen::VectorXd>& times_a,
                     const Eigen::Ref<const Eigen::VectorXd>& times_b);

struct GramDerivatives {
  Eigen::MatrixXd value;
  /// d gram / d (h, s, k, p)
  std::array<Eigen::MatrixXd, 4> partial;
};

GramDerivatives gram_with_gradient(const HyperParamsd& theta,
                                   const Eigen::Ref<const Eigen::VectorXd>& times);

/// Cholesky factor after the jitter policy: diagonal inflation of
/// 0, 1e-12, 1e-11, ..., 1e-6 times the mean diagonal, first success wins.
struct Cholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;  // absolute value added to the diagonal

  [[nodiscard]] double log_det() const;
};

Cholesky factorize(const Eigen::MatrixXd& covariance);

struct LogLikelihood {
  double value;
  ModelGradient gradient;
  double jitter;
};

/// log N(values | mean, gram + noise_var I).
double log_marginal_likelihood_value(const GPModel& model, const TimeSeries& data);
LogLikelihood log_marginal_likelihood(const GPModel& model, const TimeSeries& data);

/// `count` zero-mean draws at `times`, one per column. Deterministic in `seed`;
/// the same seed uses the same standard-normal draws for every theta.
Eigen::MatrixXd sample(const HyperParamsd& theta, const Eigen::Ref<const Eigen::VectorXd>& times,
                       std::uint64_t seed, int count = 1);

struct Prediction {
  Eigen::VectorXd mean;
  /// Posterior variance of the noise-free process.
  Eigen::VectorXd variance;
};

Prediction predict(const GPModel& model, const TimeSeries& data,
                   const Eigen::Ref<const Eigen::VectorXd>& query_times);

struct FitConfig {
  OptimizerSettings optimizer;
  bool fit_mean = true;
  bool fit_noise = false;
  /// Used as-is unless fit_noise.
  double noise_var = 0.0;
  /// Starting points tried before the random restarts.
  std::vector<GPModel> initial;
};

struct RestartSummary {
  int index;
  double log_marginal_likelihood;  // -inf when the restart failed
  bool converged;
  int iterations;
  std::string status;
};

struct FitResult {
  GPModel model;
  double log_marginal_likelihood = 0.0;
  bool converged = false;
  int n_restarts_used = 0;
  /// Trace of the winning restart; objective is the negative LML.
  std::vector<TracePoint> optimizer_trace;
  std::vector<RestartSummary> restarts;
};

/// Maximum-likelihood fit from `restarts` random starts (plus config.initial).
/// Ties keep the earliest restart. p is reported on the principal branch.
FitResult fit(const TimeSeries& data, const FitConfig& config, int restarts,
              std::uint64_t seed);

}  // namespace twodsys
