#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "twodsys/gp.hpp"
#include "twodsys/kernel.hpp"

namespace twodsys {

/// Closed interval; lo == hi pins the parameter.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] bool fixed() const { return lo == hi; }
  [[nodiscard]] double width() const { return hi - lo; }
};

enum class JPrior {
  uniform,  // j ~ U[-1, 1]
  tilted,   // density (1 + j) / 2 on [-1, 1]
};

/// Uniform priors on h, s, k; j prior as selected. An absent mean means
/// "fixed to the sample mean of the data".
struct PriorSpec {
  Interval h{-2.0, 2.0};
  Interval s{-4.0, 4.0};
  Interval k{-2.0, 2.0};
  JPrior j_prior = JPrior::uniform;
  std::optional<Interval> mean;
  Interval noise_var{0.0, 0.0};

  void validate() const;
};

/// h in [ln(1/T_span), ln(2/dt_min)], s in [-4, 4], k in ln(sd) +- 2,
/// mean at the sample mean, no noise.
PriorSpec default_prior(const TimeSeries& data);

struct PriorDraw {
  HyperParamsd theta;
  double mean;
  double noise_var;
};

/// Deterministic in seed. An unset mean interval draws mean = 0.
std::vector<PriorDraw> prior_sample(const PriorSpec& prior, std::uint64_t seed, int count);

struct OddsResult {
  double log_odds;        // log P(s > 0 | D) / P(s < 0 | D)
  double stderr_log_odds; // Monte-Carlo standard error of log_odds
  int n_samples;
  double p_oscillatory;   // odds / (1 + odds)
  int n_failed = 0;       // draws whose covariance could not be factorised
  PriorDraw best{};       // highest-likelihood draw (Monte-Carlo) or node (grid)
};

/// Monte-Carlo over prior draws, split into batches for the error bar.
OddsResult posterior_odds(const TimeSeries& data, const PriorSpec& prior, int budget,
                          std::uint64_t seed);

/// Midpoint-rule tensor grid over (h, s, k, j) with `resolution` nodes per
/// axis; mean and noise must be fixed. stderr_log_odds is reported as 0.
OddsResult posterior_odds_grid(const TimeSeries& data, const PriorSpec& prior, int resolution);

enum class Label { oscillatory, overdamped, undecided };

std::string to_string(Label label);

/// oscillatory when odds > threshold, overdamped when odds < 1/threshold.
Label label_for_odds(double log_odds, double threshold_odds);

struct Classification {
  Label label;
  OddsResult odds;
};

Classification classify(const TimeSeries& data, const PriorSpec& prior, double threshold_odds,
                        int budget, std::uint64_t seed);

}  // namespace twodsys
