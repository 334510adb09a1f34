#include "twodsys/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "twodsys/errors.hpp"
#include "twodsys/random.hpp"

namespace twodsys {

namespace {

constexpr int kBatches = 20;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_interval(const Interval& iv, const char* name) {
  if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
    throw ConfigError(std::string("prior: ") + name + " range must be finite with lo <= hi");
  }
}

double draw_in(const Interval& iv, double unit) { return iv.lo + unit * iv.width(); }

double j_from_unit(JPrior prior, double unit) {
  // Inverse CDF; the tilted CDF is (1 + j)^2 / 4.
  return prior == JPrior::uniform ? 2.0 * unit - 1.0 : 2.0 * std::sqrt(unit) - 1.0;
}

double p_from_j(double j) {
  return 2.0 / std::numbers::pi * std::asin(std::clamp(j, -1.0, 1.0));
}

std::vector<PriorDraw> draw(const PriorSpec& prior, Rng& rng, int count) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PriorDraw> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    // Fixed number of variates per draw keeps streams aligned across priors.
    const double uh = unit(rng), us = unit(rng), uk = unit(rng), uj = unit(rng);
    const double um = unit(rng), un = unit(rng);
    PriorDraw d;
    d.theta.h = draw_in(prior.h, uh);
    d.theta.s = draw_in(prior.s, us);
    d.theta.k = draw_in(prior.k, uk);
    d.theta.p = p_from_j(j_from_unit(prior.j_prior, uj));
    d.mean = prior.mean ? draw_in(*prior.mean, um) : 0.0;
    d.noise_var = draw_in(prior.noise_var, un);
    out.push_back(d);
  }
  return out;
}

PriorSpec resolve_mean(const PriorSpec& prior, const TimeSeries& data) {
  PriorSpec out = prior;
  if (!out.mean) out.mean = Interval{data.mean(), data.mean()};
  return out;
}

// Log-likelihood, or -inf when the covariance cannot be factorised.
double safe_log_likelihood(const GPModel& model, const TimeSeries& data, int& failures) {
  try {
    const double v = log_marginal_likelihood_value(model, data);
    return std::isnan(v) ? kNegInf : v;
  } catch (const ConditioningError&) {
    ++failures;
    return kNegInf;
  }
}

// Sums of likelihoods over each side of s = 0, scaled by e^{-shift}.
struct SideSums {
  double shift = kNegInf;
  double oscillatory = 0.0;
  double overdamped = 0.0;
  double weight = 0.0;

  static SideSums from(const std::vector<double>& log_terms, const std::vector<bool>& osc,
                       const std::vector<double>& weights) {
    SideSums out;
    for (double v : log_terms) out.shift = std::max(out.shift, v);
    for (std::size_t i = 0; i < log_terms.size(); ++i) {
      out.weight += weights[i];
      if (!std::isfinite(out.shift) || log_terms[i] == kNegInf) continue;
      const double term = weights[i] * std::exp(log_terms[i] - out.shift);
      (osc[i] ? out.oscillatory : out.overdamped) += term;
    }
    return out;
  }

  [[nodiscard]] double rescaled_osc(double to) const {
    return std::isfinite(shift) ? oscillatory * std::exp(shift - to) : 0.0;
  }
  [[nodiscard]] double rescaled_over(double to) const {
    return std::isfinite(shift) ? overdamped * std::exp(shift - to) : 0.0;
  }
};

double p_from_log_odds(double log_odds) { return 1.0 / (1.0 + std::exp(-log_odds)); }

}  // namespace

void PriorSpec::validate() const {
  check_interval(h, "h");
  check_interval(s, "s");
  check_interval(k, "k");
  if (mean) check_interval(*mean, "mean");
  check_interval(noise_var, "noise_var");
  if (!(s.lo < 0.0 && s.hi > 0.0)) {
    throw ConfigError("prior: s range must straddle 0");
  }
  if (noise_var.lo < 0.0) throw ConfigError("prior: noise_var must be >= 0");
}

PriorSpec default_prior(const TimeSeries& data) {
  if (data.size() < 2) {
    throw InsufficientData("default prior: need at least 2 points");
  }
  const double sd = data.stddev();
  if (!(sd > 0.0)) {
    throw InsufficientData("default prior: data have zero variance");
  }
  PriorSpec prior;
  prior.h = {std::log(1.0 / data.time_span()), std::log(2.0 / data.min_spacing())};
  prior.s = {-4.0, 4.0};
  prior.k = {std::log(sd) - 2.0, std::log(sd) + 2.0};
  return prior;
}

std::vector<PriorDraw> prior_sample(const PriorSpec& prior, std::uint64_t seed, int count) {
  prior.validate();
  if (count < 0) throw ConfigError("prior_sample: count must be >= 0");
  Rng rng = make_rng(seed);
  return draw(prior, rng, count);
}

OddsResult posterior_odds(const TimeSeries& data, const PriorSpec& prior, int budget,
                          std::uint64_t seed) {
  if (budget < 1000) throw ConfigError("posterior_odds: budget must be >= 1000");
  prior.validate();
  const PriorSpec resolved = resolve_mean(prior, data);

  OddsResult out{};
  out.n_samples = budget;
  double best_log_lik = kNegInf;
  std::vector<SideSums> batches;
  batches.reserve(kBatches);
  for (int b = 0; b < kBatches; ++b) {
    const int count = budget / kBatches + (b < budget % kBatches ? 1 : 0);
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(b) + 1);
    const auto draws = draw(resolved, rng, count);
    std::vector<double> log_lik;
    std::vector<bool> osc;
    log_lik.reserve(draws.size());
    osc.reserve(draws.size());
    for (const auto& d : draws) {
      log_lik.push_back(
          safe_log_likelihood({d.theta, d.mean, d.noise_var}, data, out.n_failed));
      osc.push_back(d.theta.s > 0.0);
      if (log_lik.back() > best_log_lik) {
        best_log_lik = log_lik.back();
        out.best = d;
      }
    }
    batches.push_back(SideSums::from(log_lik, osc, std::vector<double>(draws.size(), 1.0)));
  }

  double shift = kNegInf;
  for (const auto& b : batches) shift = std::max(shift, b.shift);
  if (!std::isfinite(shift)) {
    throw NumericalFailure(
        "posterior_odds: every likelihood underflowed; review the prior ranges");
  }

  // Per-batch means of the scaled likelihood on each side.
  Eigen::ArrayXd osc(kBatches), over(kBatches), weight(kBatches);
  for (int b = 0; b < kBatches; ++b) {
    weight(b) = batches[b].weight;
    osc(b) = batches[b].rescaled_osc(shift) / weight(b);
    over(b) = batches[b].rescaled_over(shift) / weight(b);
  }
  const double total = weight.sum();
  const double osc_mean = (osc * weight).sum() / total;
  const double over_mean = (over * weight).sum() / total;
  out.log_odds = std::log(osc_mean) - std::log(over_mean);
  out.p_oscillatory = p_from_log_odds(out.log_odds);

  // Delta method on log(osc_mean) - log(over_mean) with batch-mean covariances.
  const double var_osc = (osc - osc.mean()).square().sum() / (kBatches - 1) / kBatches;
  const double var_over = (over - over.mean()).square().sum() / (kBatches - 1) / kBatches;
  const double cov = ((osc - osc.mean()) * (over - over.mean())).sum() / (kBatches - 1) / kBatches;
  const double var_log = var_osc / (osc_mean * osc_mean) + var_over / (over_mean * over_mean) -
                         2.0 * cov / (osc_mean * over_mean);
  out.stderr_log_odds = std::sqrt(std::max(0.0, var_log));
  return out;
}

OddsResult posterior_odds_grid(const TimeSeries& data, const PriorSpec& prior, int resolution) {
  prior.validate();
  if (resolution < 1) throw ConfigError("posterior_odds_grid: resolution must be >= 1");
  const PriorSpec resolved = resolve_mean(prior, data);
  if (!resolved.mean->fixed() || !resolved.noise_var.fixed()) {
    throw ConfigError("posterior_odds_grid: mean and noise_var must be fixed");
  }

  // Midpoint nodes with weights summing to one over the interval.
  auto nodes = [resolution](const Interval& iv) {
    std::vector<std::pair<double, double>> out;
    if (iv.fixed()) return std::vector<std::pair<double, double>>{{iv.lo, 1.0}};
    for (int i = 0; i < resolution; ++i) {
      out.emplace_back(iv.lo + (i + 0.5) / resolution * iv.width(), 1.0 / resolution);
    }
    return out;
  };
  const auto h_nodes = nodes(resolved.h);
  const auto k_nodes = nodes(resolved.k);
  // s is split at zero so that no cell straddles the two hypotheses.
  std::vector<std::pair<double, double>> s_nodes;
  for (const Interval side : {Interval{resolved.s.lo, 0.0}, Interval{0.0, resolved.s.hi}}) {
    for (auto [s, w] : nodes(side)) s_nodes.emplace_back(s, w * side.width() / resolved.s.width());
  }
  std::vector<std::pair<double, double>> j_nodes;
  for (auto [j, w] : nodes(Interval{-1.0, 1.0})) {
    const double density = resolved.j_prior == JPrior::uniform ? 0.5 : (1.0 + j) / 2.0;
    j_nodes.emplace_back(j, w * 2.0 * density);
  }

  std::vector<double> log_lik;
  std::vector<bool> osc;
  std::vector<double> weights;
  int failed = 0;
  double best_log_lik = kNegInf;
  PriorDraw best{};
  for (auto [h, wh] : h_nodes) {
    for (auto [s, ws] : s_nodes) {
      for (auto [k, wk] : k_nodes) {
        for (auto [j, wj] : j_nodes) {
          const GPModel model{{h, s, k, p_from_j(j)}, resolved.mean->lo, resolved.noise_var.lo};
          log_lik.push_back(safe_log_likelihood(model, data, failed));
          if (log_lik.back() > best_log_lik) {
            best_log_lik = log_lik.back();
            best = {model.theta, model.mean, model.noise_var};
          }
          osc.push_back(s > 0.0);
          weights.push_back(wh * ws * wk * wj);
        }
      }
    }
  }
  const SideSums sums = SideSums::from(log_lik, osc, weights);
  if (!std::isfinite(sums.shift)) {
    throw NumericalFailure(
        "posterior_odds_grid: every likelihood underflowed; review the prior ranges");
  }
  OddsResult out{};
  out.log_odds = std::log(sums.oscillatory) - std::log(sums.overdamped);
  out.p_oscillatory = p_from_log_odds(out.log_odds);
  out.stderr_log_odds = 0.0;
  out.n_samples = static_cast<int>(log_lik.size());
  out.n_failed = failed;
  out.best = best;
  return out;
}

std::string to_string(Label label) {
  switch (label) {
    case Label::oscillatory:
      return "oscillatory";
    case Label::overdamped:
      return "overdamped";
    case Label::undecided:
      return "undecided";
  }
  return "undecided";
}

Label label_for_odds(double log_odds, double threshold_odds) {
  if (!(threshold_odds > 1.0)) throw ConfigError("classify: threshold_odds must be > 1");
  const double cut = std::log(threshold_odds);
  if (log_odds > cut) return Label::oscillatory;
  if (log_odds < -cut) return Label::overdamped;
  return Label::undecided;
}

Classification classify(const TimeSeries& data, const PriorSpec& prior, double threshold_odds,
                        int budget, std::uint64_t seed) {
  if (!(threshold_odds > 1.0)) throw ConfigError("classify: threshold_odds must be > 1");
  OddsResult odds = posterior_odds(data, prior, budget, seed);
  return {label_for_odds(odds.log_odds, threshold_odds), odds};
}

}  // namespace twodsys
