#include <doctest.h>

#include <cmath>

#include "twodsys/gp.hpp"
#include "twodsys/inference.hpp"

using namespace twodsys;

namespace {

TimeSeries sampled(const HyperParamsd& theta, int n, double step, std::uint64_t seed) {
  const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(n, 0.0, step * (n - 1));
  return {times, sample(theta, times, seed, 1).col(0)};
}

PriorSpec fixed_mean(PriorSpec prior, double mean) {
  prior.mean = Interval{mean, mean};
  return prior;
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("prior validation") {
  PriorSpec ok;
  CHECK_NOTHROW(ok.validate());
  PriorSpec bad = ok;
  bad.s = {0.5, 3.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.h = {1.0, -1.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.k = {0.0, INFINITY};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.noise_var = {-1.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(prior_sample(bad, 1, 10), ConfigError);
}

TEST_CASE("default prior ranges") {
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(11, 0.0, 5.0);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(11, -1.0, 1.0);
  const auto prior = default_prior(TimeSeries(t, x));
  CHECK(prior.h.lo == doctest::Approx(std::log(1.0 / 5.0)));
  CHECK(prior.h.hi == doctest::Approx(std::log(2.0 / 0.5)));
  CHECK(prior.s.lo == -4.0);
  CHECK(prior.s.hi == 4.0);
  const double sd = TimeSeries(t, x).stddev();
  CHECK(prior.k.lo == doctest::Approx(std::log(sd) - 2.0));
  CHECK(prior.k.hi == doctest::Approx(std::log(sd) + 2.0));
  CHECK_FALSE(prior.mean.has_value());
  CHECK(prior.noise_var.fixed());
  CHECK_THROWS_AS(default_prior(TimeSeries(t, Eigen::VectorXd::Ones(11))), InsufficientData);
}

TEST_CASE("prior sampling") {
  PriorSpec tilted;
  tilted.j_prior = JPrior::tilted;
  const int n = 1000000;
  const auto draws = prior_sample(tilted, 5, n);
  double sum = 0.0, sum2 = 0.0;
  for (const auto& d : draws) {
    const double j = d.theta.j();
    sum += j;
    sum2 += j * j;
    REQUIRE(d.theta.h >= -2.0);
    REQUIRE(d.theta.h <= 2.0);
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::fabs(mean - 1.0 / 3.0) < 3 * se);

  PriorSpec uniform;
  uniform.s = {-3.0, 3.0};
  const auto ud = prior_sample(uniform, 6, 100000);
  int positive = 0;
  double jsum = 0.0;
  for (const auto& d : ud) {
    positive += d.theta.s > 0;
    jsum += d.theta.j();
  }
  CHECK(std::fabs(positive / 1e5 - 0.5) < 3 * std::sqrt(0.25 / 1e5));
  CHECK(std::fabs(jsum / 1e5) < 3 * std::sqrt(1.0 / 3.0 / 1e5));

  const auto a = prior_sample(uniform, 9, 50);
  const auto b = prior_sample(uniform, 9, 50);
  for (int i = 0; i < 50; ++i) CHECK(a[i].theta.vector() == b[i].theta.vector());
}

TEST_CASE("odds label thresholds") {
  CHECK(label_for_odds(std::log(25.0), 10) == Label::oscillatory);
  CHECK(label_for_odds(std::log(0.04), 10) == Label::overdamped);
  CHECK(label_for_odds(std::log(2.0), 10) == Label::undecided);
  CHECK_THROWS_AS(label_for_odds(0.0, 1.0), ConfigError);
  CHECK(to_string(Label::oscillatory) == "oscillatory");
  CHECK(to_string(Label::overdamped) == "overdamped");
  CHECK(to_string(Label::undecided) == "undecided");
}

TEST_CASE("single point carries no evidence about s") {
  const TimeSeries one(Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 0.3));
  PriorSpec prior;
  prior.mean = Interval{0.0, 0.0};
  const auto odds = posterior_odds(one, prior, 4000, 3);
  CHECK(std::fabs(odds.log_odds) < 3 * odds.stderr_log_odds + 1e-12);
  CHECK(std::fabs(odds.p_oscillatory - 1.0 / (1.0 + std::exp(-odds.log_odds))) < 1e-12);

  // Asymmetric s range: the odds equal the prior mass ratio.
  prior.s = {-1.0, 3.0};
  const auto lop = posterior_odds(one, prior, 4000, 3);
  CHECK(std::fabs(lop.log_odds - std::log(3.0)) < 3 * lop.stderr_log_odds);
}

TEST_CASE("odds are deterministic and respect the budget") {
  const auto data = sampled({0, 2, 0, 0}, 40, 0.25, 4);
  const auto prior = default_prior(data);
  const auto a = posterior_odds(data, prior, 2000, 8);
  const auto b = posterior_odds(data, prior, 2000, 8);
  CHECK(a.log_odds == b.log_odds);
  CHECK(a.stderr_log_odds == b.stderr_log_odds);
  CHECK(a.n_samples == 2000);
  CHECK_THROWS_AS(posterior_odds(data, prior, 999, 8), ConfigError);
  CHECK(std::fabs(a.p_oscillatory - 1.0 / (1.0 + std::exp(-a.log_odds))) < 1e-12);
}

TEST_CASE("underflowing likelihoods are reported") {
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(30, 0.0, 29.0);
  const TimeSeries data(t, Eigen::VectorXd::Constant(30, 1e200).array() * Eigen::VectorXd::LinSpaced(30, -1, 1).array());
  PriorSpec prior;
  prior.k = {-30.0, -29.0};
  prior.mean = Interval{0.0, 0.0};
  CHECK_THROWS_AS(posterior_odds(data, prior, 1000, 1), NumericalFailure);
}

TEST_CASE("Monte Carlo agrees with the quadrature cross-check") {
  const auto data = sampled({0, 1.0, 0, 0.3}, 30, 0.5, 12);
  PriorSpec prior = fixed_mean(default_prior(data), 0.0);
  const auto mc = posterior_odds(data, prior, 40000, 2);
  const auto grid = posterior_odds_grid(data, prior, 14);
  CHECK(std::fabs(mc.log_odds - grid.log_odds) < 4 * mc.stderr_log_odds + 0.1);
  PriorSpec free = prior;
  free.noise_var = {0.0, 0.1};
  CHECK_THROWS_AS(posterior_odds_grid(data, free, 4), ConfigError);
}

TEST_CASE("stderr shrinks like one over root budget") {
  const auto data = sampled({0, 0.5, 0, 0.2}, 20, 0.5, 3);
  const auto prior = default_prior(data);
  std::vector<double> se;
  for (int budget : {2000, 8000, 32000}) se.push_back(posterior_odds(data, prior, budget, 21).stderr_log_odds);
  const double slope = std::log(se[2] / se[0]) / std::log(16.0);
  CHECK(slope < -0.3);
  CHECK(slope > -0.7);
}

TEST_CASE("scale equivariance") {
  const auto data = sampled({0.2, 1.5, 0.3, 0.4}, 40, 0.25, 33);
  PriorSpec prior = fixed_mean(default_prior(data), data.mean());
  const auto base = posterior_odds(data, prior, 8000, 5);

  const double lambda = 3.7;
  const TimeSeries stretched(data.times() * lambda, data.values());
  PriorSpec pt = prior;
  pt.h = {prior.h.lo - std::log(lambda), prior.h.hi - std::log(lambda)};
  const auto t_odds = posterior_odds(stretched, pt, 8000, 5);
  CHECK(std::fabs(t_odds.log_odds - base.log_odds) < 1e-8);

  const TimeSeries louder(data.times(), data.values() * lambda);
  PriorSpec pv = prior;
  pv.k = {prior.k.lo + std::log(lambda), prior.k.hi + std::log(lambda)};
  pv.mean = Interval{data.mean() * lambda, data.mean() * lambda};
  const auto v_odds = posterior_odds(louder, pv, 8000, 5);
  CHECK(std::fabs(v_odds.log_odds - base.log_odds) < 1e-8);
}

TEST_CASE("tilted and uniform j priors agree on strongly oscillatory data") {
  const auto data = sampled({0, 3.0, 0, 0.0}, 120, 0.25, 17);
  PriorSpec uniform = default_prior(data);
  PriorSpec tilted = uniform;
  tilted.j_prior = JPrior::tilted;
  const auto a = posterior_odds(data, uniform, 20000, 1);
  const auto b = posterior_odds(data, tilted, 20000, 1);
  CHECK(a.log_odds > std::log(10.0));
  const double joint = std::hypot(a.stderr_log_odds, b.stderr_log_odds);
  CHECK(std::fabs(a.log_odds - b.log_odds) < 3 * joint);
}

TEST_CASE("classify wraps the odds") {
  const auto data = sampled({0, 2.5, 0, 0}, 120, 0.25, 2);
  const auto cls = classify(data, default_prior(data), 10.0, 5000, 3);
  CHECK(cls.label == label_for_odds(cls.odds.log_odds, 10.0));
  CHECK_THROWS_AS(classify(data, default_prior(data), 0.5, 5000, 3), ConfigError);
}

}  // TEST_SUITE
