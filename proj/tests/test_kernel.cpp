#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "twodsys/kernel.hpp"
#include "twodsys/random.hpp"

using namespace twodsys;

namespace {

constexpr double kPi = std::numbers::pi;

double rel(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

HyperParamsd random_theta(Rng& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0), up(-1.0, 1.0);
  return {u(rng), u(rng), u(rng), up(rng)};
}

}  // namespace

TEST_SUITE("kernel") {

TEST_CASE("to_natural examples") {
  auto a = to_natural(HyperParamsd{0, 0, 0, 0});
  CHECK(a.sigma == 1.0);
  CHECK(a.Delta == 0.0);
  CHECK(a.S11 == 1.0);
  CHECK(a.J == 0.0);

  auto b = to_natural(HyperParamsd{0, std::log(2.0), 0, 1});
  CHECK(b.sigma == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(b.Delta == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(b.J == doctest::Approx(1.0).epsilon(1e-15));

  auto c = to_natural(HyperParamsd{std::log(2.0), -1.0, 0.5 * std::log(3.0), -1});
  CHECK(c.sigma == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(rel(c.Delta, 2.52848223531423071) < 1e-14);
  CHECK(c.S11 == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(c.J == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK(c.satisfies_constraints());
}

TEST_CASE("to_natural rejects non-finite input") {
  CHECK_THROWS_AS(to_natural(HyperParamsd{NAN, 0, 0, 0}), InvalidParameter);
  CHECK_THROWS_AS(to_natural(HyperParamsd{0, INFINITY, 0, 0}), InvalidParameter);
}

TEST_CASE("from_natural examples") {
  auto a = from_natural(NaturalParamsd{1, 0, 1, 0});
  CHECK(a.h == 0.0);
  CHECK(a.s == 0.0);
  CHECK(a.k == 0.0);
  CHECK(a.p == 0.0);

  auto b = from_natural(NaturalParamsd{1, -1, 1, 1});
  CHECK(std::fabs(b.s - std::log(2.0)) < 1e-15);
  CHECK(b.p == doctest::Approx(1.0).epsilon(1e-15));

  auto c = from_natural(NaturalParamsd{2, 3.999, 1, 0});
  CHECK(rel(c.s, -8.29404964010202767) < 1e-10);
}

TEST_CASE("from_natural rejects invariant violations") {
  CHECK_THROWS_AS(from_natural(NaturalParamsd{0, 0, 1, 0}), InvalidParameter);
  CHECK_THROWS_AS(from_natural(NaturalParamsd{1, 1, 1, 0}), InvalidParameter);
  CHECK_THROWS_AS(from_natural(NaturalParamsd{1, 0, 0, 0}), InvalidParameter);
  CHECK_THROWS_AS(from_natural(NaturalParamsd{1, 0, 1, 1.01}), InvalidParameter);
  CHECK_THROWS_AS(from_natural(NaturalParamsd{1, NAN, 1, 0}), InvalidParameter);
}

TEST_CASE("natural round trip and principal branch") {
  Rng rng = make_rng(11);
  std::uniform_real_distribution<double> wide(-6.0, 6.0);
  for (int i = 0; i < 500; ++i) {
    HyperParamsd theta{wide(rng), wide(rng), wide(rng), wide(rng)};
    const auto np = to_natural(theta);
    REQUIRE(np.satisfies_constraints());
    const auto back = to_natural(from_natural(np));
    CHECK(rel(back.sigma, np.sigma) < 1e-12);
    CHECK(std::fabs(back.Delta - np.Delta) <= 1e-12 * np.sigma * np.sigma);
    CHECK(rel(back.S11, np.S11) < 1e-12);
    CHECK(std::fabs(back.J - np.J) <= 1e-12 * np.S11);
    const auto p = from_natural(np).p;
    CHECK(p >= -1.0);
    CHECK(p <= 1.0);
    const auto folded = theta.principal();
    CHECK(std::fabs(folded.j() - theta.j()) < 1e-12);
  }
}

TEST_CASE("value at zero lag is the variance") {
  Rng rng = make_rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto theta = random_theta(rng);
    CHECK(rel(eval(theta, 0.0), std::exp(2 * theta.k)) < 1e-15);
  }
}

TEST_CASE("critical damping limit") {
  for (double p : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
    const HyperParamsd theta{0, 0, 0, p};
    const double j = theta.j();
    for (double tau : {-7.0, -1.0, 0.0, 0.25, 1.0, 3.0, 30.0}) {
      const double expect = std::exp(-std::fabs(tau)) * (1 + j * std::fabs(tau));
      CHECK(std::fabs(eval(theta, tau) - expect) < 1e-15);
    }
  }
}

TEST_CASE("underdamped example") {
  const HyperParamsd theta{0, std::log(2.0), 0, 0};
  for (double tau : {-4.0, -0.5, 0.3, 1.0, 2.5, 10.0}) {
    CHECK(std::fabs(eval(theta, tau) - std::exp(-std::fabs(tau)) * std::cos(tau)) < 1e-15);
  }
  CHECK(rel(eval(theta, kPi), -0.0432139182637722498) < 1e-13);
}

TEST_CASE("overdamped collapses to a pure exponential") {
  const double s = -2.0;
  const double r = std::sqrt(1 - std::exp(s));
  const HyperParamsd theta{0, s, 0, 2 / kPi * std::asin(r)};
  for (double tau = -20; tau <= 20; tau += 0.37) {
    CHECK(rel(eval(theta, tau), oracle::ou(1.0, 1 - r, tau)) < 1e-12);
  }
}

TEST_CASE("agrees with the brute-force complex oracle") {
  Rng rng = make_rng(5);
  std::uniform_real_distribution<double> ut(-10.0, 10.0);
  for (int i = 0; i < 2000; ++i) {
    const auto theta = random_theta(rng);
    const double tau = ut(rng);
    const double c0 = std::exp(2 * theta.k);
    CHECK(std::fabs(eval(theta, tau) - oracle::kernel(theta.h, theta.s, theta.k, theta.p, tau)) <
          1e-12 * c0);
  }
}

TEST_CASE("large lags stay finite and decay") {
  for (double s : {-30.0, -4.0, -1e-9, 0.0, 1e-9, 4.0, 30.0}) {
    const HyperParamsd theta{2.0, s, 0, 0.4};
    const auto np = to_natural(theta);
    // Overdamped decay runs at the slow rate sigma - sqrt(Delta), tiny for s = -30.
    const double slow = np.sigma - std::sqrt(std::max(np.Delta, 0.0));
    for (double tau : {1e2, 1e4, 1e8, 1e300}) {
      const double v = eval(theta, tau);
      CHECK(std::isfinite(v));
      if (slow * tau > 50) CHECK(std::fabs(v) < 1e-6);
      CHECK(std::fabs(v) <= np.S11 * (1 + std::fabs(theta.j()) * np.sigma * tau) * std::exp(-slow * tau));
    }
  }
}

TEST_CASE("properties over random parameters") {
  Rng rng = make_rng(7);
  std::uniform_real_distribution<double> ut(-10.0, 10.0);
  for (int i = 0; i < 2000; ++i) {
    const auto theta = random_theta(rng);
    const double tau = ut(rng);
    const auto np = to_natural(theta);
    const double c0 = eval(theta, 0.0);
    const double v = eval(theta, tau);
    CHECK(v == eval(theta, -tau));
    CHECK(std::fabs(v) <= c0 * (1 + 1e-14));
    const double slow = np.sigma - std::sqrt(std::max(np.Delta, 0.0));
    const double bound = c0 * (1 + std::fabs(theta.j()) * np.sigma * std::fabs(tau)) *
                         std::exp(-slow * std::fabs(tau));
    CHECK(std::fabs(v) <= bound * (1 + 1e-12));
  }
}

TEST_CASE("continuity across the critical point") {
  Rng rng = make_rng(3);
  for (int i = 0; i < 200; ++i) {
    auto theta = random_theta(rng);
    theta.s = 0;
    const double c0 = eval(theta, 0.0);
    for (double tau = -5; tau <= 5; tau += 0.01) {
      for (double s : {1e-6, -1e-6, 1e-3, -1e-3}) {
        auto near = theta;
        near.s = s;
        const double ref = oracle::kernel(near.h, near.s, near.k, near.p, tau);
        CHECK(std::fabs(eval(near, tau) - ref) < 1e-13 * c0);
      }
    }
  }
}

TEST_CASE("natural-parameter evaluation matches hyperparameter evaluation") {
  Rng rng = make_rng(13);
  for (int i = 0; i < 200; ++i) {
    const auto theta = random_theta(rng);
    const auto np = to_natural(theta);
    for (double tau : {0.0, 0.4, 2.0, -3.0}) {
      CHECK(std::fabs(eval(np, tau) - eval(theta, tau)) < 1e-12 * np.S11);
    }
  }
}

TEST_CASE("gradient basics") {
  Rng rng = make_rng(17);
  for (int i = 0; i < 200; ++i) {
    const auto theta = random_theta(rng);
    const double tau = 3.0 * (i % 7) - 9.0;
    const auto vg = eval_grad(theta, tau);
    CHECK(vg.value == eval(theta, tau));
    CHECK(vg.gradient(2) == 2 * vg.value);
    CHECK(eval_grad(theta, 0.0).gradient(3) == 0.0);
  }
}

TEST_CASE("gradient matches finite differences at the reference point") {
  const HyperParamsd theta{0.3, 1.1, -0.2, 0.4};
  const auto vg = eval_grad(theta, 0.7);
  const auto fd = oracle::central_gradient(
      [](const Eigen::VectorXd& v) { return oracle::kernel(v(0), v(1), v(2), v(3), 0.7); },
      theta.vector());
  for (int i = 0; i < 4; ++i) CHECK(rel(vg.gradient(i), fd(i)) < 1e-6);
}

TEST_CASE("gradient near and at the critical point") {
  for (double s : {0.0, 1e-12, -1e-12, 1e-7, -1e-7, 0.05, -0.05}) {
    const HyperParamsd theta{-0.4, s, 0.1, 0.3};
    for (double tau : {0.1, 1.0, 4.0}) {
      const auto vg = eval_grad(theta, tau);
      const auto fd = oracle::central_gradient(
          [tau](const Eigen::VectorXd& v) { return oracle::kernel(v(0), v(1), v(2), v(3), tau); },
          theta.vector(), 1e-5);
      CHECK(oracle::vector_rel_error(vg.gradient, fd, std::exp(2 * theta.k)) < 1e-8);
    }
  }
}

TEST_CASE("right derivative at zero") {
  CHECK(right_derivative_at_zero(HyperParamsd{0.3, 1.0, 0.2, 1.0}) == 0.0);
  CHECK(right_derivative_at_zero(HyperParamsd{0, 0.5, 0, 0}) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(right_derivative_at_zero(HyperParamsd{std::log(2.0), 0.5, 0, -1}) ==
        doctest::Approx(-4.0).epsilon(1e-15));
  Rng rng = make_rng(19);
  for (int i = 0; i < 50; ++i) {
    const auto theta = random_theta(rng);
    const double t = 1e-7;
    const double fd = (eval(theta, t) - eval(theta, 0.0)) / t;
    CHECK(std::fabs(right_derivative_at_zero(theta) - fd) <
          1e-5 * std::exp(2 * theta.k) * std::exp(theta.h) * std::exp(theta.h));
  }
}

TEST_CASE("quality factor") {
  CHECK(q_factor(HyperParamsd{0, 0, 0, 0}) == 0.5);
  CHECK(rel(q_factor(HyperParamsd{0, 2, 0, 0}), 1.35914091422952262) < 1e-15);
  CHECK(rel(q_factor(HyperParamsd{0, -2, 0, 0}), 0.183939720585721161) < 1e-15);
}

TEST_CASE("long double instantiation") {
  const HyperParams<long double> theta{0.1L, 0.7L, -0.3L, 0.2L};
  const double ref = oracle::kernel(0.1, 0.7, -0.3, 0.2, 1.3);
  CHECK(std::fabs(static_cast<double>(eval(theta, 1.3L)) - ref) < 1e-15);
}

}  // TEST_SUITE
