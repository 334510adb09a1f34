#include "twodsys/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace twodsys {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kCurvature = 0.9;

struct Trial {
  double step;
  double value;
  double slope;  // directional derivative at step
  Eigen::VectorXd x;
  Eigen::VectorXd gradient;
};

// Minimiser of the cubic through (a, fa, da), (b, fb, db), kept inside the
// middle 80% of [a, b]; bisection when the fit is unusable.
double interpolate(const Trial& a, const Trial& b) {
  const double lo = std::min(a.step, b.step);
  const double hi = std::max(a.step, b.step);
  const double width = hi - lo;
  double next = 0.5 * (a.step + b.step);
  if (std::isfinite(b.value) && std::isfinite(b.slope)) {
    const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
    const double disc = d1 * d1 - a.slope * b.slope;
    if (disc >= 0.0) {
      const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
      const double cubic =
          b.step - (b.step - a.step) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
      if (std::isfinite(cubic)) next = cubic;
    }
  }
  return std::clamp(next, lo + 0.1 * width, hi - 0.1 * width);
}

class LineSearch {
 public:
  LineSearch(const Objective& objective, const Eigen::VectorXd& x, double value,
             const Eigen::VectorXd& direction, double slope, int max_steps)
      : objective_(objective),
        x_(x),
        value_(value),
        direction_(direction),
        slope_(slope),
        max_steps_(max_steps) {}

  std::optional<Trial> run(double initial_step) {
    Trial prev{0.0, value_, slope_, x_, {}};
    double step = initial_step;
    for (int i = 0; i < max_steps_; ++i) {
      Trial cur = evaluate(step);
      if (!std::isfinite(cur.value) || cur.value > value_ + kArmijo * step * slope_ ||
          (i > 0 && cur.value >= prev.value)) {
        return zoom(prev, cur);
      }
      if (std::abs(cur.slope) <= -kCurvature * slope_) return cur;
      if (cur.slope >= 0.0) return zoom(cur, prev);
      prev = std::move(cur);
      step *= 2.0;
    }
    return best_;
  }

 private:
  Trial evaluate(double step) {
    Trial t{step, 0.0, 0.0, x_ + step * direction_, Eigen::VectorXd(x_.size())};
    t.value = objective_(t.x, t.gradient);
    if (!std::isfinite(t.value) || !t.gradient.allFinite()) {
      t.value = std::numeric_limits<double>::infinity();
      t.slope = std::numeric_limits<double>::quiet_NaN();
    } else {
      t.slope = t.gradient.dot(direction_);
      if (t.value <= value_ + kArmijo * step * slope_ &&
          (!best_ || t.value < best_->value)) {
        best_ = t;
      }
    }
    ++evaluations_;
    return t;
  }

  // lo satisfies sufficient decrease and has the lowest value so far.
  std::optional<Trial> zoom(Trial lo, Trial hi) {
    while (evaluations_ < 2 * max_steps_) {
      if (std::abs(hi.step - lo.step) <= 1e-14 * std::max(1.0, hi.step)) break;
      Trial cur = evaluate(interpolate(lo, hi));
      if (!std::isfinite(cur.value) || cur.value > value_ + kArmijo * cur.step * slope_ ||
          cur.value >= lo.value) {
        hi = std::move(cur);
        continue;
      }
      if (std::abs(cur.slope) <= -kCurvature * slope_) return cur;
      if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
      lo = std::move(cur);
    }
    return best_;
  }

  const Objective& objective_;
  const Eigen::VectorXd& x_;
  double value_;
  const Eigen::VectorXd& direction_;
  double slope_;
  int max_steps_;
  int evaluations_ = 0;
  std::optional<Trial> best_;
};

}  // namespace

OptimizerReport minimize_bfgs(const Objective& objective, Eigen::VectorXd x0,
                              const OptimizerSettings& settings) {
  const Eigen::Index dim = x0.size();
  OptimizerReport report;
  report.x = std::move(x0);
  report.gradient = Eigen::VectorXd::Zero(dim);
  report.value = objective(report.x, report.gradient);
  if (!std::isfinite(report.value) || !report.gradient.allFinite()) {
    report.value = std::numeric_limits<double>::infinity();
    report.status = "objective not finite at the starting point";
    return report;
  }
  report.trace.push_back({0, report.value});

  Eigen::MatrixXd inverse_hessian = Eigen::MatrixXd::Identity(dim, dim);
  bool scaled = false;
  for (int iter = 1; iter <= settings.max_iterations; ++iter) {
    if (report.gradient.lpNorm<Eigen::Infinity>() <= settings.gradient_tolerance) {
      report.converged = true;
      report.status = "gradient tolerance reached";
      return report;
    }
    Eigen::VectorXd direction = -inverse_hessian * report.gradient;
    double slope = direction.dot(report.gradient);
    if (!(slope < 0.0)) {
      inverse_hessian.setIdentity();
      scaled = false;
      direction = -report.gradient;
      slope = direction.dot(report.gradient);
    }
    const double initial_step =
        scaled ? 1.0 : std::min(1.0, 1.0 / report.gradient.lpNorm<Eigen::Infinity>());
    LineSearch search(objective, report.x, report.value, direction, slope,
                      settings.max_line_search_steps);
    auto accepted = search.run(initial_step);
    if (!accepted) {
      report.status = "line search failed";
      return report;
    }

    const Eigen::VectorXd s = accepted->x - report.x;
    const Eigen::VectorXd y = accepted->gradient - report.gradient;
    const double previous = report.value;
    report.x = std::move(accepted->x);
    report.gradient = std::move(accepted->gradient);
    report.value = accepted->value;
    report.iterations = iter;
    report.trace.push_back({iter, report.value});

    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (!scaled) {
        inverse_hessian *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = inverse_hessian * y;
      inverse_hessian += rho * rho * (sy + y.dot(hy)) * s * s.transpose() -
                         rho * (hy * s.transpose() + s * hy.transpose());
    }

    if (previous - report.value <=
        settings.value_tolerance * std::max(1.0, std::abs(report.value))) {
      report.converged = true;
      report.status = "objective stalled";
      return report;
    }
  }
  report.status = "iteration limit reached";
  return report;
}

}  // namespace twodsys
