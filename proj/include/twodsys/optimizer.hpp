#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace twodsys {

struct OptimizerSettings {
  int max_iterations = 200;
  /// Converged once the largest gradient component falls below this.
  double gradient_tolerance = 1e-5;
  /// ... or once an iteration reduces the objective by less than this, relative.
  double value_tolerance = 1e-12;
  int max_line_search_steps = 40;
};

struct TracePoint {
  int iteration;
  double objective;
};

struct OptimizerReport {
  Eigen::VectorXd x;
  double value;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
  std::string status;
  std::vector<TracePoint> trace;
};

/// Returns f(x) and writes the gradient into `grad` (already sized).
/// A non-finite return marks x as infeasible; the line search backs off.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Unconstrained BFGS with a strong-Wolfe line search.
OptimizerReport minimize_bfgs(const Objective& objective, Eigen::VectorXd x0,
                              const OptimizerSettings& settings = {});

}  // namespace twodsys
