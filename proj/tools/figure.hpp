#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace twodsys::cli {

/// One panel of the sample grid: k = h = 0, fixed (s, p).
struct FigureCell {
  double s;
  double p;
  Eigen::VectorXd times;
  Eigen::VectorXd values;

  [[nodiscard]] std::string stem() const;
};

inline constexpr double kFigureStep = 0.01;
inline constexpr double kFigureEnd = 10.0;
std::vector<double> figure_s_values();
std::vector<double> figure_p_values();

/// Samples on t in [0, 10] (step 0.01) for every (s, p) cell, all from the
/// same standard-normal draws.
std::vector<FigureCell> figure_cells(std::uint64_t seed);

/// Writes <stem>.csv and <stem>.svg per cell; returns the paths written.
std::vector<std::filesystem::path> write_figure(const std::filesystem::path& dir,
                                                std::uint64_t seed);

/// Least-squares slope of log mean squared increment against log lag, using
/// lags of `lag_steps` grid steps.
double increment_scaling_slope(const Eigen::Ref<const Eigen::VectorXd>& values, double step,
                               const std::vector<int>& lag_steps);

}  // namespace twodsys::cli
