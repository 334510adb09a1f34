#include "figure.hpp"

#include <cmath>
#include <cstdio>

#include "twodsys/errors.hpp"
#include "twodsys/gp.hpp"
#include "twodsys/io.hpp"

namespace twodsys::cli {

std::vector<double> figure_s_values() { return {-2.0, -1.0, 0.0, 1.0, 2.0}; }
std::vector<double> figure_p_values() { return {-1.0, 0.0, 0.5, 0.75, 0.9, 1.0}; }

std::string FigureCell::stem() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "cell_s%+g_p%g", s, p);
  return buf;
}

std::vector<FigureCell> figure_cells(std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(std::llround(kFigureEnd / kFigureStep)) + 1;
  const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(n, 0.0, kFigureEnd);
  std::vector<FigureCell> cells;
  for (double p : figure_p_values()) {
    for (double s : figure_s_values()) {
      const HyperParamsd theta{0.0, s, 0.0, p};
      cells.push_back({s, p, times, sample(theta, times, seed, 1).col(0)});
    }
  }
  return cells;
}

std::vector<std::filesystem::path> write_figure(const std::filesystem::path& dir,
                                                std::uint64_t seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& cell : figure_cells(seed)) {
    Eigen::MatrixXd table(cell.times.size(), 2);
    table << cell.times, cell.values;
    const auto csv = dir / (cell.stem() + ".csv");
    const auto svg = dir / (cell.stem() + ".svg");
    write_csv(csv, {"t", "x"}, table);
    char title[64];
    std::snprintf(title, sizeof title, "s = %+g, p = %g", cell.s, cell.p);
    write_svg_line_plot(svg, cell.times, cell.values, title);
    written.push_back(csv);
    written.push_back(svg);
  }
  return written;
}

double increment_scaling_slope(const Eigen::Ref<const Eigen::VectorXd>& values, double step,
                               const std::vector<int>& lag_steps) {
  if (lag_steps.size() < 2) throw ConfigError("increment slope: need at least two lags");
  const auto m = static_cast<Eigen::Index>(lag_steps.size());
  Eigen::VectorXd log_lag(m), log_msi(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index lag = lag_steps[static_cast<std::size_t>(i)];
    if (lag < 1 || lag >= values.size()) throw ConfigError("increment slope: bad lag");
    const Eigen::Index count = values.size() - lag;
    const double msi =
        (values.tail(count) - values.head(count)).squaredNorm() / static_cast<double>(count);
    log_lag(i) = std::log(static_cast<double>(lag) * step);
    log_msi(i) = std::log(msi);
  }
  const Eigen::VectorXd dx = log_lag.array() - log_lag.mean();
  return dx.dot(log_msi.array().matrix() - Eigen::VectorXd::Constant(m, log_msi.mean())) /
         dx.squaredNorm();
}

}  // namespace twodsys::cli
