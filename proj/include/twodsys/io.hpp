#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "twodsys/gp.hpp"

namespace twodsys {

/// Two-column `t,x` CSV with a header row. Errors name the offending line.
TimeSeries parse_time_series_csv(std::istream& in, const std::string& source = "<input>");
TimeSeries read_time_series_csv(const std::filesystem::path& path);

/// One column per entry of `headers`; values written with round-trip precision.
void write_csv(std::ostream& out, const std::vector<std::string>& headers,
               const Eigen::Ref<const Eigen::MatrixXd>& columns);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& headers,
               const Eigen::Ref<const Eigen::MatrixXd>& columns);

/// Minimal static polyline chart.
void write_svg_line_plot(const std::filesystem::path& path,
                         const Eigen::Ref<const Eigen::VectorXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& y, const std::string& title);

}  // namespace twodsys
