#include "twodsys/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "twodsys/errors.hpp"

namespace twodsys {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

}  // namespace

TimeSeries parse_time_series_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<double> times;
  std::vector<double> values;
  auto fail = [&](const std::string& why) {
    std::ostringstream msg;
    msg << source << ":" << line_no << ": " << why;
    throw InvalidInput(msg.str());
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view);
    if (fields.size() != 2) fail("expected 2 columns, found " + std::to_string(fields.size()));
    if (!have_header) {
      double probe;
      if (parse_double(fields[0], probe)) fail("missing header row (expected t,x)");
      have_header = true;
      continue;
    }
    double t, x;
    if (!parse_double(fields[0], t) || !parse_double(fields[1], x)) fail("malformed number");
    if (!std::isfinite(t) || !std::isfinite(x)) fail("non-finite value");
    if (!times.empty() && !(t > times.back())) fail("times must be strictly increasing");
    times.push_back(t);
    values.push_back(x);
  }
  if (!have_header) {
    line_no = 0;
    fail("empty file");
  }
  if (times.empty()) fail("no data rows");
  return {Eigen::Map<Eigen::VectorXd>(times.data(), static_cast<Eigen::Index>(times.size())),
          Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()))};
}

TimeSeries read_time_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return parse_time_series_csv(in, path.string());
}

void write_csv(std::ostream& out, const std::vector<std::string>& headers,
               const Eigen::Ref<const Eigen::MatrixXd>& columns) {
  if (static_cast<Eigen::Index>(headers.size()) != columns.cols()) {
    throw InvalidInput("write_csv: header count does not match columns");
  }
  for (std::size_t c = 0; c < headers.size(); ++c) out << (c ? "," : "") << headers[c];
  out << '\n' << std::setprecision(17);
  for (Eigen::Index r = 0; r < columns.rows(); ++r) {
    for (Eigen::Index c = 0; c < columns.cols(); ++c) out << (c ? "," : "") << columns(r, c);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& headers,
               const Eigen::Ref<const Eigen::MatrixXd>& columns) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  write_csv(out, headers, columns);
  if (!out) throw InvalidInput("write failed for " + path.string());
}

void write_svg_line_plot(const std::filesystem::path& path,
                         const Eigen::Ref<const Eigen::VectorXd>& x,
                         const Eigen::Ref<const Eigen::VectorXd>& y, const std::string& title) {
  constexpr double kWidth = 320, kHeight = 200, kPad = 20;
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  const double x0 = x.minCoeff(), x1 = x.maxCoeff();
  double y0 = y.minCoeff(), y1 = y.maxCoeff();
  if (y1 - y0 <= 0.0) {
    y0 -= 1.0;
    y1 += 1.0;
  }
  const double sx = (kWidth - 2 * kPad) / std::max(x1 - x0, 1e-300);
  const double sy = (kHeight - 2 * kPad) / (y1 - y0);
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kPad << "\" y=\"14\" font-size=\"11\" font-family=\"sans-serif\">"
      << title << "</text>\n";
  out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"0.6\" points=\"";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out << kPad + (x(i) - x0) * sx << ',' << kHeight - kPad - (y(i) - y0) * sy << ' ';
  }
  out << "\"/>\n</svg>\n";
  if (!out) throw InvalidInput("write failed for " + path.string());
}

}  // namespace twodsys
