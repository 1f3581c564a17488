#include "hesslens/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "hesslens/error.hpp"

namespace hesslens {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
  return in;
}

double parse_real(const std::string& s, const std::filesystem::path& path) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  // out-of-range is only reported for subnormals here, which from_chars still stores
  if ((ec != std::errc() && ec != std::errc::result_out_of_range) || end != s.data() + s.size() || s.empty())
    throw Error(ErrorKind::format, "bad number '" + s + "' in " + path.string());
  return v;
}

void expect_header(std::istream& in, const std::string& header, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw Error(ErrorKind::format, path.string() + ": expected header '" + header + "'");
}

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(open_out(path)) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream s(line);
  while (std::getline(s, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s) {
  CsvWriter csv(path, {"index", "eigenvalue"});
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) csv.row(i, s.eigenvalues[i]);
}

std::vector<double> read_spectrum_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_header(in, "index,eigenvalue", path);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) throw Error(ErrorKind::format, "bad spectrum row in " + path.string());
    values.push_back(parse_real(cells[1], path));
  }
  return values;
}

void write_trace_csv(const std::filesystem::path& path, const TrainTrace& trace) {
  CsvWriter csv(path, {"step", "loss", "grad_norm", "weight_norm"});
  for (const auto& r : trace.rows) csv.row(r.step, r.loss, r.grad_norm, r.weight_norm);
}

void write_vector_csv(const std::filesystem::path& path, const ParamVector& v) {
  CsvWriter csv(path, {"index", "value"});
  for (std::size_t i = 0; i < v.size(); ++i) csv.row(i, v[i]);
}

ParamVector read_vector_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  expect_header(in, "index,value", path);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) throw Error(ErrorKind::format, "bad vector row in " + path.string());
    values.push_back(parse_real(cells[1], path));
  }
  return ParamVector(std::move(values));
}

void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m) {
  auto out = open_out(path);
  std::string line;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    line.clear();
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) line += ',';
      line += format_real(m(i, j));
    }
    line += '\n';
    out << line;
  }
}

DenseMatrix read_matrix_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<double> entries;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (rows == 0) cols = cells.size();
    if (cells.size() != cols) throw Error(ErrorKind::format, "ragged matrix rows in " + path.string());
    for (const auto& c : cells) entries.push_back(parse_real(c, path));
    ++rows;
  }
  return DenseMatrix(rows, cols, std::move(entries));
}

void write_histogram_svg(const std::filesystem::path& path, const std::vector<HistogramBin>& bins,
                         const std::string& title) {
  if (bins.empty()) throw Error(ErrorKind::parameter, "no histogram bins to render");
  constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  std::size_t max_count = 1;
  for (const auto& b : bins) max_count = std::max(max_count, b.count);
  const double lo = bins.front().lo, hi = bins.back().hi;

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << title << "</text>\n";
  const double bar_w = plot_w / static_cast<double>(bins.size());
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].count == 0) continue;
    const double h = plot_h * static_cast<double>(bins[i].count) / static_cast<double>(max_count);
    out << "<rect x=\"" << format_real(kLeft + bar_w * static_cast<double>(i)) << "\" y=\""
        << format_real(kTop + plot_h - h) << "\" width=\"" << format_real(bar_w) << "\" height=\""
        << format_real(h) << "\" fill=\"steelblue\"><title>" << format_real(bins[i].center) << ": "
        << bins[i].count << "</title></rect>\n";
  }
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
      << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kLeft << "\" y=\"" << kHeight - 20
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_real(lo) << "</text>\n";
  out << "<text x=\"" << kLeft + plot_w << "\" y=\"" << kHeight - 20
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << format_real(hi)
      << "</text>\n";
  out << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << max_count
      << "</text>\n";
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 6
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">eigenvalue range ["
      << format_real(lo) << ", " << format_real(hi) << "]</text>\n";
  out << "</svg>\n";
}

}  // namespace hesslens
