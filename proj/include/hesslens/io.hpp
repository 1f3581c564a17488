#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hesslens/linalg.hpp"
#include "hesslens/model.hpp"
#include "hesslens/spectrum.hpp"
#include "hesslens/training.hpp"

namespace hesslens {

/// Shortest round-trip-safe rendering (17 significant digits).
std::string format_real(double v);

/// Line-oriented CSV writer with a fixed header.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  template <class... Cells>
  void row(const Cells&... cells) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << cell(cells)), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return format_real(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class Int>
    requires std::is_integral_v<Int>
  static std::string cell(Int v) { return std::to_string(v); }

  std::ofstream out_;
};

/// `index,eigenvalue`, ascending.
void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& s);
std::vector<double> read_spectrum_csv(const std::filesystem::path& path);

/// `step,loss,grad_norm,weight_norm`.
void write_trace_csv(const std::filesystem::path& path, const TrainTrace& trace);

/// `index,value`.
void write_vector_csv(const std::filesystem::path& path, const ParamVector& v);
ParamVector read_vector_csv(const std::filesystem::path& path);

/// Dense matrix, one row per line, no header.
void write_matrix_csv(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix read_matrix_csv(const std::filesystem::path& path);

/// Bar chart of a histogram with linear axes; the eigenvalue range is annotated.
void write_histogram_svg(const std::filesystem::path& path, const std::vector<HistogramBin>& bins,
                         const std::string& title);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace hesslens
