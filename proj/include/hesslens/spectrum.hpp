#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hesslens/linalg.hpp"
#include "hesslens/model.hpp"

namespace hesslens {

struct SpectrumSource {
  MlpSpec spec;
  std::string dataset;
  std::optional<std::size_t> step;
  std::uint64_t seed = 0;
};

struct Spectrum {
  std::vector<double> eigenvalues;  // ascending
  SpectrumSource source;
  double asymmetry = 0.0;
  std::optional<DenseMatrix> eigenvectors;

  std::size_t size() const noexcept { return eigenvalues.size(); }
};

struct SpectrumOptions {
  bool keep_vectors = false;
  HessianOptions hessian;
};

/// full_hessian -> symmetric_eigendecomposition.
Spectrum compute_spectrum(const MlpSpec& spec, const ParamVector& theta, const Dataset& data,
                          const SpectrumOptions& options = {}, SpectrumSource source = {});

/// Spectrum of an already-assembled Hessian.
Spectrum spectrum_of(const HessianResult& hessian, SpectrumSource source, bool keep_vectors = false);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  double center = 0.0;
  std::size_t count = 0;
};

inline constexpr std::size_t kDefaultHistogramBins = 100;

/// Equal-width bins over `range` (default [min, max]; a zero-width range is
/// widened by 1e-12 on each side). Values outside the range are not counted;
/// the upper edge is inclusive.
std::vector<HistogramBin> histogram(std::span<const double> values,
                                    std::size_t bins = kDefaultHistogramBins,
                                    std::optional<std::pair<double, double>> range = std::nullopt);
std::vector<HistogramBin> histogram(const Spectrum& s, std::size_t bins = kDefaultHistogramBins,
                                    std::optional<std::pair<double, double>> range = std::nullopt);

struct ZeroThreshold {
  enum class Mode { absolute, relative };
  Mode mode = Mode::relative;
  double value = 1e-3;

  static ZeroThreshold absolute(double eps) { return {Mode::absolute, eps}; }
  static ZeroThreshold relative(double rho) { return {Mode::relative, rho}; }
};

/// Fraction of |lambda| <= eps, or <= rho * max|lambda| in relative mode.
double near_zero_fraction(std::span<const double> eigenvalues, ZeroThreshold threshold = {});
double near_zero_fraction(const Spectrum& s, ZeroThreshold threshold = {});

/// k largest, descending.
std::vector<double> top_k(const Spectrum& s, std::size_t k);
/// k smallest, ascending.
std::vector<double> bottom_k(const Spectrum& s, std::size_t k);

inline constexpr double kEdgeConfidenceRatio = 3.0;

struct EdgeSplit {
  bool available = false;
  std::string reason;         // why unavailable
  std::vector<double> edges;  // descending
  std::size_t gap_index = 0;  // == edges.size()
  double gap_ratio = 0.0;     // lambda_i / lambda_{i+1} at the gap
  bool low_confidence = false;
};

std::size_t default_edge_window(std::size_t classes);

/// Largest multiplicative gap lambda_i / lambda_{i+1}, i = 1..K, among the
/// top K+1 eigenvalues (all of which must be positive). Heuristic: flags the
/// split as low-confidence when the best ratio is below kEdgeConfidenceRatio.
EdgeSplit bulk_edge_split(std::span<const double> ascending, std::size_t window);
EdgeSplit bulk_edge_split(const Spectrum& s, std::optional<std::size_t> window = std::nullopt);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_distance(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation with average ranks for ties.
double spearman_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace hesslens
