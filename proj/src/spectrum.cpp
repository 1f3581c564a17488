#include "hesslens/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hesslens/error.hpp"

namespace hesslens {

Spectrum spectrum_of(const HessianResult& hessian, SpectrumSource source, bool keep_vectors) {
  auto eig = symmetric_eigendecomposition(hessian.matrix, keep_vectors);
  Spectrum s;
  s.eigenvalues = std::move(eig.eigenvalues);
  s.source = std::move(source);
  s.asymmetry = hessian.asymmetry;
  if (keep_vectors) s.eigenvectors = std::move(eig.eigenvectors);
  return s;
}

Spectrum compute_spectrum(const MlpSpec& spec, const ParamVector& theta, const Dataset& data,
                          const SpectrumOptions& options, SpectrumSource source) {
  if (source.spec.layer_sizes.empty()) source.spec = spec;
  return spectrum_of(full_hessian(spec, theta, data, options.hessian), std::move(source),
                     options.keep_vectors);
}

std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins,
                                    std::optional<std::pair<double, double>> range) {
  if (bins < 1) throw Error(ErrorKind::parameter, "histogram needs at least one bin");
  double lo, hi;
  if (range) {
    std::tie(lo, hi) = *range;
    if (!(lo < hi)) throw Error(ErrorKind::parameter, "histogram range needs lo < hi");
  } else {
    if (values.empty()) throw Error(ErrorKind::parameter, "histogram of empty set needs a range");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
    if (lo == hi) {
      const double pad = std::max(1e-12, 1e-12 * std::abs(lo));
      lo -= pad;
      hi += pad;
    }
  }
  std::vector<HistogramBin> out(bins);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = lo + width * static_cast<double>(b);
    out[b].hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    out[b].center = 0.5 * (out[b].lo + out[b].hi);
  }
  for (double v : values) {
    if (v < lo || v > hi) continue;
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    out[std::min(b, bins - 1)].count++;
  }
  return out;
}

std::vector<HistogramBin> histogram(const Spectrum& s, std::size_t bins,
                                    std::optional<std::pair<double, double>> range) {
  return histogram(s.eigenvalues, bins, range);
}

double near_zero_fraction(std::span<const double> eigenvalues, ZeroThreshold threshold) {
  if (eigenvalues.empty()) throw Error(ErrorKind::parameter, "near-zero fraction of empty spectrum");
  if (!(threshold.value >= 0.0)) throw Error(ErrorKind::parameter, "zero threshold must be >= 0");
  double cut = threshold.value;
  if (threshold.mode == ZeroThreshold::Mode::relative) {
    double mx = 0.0;
    for (double v : eigenvalues) mx = std::max(mx, std::abs(v));
    cut *= mx;
  }
  const auto count = std::count_if(eigenvalues.begin(), eigenvalues.end(),
                                   [&](double v) { return std::abs(v) <= cut; });
  return static_cast<double>(count) / static_cast<double>(eigenvalues.size());
}

double near_zero_fraction(const Spectrum& s, ZeroThreshold threshold) {
  return near_zero_fraction(s.eigenvalues, threshold);
}

std::vector<double> top_k(const Spectrum& s, std::size_t k) {
  if (k < 1 || k > s.size()) {
    std::ostringstream msg;
    msg << "top_k: k = " << k << " outside [1, " << s.size() << "]";
    throw Error(ErrorKind::bounds, msg.str());
  }
  return {s.eigenvalues.rbegin(), s.eigenvalues.rbegin() + static_cast<std::ptrdiff_t>(k)};
}

std::vector<double> bottom_k(const Spectrum& s, std::size_t k) {
  if (k < 1 || k > s.size()) {
    std::ostringstream msg;
    msg << "bottom_k: k = " << k << " outside [1, " << s.size() << "]";
    throw Error(ErrorKind::bounds, msg.str());
  }
  return {s.eigenvalues.begin(), s.eigenvalues.begin() + static_cast<std::ptrdiff_t>(k)};
}

std::size_t default_edge_window(std::size_t classes) { return std::min<std::size_t>(3 * classes, 20); }

EdgeSplit bulk_edge_split(std::span<const double> ascending, std::size_t window) {
  EdgeSplit out;
  if (window < 1) {
    out.reason = "window must be >= 1";
    return out;
  }
  const std::size_t positives = static_cast<std::size_t>(
      std::count_if(ascending.begin(), ascending.end(), [](double v) { return v > 0.0; }));
  if (positives < window + 1) {
    std::ostringstream msg;
    msg << "needs " << window + 1 << " positive eigenvalues, spectrum has " << positives;
    out.reason = msg.str();
    return out;
  }
  const std::size_t n = ascending.size();
  auto desc = [&](std::size_t i) { return ascending[n - 1 - i]; };  // 0-based descending
  std::size_t best = 0;
  double best_ratio = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    const double ratio = desc(i) / desc(i + 1);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = i;
    }
  }
  out.available = true;
  out.gap_index = best + 1;
  out.gap_ratio = best_ratio;
  for (std::size_t i = 0; i <= best; ++i) out.edges.push_back(desc(i));
  out.low_confidence = best_ratio < kEdgeConfidenceRatio;
  return out;
}

EdgeSplit bulk_edge_split(const Spectrum& s, std::optional<std::size_t> window) {
  const std::size_t k = window ? *window
                               : default_edge_window(s.source.spec.layer_sizes.empty()
                                                         ? 2
                                                         : s.source.spec.num_classes());
  return bulk_edge_split(s.eigenvalues, k);
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::parameter, "KS distance of empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorKind::parameter, "Spearman correlation needs two equal samples of size >= 2");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace hesslens
