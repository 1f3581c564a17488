#include "hesslens/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hesslens/error.hpp"

namespace hesslens {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::format: return "format";
    case ErrorKind::consistency: return "consistency";
    case ErrorKind::bounds: return "bounds";
    case ErrorKind::size: return "size";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::config: return "config";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows * cols) {
    std::ostringstream msg;
    msg << "matrix " << rows << "x" << cols << " needs " << rows * cols << " entries, got "
        << entries_.size();
    throw Error(ErrorKind::dimension, msg.str());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  std::vector<double> entries;
  entries.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(ErrorKind::dimension, "ragged rows");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(entries));
}

std::vector<double> DenseMatrix::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
  if (x.size() != cols_) throw Error(ErrorKind::dimension, "matrix-vector size mismatch");
  std::vector<double> y(rows_);
  for (std::size_t i = 0; i < rows_; ++i) y[i] = dot(row(i), x);
  return y;
}

DenseMatrix DenseMatrix::multiply(const DenseMatrix& other) const {
  if (other.rows_ != cols_) throw Error(ErrorKind::dimension, "matrix-matrix size mismatch");
  DenseMatrix out(rows_, other.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      const auto other_row = other.row(k);
      for (std::size_t j = 0; j < other.cols_; ++j) out_row[j] += a * other_row[j];
    }
  }
  return out;
}

double DenseMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (double v : entries_) m = std::max(m, std::abs(v));
  return m;
}

double DenseMatrix::frobenius_norm() const noexcept { return norm2(entries_); }

double DenseMatrix::trace() const {
  if (!is_square()) throw Error(ErrorKind::dimension, "trace of non-square matrix");
  double t = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

double DenseMatrix::asymmetry() const {
  if (!is_square()) throw Error(ErrorKind::dimension, "asymmetry of non-square matrix");
  double worst = 0.0;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i + 1; j < cols_; ++j)
      worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
  return worst;
}

bool within_symmetry_tolerance(double asymmetry, double max_abs_entry) noexcept {
  return asymmetry <= kSymmetryTolerance * std::max(1.0, max_abs_entry);
}

double dot(std::span<const double> x, std::span<const double> y) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(std::span<const double> x) noexcept {
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : x) {
    const double r = v / scale;
    s += r * r;
  }
  return scale * std::sqrt(s);
}

SymmetrizeResult symmetrize(const DenseMatrix& a) {
  if (!a.is_square()) {
    std::ostringstream msg;
    msg << "symmetrize needs a square matrix, got " << a.rows() << "x" << a.cols();
    throw Error(ErrorKind::dimension, msg.str());
  }
  const std::size_t n = a.rows();
  SymmetrizeResult out{DenseMatrix(n, n), 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    out.matrix(i, i) = a(i, i);
    for (std::size_t j = i + 1; j < n; ++j) {
      out.asymmetry = std::max(out.asymmetry, std::abs(a(i, j) - a(j, i)));
      const double avg = 0.5 * (a(i, j) + a(j, i));
      out.matrix(i, j) = avg;
      out.matrix(j, i) = avg;
    }
  }
  return out;
}

namespace {

struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> sub;  // sub[i] couples i and i+1; sub[n-1] == 0
};

// Reduces the symmetric matrix held in `work` to tridiagonal form with
// Householder reflectors H_k = I - beta_k v_k v_k^T acting on rows/cols k+1..n-1.
// Reflector k is left in row k of `work` (entries k+1..n-1); betas are returned.
Tridiagonal householder_tridiagonalize(DenseMatrix& work, std::vector<double>& betas) {
  const std::size_t n = work.rows();
  Tridiagonal t{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  betas.assign(n, 0.0);
  std::vector<double> v(n), p(n);

  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;
    auto col = work.row(k).subspan(k + 1, m);

    double scale = 0.0;
    for (double x : col) scale = std::max(scale, std::abs(x));
    t.diag[k] = work(k, k);
    if (scale == 0.0) {
      t.sub[k] = 0.0;
      continue;
    }
    double tail = 0.0;
    for (std::size_t i = 1; i < m; ++i) tail += (col[i] / scale) * (col[i] / scale);
    if (tail == 0.0) {
      t.sub[k] = col[0];
      continue;
    }
    const double x0 = col[0] / scale;
    const double xnorm = std::sqrt(x0 * x0 + tail);
    const double alpha = x0 >= 0.0 ? -xnorm : xnorm;
    // v = x/scale - alpha e1, beta = 2 / v^T v
    v[0] = x0 - alpha;
    for (std::size_t i = 1; i < m; ++i) v[i] = col[i] / scale;
    const double vtv = v[0] * v[0] + tail;
    const double beta = 2.0 / vtv;
    t.sub[k] = alpha * scale;

    // Trailing block B (m x m at offset k+1): B <- B - v w^T - w v^T.
    double ptv = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      auto brow = work.row(k + 1 + i).subspan(k + 1, m);
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += brow[j] * v[j];
      p[i] = beta * s;
      ptv += p[i] * v[i];
    }
    const double kk = 0.5 * beta * ptv;
    for (std::size_t i = 0; i < m; ++i) p[i] -= kk * v[i];
    for (std::size_t i = 0; i < m; ++i) {
      auto brow = work.row(k + 1 + i).subspan(k + 1, m);
      const double vi = v[i];
      const double wi = p[i];
      for (std::size_t j = 0; j < m; ++j) brow[j] -= vi * p[j] + wi * v[j];
    }
    for (std::size_t i = 0; i < m; ++i) col[i] = v[i];
    betas[k] = beta;
  }
  if (n >= 2) {
    t.diag[n - 2] = work(n - 2, n - 2);
    t.sub[n - 2] = work(n - 1, n - 2);
  }
  if (n >= 1) t.diag[n - 1] = work(n - 1, n - 1);
  if (n >= 1) t.sub[n - 1] = 0.0;
  return t;
}

// Q^T = H_{n-3} ... H_0, returned row-major so that row i of the result is
// column i of Q.
DenseMatrix accumulate_transposed_q(const DenseMatrix& work, const std::vector<double>& betas) {
  const std::size_t n = work.rows();
  // Q = H_0 H_1 ... H_{n-3}, built right-to-left; at step k only the trailing
  // (m x m) block at offset k+1 differs from the identity.
  DenseMatrix q = DenseMatrix::identity(n);
  std::vector<double> vtq(n);
  for (std::size_t kk = n >= 2 ? n - 2 : 0; kk-- > 0;) {
    const double beta = betas[kk];
    if (beta == 0.0) continue;
    const std::size_t m = n - kk - 1;
    const auto v = work.row(kk).subspan(kk + 1, m);
    std::fill(vtq.begin(), vtq.begin() + static_cast<std::ptrdiff_t>(m), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const auto qrow = q.row(kk + 1 + i).subspan(kk + 1, m);
      const double vi = v[i];
      for (std::size_t j = 0; j < m; ++j) vtq[j] += vi * qrow[j];
    }
    for (std::size_t i = 0; i < m; ++i) {
      auto qrow = q.row(kk + 1 + i).subspan(kk + 1, m);
      const double f = beta * v[i];
      for (std::size_t j = 0; j < m; ++j) qrow[j] -= f * vtq[j];
    }
  }
  return q.transpose();
}

// Implicit-shift QL on a symmetric tridiagonal. If `zt` is non-null the
// rotations are applied to its rows, so that on return row i of `zt` is the
// eigenvector for diag[i].
void tridiagonal_ql(Tridiagonal& t, DenseMatrix* zt) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(t.diag.size());
  auto& d = t.diag;
  auto& e = t.sub;
  constexpr int kMaxIterations = 60;
  // Off-diagonals below eps * |T| are deflated even when the neighbouring
  // diagonal entries are (near) zero, which the relative test cannot catch.
  double anorm = 0.0;
  for (std::ptrdiff_t i = 0; i < n; ++i) anorm = std::max(anorm, std::abs(d[i]) + std::abs(e[i]));
  const double floor = std::numeric_limits<double>::epsilon() * anorm;

  for (std::ptrdiff_t l = 0; l < n; ++l) {
    int iter = 0;
    std::ptrdiff_t m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) + dd == dd || std::abs(e[m]) <= floor) break;
      }
      if (m != l) {
        if (iter++ == kMaxIterations)
          throw Error(ErrorKind::numeric, "tridiagonal QL failed to converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        std::ptrdiff_t i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          e[i + 1] = (r = std::hypot(f, g));
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          d[i + 1] = g + (p = s * r);
          g = c * r - b;
          if (zt != nullptr) {
            auto lo = zt->row(static_cast<std::size_t>(i));
            auto hi = zt->row(static_cast<std::size_t>(i + 1));
            for (std::size_t k = 0; k < lo.size(); ++k) {
              f = hi[k];
              hi[k] = s * lo[k] + c * f;
              lo[k] = c * lo[k] - s * f;
            }
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

DenseMatrix validated_symmetric(const DenseMatrix& a) {
  if (!a.is_square()) {
    std::ostringstream msg;
    msg << "eigendecomposition needs a square matrix, got " << a.rows() << "x" << a.cols();
    throw Error(ErrorKind::dimension, msg.str());
  }
  for (double v : a.entries())
    if (!std::isfinite(v)) throw Error(ErrorKind::numeric, "matrix contains NaN or Inf");
  auto sym = symmetrize(a);
  if (!within_symmetry_tolerance(sym.asymmetry, a.max_abs())) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "matrix is not symmetric: measured asymmetry " << sym.asymmetry << " exceeds "
        << kSymmetryTolerance << " * max(1, " << a.max_abs() << ")";
    throw Error(ErrorKind::numeric, msg.str());
  }
  return std::move(sym.matrix);
}

std::vector<std::size_t> ascending_order(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return values[x] < values[y] || (values[x] == values[y] && x < y);
  });
  return order;
}

}  // namespace

EigenDecomposition symmetric_eigendecomposition(const DenseMatrix& a, bool with_vectors) {
  DenseMatrix work = validated_symmetric(a);
  const std::size_t n = work.rows();
  std::vector<double> betas;
  Tridiagonal t = householder_tridiagonalize(work, betas);

  EigenDecomposition out;
  if (!with_vectors) {
    tridiagonal_ql(t, nullptr);
    out.eigenvalues = std::move(t.diag);
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
    return out;
  }

  DenseMatrix zt = accumulate_transposed_q(work, betas);
  tridiagonal_ql(t, &zt);

  const auto order = ascending_order(t.diag);
  out.eigenvalues.resize(n);
  out.eigenvectors = DenseMatrix(n, n);
  constexpr double kSignThreshold = 1e-10;
  for (std::size_t col = 0; col < n; ++col) {
    const std::size_t src = order[col];
    out.eigenvalues[col] = t.diag[src];
    const auto vec = zt.row(src);
    double sign = 1.0;
    for (double x : vec) {
      if (std::abs(x) > kSignThreshold) {
        sign = x > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, col) = sign * vec[r];
  }
  return out;
}

std::vector<double> symmetric_eigenvalues(const DenseMatrix& a) {
  return symmetric_eigendecomposition(a, false).eigenvalues;
}

}  // namespace hesslens
