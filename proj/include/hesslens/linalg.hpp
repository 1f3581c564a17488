#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hesslens {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> diag);
  /// Builds from nested rows; all rows must have equal length.
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {entries_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {entries_.data() + i * cols_, cols_}; }
  std::vector<double> column(std::size_t j) const;

  std::span<const double> entries() const noexcept { return entries_; }
  std::span<double> entries() noexcept { return entries_; }

  DenseMatrix transpose() const;
  std::vector<double> multiply(std::span<const double> x) const;
  DenseMatrix multiply(const DenseMatrix& other) const;

  double max_abs() const noexcept;
  double frobenius_norm() const noexcept;
  double trace() const;
  /// max |A[i][j] - A[j][i]|.
  double asymmetry() const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

/// Symmetry tolerance used throughout: |A - A^T|_max <= 1e-8 * max(1, |A|_max).
inline constexpr double kSymmetryTolerance = 1e-8;

bool within_symmetry_tolerance(double asymmetry, double max_abs_entry) noexcept;

struct SymmetrizeResult {
  DenseMatrix matrix;
  double asymmetry = 0.0;  // measured before averaging
};

/// Returns (A + A^T)/2 and the asymmetry of the input. Throws on non-square input.
SymmetrizeResult symmetrize(const DenseMatrix& a);

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  DenseMatrix eigenvectors;         // column i pairs with eigenvalues[i]; empty if not requested
};

/// Full eigendecomposition of a real symmetric matrix.
///
/// Householder reduction to tridiagonal form, then implicit-shift QL on the
/// tridiagonal. Eigenvalues are returned ascending. Each eigenvector is
/// normalized and signed so that its first nonzero component is positive.
/// The input is rejected if it contains NaN/Inf or if its asymmetry exceeds
/// kSymmetryTolerance; the input is symmetrized before the reduction.
EigenDecomposition symmetric_eigendecomposition(const DenseMatrix& a, bool with_vectors = true);

/// Eigenvalues only; same algorithm, skips the orthogonal accumulation.
std::vector<double> symmetric_eigenvalues(const DenseMatrix& a);

double dot(std::span<const double> x, std::span<const double> y) noexcept;
double norm2(std::span<const double> x) noexcept;

}  // namespace hesslens
