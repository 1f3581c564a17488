#pragma once

// Independent reference computations used by the unit tests and the
// acceptance runner. Nothing here calls the library's loss or derivative code
// except where a test explicitly compares against it.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hesslens/data.hpp"
#include "hesslens/error.hpp"
#include "hesslens/linalg.hpp"
#include "hesslens/model.hpp"

namespace oracle {

using hesslens::Dataset;
using hesslens::DenseMatrix;
using hesslens::MlpSpec;
using hesslens::ParamVector;

/// Naive per-example loss straight from the parameter layout description.
double loss(const MlpSpec& spec, const std::vector<double>& theta, const Dataset& data);

std::vector<double> fd_gradient(const MlpSpec& spec, const std::vector<double>& theta,
                                const Dataset& data, double h = 1e-5);

/// (g(theta + eps v) - g(theta - eps v)) / (2 eps) with the library gradient.
std::vector<double> fd_hvp(const MlpSpec& spec, const ParamVector& theta, const Dataset& data,
                           const ParamVector& v, double eps = 1e-5);

/// Second-order central differences of the oracle loss.
DenseMatrix fd_hessian(const MlpSpec& spec, const std::vector<double>& theta, const Dataset& data,
                       double h);

/// |a - b|_2 / max(|a|_2, |b|_2), 0 when both vanish.
double rel_error(const std::vector<double>& a, const std::vector<double>& b);

DenseMatrix random_symmetric(std::size_t n, std::uint64_t seed);
DenseMatrix random_orthonormal(std::size_t n, std::uint64_t seed);

struct TinyNet {
  MlpSpec spec;
  Dataset data;
  ParamVector theta;
};

/// Random small ReLU net on blob data (widths <= 6, d <= 100), resampled until
/// every pre-activation is at least `kink_margin` away from zero.
TinyNet random_tiny_net(std::uint64_t seed, double kink_margin = 1e-6);

/// Temporary directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

/// Kind of the hesslens::Error thrown by fn as an int; -1 if nothing was
/// thrown, -2 for any other exception.
template <class F>
int thrown_kind(F&& fn) {
  try {
    fn();
  } catch (const hesslens::Error& e) {
    return static_cast<int>(e.kind());
  } catch (...) {
    return -2;
  }
  return -1;
}

inline int kind(hesslens::ErrorKind k) { return static_cast<int>(k); }

}  // namespace oracle
