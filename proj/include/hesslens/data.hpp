#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hesslens/model.hpp"

namespace hesslens {

struct BlobConfig {
  std::size_t n_per_class = 100;
  std::vector<std::vector<double>> centers{{1.0, 1.0}, {-1.0, -1.0}};
  double std = 0.3;
  std::uint64_t seed = 0;
};

/// n_per_class points around each center, label = center index, rows in a
/// seeded shuffled order.
Dataset gaussian_blobs(const BlobConfig& cfg);

enum class PatternDistribution { gaussian, uniform };

std::string_view to_string(PatternDistribution dist);
PatternDistribution pattern_distribution_from_string(std::string_view name);

/// Random inputs (N(0,1) or U(-sqrt3, sqrt3), both unit variance) with iid
/// uniform labels in [0, classes).
Dataset random_patterns(std::size_t n, std::size_t input_dim, std::size_t classes,
                        std::uint64_t seed,
                        PatternDistribution dist = PatternDistribution::gaussian);

/// Replaces the inputs of `base` with random patterns and keeps its labels.
Dataset randomize_inputs(const Dataset& base, std::uint64_t seed,
                         PatternDistribution dist = PatternDistribution::gaussian);

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxArray {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;
};

/// Parses an unsigned-byte IDX file, requiring `expected_magic`.
IdxArray read_idx(const std::filesystem::path& path, std::uint32_t expected_magic);

/// Samples n examples without replacement from an IDX image/label pair.
Dataset load_mnist_subset(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path, std::size_t n, bool normalize,
                          std::uint64_t seed);

/// Locates train-images-idx3-ubyte / train-labels-idx1-ubyte under `dir`.
struct MnistFiles {
  std::filesystem::path images;
  std::filesystem::path labels;
};
std::optional<MnistFiles> find_mnist_files(const std::filesystem::path& dir);

/// Resolves the data directory from an explicit flag value or HESSLENS_DATA_DIR.
std::optional<std::filesystem::path> resolve_data_dir(const std::string& flag_value);

/// Class-structured Gaussian blobs standing in for MNIST when the IDX files
/// are absent (10 classes in 784 dimensions by default). Class centers are
/// seeded N(0, I) draws scaled to norm ~center_scale; each point adds noise of
/// norm ~noise_scale.
Dataset mnist_surrogate(std::size_t n, std::uint64_t seed, std::size_t input_dim = 784,
                        std::size_t classes = 10, double center_scale = 3.0,
                        double noise_scale = 1.0);

}  // namespace hesslens
