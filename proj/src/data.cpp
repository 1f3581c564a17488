#include "hesslens/data.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hesslens/error.hpp"
#include "hesslens/random.hpp"

namespace hesslens {

Dataset gaussian_blobs(const BlobConfig& cfg) {
  if (cfg.centers.empty()) throw Error(ErrorKind::parameter, "blob config has no centers");
  if (!(cfg.std >= 0.0)) throw Error(ErrorKind::parameter, "blob std must be >= 0");
  if (cfg.n_per_class == 0) throw Error(ErrorKind::parameter, "blob n_per_class must be >= 1");
  const std::size_t dim = cfg.centers.front().size();
  for (const auto& c : cfg.centers)
    if (c.size() != dim || dim == 0) throw Error(ErrorKind::dimension, "blob centers disagree in dimension");

  const std::size_t classes = cfg.centers.size();
  const std::size_t n = classes * cfg.n_per_class;
  Rng rng(cfg.seed);
  DenseMatrix raw(n, dim);
  std::vector<std::uint32_t> raw_labels(n);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < cfg.n_per_class; ++i) {
      const std::size_t r = c * cfg.n_per_class + i;
      for (std::size_t k = 0; k < dim; ++k) raw(r, k) = cfg.centers[c][k] + cfg.std * rng.normal();
      raw_labels[r] = static_cast<std::uint32_t>(c);
    }
  }
  const auto order = rng.permutation(n);
  Dataset out{DenseMatrix(n, dim), std::vector<std::uint32_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = raw.row(order[i]);
    std::copy(src.begin(), src.end(), out.inputs.row(i).begin());
    out.labels[i] = raw_labels[order[i]];
  }
  return out;
}

std::string_view to_string(PatternDistribution dist) {
  return dist == PatternDistribution::gaussian ? "gaussian" : "uniform";
}

PatternDistribution pattern_distribution_from_string(std::string_view name) {
  if (name == "gaussian") return PatternDistribution::gaussian;
  if (name == "uniform") return PatternDistribution::uniform;
  throw Error(ErrorKind::parameter, "unknown pattern distribution '" + std::string(name) + "'");
}

namespace {

double draw(Rng& rng, PatternDistribution dist) {
  if (dist == PatternDistribution::gaussian) return rng.normal();
  return std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
}

}  // namespace

Dataset random_patterns(std::size_t n, std::size_t input_dim, std::size_t classes,
                        std::uint64_t seed, PatternDistribution dist) {
  if (n == 0 || input_dim == 0 || classes == 0)
    throw Error(ErrorKind::parameter, "random patterns need n, d_in, C >= 1");
  Rng rng(seed);
  Dataset out{DenseMatrix(n, input_dim), std::vector<std::uint32_t>(n)};
  for (auto& v : out.inputs.entries()) v = draw(rng, dist);
  for (auto& y : out.labels) y = static_cast<std::uint32_t>(rng.below(classes));
  return out;
}

Dataset randomize_inputs(const Dataset& base, std::uint64_t seed, PatternDistribution dist) {
  Rng rng(seed);
  Dataset out{DenseMatrix(base.inputs.rows(), base.inputs.cols()), base.labels};
  for (auto& v : out.inputs.entries()) v = draw(rng, dist);
  return out;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4))
    throw Error(ErrorKind::format, "truncated IDX header in " + path.string());
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

std::string hex32(std::uint32_t v) {
  std::ostringstream s;
  s << "0x" << std::hex;
  s.width(8);
  s.fill('0');
  s << v;
  return s.str();
}

}  // namespace

IdxArray read_idx(const std::filesystem::path& path, std::uint32_t expected_magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  IdxArray arr;
  arr.magic = read_be32(in, path);
  if (arr.magic != expected_magic)
    throw Error(ErrorKind::format, "bad IDX magic " + hex32(arr.magic) + " in " + path.string() +
                                       " (expected " + hex32(expected_magic) + ")");
  // low byte of the magic is the number of dimensions; third byte 0x08 = unsigned byte
  const std::size_t ndims = arr.magic & 0xffU;
  std::size_t total = 1;
  for (std::size_t i = 0; i < ndims; ++i) {
    arr.dims.push_back(read_be32(in, path));
    total *= arr.dims.back();
  }
  arr.payload.resize(total);
  if (!in.read(reinterpret_cast<char*>(arr.payload.data()), static_cast<std::streamsize>(total)))
    throw Error(ErrorKind::format, "truncated IDX payload in " + path.string());
  return arr;
}

Dataset load_mnist_subset(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path, std::size_t n, bool normalize,
                          std::uint64_t seed) {
  const IdxArray images = read_idx(images_path, kIdxImageMagic);
  const IdxArray labels = read_idx(labels_path, kIdxLabelMagic);
  const std::size_t count = images.dims[0];
  if (labels.dims[0] != count) {
    std::ostringstream msg;
    msg << "image file has " << count << " items but label file has " << labels.dims[0];
    throw Error(ErrorKind::consistency, msg.str());
  }
  if (n > count) {
    std::ostringstream msg;
    msg << "requested " << n << " examples, files contain " << count;
    throw Error(ErrorKind::bounds, msg.str());
  }
  const std::size_t pixels = images.dims[1] * images.dims[2];
  Rng rng(seed);
  const auto perm = rng.permutation(count);
  const double scale = normalize ? 1.0 / 255.0 : 1.0;
  Dataset out{DenseMatrix(n, pixels), std::vector<std::uint32_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = perm[i];
    auto row = out.inputs.row(i);
    for (std::size_t k = 0; k < pixels; ++k) row[k] = scale * images.payload[src * pixels + k];
    out.labels[i] = labels.payload[src];
  }
  return out;
}

std::optional<MnistFiles> find_mnist_files(const std::filesystem::path& dir) {
  for (const char* images : {"train-images-idx3-ubyte", "train-images.idx3-ubyte"}) {
    for (const char* labels : {"train-labels-idx1-ubyte", "train-labels.idx1-ubyte"}) {
      const auto ip = dir / images;
      const auto lp = dir / labels;
      if (std::filesystem::exists(ip) && std::filesystem::exists(lp)) return MnistFiles{ip, lp};
    }
  }
  return std::nullopt;
}

std::optional<std::filesystem::path> resolve_data_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return std::filesystem::path(flag_value);
  if (const char* env = std::getenv("HESSLENS_DATA_DIR"); env != nullptr && *env != '\0')
    return std::filesystem::path(env);
  return std::nullopt;
}

Dataset mnist_surrogate(std::size_t n, std::uint64_t seed, std::size_t input_dim,
                        std::size_t classes, double center_scale, double noise_scale) {
  if (n == 0 || input_dim == 0 || classes < 2)
    throw Error(ErrorKind::parameter, "surrogate needs n >= 1, d_in >= 1, C >= 2");
  Rng rng(derive_seed(seed, 0));
  BlobConfig cfg;
  cfg.centers.assign(classes, std::vector<double>(input_dim));
  const double root_dim = std::sqrt(static_cast<double>(input_dim));
  for (auto& c : cfg.centers)
    for (auto& v : c) v = center_scale / root_dim * rng.normal();
  cfg.n_per_class = (n + classes - 1) / classes;
  cfg.std = noise_scale / root_dim;
  cfg.seed = derive_seed(seed, 1);
  Dataset full = gaussian_blobs(cfg);
  if (full.size() == n) return full;
  // rows are already shuffled, so the first n stay close to balanced
  Dataset out{DenseMatrix(n, input_dim),
              std::vector<std::uint32_t>(full.labels.begin(),
                                         full.labels.begin() + static_cast<std::ptrdiff_t>(n))};
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = full.inputs.row(i);
    std::copy(src.begin(), src.end(), out.inputs.row(i).begin());
  }
  return out;
}

}  // namespace hesslens
