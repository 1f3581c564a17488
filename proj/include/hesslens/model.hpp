#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hesslens/linalg.hpp"

namespace hesslens {

enum class LossKind {
  softmax_nll,     // mean of -log p_label
  mse_on_softmax,  // mean of sum_c (p_c - onehot_c)^2
  mse_on_logits,   // mean of sum_c (z_c - onehot_c)^2, no softmax
};

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);

/// Fully-connected ReLU network: layer_sizes = [d_in, h_1, ..., h_L, C].
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  LossKind loss = LossKind::softmax_nll;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  /// Number of affine layers (hidden layers + output layer).
  std::size_t num_layers() const { return layer_sizes.size() - 1; }

  /// Throws parameter error unless there is at least one hidden layer, all
  /// sizes are >= 1 and C >= 2.
  void validate() const;

  bool operator==(const MlpSpec&) const = default;
};

/// `hidden` copies of `width` between d_in and C.
MlpSpec make_mlp(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
                 std::size_t classes, LossKind loss = LossKind::softmax_nll);

/// sum_l (fan_in_l + 1) * fan_out_l. Accepts any list of >= 2 positive sizes.
std::size_t param_count(std::span<const std::size_t> layer_sizes);
std::size_t param_count(const MlpSpec& spec);

/// Offsets of one affine layer inside the flat parameter vector. The weight
/// matrix is fan_out x fan_in row-major, followed by the fan_out biases.
struct LayerBlock {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::vector<LayerBlock> parameter_layout(const MlpSpec& spec);

/// Flat parameter vector theta in the parameter_layout order.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t size, double fill = 0.0) : values_(size, fill) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }

  double norm() const noexcept { return norm2(values_); }

  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<double> values_;
};

struct LayerParams {
  DenseMatrix weights;  // fan_out x fan_in
  std::vector<double> bias;
};

std::vector<LayerParams> unflatten(const MlpSpec& spec, const ParamVector& theta);
ParamVector flatten(const MlpSpec& spec, const std::vector<LayerParams>& layers);

/// n x d_in inputs with integer class labels.
struct Dataset {
  DenseMatrix inputs;
  std::vector<std::uint32_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t input_dim() const noexcept { return inputs.cols(); }

  bool operator==(const Dataset&) const = default;
};

/// Checks n >= 1, inputs/labels agree and labels < C for `spec`.
void check_compatible(const MlpSpec& spec, const Dataset& data);

enum class InitMode { gaussian, sphere };

std::string_view to_string(InitMode mode);
InitMode init_mode_from_string(std::string_view name);

/// gaussian: iid N(0, sigma^2). sphere: the gaussian draw rescaled to norm sigma*sqrt(d).
ParamVector init_params(const MlpSpec& spec, double sigma, InitMode mode, std::uint64_t seed);

struct ForwardResult {
  std::vector<double> probabilities;                 // softmax of logits
  std::vector<double> logits;
  std::vector<std::vector<double>> pre_activations;  // one per hidden layer
  std::vector<std::vector<double>> activations;      // ReLU of pre_activations
};

ForwardResult forward(const MlpSpec& spec, const ParamVector& theta, std::span<const double> x);

/// Mean loss over the dataset.
double loss(const MlpSpec& spec, const ParamVector& theta, const Dataset& data);

struct LossAndGradient {
  double loss = 0.0;
  ParamVector gradient;
};

/// Exact reverse-mode gradient of the mean loss. ReLU'(0) is taken as 0.
ParamVector gradient(const MlpSpec& spec, const ParamVector& theta, const Dataset& data);
LossAndGradient loss_and_gradient(const MlpSpec& spec, const ParamVector& theta,
                                  const Dataset& data);
/// Same, restricted to the listed example rows (mean over those rows).
LossAndGradient loss_and_gradient(const MlpSpec& spec, const ParamVector& theta,
                                  const Dataset& data, std::span<const std::size_t> rows);

/// Exact Hessian-vector product H v of the mean loss, by forward-mode
/// differentiation of the reverse-mode gradient along v.
ParamVector hvp(const MlpSpec& spec, const ParamVector& theta, const Dataset& data,
                const ParamVector& v);

inline constexpr std::size_t kDefaultHessianGuard = 8000;

struct HessianOptions {
  std::size_t max_params = kDefaultHessianGuard;
  unsigned threads = 1;  // 0 = hardware concurrency
};

struct HessianResult {
  DenseMatrix matrix;      // symmetrized
  double asymmetry = 0.0;  // of the assembled columns, before symmetrizing
};

/// Assembles H column by column from hvp(e_i) and symmetrizes it.
HessianResult full_hessian(const MlpSpec& spec, const ParamVector& theta, const Dataset& data,
                           const HessianOptions& options = {});

/// Smallest |pre-activation| over all hidden units and examples.
double min_abs_preactivation(const MlpSpec& spec, const ParamVector& theta, const Dataset& data);

}  // namespace hesslens
