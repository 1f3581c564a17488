#include "hesslens/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "hesslens/error.hpp"
#include "hesslens/random.hpp"

namespace hesslens {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  // splitmix64 finalizer over a mix of both inputs
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(p));
  return p;
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::softmax_nll: return "softmax-nll";
    case LossKind::mse_on_softmax: return "mse-on-softmax";
    case LossKind::mse_on_logits: return "mse-on-logits";
  }
  return "unknown";
}

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "softmax-nll" || name == "nll") return LossKind::softmax_nll;
  if (name == "mse-on-softmax" || name == "mse") return LossKind::mse_on_softmax;
  if (name == "mse-on-logits") return LossKind::mse_on_logits;
  throw Error(ErrorKind::parameter, "unknown loss kind '" + std::string(name) + "'");
}

std::string_view to_string(InitMode mode) {
  return mode == InitMode::gaussian ? "gaussian" : "sphere";
}

InitMode init_mode_from_string(std::string_view name) {
  if (name == "gaussian") return InitMode::gaussian;
  if (name == "sphere") return InitMode::sphere;
  throw Error(ErrorKind::parameter, "unknown init mode '" + std::string(name) + "'");
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 3)
    throw Error(ErrorKind::parameter, "network needs at least one hidden layer");
  for (std::size_t s : layer_sizes)
    if (s == 0) throw Error(ErrorKind::parameter, "layer sizes must be >= 1");
  if (num_classes() < 2) throw Error(ErrorKind::parameter, "need at least 2 output classes");
}

MlpSpec make_mlp(std::size_t input_dim, std::size_t width, std::size_t hidden_layers,
                 std::size_t classes, LossKind loss) {
  MlpSpec spec;
  spec.layer_sizes.push_back(input_dim);
  for (std::size_t i = 0; i < hidden_layers; ++i) spec.layer_sizes.push_back(width);
  spec.layer_sizes.push_back(classes);
  spec.loss = loss;
  return spec;
}

std::size_t param_count(std::span<const std::size_t> layer_sizes) {
  if (layer_sizes.size() < 2) throw Error(ErrorKind::parameter, "need at least two layer sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    total += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  return total;
}

std::size_t param_count(const MlpSpec& spec) { return param_count(spec.layer_sizes); }

std::vector<LayerBlock> parameter_layout(const MlpSpec& spec) {
  std::vector<LayerBlock> blocks;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    LayerBlock b;
    b.fan_in = spec.layer_sizes[l];
    b.fan_out = spec.layer_sizes[l + 1];
    b.weight_offset = offset;
    b.bias_offset = offset + b.fan_in * b.fan_out;
    offset = b.bias_offset + b.fan_out;
    blocks.push_back(b);
  }
  return blocks;
}

namespace {

void check_param_size(const MlpSpec& spec, std::size_t size, const char* what) {
  const std::size_t d = param_count(spec);
  if (size != d) {
    std::ostringstream msg;
    msg << what << " has length " << size << ", network has " << d << " parameters";
    throw Error(ErrorKind::dimension, msg.str());
  }
}

}  // namespace

std::vector<LayerParams> unflatten(const MlpSpec& spec, const ParamVector& theta) {
  check_param_size(spec, theta.size(), "parameter vector");
  std::vector<LayerParams> layers;
  for (const auto& b : parameter_layout(spec)) {
    const auto w = theta.values().subspan(b.weight_offset, b.fan_in * b.fan_out);
    const auto bias = theta.values().subspan(b.bias_offset, b.fan_out);
    layers.push_back({DenseMatrix(b.fan_out, b.fan_in, std::vector<double>(w.begin(), w.end())),
                      std::vector<double>(bias.begin(), bias.end())});
  }
  return layers;
}

ParamVector flatten(const MlpSpec& spec, const std::vector<LayerParams>& layers) {
  const auto layout = parameter_layout(spec);
  if (layers.size() != layout.size()) throw Error(ErrorKind::dimension, "layer count mismatch");
  ParamVector theta(param_count(spec));
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const auto& b = layout[l];
    const auto& lp = layers[l];
    if (lp.weights.rows() != b.fan_out || lp.weights.cols() != b.fan_in ||
        lp.bias.size() != b.fan_out)
      throw Error(ErrorKind::dimension, "layer shape mismatch");
    std::copy(lp.weights.entries().begin(), lp.weights.entries().end(),
              theta.values().begin() + static_cast<std::ptrdiff_t>(b.weight_offset));
    std::copy(lp.bias.begin(), lp.bias.end(),
              theta.values().begin() + static_cast<std::ptrdiff_t>(b.bias_offset));
  }
  return theta;
}

void check_compatible(const MlpSpec& spec, const Dataset& data) {
  spec.validate();
  if (data.size() == 0) throw Error(ErrorKind::parameter, "empty dataset");
  if (data.inputs.rows() != data.labels.size())
    throw Error(ErrorKind::consistency, "dataset inputs and labels disagree in count");
  if (data.input_dim() != spec.input_dim()) {
    std::ostringstream msg;
    msg << "dataset input dimension " << data.input_dim() << " != network input "
        << spec.input_dim();
    throw Error(ErrorKind::dimension, msg.str());
  }
  for (auto y : data.labels)
    if (y >= spec.num_classes())
      throw Error(ErrorKind::bounds, "label " + std::to_string(y) + " out of range");
}

ParamVector init_params(const MlpSpec& spec, double sigma, InitMode mode, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::parameter, "init sigma must be > 0");
  const std::size_t d = param_count(spec);
  Rng rng(seed);
  ParamVector theta(d);
  for (std::size_t i = 0; i < d; ++i) theta[i] = sigma * rng.normal();
  if (mode == InitMode::sphere) {
    const double scale = sigma * std::sqrt(static_cast<double>(d)) / theta.norm();
    for (auto& v : theta.values()) v *= scale;
  }
  return theta;
}

ForwardResult forward(const MlpSpec& spec, const ParamVector& theta, std::span<const double> x) {
  spec.validate();
  check_param_size(spec, theta.size(), "parameter vector");
  if (x.size() != spec.input_dim()) throw Error(ErrorKind::dimension, "input dimension mismatch");
  const auto layout = parameter_layout(spec);
  ForwardResult out;
  std::vector<double> in(x.begin(), x.end());
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const auto& b = layout[l];
    std::vector<double> z(b.fan_out);
    for (std::size_t o = 0; o < b.fan_out; ++o) {
      double s = theta[b.bias_offset + o];
      for (std::size_t k = 0; k < b.fan_in; ++k) s += theta[b.weight_offset + o * b.fan_in + k] * in[k];
      z[o] = s;
    }
    if (l + 1 < layout.size()) {
      std::vector<double> a(z.size());
      for (std::size_t o = 0; o < z.size(); ++o) a[o] = std::max(z[o], 0.0);
      out.pre_activations.push_back(z);
      out.activations.push_back(a);
      in = std::move(a);
    } else {
      out.logits = z;
    }
  }
  const double mx = *std::max_element(out.logits.begin(), out.logits.end());
  out.probabilities.resize(out.logits.size());
  double s = 0.0;
  for (std::size_t c = 0; c < out.logits.size(); ++c) s += out.probabilities[c] = std::exp(out.logits[c] - mx);
  for (auto& p : out.probabilities) p /= s;
  return out;
}

namespace {

// Forward-mode scalar: value plus one tangent component.
struct Dual {
  double v = 0.0;
  double t = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.t + b.t}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.t - b.t}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.t * b.v + a.v * b.t}; }
inline Dual operator*(Dual a, double b) { return {a.v * b, a.t * b}; }
inline Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.t * b.v - a.v * b.t) / (b.v * b.v)}; }
inline Dual operator-(Dual a, double b) { return {a.v - b, a.t}; }
inline Dual operator*(double a, Dual b) { return {a * b.v, a * b.t}; }
inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.t};
}
inline Dual log(Dual a) { return {std::log(a.v), a.t / a.v}; }

inline double value(double x) { return x; }
inline double value(Dual x) { return x.v; }
using std::exp;
using std::log;

// Mean loss and its gradient over a batch of example rows, generic over the
// scalar type. With T = Dual seeded by (theta, v) the gradient's tangent is H v.
template <class T>
class BatchEngine {
 public:
  BatchEngine(const MlpSpec& spec, const Dataset& data)
      : spec_(spec), data_(data), layout_(parameter_layout(spec)) {
    z_.resize(layout_.size());
    a_.resize(layout_.size());
    delta_.resize(layout_.size());
  }

  T run(std::span<const T> params, std::span<const std::size_t> rows, std::span<T> grad) {
    const std::size_t m = rows.empty() ? data_.size() : rows.size();
    const std::size_t d_in = data_.input_dim();
    const double* x = data_.inputs.entries().data();
    if (!rows.empty()) {
      gathered_.resize(m * d_in);
      for (std::size_t i = 0; i < m; ++i) {
        const auto src = data_.inputs.row(rows[i]);
        std::copy(src.begin(), src.end(), gathered_.begin() + static_cast<std::ptrdiff_t>(i * d_in));
      }
      x = gathered_.data();
    }
    auto label_of = [&](std::size_t i) { return rows.empty() ? data_.labels[i] : data_.labels[rows[i]]; };

    const std::size_t num_layers = layout_.size();
    for (std::size_t l = 0; l < num_layers; ++l) {
      const auto& b = layout_[l];
      z_[l].assign(m * b.fan_out, T{});
      if (l == 0) {
        affine_forward(params, b, x, m, z_[0]);
      } else {
        affine_forward(params, b, a_[l - 1].data(), m, z_[l]);
      }
      if (l + 1 < num_layers) {
        a_[l].resize(z_[l].size());
        for (std::size_t i = 0; i < z_[l].size(); ++i) a_[l][i] = value(z_[l][i]) > 0.0 ? z_[l][i] : T{};
      }
    }

    // output layer: loss and dL/dz
    const std::size_t classes = layout_.back().fan_out;
    const double inv_m = 1.0 / static_cast<double>(m);
    auto& out_delta = delta_.back();
    out_delta.assign(m * classes, T{});
    T total{};
    std::vector<T> p(classes), g(classes);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t y = label_of(i);
      const T* z = z_.back().data() + i * classes;
      T* dz = out_delta.data() + i * classes;
      if (spec_.loss == LossKind::mse_on_logits) {
        for (std::size_t c = 0; c < classes; ++c) {
          const T r = z[c] - (c == y ? 1.0 : 0.0);
          total += r * r;
          dz[c] = r * (2.0 * inv_m);
        }
        continue;
      }
      double mx = value(z[0]);
      for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, value(z[c]));
      T s{};
      for (std::size_t c = 0; c < classes; ++c) {
        p[c] = exp(z[c] - mx);
        s += p[c];
      }
      for (std::size_t c = 0; c < classes; ++c) p[c] = p[c] / s;
      if (spec_.loss == LossKind::softmax_nll) {
        total += log(s) - (z[y] - mx);
        for (std::size_t c = 0; c < classes; ++c) dz[c] = (p[c] - (c == y ? 1.0 : 0.0)) * inv_m;
      } else {
        T pg{};
        for (std::size_t c = 0; c < classes; ++c) {
          const T r = p[c] - (c == y ? 1.0 : 0.0);
          total += r * r;
          g[c] = r * 2.0;
          pg += p[c] * g[c];
        }
        for (std::size_t c = 0; c < classes; ++c) dz[c] = p[c] * (g[c] - pg) * inv_m;
      }
    }

    if (!grad.empty()) {
      std::fill(grad.begin(), grad.end(), T{});
      for (std::size_t l = num_layers; l-- > 0;) {
        const auto& b = layout_[l];
        if (l == 0) {
          affine_backward(params, b, x, m, delta_[0], grad, nullptr);
        } else {
          auto& prev = delta_[l - 1];
          prev.assign(m * b.fan_in, T{});
          affine_backward(params, b, a_[l - 1].data(), m, delta_[l], grad, &prev);
          const auto& zp = z_[l - 1];
          for (std::size_t i = 0; i < prev.size(); ++i)
            if (!(value(zp[i]) > 0.0)) prev[i] = T{};
        }
      }
    }
    return total * inv_m;
  }

 private:
  template <class In>
  static void affine_forward(std::span<const T> params, const LayerBlock& b, const In* in,
                             std::size_t m, std::vector<T>& z) {
    const T* w = params.data() + b.weight_offset;
    const T* bias = params.data() + b.bias_offset;
    for (std::size_t i = 0; i < m; ++i) {
      const In* xi = in + i * b.fan_in;
      T* zi = z.data() + i * b.fan_out;
      for (std::size_t o = 0; o < b.fan_out; ++o) {
        const T* wo = w + o * b.fan_in;
        T s = bias[o];
        for (std::size_t k = 0; k < b.fan_in; ++k) s += wo[k] * xi[k];
        zi[o] = s;
      }
    }
  }

  template <class In>
  static void affine_backward(std::span<const T> params, const LayerBlock& b, const In* in,
                              std::size_t m, const std::vector<T>& delta, std::span<T> grad,
                              std::vector<T>* delta_in) {
    const T* w = params.data() + b.weight_offset;
    T* gw = grad.data() + b.weight_offset;
    T* gb = grad.data() + b.bias_offset;
    for (std::size_t i = 0; i < m; ++i) {
      const In* xi = in + i * b.fan_in;
      const T* di = delta.data() + i * b.fan_out;
      for (std::size_t o = 0; o < b.fan_out; ++o) {
        const T dio = di[o];
        gb[o] += dio;
        T* gwo = gw + o * b.fan_in;
        for (std::size_t k = 0; k < b.fan_in; ++k) gwo[k] += dio * xi[k];
      }
      if (delta_in != nullptr) {
        T* dprev = delta_in->data() + i * b.fan_in;
        for (std::size_t o = 0; o < b.fan_out; ++o) {
          const T dio = di[o];
          const T* wo = w + o * b.fan_in;
          for (std::size_t k = 0; k < b.fan_in; ++k) dprev[k] += dio * wo[k];
        }
      }
    }
  }

  const MlpSpec& spec_;
  const Dataset& data_;
  std::vector<LayerBlock> layout_;
  std::vector<std::vector<T>> z_, a_, delta_;
  std::vector<double> gathered_;
};

void check_rows(const Dataset& data, std::span<const std::size_t> rows) {
  for (std::size_t r : rows)
    if (r >= data.size()) throw Error(ErrorKind::bounds, "example row out of range");
}

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw Error(ErrorKind::numeric, std::string(what) + " is not finite");
}

class HvpEvaluator {
 public:
  HvpEvaluator(const MlpSpec& spec, const ParamVector& theta, const Dataset& data)
      : engine_(spec, data), params_(theta.size()), grad_(theta.size()) {
    for (std::size_t i = 0; i < theta.size(); ++i) params_[i] = {theta[i], 0.0};
  }

  void set_direction(std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) params_[i].t = v[i];
  }
  void set_unit_direction(std::size_t j) {
    for (auto& p : params_) p.t = 0.0;
    params_[j].t = 1.0;
  }

  template <class Out>
  void evaluate(Out&& out) {
    engine_.run(params_, {}, grad_);
    for (std::size_t i = 0; i < grad_.size(); ++i) out(i, grad_[i].t);
  }

 private:
  BatchEngine<Dual> engine_;
  std::vector<Dual> params_;
  std::vector<Dual> grad_;
};

}  // namespace

double loss(const MlpSpec& spec, const ParamVector& theta, const Dataset& data) {
  check_compatible(spec, data);
  check_param_size(spec, theta.size(), "parameter vector");
  BatchEngine<double> engine(spec, data);
  return engine.run(theta.values(), {}, {});
}

LossAndGradient loss_and_gradient(const MlpSpec& spec, const ParamVector& theta,
                                  const Dataset& data, std::span<const std::size_t> rows) {
  check_compatible(spec, data);
  check_param_size(spec, theta.size(), "parameter vector");
  check_rows(data, rows);
  BatchEngine<double> engine(spec, data);
  LossAndGradient out{0.0, ParamVector(theta.size())};
  out.loss = engine.run(theta.values(), rows, out.gradient.values());
  return out;
}

LossAndGradient loss_and_gradient(const MlpSpec& spec, const ParamVector& theta,
                                  const Dataset& data) {
  return loss_and_gradient(spec, theta, data, {});
}

ParamVector gradient(const MlpSpec& spec, const ParamVector& theta, const Dataset& data) {
  return loss_and_gradient(spec, theta, data).gradient;
}

ParamVector hvp(const MlpSpec& spec, const ParamVector& theta, const Dataset& data,
                const ParamVector& v) {
  check_compatible(spec, data);
  check_param_size(spec, theta.size(), "parameter vector");
  check_param_size(spec, v.size(), "direction vector");
  HvpEvaluator eval(spec, theta, data);
  eval.set_direction(v.values());
  ParamVector out(theta.size());
  eval.evaluate([&](std::size_t i, double hv) { out[i] = hv; });
  return out;
}

HessianResult full_hessian(const MlpSpec& spec, const ParamVector& theta, const Dataset& data,
                           const HessianOptions& options) {
  check_compatible(spec, data);
  check_param_size(spec, theta.size(), "parameter vector");
  const std::size_t d = theta.size();
  if (d > options.max_params) {
    std::ostringstream msg;
    msg << "network has " << d << " parameters, above the Hessian guard of " << options.max_params
        << "; raise the guard (--hessian-guard) to materialize it";
    throw Error(ErrorKind::size, msg.str());
  }

  // column j of H lands in row j of `columns`; H = columns^T
  DenseMatrix columns(d, d);
  auto work = [&](std::size_t begin, std::size_t stride) {
    HvpEvaluator eval(spec, theta, data);
    for (std::size_t j = begin; j < d; j += stride) {
      eval.set_unit_direction(j);
      auto row = columns.row(j);
      eval.evaluate([&](std::size_t i, double hv) { row[i] = hv; });
    }
  };

  unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                          : options.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(d, 1)));
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }

  for (double v : columns.entries()) check_finite(v, "Hessian entry");
  auto sym = symmetrize(columns);
  return {std::move(sym.matrix), sym.asymmetry};
}

double min_abs_preactivation(const MlpSpec& spec, const ParamVector& theta, const Dataset& data) {
  check_compatible(spec, data);
  const auto layout = parameter_layout(spec);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto fr = forward(spec, theta, data.inputs.row(i));
    for (const auto& z : fr.pre_activations)
      for (double v : z) best = std::min(best, std::abs(v));
  }
  return best;
}

}  // namespace hesslens
