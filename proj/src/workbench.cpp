#include "hesslens/workbench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "hesslens/error.hpp"
#include "hesslens/io.hpp"
#include "hesslens/random.hpp"

namespace nlohmann {

template <class T>
struct adl_serializer<std::optional<T>> {
  static void to_json(json& j, const std::optional<T>& v) {
    if (v) {
      j = *v;
    } else {
      j = nullptr;
    }
  }
  static void from_json(const json& j, std::optional<T>& v) {
    if (j.is_null()) {
      v.reset();
    } else {
      v = j.get<T>();
    }
  }
};

}  // namespace nlohmann

namespace hesslens {

using nlohmann::json;

NLOHMANN_JSON_SERIALIZE_ENUM(LossKind, {{LossKind::softmax_nll, "softmax-nll"},
                                        {LossKind::mse_on_softmax, "mse-on-softmax"},
                                        {LossKind::mse_on_logits, "mse-on-logits"}})
NLOHMANN_JSON_SERIALIZE_ENUM(InitMode, {{InitMode::gaussian, "gaussian"}, {InitMode::sphere, "sphere"}})
NLOHMANN_JSON_SERIALIZE_ENUM(BatchMode, {{BatchMode::full, "full"}, {BatchMode::minibatch, "minibatch"}})
NLOHMANN_JSON_SERIALIZE_ENUM(StopReason, {{StopReason::tolerance, "tolerance"},
                                          {StopReason::max_steps, "max_steps"}})
NLOHMANN_JSON_SERIALIZE_ENUM(PatternDistribution, {{PatternDistribution::gaussian, "gaussian"},
                                                   {PatternDistribution::uniform, "uniform"}})
NLOHMANN_JSON_SERIALIZE_ENUM(DataKind, {{DataKind::blobs, "blobs"},
                                        {DataKind::random_patterns, "random"},
                                        {DataKind::mnist, "mnist"},
                                        {DataKind::mnist_surrogate, "surrogate"},
                                        {DataKind::mnist_or_surrogate, "auto"}})
NLOHMANN_JSON_SERIALIZE_ENUM(InterpolationMode,
                             {{InterpolationMode::shared_init_gd_vs_sgd, "shared-init-gd-vs-sgd"},
                              {InterpolationMode::orthogonal_inits_sgd_vs_sgd,
                               "orthogonal-inits-sgd-vs-sgd"}})

void to_json(json& j, const ZeroThreshold& z) {
  j = {{"mode", z.mode == ZeroThreshold::Mode::relative ? "relative" : "absolute"},
       {"value", z.value}};
}
void from_json(const json& j, ZeroThreshold& z) {
  z.mode = j.at("mode").get<std::string>() == "absolute" ? ZeroThreshold::Mode::absolute
                                                         : ZeroThreshold::Mode::relative;
  z.value = j.at("value").get<double>();
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BlobConfig, n_per_class, centers, std)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(InitConfig, sigma, mode, require_live, max_redraws)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DataConfig, kind, blobs, n, input_dim, classes,
                                                distribution, normalize, data_dir)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, step_size, max_steps, grad_norm_tol,
                                                batch, batch_size, snapshot_every, log_every)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(NetworkConfig, width, hidden_layers, loss)

// out_dir and jobs do not influence any output and stay out of the manifest.
void to_json(json& j, const ExperimentCommon& c) {
  j = {{"seed", c.seed},
       {"svg", c.svg},
       {"zero_threshold", c.zero},
       {"edge_window", c.edge_window},
       {"histogram_bins", c.histogram_bins},
       {"hessian_guard", c.hessian_guard}};
}
void from_json(const json& j, ExperimentCommon& c) {
  c.seed = j.value("seed", c.seed);
  c.svg = j.value("svg", c.svg);
  if (j.contains("zero_threshold")) c.zero = j.at("zero_threshold").get<ZeroThreshold>();
  if (j.contains("edge_window")) c.edge_window = j.at("edge_window").get<std::optional<std::size_t>>();
  c.histogram_bins = j.value("histogram_bins", c.histogram_bins);
  c.hessian_guard = j.value("hessian_guard", c.hessian_guard);
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SizeSweepConfig, common, widths, network, data, train,
                                                init, seeds, pre_training)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DataSwapConfig, common, network, data,
                                                randomize_labels, train, init)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LossSwapConfig, common, network, data, train, init)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DynamicsConfig, common, network, data, train, init,
                                                seeds)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FluctuationConfig, common, network, data, train, init,
                                                runs, shared_seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SeparabilityConfig, common, network, data, stds, train,
                                                init, seeds)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(InterpolationConfig, common, mode, network, data,
                                                first, second, init, alphas)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(HeatmapConfig, common, network, data, train, init,
                                                train_first, params_path)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainRunConfig, common, network, data, train, init)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SpectrumRunConfig, common, network, data, train, init,
                                                train_first, params_path, write_hessian,
                                                write_spectrum)

void to_json(json& j, const SpectrumStats& s) {
  j = {{"near_zero_fraction", s.near_zero_fraction},
       {"top", s.top},
       {"bottom", s.bottom},
       {"edge_available", s.edges.available},
       {"edge_count", s.edges.edges.size()},
       {"gap_ratio", s.edges.gap_ratio},
       {"low_confidence", s.edges.low_confidence},
       {"asymmetry", s.asymmetry}};
}

void to_json(json& j, const TrainSummary& t) {
  j = {{"loss", t.loss},
       {"grad_norm", t.grad_norm},
       {"weight_norm", t.weight_norm},
       {"stop_reason", t.stop_reason},
       {"steps", t.steps}};
}

std::string_view to_string(DataKind kind) {
  switch (kind) {
    case DataKind::blobs: return "blobs";
    case DataKind::random_patterns: return "random";
    case DataKind::mnist: return "mnist";
    case DataKind::mnist_surrogate: return "surrogate";
    case DataKind::mnist_or_surrogate: return "auto";
  }
  return "unknown";
}

DataKind data_kind_from_string(std::string_view name) {
  for (DataKind k : {DataKind::blobs, DataKind::random_patterns, DataKind::mnist,
                     DataKind::mnist_surrogate, DataKind::mnist_or_surrogate})
    if (name == to_string(k)) return k;
  throw Error(ErrorKind::parameter, "unknown data kind '" + std::string(name) + "'");
}

std::string_view to_string(InterpolationMode mode) {
  return mode == InterpolationMode::shared_init_gd_vs_sgd ? "shared-init-gd-vs-sgd"
                                                          : "orthogonal-inits-sgd-vs-sgd";
}

InterpolationMode interpolation_mode_from_string(std::string_view name) {
  if (name == "shared-init-gd-vs-sgd" || name == "shared") return InterpolationMode::shared_init_gd_vs_sgd;
  if (name == "orthogonal-inits-sgd-vs-sgd" || name == "orthogonal")
    return InterpolationMode::orthogonal_inits_sgd_vs_sgd;
  throw Error(ErrorKind::parameter, "unknown interpolation mode '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kDataStream = 0xda7a5eedULL;

const char* kMissingDataDir =
    "MNIST data directory not set: pass --data-dir or set HESSLENS_DATA_DIR";

}  // namespace

RunSeeds run_seeds(std::uint64_t master, std::uint64_t index) {
  const std::uint64_t run = derive_seed(master, index);
  return {run, derive_seed(run, 1), derive_seed(run, 2)};
}

std::uint64_t data_seed(std::uint64_t master) { return derive_seed(master ^ kDataStream, 0); }

LoadedData load_data(const DataConfig& cfg, std::uint64_t seed) {
  switch (cfg.kind) {
    case DataKind::blobs: {
      BlobConfig b = cfg.blobs;
      b.seed = seed;
      return {gaussian_blobs(b), "blobs", b.centers.size()};
    }
    case DataKind::random_patterns:
      return {random_patterns(cfg.n, cfg.input_dim, cfg.classes, seed, cfg.distribution),
              "random-patterns", cfg.classes};
    case DataKind::mnist:
    case DataKind::mnist_or_surrogate: {
      const auto dir = resolve_data_dir(cfg.data_dir);
      std::optional<MnistFiles> files;
      if (dir) files = find_mnist_files(*dir);
      if (files) {
        LoadedData out{load_mnist_subset(files->images, files->labels, cfg.n, cfg.normalize, seed),
                       "mnist", 10};
        return out;
      }
      if (cfg.kind == DataKind::mnist) {
        if (!dir) throw Error(ErrorKind::config, kMissingDataDir);
        throw Error(ErrorKind::config, "no MNIST IDX training files under " + dir->string() +
                                           " (set --data-dir or HESSLENS_DATA_DIR)");
      }
      [[fallthrough]];
    }
    case DataKind::mnist_surrogate:
      return {mnist_surrogate(cfg.n, seed, cfg.input_dim, cfg.classes), "mnist-surrogate",
              cfg.classes};
  }
  throw Error(ErrorKind::config, "unhandled data kind");
}

bool has_live_hidden_layers(const MlpSpec& spec, const ParamVector& theta, const Dataset& data) {
  std::vector<std::vector<bool>> alive;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto fr = forward(spec, theta, data.inputs.row(i));
    if (alive.empty())
      for (const auto& z : fr.pre_activations) alive.emplace_back(z.size(), false);
    for (std::size_t l = 0; l < fr.pre_activations.size(); ++l)
      for (std::size_t u = 0; u < fr.pre_activations[l].size(); ++u)
        if (fr.pre_activations[l][u] > 0.0) alive[l][u] = true;
  }
  return std::all_of(alive.begin(), alive.end(), [](const std::vector<bool>& layer) {
    return std::any_of(layer.begin(), layer.end(), [](bool b) { return b; });
  });
}

ParamVector draw_initialization(const MlpSpec& spec, const InitConfig& init, const Dataset& data,
                                std::uint64_t seed) {
  ParamVector theta = init_params(spec, init.sigma, init.mode, seed);
  if (!init.require_live) return theta;
  for (std::size_t attempt = 1; !has_live_hidden_layers(spec, theta, data); ++attempt) {
    if (attempt > init.max_redraws)
      throw Error(ErrorKind::config, "no initialization with live hidden layers after " +
                                         std::to_string(init.max_redraws) + " redraws");
    theta = init_params(spec, init.sigma, init.mode, derive_seed(seed, attempt));
  }
  return theta;
}

SpectrumStats summarize(const Spectrum& s, const ExperimentCommon& common) {
  SpectrumStats st;
  st.near_zero_fraction = near_zero_fraction(s, common.zero);
  const std::size_t k = std::min<std::size_t>(5, s.size());
  st.top = top_k(s, k);
  st.bottom = bottom_k(s, k);
  st.edges = bulk_edge_split(s, common.edge_window);
  st.asymmetry = s.asymmetry;
  return st;
}

TrainSummary summarize(const TrainTrace& trace) {
  const auto& r = trace.final_row();
  return {r.loss, r.grad_norm, r.weight_norm, trace.stop_reason, trace.total_steps};
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(jobs, count); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Manifests

void write_manifest(const std::filesystem::path& dir, RunManifest& manifest) {
  std::sort(manifest.artifacts.begin(), manifest.artifacts.end());
  for (const auto& a : manifest.artifacts)
    if (!std::filesystem::exists(dir / a))
      throw Error(ErrorKind::io, "artifact listed in manifest is missing: " + a);
  json j = {{"experiment", manifest.experiment},
            {"config", manifest.config},
            {"master_seed", manifest.master_seed},
            {"summary", manifest.summary},
            {"artifacts", manifest.artifacts},
            {"failures", manifest.failures}};
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / kManifestFile, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, "manifest " + path.string() + ": " + e.what());
  }
  RunManifest m;
  m.experiment = j.at("experiment").get<std::string>();
  m.config = j.at("config");
  m.master_seed = j.value("master_seed", std::uint64_t{0});
  m.summary = j.value("summary", json::object());
  m.artifacts = j.value("artifacts", std::vector<std::string>{});
  m.failures = j.value("failures", std::vector<std::string>{});
  return m;
}

// ---------------------------------------------------------------------------

namespace {

// Per-experiment output helper; artifacts are collected per run and merged in index order.
class Outputs {
 public:
  Outputs(const ExperimentCommon& common) : common_(common) {
    std::filesystem::create_directories(common.out_dir);
  }

  std::filesystem::path path(const std::string& name) const { return common_.out_dir / name; }

  void spectrum(std::vector<std::string>& artifacts, const std::string& stem, const Spectrum& s) const {
    write_spectrum_csv(path(stem + ".csv"), s);
    artifacts.push_back(stem + ".csv");
    if (common_.svg) {
      write_histogram_svg(path(stem + ".svg"), histogram(s, common_.histogram_bins), stem);
      artifacts.push_back(stem + ".svg");
    }
  }

 private:
  const ExperimentCommon& common_;
};

HessianOptions hessian_options(const ExperimentCommon& common) {
  return {common.hessian_guard, common.jobs > 1 ? 1u : 0u};
}

Spectrum spectrum_at(const MlpSpec& spec, const ParamVector& theta, const LoadedData& data,
                     const ExperimentCommon& common, std::optional<std::size_t> step,
                     std::uint64_t seed) {
  SpectrumOptions opts;
  opts.hessian = hessian_options(common);
  return compute_spectrum(spec, theta, data.data, opts, {spec, data.source, step, seed});
}

MlpSpec network_spec(const NetworkConfig& net, std::size_t width, const LoadedData& data) {
  MlpSpec spec = make_mlp(data.data.input_dim(), width, net.hidden_layers, data.classes, net.loss);
  spec.validate();
  return spec;
}

json base_summary(const LoadedData& data, const ExperimentCommon& common) {
  return {{"data_source", data.source},
          {"examples", data.data.size()},
          {"zero_threshold", common.zero}};
}

std::string run_label(std::size_t index) { return "s" + std::to_string(index); }

void merge(std::vector<std::string>& into, std::vector<std::vector<std::string>>& parts) {
  for (auto& p : parts) into.insert(into.end(), p.begin(), p.end());
}

}  // namespace

// ---------------------------------------------------------------------------

SizeSweepResult exp_size_sweep(const SizeSweepConfig& cfg) {
  if (cfg.widths.empty()) throw Error(ErrorKind::config, "size sweep needs at least one width");
  if (cfg.seeds < 1) throw Error(ErrorKind::config, "size sweep needs at least one seed");
  const auto& common = cfg.common;
  const LoadedData data = load_data(cfg.data, data_seed(common.seed));
  Outputs out(common);

  const std::size_t runs = cfg.widths.size() * cfg.seeds;
  std::vector<std::optional<SweepRun>> results(runs);
  std::vector<std::vector<std::string>> artifacts(runs);
  std::vector<std::string> errors(runs);

  parallel_for(runs, common.jobs, [&](std::size_t r) {
    const std::size_t width = cfg.widths[r / cfg.seeds];
    const std::size_t s = r % cfg.seeds;
    const std::string stem = "w" + std::to_string(width) + "_" + run_label(s);
    try {
      const MlpSpec spec = network_spec(cfg.network, width, data);
      const RunSeeds seeds = run_seeds(common.seed, s);
      const ParamVector theta0 = draw_initialization(spec, cfg.init, data.data, seeds.init);
      SweepRun run;
      run.width = width;
      run.seed_index = s;
      run.param_count = param_count(spec);
      if (cfg.pre_training) {
        const Spectrum pre = spectrum_at(spec, theta0, data, common, 0, seeds.run);
        out.spectrum(artifacts[r], "pre_spectrum_" + stem, pre);
        run.initial_stats = summarize(pre, common);
      }
      TrainConfig tc = cfg.train;
      tc.seed = seeds.shuffle;
      const TrainTrace trace = train(spec, theta0, data.data, tc);
      const Spectrum fin = spectrum_at(spec, trace.final_params, data, common, trace.total_steps, seeds.run);
      out.spectrum(artifacts[r], "spectrum_" + stem, fin);
      run.final_stats = summarize(fin, common);
      run.train = summarize(trace);
      run.eigenvalues = fin.eigenvalues;
      results[r] = std::move(run);
    } catch (const Error& e) {
      errors[r] = stem + ": " + e.what();
    }
  });

  SizeSweepResult result;
  auto& m = result.manifest;
  m.experiment = "size-sweep";
  m.config = cfg;
  m.master_seed = common.seed;
  merge(m.artifacts, artifacts);
  for (auto& e : errors)
    if (!e.empty()) m.failures.push_back(e);

  {
    CsvWriter csv(out.path("summary.csv"),
                  {"width", "seed", "param_count", "near_zero_fraction", "top1", "edge_count",
                   "weight_norm", "loss", "grad_norm", "stop_reason", "steps"});
    for (auto& r : results) {
      if (!r) continue;
      csv.row(r->width, r->seed_index, r->param_count, r->final_stats.near_zero_fraction,
              r->final_stats.top.front(), r->final_stats.edges.edges.size(), r->train.weight_norm,
              r->train.loss, r->train.grad_norm, std::string(to_string(r->train.stop_reason)),
              r->train.steps);
      result.runs.push_back(std::move(*r));
    }
  }
  m.artifacts.push_back("summary.csv");

  json summary = base_summary(data, common);
  json per_width = json::array();
  for (std::size_t w : cfg.widths) {
    double sum = 0.0;
    std::size_t count = 0, params = 0;
    for (const auto& r : result.runs)
      if (r.width == w) {
        sum += r.final_stats.near_zero_fraction;
        params = r.param_count;
        ++count;
      }
    per_width.push_back({{"width", w},
                         {"param_count", params},
                         {"runs", count},
                         {"mean_near_zero_fraction", count ? sum / static_cast<double>(count) : 0.0}});
  }
  summary["widths"] = per_width;
  json runs_json = json::array();
  for (const auto& r : result.runs) {
    json rj = {{"width", r.width}, {"seed", r.seed_index}, {"param_count", r.param_count},
               {"final", r.final_stats}, {"train", r.train}};
    if (r.initial_stats) rj["initial"] = *r.initial_stats;
    runs_json.push_back(rj);
  }
  summary["runs"] = runs_json;
  m.summary = summary;
  write_manifest(common.out_dir, m);
  return result;
}

// ---------------------------------------------------------------------------

DataSwapResult exp_data_swap(const DataSwapConfig& cfg) {
  const auto& common = cfg.common;
  Outputs out(common);
  const LoadedData structured = load_data(cfg.data, data_seed(common.seed));
  const std::uint64_t random_seed = derive_seed(data_seed(common.seed), 1);
  LoadedData random{cfg.randomize_labels
                        ? random_patterns(structured.data.size(), structured.data.input_dim(),
                                          structured.classes, random_seed, cfg.data.distribution)
                        : randomize_inputs(structured.data, random_seed, cfg.data.distribution),
                    "random-patterns", structured.classes};

  const MlpSpec spec = network_spec(cfg.network, cfg.network.width, structured);
  const RunSeeds seeds = run_seeds(common.seed, 0);
  // one initial point, valid for both datasets
  ParamVector theta0 = draw_initialization(spec, cfg.init, structured.data, seeds.init);

  DataSwapResult result;
  result.data_source = structured.source;
  auto& m = result.manifest;
  m.experiment = "data-swap";
  m.config = cfg;
  m.master_seed = common.seed;

  const Spectrum s_init = spectrum_at(spec, theta0, structured, common, 0, seeds.run);
  const Spectrum r_init = spectrum_at(spec, theta0, random, common, 0, seeds.run);
  TrainConfig tc = cfg.train;
  tc.seed = seeds.shuffle;
  const TrainTrace r_trace = train(spec, theta0, random.data, tc);
  const Spectrum r_fin = spectrum_at(spec, r_trace.final_params, random, common, r_trace.total_steps, seeds.run);
  const TrainTrace s_trace = train(spec, theta0, structured.data, tc);
  const Spectrum s_fin = spectrum_at(spec, s_trace.final_params, structured, common, s_trace.total_steps, seeds.run);

  out.spectrum(m.artifacts, "spectrum_structured_init", s_init);
  out.spectrum(m.artifacts, "spectrum_random_init", r_init);
  out.spectrum(m.artifacts, "spectrum_random_trained", r_fin);
  out.spectrum(m.artifacts, "spectrum_structured_trained", s_fin);
  write_trace_csv(out.path("trace_random.csv"), r_trace);
  write_trace_csv(out.path("trace_structured.csv"), s_trace);
  m.artifacts.push_back("trace_random.csv");
  m.artifacts.push_back("trace_structured.csv");

  result.structured_initial = s_init.eigenvalues;
  result.random_initial = r_init.eigenvalues;
  result.random_trained = r_fin.eigenvalues;
  result.structured_trained = s_fin.eigenvalues;
  result.initial_ks_distance = ks_distance(s_init.eigenvalues, r_init.eigenvalues);
  result.random_train = summarize(r_trace);
  result.structured_train = summarize(s_trace);

  json summary = base_summary(structured, common);
  summary["param_count"] = param_count(spec);
  summary["initial_ks_distance"] = result.initial_ks_distance;
  summary["structured_initial"] = summarize(s_init, common);
  summary["random_initial"] = summarize(r_init, common);
  summary["random_trained"] = summarize(r_fin, common);
  summary["structured_trained"] = summarize(s_fin, common);
  summary["random_train"] = result.random_train;
  summary["structured_train"] = result.structured_train;
  m.summary = summary;
  write_manifest(common.out_dir, m);
  return result;
}

// ---------------------------------------------------------------------------

LossSwapResult exp_loss_swap(const LossSwapConfig& cfg) {
  const auto& common = cfg.common;
  Outputs out(common);
  const LoadedData data = load_data(cfg.data, data_seed(common.seed));
  NetworkConfig nll_net = cfg.network, mse_net = cfg.network;
  nll_net.loss = LossKind::softmax_nll;
  mse_net.loss = LossKind::mse_on_softmax;
  const MlpSpec nll_spec = network_spec(nll_net, cfg.network.width, data);
  const MlpSpec mse_spec = network_spec(mse_net, cfg.network.width, data);
  const RunSeeds seeds = run_seeds(common.seed, 0);
  const ParamVector theta0 = draw_initialization(nll_spec, cfg.init, data.data, seeds.init);

  LossSwapResult result;
  auto& m = result.manifest;
  m.experiment = "loss-swap";
  m.config = cfg;
  m.master_seed = common.seed;

  TrainConfig tc = cfg.train;
  tc.seed = seeds.shuffle;
  result.mse_initial_loss = loss(mse_spec, ParamVector(theta0.size()), data.data);
  const TrainTrace nll_trace = train(nll_spec, theta0, data.data, tc);
  const TrainTrace mse_trace = train(mse_spec, theta0, data.data, tc);
  const Spectrum nll = spectrum_at(nll_spec, nll_trace.final_params, data, common, nll_trace.total_steps, seeds.run);
  const Spectrum mse = spectrum_at(mse_spec, mse_trace.final_params, data, common, mse_trace.total_steps, seeds.run);
  out.spectrum(m.artifacts, "spectrum_nll", nll);
  out.spectrum(m.artifacts, "spectrum_mse", mse);
  write_trace_csv(out.path("trace_nll.csv"), nll_trace);
  write_trace_csv(out.path("trace_mse.csv"), mse_trace);
  m.artifacts.push_back("trace_nll.csv");
  m.artifacts.push_back("trace_mse.csv");

  result.nll_stats = summarize(nll, common);
  result.mse_stats = summarize(mse, common);
  result.nll_eigenvalues = nll.eigenvalues;
  result.mse_eigenvalues = mse.eigenvalues;
  result.nll_params = nll_trace.final_params;
  result.mse_params = mse_trace.final_params;
  result.nll_train = summarize(nll_trace);
  result.mse_train = summarize(mse_trace);

  json summary = base_summary(data, common);
  summary["param_count"] = param_count(nll_spec);
  summary["mse_loss_at_zero_params"] = result.mse_initial_loss;
  summary["nll"] = result.nll_stats;
  summary["mse"] = result.mse_stats;
  summary["nll_train"] = result.nll_train;
  summary["mse_train"] = result.mse_train;
  m.summary = summary;
  write_manifest(common.out_dir, m);
  return result;
}

// ---------------------------------------------------------------------------

DynamicsResult exp_training_dynamics(const DynamicsConfig& cfg) {
  if (!cfg.train.snapshot_every)
    throw Error(ErrorKind::config, "training dynamics needs snapshot_every");
  const auto& common = cfg.common;
  Outputs out(common);
  const LoadedData data = load_data(cfg.data, data_seed(common.seed));
  const MlpSpec spec = network_spec(cfg.network, cfg.network.width, data);

  DynamicsResult result;
  result.runs.resize(cfg.seeds);
  result.train.resize(cfg.seeds);
  std::vector<std::vector<std::string>> artifacts(cfg.seeds);

  parallel_for(cfg.seeds, common.jobs, [&](std::size_t s) {
    const RunSeeds seeds = run_seeds(common.seed, s);
    const ParamVector theta0 = draw_initialization(spec, cfg.init, data.data, seeds.init);
    TrainConfig tc = cfg.train;
    tc.seed = seeds.shuffle;
    const TrainTrace trace = train(spec, theta0, data.data, tc);
    result.train[s] = summarize(trace);
    for (const auto& snap : trace.snapshots) {
      const Spectrum sp = spectrum_at(spec, snap.params, data, common, snap.step, seeds.run);
      out.spectrum(artifacts[s], "spectrum_" + run_label(s) + "_step" + std::to_string(snap.step), sp);
      result.runs[s].push_back({s, snap.step, summarize(sp, common), loss(spec, snap.params, data.data)});
    }
    const std::string trace_name = "trace_" + run_label(s) + ".csv";
    write_trace_csv(out.path(trace_name), trace);
    artifacts[s].push_back(trace_name);
  });

  auto& m = result.manifest;
  m.experiment = "dynamics";
  m.config = cfg;
  m.master_seed = common.seed;
  merge(m.artifacts, artifacts);
  {
    CsvWriter csv(out.path("dynamics.csv"),
                  {"seed", "step", "near_zero_fraction", "top1", "edge_count", "loss"});
    for (const auto& run : result.runs)
      for (const auto& p : run)
        csv.row(p.seed_index, p.step, p.stats.near_zero_fraction, p.stats.top.front(),
                p.stats.edges.edges.size(), p.loss);
  }
  m.artifacts.push_back("dynamics.csv");

  json summary = base_summary(data, common);
  summary["param_count"] = param_count(spec);
  json runs = json::array();
  for (std::size_t s = 0; s < cfg.seeds; ++s) {
    const auto& run = result.runs[s];
    runs.push_back({{"seed", s},
                    {"snapshots", run.size()},
                    {"initial_near_zero_fraction", run.front().stats.near_zero_fraction},
                    {"final_near_zero_fraction", run.back().stats.near_zero_fraction},
                    {"train", result.train[s]}});
  }
  summary["runs"] = runs;
  m.summary = summary;
  write_manifest(common.out_dir, m);
  return result;
}

// ---------------------------------------------------------------------------

FluctuationResult exp_init_fluctuation(const FluctuationConfig& cfg) {
  if (cfg.runs < 2) throw Error(ErrorKind::config, "fluctuation needs at least 2 runs");
  const auto& common = cfg.common;
  Outputs out(common);
  const LoadedData data = load_data(cfg.data, data_seed(common.seed));
  const MlpSpec spec = network_spec(cfg.network, cfg.network.width, data);

  std::vector<std::optional<double>> tops(cfg.runs);
  std::vector<std::string> errors(cfg.runs);
  parallel_for(cfg.runs, common.jobs, [&](std::size_t r) {
    try {
      const RunSeeds seeds = run_seeds(common.seed, cfg.shared_seed ? 0 : r);
      const ParamVector theta0 = draw_initialization(spec, cfg.init, data.data, seeds.init);
      TrainConfig tc = cfg.train;
      tc.seed = seeds.shuffle;
      const TrainTrace trace = train(spec, theta0, data.data, tc);
      const Spectrum sp = spectrum_at(spec, trace.final_params, data, common, trace.total_steps, seeds.run);
      tops[r] = sp.eigenvalues.back();
    } catch (const Error& e) {
      errors[r] = run_label(r) + ": " + e.what();
    }
  });

  FluctuationResult result;
  auto& m = result.manifest;
  m.experiment = "fluctuation";
  m.config = cfg;
  m.master_seed = common.seed;
  {
    CsvWriter csv(out.path("fluctuation.csv"), {"run", "top_eigenvalue"});
    for (std::size_t r = 0; r < cfg.runs; ++r) {
      if (tops[r]) {
        csv.row(r, *tops[r]);
        result.top_eigenvalues.emplace_back(r, *tops[r]);
      } else {
        m.failures.push_back(errors[r]);
      }
    }
  }
  m.artifacts.push_back("fluctuation.csv");
  result.failed = cfg.runs - result.top_eigenvalues.size();

  const std::size_t n = result.top_eigenvalues.size();
  if (n > 0) {
    double sum = 0.0;
    result.min = result.max = result.top_eigenvalues.front().second;
    for (const auto& [r, v] : result.top_eigenvalues) {
      sum += v;
      result.min = std::min(result.min, v);
      result.max = std::max(result.max, v);
    }
    result.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& [r, v] : result.top_eigenvalues) ss += (v - result.mean) * (v - result.mean);
    result.stddev = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  }
  json summary = base_summary(data, common);
  summary["param_count"] = param_count(spec);
  summary["successful_runs"] = n;
  summary["failed_runs"] = result.failed;
  summary["top_eigenvalue"] = {{"mean", result.mean},
                               {"std", result.stddev},
                               {"min", result.min},
                               {"max", result.max}};
  m.summary = summary;
  write_manifest(common.out_dir, m);
  return result;
}

// ---------------------------------------------------------------------------

SeparabilityResult exp_separability_sweep(const SeparabilityConfig& cfg) {
  if (cfg.stds.empty()) throw Error(ErrorKind::config, "separability sweep needs stds");
  for (std::size_t i = 0; i < cfg.stds.size(); ++i) {
    if (!(cfg.stds[i] > 0.0)) throw Error(ErrorKind::config, "stds must be positive");
    if (i > 0 && !(cfg.stds[i] > cfg.stds[i - 1]))
      throw Error(ErrorKind::config, "stds must be ascending");
  }
  if (cfg.data.kind != DataKind::blobs)
    throw Error(ErrorKind::config, "separability sweep runs on Gaussian blobs");
  const auto& common = cfg.common;
  Outputs out(common);

  const std::size_t runs = cfg.stds.size() * cfg.seeds;
  std::vector<std::optional<SeparabilityRow>> rows(runs);
  std::vector<std::string> errors(runs);
  parallel_for(runs, common.jobs, [&](std::size_t r) {
    const double sd = cfg.stds[r / cfg.seeds];
    const std::size_t s = r % cfg.seeds;
    try {
      DataConfig dc = cfg.data;
      dc.blobs.std = sd;
      // the same underlying draws for every std: only the spread changes
      const LoadedData data = load_data(dc, data_seed(common.seed));
      const MlpSpec spec = network_spec(cfg.network, cfg.network.width, data);
      const RunSeeds seeds = run_seeds(common.seed, s);
      const ParamVector theta0 = draw_initialization(spec, cfg.init, data.data, seeds.init);
      TrainConfig tc = cfg.train;
      tc.seed = seeds.shuffle;
      const TrainTrace trace = train(spec, theta0, data.data, tc);
      const Spectrum sp = spectrum_at(spec, trace.final_params, data, common, trace.total_steps, seeds.run);
      const auto top = top_k(sp, 2);
      rows[r] = SeparabilityRow{sd, s, top[0], top[1], trace.final_row().weight_norm,
                                trace.final_row().loss};
    } catch (const Error& e) {
      errors[r] = "std=" + format_real(sd) + " " + run_label(s) + ": " + e.what();
    }
  });

  SeparabilityResult result;
  auto& m = result.manifest;
  m.experiment = "separability";
  m.config = cfg;
  m.master_seed = common.seed;
  {
    CsvWriter csv(out.path("separability.csv"),
                  {"std", "seed", "lambda1", "lambda2", "weight_norm", "loss"});
    for (std::size_t r = 0; r < runs; ++r) {
      if (!rows[r]) {
        m.failures.push_back(errors[r]);
        continue;
      }
      const auto& row = *rows[r];
      csv.row(row.std, row.seed_index, row.lambda1, row.lambda2, row.weight_norm, row.loss);
      result.rows.push_back(row);
    }
  }
  m.artifacts.push_back("separability.csv");

  json per_std = json::array();
  for (double sd : cfg.stds) {
    double l1 = 0.0, l2 = 0.0, wn = 0.0;
    std::size_t count = 0;
    for (const auto& row : result.rows)
      if (row.std == sd) {
        l1 += row.lambda1;
        l2 += row.lambda2;
        wn += row.weight_norm;
        ++count;
      }
    const double c = count ? static_cast<double>(count) : 1.0;
    per_std.push_back({{"std", sd},
                       {"runs", count},
                       {"mean_lambda1", l1 / c},
                       {"mean_lambda2", l2 / c},
                       {"mean_weight_norm", wn / c}});
  }
  m.summary = {{"zero_threshold", common.zero}, {"per_std", per_std}};
  write_manifest(common.out_dir, m);
  return result;
}

// ---------------------------------------------------------------------------

namespace {

// Independent draw with its component along `against` removed, rescaled to the
// norm it was drawn with. Redrawn like draw_initialization if that kills a layer.
ParamVector orthogonal_draw(const MlpSpec& spec, const InitConfig& init, const Dataset& data,
                            const ParamVector& against, std::uint64_t seed) {
  const double aa = dot(against.values(), against.values());
  for (std::size_t attempt = 0; attempt <= init.max_redraws; ++attempt) {
    ParamVector b = draw_initialization(spec, init, data, attempt ? derive_seed(seed, attempt) : seed);
    const double norm = b.norm();
    const double c = aa > 0.0 ? dot(against.values(), b.values()) / aa : 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= c * against[i];
    const double now = b.norm();
    if (now > 0.0)
      for (std::size_t i = 0; i < b.size(); ++i) b[i] *= norm / now;
    if (!init.require_live || has_live_hidden_layers(spec, b, data)) return b;
  }
  throw Error(ErrorKind::config, "no live initialization orthogonal to the first run after " +
                                     std::to_string(init.max_redraws) + " redraws");
}

}  // namespace

std::vector<double> default_alphas(std::size_t count) {
  if (count < 2) throw Error(ErrorKind::parameter, "need at least two interpolation points");
  std::vector<double> a(count);
  for (std::size_t i = 0; i < count; ++i)
    a[i] = static_cast<double>(i) / static_cast<double>(count - 1);
  a.back() = 1.0;
  return a;
}

InterpolationResult exp_interpolation(const InterpolationConfig& cfg) {
  const auto& common = cfg.common;
  const bool shared = cfg.mode == InterpolationMode::shared_init_gd_vs_sgd;
  TrainConfig first = shared ? cfg.first : cfg.second;
  TrainConfig second = cfg.second;
  if (!first.snapshot_every || !second.snapshot_every)
    throw Error(ErrorKind::config, "interpolation needs snapshots in both runs");
  if (*first.snapshot_every != *second.snapshot_every)
    throw Error(ErrorKind::config, "interpolation runs use mismatched snapshot schedules (" +
                                       std::to_string(*first.snapshot_every) + " vs " +
                                       std::to_string(*second.snapshot_every) + ")");
  std::vector<double> alphas = cfg.alphas.empty() ? default_alphas() : cfg.alphas;
  std::sort(alphas.begin(), alphas.end());
  if (alphas.front() != 0.0 || alphas.back() != 1.0)
    throw Error(ErrorKind::config, "interpolation alphas must include 0 and 1");
  for (double a : alphas)
    if (a < 0.0 || a > 1.0) throw Error(ErrorKind::config, "interpolation alphas must lie in [0, 1]");

  Outputs out(common);
  const LoadedData data = load_data(cfg.data, data_seed(common.seed));
  const MlpSpec spec = network_spec(cfg.network, cfg.network.width, data);
  const RunSeeds s0 = run_seeds(common.seed, 0);
  const RunSeeds s1 = run_seeds(common.seed, 1);
  const ParamVector theta_a = draw_initialization(spec, cfg.init, data.data, s0.init);
  const ParamVector theta_b = shared ? theta_a : orthogonal_draw(spec, cfg.init, data.data, theta_a, s1.init);
  first.seed = s0.shuffle;
  second.seed = s1.shuffle;
  const TrainTrace run1 = train(spec, theta_a, data.data, first);
  const TrainTrace run2 = train(spec, theta_b, data.data, second);

  InterpolationResult result;
  auto& surf = result.surface;
  surf.cosine_initial = dot(theta_a.values(), theta_b.values()) / (theta_a.norm() * theta_b.norm());
  std::map<std::size_t, const ParamVector*> second_by_step;
  for (const auto& snap : run2.snapshots) second_by_step[snap.step] = &snap.params;
  for (const auto& snap : run1.snapshots) {
    const auto it = second_by_step.find(snap.step);
    if (it == second_by_step.end()) continue;
    const ParamVector& p1 = snap.params;
    const ParamVector& p2 = *it->second;
    ParamVector diff(p1.size());
    for (std::size_t i = 0; i < p1.size(); ++i) diff[i] = p1[i] - p2[i];
    const double distance = diff.norm();
    surf.steps.push_back(snap.step);
    surf.distances.push_back(distance);
    for (double a : alphas) {
      const double l = loss(spec, linear_interpolate(p1, p2, a), data.data);
      surf.points.push_back({snap.step, a, l, distance});
      if (a == 0.0) surf.first_losses.push_back(l);
      if (a == 1.0) surf.second_losses.push_back(l);
    }
  }
  if (surf.steps.empty()) throw Error(ErrorKind::config, "the two runs share no snapshot step");

  auto& m = result.manifest;
  m.experiment = "interpolate";
  m.config = cfg;
  m.master_seed = common.seed;
  {
    CsvWriter csv(out.path("interpolation.csv"), {"snapshot_step", "alpha", "loss", "distance"});
    for (const auto& p : surf.points) csv.row(p.snapshot_step, p.alpha, p.loss, p.distance);
  }
  write_trace_csv(out.path("trace_first.csv"), run1);
  write_trace_csv(out.path("trace_second.csv"), run2);
  m.artifacts = {"interpolation.csv", "trace_first.csv", "trace_second.csv"};

  json per_step = json::array();
  for (std::size_t k = 0; k < surf.steps.size(); ++k) {
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& p : surf.points)
      if (p.snapshot_step == surf.steps[k]) mx = std::max(mx, p.loss);
    per_step.push_back({{"step", surf.steps[k]},
                        {"distance", surf.distances[k]},
                        {"first_loss", surf.first_losses[k]},
                        {"second_loss", surf.second_losses[k]},
                        {"max_interpolated_loss", mx}});
  }
  json summary = base_summary(data, common);
  summary["mode"] = cfg.mode;
  summary["param_count"] = param_count(spec);
  summary["initial_cosine"] = surf.cosine_initial;
  summary["steps"] = per_step;
  summary["first_train"] = summarize(run1);
  summary["second_train"] = summarize(run2);
  m.summary = summary;
  write_manifest(common.out_dir, m);
  return result;
}

// ---------------------------------------------------------------------------

namespace {

struct PreparedParams {
  ParamVector theta;
  std::optional<TrainTrace> trace;
  std::uint64_t seed = 0;
};

PreparedParams prepare_params(const MlpSpec& spec, const LoadedData& data,
                              const ExperimentCommon& common, const InitConfig& init,
                              const TrainConfig& train_cfg, bool train_first,
                              const std::string& params_path) {
  const RunSeeds seeds = run_seeds(common.seed, 0);
  PreparedParams p;
  p.seed = seeds.run;
  if (!params_path.empty()) {
    p.theta = read_vector_csv(params_path);
    if (p.theta.size() != param_count(spec))
      throw Error(ErrorKind::dimension, "parameter file " + params_path + " has " +
                                            std::to_string(p.theta.size()) + " values, network has " +
                                            std::to_string(param_count(spec)));
  } else {
    p.theta = draw_initialization(spec, init, data.data, seeds.init);
  }
  if (train_first) {
    TrainConfig tc = train_cfg;
    tc.seed = seeds.shuffle;
    p.trace = train(spec, p.theta, data.data, tc);
    p.theta = p.trace->final_params;
  }
  return p;
}

}  // namespace

HeatmapResult exp_heatmap_export(const HeatmapConfig& cfg) {
  const auto& common = cfg.common;
  Outputs out(common);
  const LoadedData data = load_data(cfg.data, data_seed(common.seed));
  const MlpSpec spec = network_spec(cfg.network, cfg.network.width, data);
  const auto prepared =
      prepare_params(spec, data, common, cfg.init, cfg.train, cfg.train_first, cfg.params_path);
  const HessianResult h = full_hessian(spec, prepared.theta, data.data, hessian_options(common));

  HeatmapResult result;
  auto& m = result.manifest;
  m.experiment = "heatmap";
  m.config = cfg;
  m.master_seed = common.seed;
  write_matrix_csv(out.path("hessian.csv"), h.matrix);
  write_vector_csv(out.path("params.csv"), prepared.theta);
  m.artifacts = {"hessian.csv", "params.csv"};
  json summary = base_summary(data, common);
  summary["param_count"] = param_count(spec);
  summary["asymmetry"] = h.asymmetry;
  summary["max_abs_entry"] = h.matrix.max_abs();
  if (prepared.trace) summary["train"] = summarize(*prepared.trace);
  m.summary = summary;
  write_manifest(common.out_dir, m);
  result.hessian = h.matrix;
  result.asymmetry = h.asymmetry;
  return result;
}

RunManifest run_train(const TrainRunConfig& cfg) {
  const auto& common = cfg.common;
  Outputs out(common);
  const LoadedData data = load_data(cfg.data, data_seed(common.seed));
  const MlpSpec spec = network_spec(cfg.network, cfg.network.width, data);
  const RunSeeds seeds = run_seeds(common.seed, 0);
  const ParamVector theta0 = draw_initialization(spec, cfg.init, data.data, seeds.init);
  TrainConfig tc = cfg.train;
  tc.seed = seeds.shuffle;

  RunManifest m;
  m.experiment = "train";
  m.config = cfg;
  m.master_seed = common.seed;
  TrainTrace trace;
  try {
    trace = train(spec, theta0, data.data, tc);
  } catch (const TrainingDiverged& e) {
    write_trace_csv(out.path("trace.csv"), e.trace());
    throw;
  }
  write_trace_csv(out.path("trace.csv"), trace);
  write_vector_csv(out.path("initial_params.csv"), theta0);
  write_vector_csv(out.path("final_params.csv"), trace.final_params);
  m.artifacts = {"trace.csv", "initial_params.csv", "final_params.csv"};
  for (const auto& snap : trace.snapshots) {
    const std::string name = "snap_" + std::to_string(snap.step) + ".csv";
    write_vector_csv(out.path(name), snap.params);
    m.artifacts.push_back(name);
  }
  json summary = base_summary(data, common);
  summary["param_count"] = param_count(spec);
  summary["train"] = summarize(trace);
  summary["snapshots"] = trace.snapshots.size();
  m.summary = summary;
  write_manifest(common.out_dir, m);
  return m;
}

RunManifest run_spectrum(const SpectrumRunConfig& cfg) {
  const auto& common = cfg.common;
  Outputs out(common);
  const LoadedData data = load_data(cfg.data, data_seed(common.seed));
  const MlpSpec spec = network_spec(cfg.network, cfg.network.width, data);
  const auto prepared =
      prepare_params(spec, data, common, cfg.init, cfg.train, cfg.train_first, cfg.params_path);
  const HessianResult h = full_hessian(spec, prepared.theta, data.data, hessian_options(common));

  RunManifest m;
  m.experiment = cfg.write_spectrum ? "spectrum" : "hessian";
  m.config = cfg;
  m.master_seed = common.seed;
  json summary = base_summary(data, common);
  summary["param_count"] = param_count(spec);
  summary["asymmetry"] = h.asymmetry;
  if (cfg.write_hessian) {
    write_matrix_csv(out.path("hessian.csv"), h.matrix);
    m.artifacts.push_back("hessian.csv");
  }
  if (cfg.write_spectrum) {
    const Spectrum s = spectrum_of(h, {spec, data.source, prepared.trace ? std::optional(prepared.trace->total_steps)
                                                                         : std::nullopt,
                                       prepared.seed});
    out.spectrum(m.artifacts, "spectrum", s);
    summary["spectrum"] = summarize(s, common);
  }
  if (prepared.trace) summary["train"] = summarize(*prepared.trace);
  m.summary = summary;
  write_manifest(common.out_dir, m);
  return m;
}

// ---------------------------------------------------------------------------

RunManifest rerun_manifest(const std::filesystem::path& manifest_path,
                           const std::filesystem::path& out_dir) {
  const RunManifest recorded = read_manifest(manifest_path);
  const json& c = recorded.config;
  auto with_out = [&](auto cfg) {
    cfg.common.out_dir = out_dir;
    return cfg;
  };
  try {
    const std::string& name = recorded.experiment;
    if (name == "size-sweep") return exp_size_sweep(with_out(c.get<SizeSweepConfig>())).manifest;
    if (name == "data-swap") return exp_data_swap(with_out(c.get<DataSwapConfig>())).manifest;
    if (name == "loss-swap") return exp_loss_swap(with_out(c.get<LossSwapConfig>())).manifest;
    if (name == "dynamics") return exp_training_dynamics(with_out(c.get<DynamicsConfig>())).manifest;
    if (name == "fluctuation") return exp_init_fluctuation(with_out(c.get<FluctuationConfig>())).manifest;
    if (name == "separability")
      return exp_separability_sweep(with_out(c.get<SeparabilityConfig>())).manifest;
    if (name == "interpolate") return exp_interpolation(with_out(c.get<InterpolationConfig>())).manifest;
    if (name == "heatmap") return exp_heatmap_export(with_out(c.get<HeatmapConfig>())).manifest;
    if (name == "train") return run_train(with_out(c.get<TrainRunConfig>()));
    if (name == "spectrum" || name == "hessian") return run_spectrum(with_out(c.get<SpectrumRunConfig>()));
    throw Error(ErrorKind::config, "manifest names unknown experiment '" + name + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, "manifest " + manifest_path.string() + ": " + e.what());
  }
}

}  // namespace hesslens
