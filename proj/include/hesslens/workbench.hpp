#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hesslens/data.hpp"
#include "hesslens/model.hpp"
#include "hesslens/spectrum.hpp"
#include "hesslens/training.hpp"

namespace hesslens {

// ---------------------------------------------------------------------------
// Shared configuration
// ---------------------------------------------------------------------------

struct InitConfig {
  double sigma = 0.2;
  InitMode mode = InitMode::sphere;
  // Redraw (with a derived seed) while some hidden layer is inactive on every
  // training example; such a network has an identically zero gradient.
  bool require_live = true;
  std::size_t max_redraws = 100;
};

enum class DataKind {
  blobs,
  random_patterns,
  mnist,            // IDX files required
  mnist_surrogate,  // 10-class Gaussian blobs in input_dim dimensions
  mnist_or_surrogate,
};

std::string_view to_string(DataKind kind);
DataKind data_kind_from_string(std::string_view name);

struct DataConfig {
  DataKind kind = DataKind::blobs;
  BlobConfig blobs;  // blobs.seed is ignored, datasets use the experiment's data stream
  std::size_t n = 1000;
  std::size_t input_dim = 784;
  std::size_t classes = 10;
  PatternDistribution distribution = PatternDistribution::gaussian;
  bool normalize = true;
  std::string data_dir;  // empty: HESSLENS_DATA_DIR
};

struct LoadedData {
  Dataset data;
  std::string source;  // "blobs", "random-patterns", "mnist:<dir>", "mnist-surrogate"
  std::size_t classes = 0;
};

LoadedData load_data(const DataConfig& cfg, std::uint64_t seed);

struct ExperimentCommon {
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;  // master seed
  bool svg = false;
  ZeroThreshold zero = ZeroThreshold::relative(1e-3);
  std::optional<std::size_t> edge_window;
  std::size_t histogram_bins = kDefaultHistogramBins;
  std::size_t hessian_guard = kDefaultHessianGuard;
  unsigned jobs = 1;  // concurrent runs
};

/// Seeds of run `index`: datasets come from a separate stream shared by all runs.
struct RunSeeds {
  std::uint64_t run = 0;
  std::uint64_t init = 0;
  std::uint64_t shuffle = 0;
};
RunSeeds run_seeds(std::uint64_t master, std::uint64_t index);
std::uint64_t data_seed(std::uint64_t master);

/// True if every hidden layer has at least one unit with positive
/// pre-activation on at least one example.
bool has_live_hidden_layers(const MlpSpec& spec, const ParamVector& theta, const Dataset& data);

ParamVector draw_initialization(const MlpSpec& spec, const InitConfig& init, const Dataset& data,
                                std::uint64_t seed);

struct SpectrumStats {
  double near_zero_fraction = 0.0;
  std::vector<double> top;     // descending, up to 5
  std::vector<double> bottom;  // ascending, up to 5 (negative outliers reported here)
  EdgeSplit edges;
  double asymmetry = 0.0;
};

SpectrumStats summarize(const Spectrum& s, const ExperimentCommon& common);

struct TrainSummary {
  double loss = 0.0;
  double grad_norm = 0.0;
  double weight_norm = 0.0;
  StopReason stop_reason = StopReason::max_steps;
  std::size_t steps = 0;
};

TrainSummary summarize(const TrainTrace& trace);

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string experiment;
  nlohmann::json config;  // full config echo
  std::uint64_t master_seed = 0;
  nlohmann::json summary;
  std::vector<std::string> artifacts;  // relative to the output directory
  std::vector<std::string> failures;
};

inline constexpr const char* kManifestFile = "manifest.json";

void write_manifest(const std::filesystem::path& dir, RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct NetworkConfig {
  std::size_t width = 10;
  std::size_t hidden_layers = 2;
  LossKind loss = LossKind::softmax_nll;
};

/// final spectrum per (width, seed), optionally the pre-training spectrum too.
struct SizeSweepConfig {
  ExperimentCommon common;
  std::vector<std::size_t> widths{2, 6, 10, 14, 18};
  NetworkConfig network;  // width ignored
  DataConfig data;
  TrainConfig train;
  InitConfig init;
  std::size_t seeds = 5;
  bool pre_training = false;
};

struct SweepRun {
  std::size_t width = 0;
  std::size_t seed_index = 0;
  std::size_t param_count = 0;
  SpectrumStats final_stats;
  std::optional<SpectrumStats> initial_stats;
  TrainSummary train;
  std::vector<double> eigenvalues;
};

struct SizeSweepResult {
  RunManifest manifest;
  std::vector<SweepRun> runs;
};

SizeSweepResult exp_size_sweep(const SizeSweepConfig& cfg);

struct DataSwapConfig {
  ExperimentCommon common;
  NetworkConfig network{2, 2, LossKind::softmax_nll};
  DataConfig data{.kind = DataKind::mnist_or_surrogate};
  bool randomize_labels = true;
  TrainConfig train{.step_size = 0.01, .max_steps = 2000};
  InitConfig init;
};

struct DataSwapResult {
  RunManifest manifest;
  std::vector<double> structured_initial, random_initial, random_trained, structured_trained;
  double initial_ks_distance = 0.0;
  std::string data_source;
  TrainSummary random_train, structured_train;
};

DataSwapResult exp_data_swap(const DataSwapConfig& cfg);

struct LossSwapConfig {
  ExperimentCommon common;
  NetworkConfig network;  // loss ignored
  DataConfig data;
  TrainConfig train;
  InitConfig init;
};

struct LossSwapResult {
  RunManifest manifest;
  SpectrumStats nll_stats, mse_stats;
  std::vector<double> nll_eigenvalues, mse_eigenvalues;
  ParamVector nll_params, mse_params;
  double mse_initial_loss = 0.0;
  TrainSummary nll_train, mse_train;
};

LossSwapResult exp_loss_swap(const LossSwapConfig& cfg);

struct DynamicsConfig {
  ExperimentCommon common;
  NetworkConfig network{18, 2, LossKind::softmax_nll};
  DataConfig data;
  TrainConfig train{.snapshot_every = 1000};
  InitConfig init;
  std::size_t seeds = 1;
};

struct DynamicsPoint {
  std::size_t seed_index = 0;
  std::size_t step = 0;
  SpectrumStats stats;
  double loss = 0.0;
};

struct DynamicsResult {
  RunManifest manifest;
  std::vector<std::vector<DynamicsPoint>> runs;  // per seed, ordered by step
  std::vector<TrainSummary> train;
};

DynamicsResult exp_training_dynamics(const DynamicsConfig& cfg);

struct FluctuationConfig {
  ExperimentCommon common;
  NetworkConfig network{6, 2, LossKind::softmax_nll};
  DataConfig data;
  TrainConfig train{.max_steps = 20000};
  InitConfig init;
  std::size_t runs = 200;
  bool shared_seed = false;  // every run uses the seeds of run 0
};

struct FluctuationResult {
  RunManifest manifest;
  std::vector<std::pair<std::size_t, double>> top_eigenvalues;  // (run, lambda_1), successes only
  double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
  std::size_t failed = 0;
};

FluctuationResult exp_init_fluctuation(const FluctuationConfig& cfg);

struct SeparabilityConfig {
  ExperimentCommon common;
  NetworkConfig network;
  DataConfig data;  // blob centers are kept, std is swept
  std::vector<double> stds{0.1, 0.32, 0.55, 0.77, 1.0};
  TrainConfig train;
  InitConfig init;
  std::size_t seeds = 5;
};

struct SeparabilityRow {
  double std = 0.0;
  std::size_t seed_index = 0;
  double lambda1 = 0.0, lambda2 = 0.0, weight_norm = 0.0, loss = 0.0;
};

struct SeparabilityResult {
  RunManifest manifest;
  std::vector<SeparabilityRow> rows;
};

SeparabilityResult exp_separability_sweep(const SeparabilityConfig& cfg);

enum class InterpolationMode { shared_init_gd_vs_sgd, orthogonal_inits_sgd_vs_sgd };

std::string_view to_string(InterpolationMode mode);
InterpolationMode interpolation_mode_from_string(std::string_view name);

struct InterpolationConfig {
  ExperimentCommon common;
  InterpolationMode mode = InterpolationMode::shared_init_gd_vs_sgd;
  NetworkConfig network;
  DataConfig data;
  TrainConfig first{.max_steps = 5000, .grad_norm_tol = 0.0, .snapshot_every = 250};
  TrainConfig second{.max_steps = 5000,
                     .grad_norm_tol = 0.0,
                     .batch = BatchMode::minibatch,
                     .snapshot_every = 250};
  InitConfig init;
  std::vector<double> alphas;  // empty: 21 uniform points in [0, 1]
};

struct InterpolationPoint {
  std::size_t snapshot_step = 0;
  double alpha = 0.0;
  double loss = 0.0;
  double distance = 0.0;
};

struct InterpolationSurface {
  std::vector<InterpolationPoint> points;  // grouped by step, alphas ascending
  std::vector<std::size_t> steps;
  std::vector<double> distances;  // per step
  std::vector<double> first_losses, second_losses;  // run losses per step
  double cosine_initial = 0.0;  // <theta1_0, theta2_0> / (|theta1_0| |theta2_0|)
};

struct InterpolationResult {
  RunManifest manifest;
  InterpolationSurface surface;
};

std::vector<double> default_alphas(std::size_t count = 21);

InterpolationResult exp_interpolation(const InterpolationConfig& cfg);

struct HeatmapConfig {
  ExperimentCommon common;
  NetworkConfig network{2, 2, LossKind::softmax_nll};
  DataConfig data;
  TrainConfig train;
  InitConfig init;
  bool train_first = true;
  std::string params_path;  // optional: use these parameters instead
};

struct HeatmapResult {
  RunManifest manifest;
  DenseMatrix hessian;
  double asymmetry = 0.0;
};

HeatmapResult exp_heatmap_export(const HeatmapConfig& cfg);

/// Single training run: trace, final parameters and snapshots.
struct TrainRunConfig {
  ExperimentCommon common;
  NetworkConfig network;
  DataConfig data;
  TrainConfig train;
  InitConfig init;
};

RunManifest run_train(const TrainRunConfig& cfg);

/// Spectrum (and optionally the Hessian) at init, after training, or at given parameters.
struct SpectrumRunConfig {
  ExperimentCommon common;
  NetworkConfig network;
  DataConfig data;
  TrainConfig train;
  InitConfig init;
  bool train_first = false;
  std::string params_path;
  bool write_hessian = false;
  bool write_spectrum = true;
};

RunManifest run_spectrum(const SpectrumRunConfig& cfg);

/// Re-executes the experiment recorded in `manifest_path`, writing into `out_dir`.
RunManifest rerun_manifest(const std::filesystem::path& manifest_path,
                           const std::filesystem::path& out_dir);

/// Runs fn(0..count-1) on up to `jobs` threads; results must go to per-index slots.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace hesslens
