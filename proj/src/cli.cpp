#include "hesslens/cli.hpp"

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "hesslens/error.hpp"
#include "hesslens/workbench.hpp"

namespace hesslens {

namespace {

const std::map<std::string, LossKind> kLossNames{{"softmax-nll", LossKind::softmax_nll},
                                                 {"nll", LossKind::softmax_nll},
                                                 {"mse-on-softmax", LossKind::mse_on_softmax},
                                                 {"mse", LossKind::mse_on_softmax},
                                                 {"mse-on-logits", LossKind::mse_on_logits}};
const std::map<std::string, InitMode> kInitNames{{"gaussian", InitMode::gaussian},
                                                 {"sphere", InitMode::sphere}};
const std::map<std::string, BatchMode> kBatchNames{{"full", BatchMode::full},
                                                   {"minibatch", BatchMode::minibatch},
                                                   {"sgd", BatchMode::minibatch}};
const std::map<std::string, DataKind> kDataNames{{"blobs", DataKind::blobs},
                                                 {"random", DataKind::random_patterns},
                                                 {"mnist", DataKind::mnist},
                                                 {"surrogate", DataKind::mnist_surrogate},
                                                 {"auto", DataKind::mnist_or_surrogate}};
const std::map<std::string, PatternDistribution> kDistNames{
    {"gaussian", PatternDistribution::gaussian}, {"uniform", PatternDistribution::uniform}};
const std::map<std::string, InterpolationMode> kModeNames{
    {"shared-init-gd-vs-sgd", InterpolationMode::shared_init_gd_vs_sgd},
    {"shared", InterpolationMode::shared_init_gd_vs_sgd},
    {"orthogonal-inits-sgd-vs-sgd", InterpolationMode::orthogonal_inits_sgd_vs_sgd},
    {"orthogonal", InterpolationMode::orthogonal_inits_sgd_vs_sgd}};
const std::map<std::string, ZeroThreshold::Mode> kZeroModes{
    {"relative", ZeroThreshold::Mode::relative}, {"absolute", ZeroThreshold::Mode::absolute}};

template <class E>
CLI::Option* add_enum(CLI::App* app, const std::string& flag, E& target,
                      const std::map<std::string, E>& m, const std::string& help) {
  std::vector<std::string> keys;
  for (const auto& [k, v] : m) keys.push_back(k);
  return app
      ->add_option_function<std::string>(
          flag, [&target, &m](const std::string& name) { target = m.at(name); }, help)
      ->check(CLI::IsMember(keys));
}

void add_network(CLI::App* app, NetworkConfig& net, bool with_width = true) {
  if (with_width) app->add_option("--width", net.width, "Hidden layer width")->capture_default_str();
  app->add_option("--hidden-layers", net.hidden_layers, "Number of hidden layers")->capture_default_str();
  add_enum(app, "--loss", net.loss, kLossNames, "softmax-nll | mse-on-softmax | mse-on-logits");
}

void add_data(CLI::App* app, DataConfig& data) {
  add_enum(app, "--data", data.kind, kDataNames, "blobs | random | mnist | surrogate | auto");
  app->add_option("--n-per-class", data.blobs.n_per_class, "Blob examples per class")
      ->capture_default_str();
  app->add_option("--blob-std", data.blobs.std, "Blob standard deviation")->capture_default_str();
  app->add_option("--n", data.n, "Examples for random/MNIST/surrogate data")->capture_default_str();
  app->add_option("--input-dim", data.input_dim, "Input dimension of random/surrogate data")
      ->capture_default_str();
  app->add_option("--classes", data.classes, "Classes of random/surrogate data")->capture_default_str();
  add_enum(app, "--distribution", data.distribution, kDistNames, "Random pattern distribution");
  app->add_flag("!--raw-pixels", data.normalize, "Do not scale MNIST pixels to [0, 1]");
}

void add_train(CLI::App* app, TrainConfig& train, const std::string& prefix = "") {
  app->add_option("--" + prefix + "lr", train.step_size, "Step size")->capture_default_str();
  app->add_option("--" + prefix + "max-steps", train.max_steps, "Step budget")->capture_default_str();
  app->add_option("--" + prefix + "tol", train.grad_norm_tol, "Gradient norm tolerance")
      ->capture_default_str();
  add_enum(app, "--" + prefix + "batch", train.batch, kBatchNames, "full | minibatch");
  app->add_option("--" + prefix + "batch-size", train.batch_size, "Minibatch size")->capture_default_str();
  app->add_option_function<std::size_t>(
      "--" + prefix + "snapshot-every", [&train](std::size_t v) { train.snapshot_every = v; },
      "Snapshot interval in steps");
  app->add_option("--" + prefix + "log-every", train.log_every, "Trace logging interval")
      ->capture_default_str();
}

void add_init(CLI::App* app, InitConfig& init) {
  app->add_option("--sigma", init.sigma, "Initialization scale")->capture_default_str();
  add_enum(app, "--init", init.mode, kInitNames, "gaussian | sphere");
  app->add_flag("!--allow-dead-init", init.require_live,
                "Keep initializations with an inactive hidden layer");
}

template <class Config>
void add_run(CLI::App* app, Config& cfg, bool with_width = true) {
  add_network(app, cfg.network, with_width);
  add_data(app, cfg.data);
  add_train(app, cfg.train);
  add_init(app, cfg.init);
}

struct Globals {
  ExperimentCommon common;
  std::string data_dir;
};

void apply(const Globals& g, ExperimentCommon& common, DataConfig& data) {
  common = g.common;
  if (!g.data_dir.empty()) data.data_dir = g.data_dir;
}

int finish(const RunManifest& m, const std::filesystem::path& out) {
  std::cout << m.experiment << ": wrote " << (out / kManifestFile).string() << " ("
            << m.artifacts.size() << " artifacts)\n";
  for (const auto& f : m.failures) std::cerr << "run failed: " << f << '\n';
  return m.failures.empty() ? 0 : 1;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Hessian spectra of small ReLU networks", "hesslens"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read options from a TOML/INI file");

  Globals g;
  app.add_option("--seed", g.common.seed, "Master seed")->capture_default_str();
  app.add_option("--out", g.common.out_dir, "Output directory")->capture_default_str();
  app.add_option("--data-dir", g.data_dir, "MNIST IDX directory (default: $HESSLENS_DATA_DIR)");
  app.add_flag("--svg", g.common.svg, "Write histogram SVGs next to spectrum CSVs");
  app.add_option("--jobs", g.common.jobs, "Concurrent runs")->capture_default_str();
  app.add_option("--zero-threshold", g.common.zero.value, "Near-zero threshold")->capture_default_str();
  add_enum(&app, "--zero-mode", g.common.zero.mode, kZeroModes, "relative | absolute");
  app.add_option_function<std::size_t>(
      "--edge-window", [&g](std::size_t k) { g.common.edge_window = k; },
      "Eigenvalues scanned for the bulk/edge gap (default min(3C, 20))");
  app.add_option("--bins", g.common.histogram_bins, "Histogram bins")->capture_default_str();
  app.add_option("--hessian-guard", g.common.hessian_guard, "Largest parameter count for a dense Hessian")
      ->capture_default_str();

  TrainRunConfig train_cfg;
  auto* train_cmd = app.add_subcommand("train", "Train one network");
  add_run(train_cmd, train_cfg);

  SpectrumRunConfig hessian_cfg;
  hessian_cfg.write_hessian = true;
  hessian_cfg.write_spectrum = false;
  auto* hessian_cmd = app.add_subcommand("hessian", "Write the dense Hessian as CSV");
  add_run(hessian_cmd, hessian_cfg);
  hessian_cmd->add_flag("--train-first", hessian_cfg.train_first, "Train before evaluating");
  hessian_cmd->add_option("--params", hessian_cfg.params_path, "Parameter vector CSV")
      ->check(CLI::ExistingFile);
  hessian_cmd->add_flag("--with-spectrum", hessian_cfg.write_spectrum, "Also write the spectrum");

  SpectrumRunConfig spectrum_cfg;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Hessian eigenvalue spectrum");
  add_run(spectrum_cmd, spectrum_cfg);
  spectrum_cmd->add_flag("--train-first", spectrum_cfg.train_first, "Train before evaluating");
  spectrum_cmd->add_option("--params", spectrum_cfg.params_path, "Parameter vector CSV")
      ->check(CLI::ExistingFile);
  spectrum_cmd->add_flag("--write-hessian", spectrum_cfg.write_hessian, "Also write hessian.csv");

  std::string manifest_path;
  auto* rerun_cmd = app.add_subcommand("rerun", "Re-execute the run recorded in a manifest");
  rerun_cmd->add_option("manifest", manifest_path, "manifest.json")->required()->check(CLI::ExistingFile);

  auto* exp = app.add_subcommand("exp", "Experiments");
  exp->require_subcommand(1);

  SizeSweepConfig sweep;
  sweep.seeds = 1;
  auto* sweep_cmd = exp->add_subcommand("size-sweep", "Spectra across hidden widths");
  add_run(sweep_cmd, sweep, false);
  sweep_cmd->add_option("--widths", sweep.widths, "Comma-separated widths")->delimiter(',');
  sweep_cmd->add_option("--seeds", sweep.seeds, "Seeds per width")->capture_default_str();
  sweep_cmd->add_flag("--pre-training", sweep.pre_training, "Also write spectra at initialization");

  DataSwapConfig swap;
  auto* swap_cmd = exp->add_subcommand("data-swap", "Structured data vs random patterns");
  add_run(swap_cmd, swap);
  swap_cmd->add_flag("!--keep-labels", swap.randomize_labels,
                     "Random inputs keep the structured labels");

  LossSwapConfig loss_swap;
  auto* loss_cmd = exp->add_subcommand("loss-swap", "Softmax NLL vs MSE on softmax");
  add_network(loss_cmd, loss_swap.network);
  add_data(loss_cmd, loss_swap.data);
  add_train(loss_cmd, loss_swap.train);
  add_init(loss_cmd, loss_swap.init);

  DynamicsConfig dyn;
  auto* dyn_cmd = exp->add_subcommand("dynamics", "Spectrum at every training snapshot");
  add_run(dyn_cmd, dyn);
  dyn_cmd->add_option("--seeds", dyn.seeds, "Runs")->capture_default_str();

  FluctuationConfig fluct;
  auto* fluct_cmd = exp->add_subcommand("fluctuation", "Top eigenvalue over many initializations");
  add_run(fluct_cmd, fluct);
  fluct_cmd->add_option("--runs", fluct.runs, "Number of runs")->capture_default_str();
  fluct_cmd->add_flag("--shared-seed", fluct.shared_seed, "Every run reuses the seeds of run 0");

  SeparabilityConfig sep;
  auto* sep_cmd = exp->add_subcommand("separability", "Top eigenvalues vs blob spread");
  add_run(sep_cmd, sep);
  sep_cmd->add_option("--stds", sep.stds, "Comma-separated blob stds")->delimiter(',');
  sep_cmd->add_option("--seeds", sep.seeds, "Seeds per std")->capture_default_str();

  InterpolationConfig interp;
  TrainConfig interp_shared = interp.first;
  auto* interp_cmd = exp->add_subcommand("interpolate", "Loss along segments between two runs");
  add_network(interp_cmd, interp.network);
  add_data(interp_cmd, interp.data);
  add_init(interp_cmd, interp.init);
  add_enum(interp_cmd, "--mode", interp.mode, kModeNames, "shared-init-gd-vs-sgd | orthogonal-inits-sgd-vs-sgd");
  interp_cmd->add_option("--lr", interp_shared.step_size, "Step size of both runs")->capture_default_str();
  interp_cmd->add_option("--max-steps", interp_shared.max_steps, "Steps of both runs")->capture_default_str();
  interp_cmd->add_option("--tol", interp_shared.grad_norm_tol, "Gradient norm tolerance")
      ->capture_default_str();
  interp_cmd->add_option("--snapshot-every", interp_shared.snapshot_every, "Snapshot interval");
  interp_cmd->add_option("--batch-size", interp.second.batch_size, "Minibatch size of the SGD run")
      ->capture_default_str();
  interp_cmd->add_option("--alphas", interp.alphas, "Comma-separated alphas (must include 0 and 1)")
      ->delimiter(',');
  std::size_t alpha_count = 0;
  interp_cmd->add_option("--alpha-count", alpha_count, "Uniform alpha grid size")->excludes("--alphas");

  HeatmapConfig heat;
  auto* heat_cmd = exp->add_subcommand("heatmap", "Export the dense Hessian");
  add_run(heat_cmd, heat);
  heat_cmd->add_flag("!--no-train", heat.train_first, "Evaluate at initialization");
  heat_cmd->add_option("--params", heat.params_path, "Parameter vector CSV")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "hesslens: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const std::filesystem::path out = g.common.out_dir;
  try {
    auto run = [&](auto& cfg, auto fn) {
      apply(g, cfg.common, cfg.data);
      return finish(fn(cfg), out);
    };
    if (train_cmd->parsed()) return run(train_cfg, run_train);
    if (hessian_cmd->parsed()) return run(hessian_cfg, run_spectrum);
    if (spectrum_cmd->parsed()) return run(spectrum_cfg, run_spectrum);
    if (rerun_cmd->parsed()) return finish(rerun_manifest(manifest_path, out), out);
    if (sweep_cmd->parsed()) return run(sweep, [](auto& c) { return exp_size_sweep(c).manifest; });
    if (swap_cmd->parsed()) return run(swap, [](auto& c) { return exp_data_swap(c).manifest; });
    if (loss_cmd->parsed()) return run(loss_swap, [](auto& c) { return exp_loss_swap(c).manifest; });
    if (dyn_cmd->parsed()) {
      if (!dyn.train.snapshot_every) dyn.train.snapshot_every = 1000;
      return run(dyn, [](auto& c) { return exp_training_dynamics(c).manifest; });
    }
    if (fluct_cmd->parsed()) return run(fluct, [](auto& c) { return exp_init_fluctuation(c).manifest; });
    if (sep_cmd->parsed()) return run(sep, [](auto& c) { return exp_separability_sweep(c).manifest; });
    if (interp_cmd->parsed()) {
      for (TrainConfig* t : {&interp.first, &interp.second}) {
        t->step_size = interp_shared.step_size;
        t->max_steps = interp_shared.max_steps;
        t->grad_norm_tol = interp_shared.grad_norm_tol;
        t->snapshot_every = interp_shared.snapshot_every;
      }
      if (alpha_count != 0) interp.alphas = default_alphas(alpha_count);
      return run(interp, [](auto& c) { return exp_interpolation(c).manifest; });
    }
    if (heat_cmd->parsed()) return run(heat, [](auto& c) { return exp_heatmap_export(c).manifest; });
  } catch (const Error& e) {
    std::cerr << "hesslens: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "hesslens: " << e.what() << '\n';
    return 1;
  }
  std::cerr << app.help();
  return 2;
}

}  // namespace hesslens
