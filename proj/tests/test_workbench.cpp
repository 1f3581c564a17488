#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "hesslens/io.hpp"
#include "hesslens/workbench.hpp"
#include "oracles.hpp"

using namespace hesslens;
using oracle::kind;
using oracle::thrown_kind;

namespace {

ExperimentCommon common_in(const std::filesystem::path& dir, std::uint64_t seed = 7) {
  ExperimentCommon c;
  c.out_dir = dir;
  c.seed = seed;
  return c;
}

DataConfig small_blobs(std::size_t per_class = 40) {
  DataConfig d;
  d.blobs.n_per_class = per_class;
  return d;
}

void check_artifacts_exist(const std::filesystem::path& dir, const RunManifest& m) {
  CHECK(std::filesystem::exists(dir / kManifestFile));
  CHECK(std::is_sorted(m.artifacts.begin(), m.artifacts.end()));
  for (const auto& a : m.artifacts) CHECK(std::filesystem::exists(dir / a));
}

// Reruns from the manifest in `dir` and compares every artifact and the manifest byte for byte.
void check_rerun_identical(const std::filesystem::path& dir, const std::filesystem::path& again) {
  const auto original = read_manifest(dir / kManifestFile);
  const auto m = rerun_manifest(dir / kManifestFile, again);
  CHECK(m.artifacts == original.artifacts);
  for (const auto& a : original.artifacts) CHECK(oracle::read_file(dir / a) == oracle::read_file(again / a));
  CHECK(oracle::read_file(dir / kManifestFile) == oracle::read_file(again / kManifestFile));
}

}  // namespace

TEST_CASE("data loading") {
  SUBCASE("blobs") {
    const auto d = load_data(small_blobs(), 3);
    CHECK(d.source == "blobs");
    CHECK(d.classes == 2);
    CHECK(d.data.size() == 80);
    CHECK(load_data(small_blobs(), 3).data == d.data);
  }
  SUBCASE("missing MNIST directory names the environment variable") {
    ::unsetenv("HESSLENS_DATA_DIR");
    DataConfig cfg{.kind = DataKind::mnist};
    try {
      load_data(cfg, 0);
      FAIL("loaded MNIST without a directory");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::config);
      CHECK(std::string(e.what()).find("HESSLENS_DATA_DIR") != std::string::npos);
    }
    oracle::TempDir empty("mnist");
    cfg.data_dir = empty.path().string();
    CHECK(thrown_kind([&] { load_data(cfg, 0); }) == kind(ErrorKind::config));
  }
  SUBCASE("auto falls back to the surrogate") {
    ::unsetenv("HESSLENS_DATA_DIR");
    DataConfig cfg{.kind = DataKind::mnist_or_surrogate, .n = 50};
    const auto d = load_data(cfg, 1);
    CHECK(d.source == "mnist-surrogate");
    CHECK(d.data.input_dim() == 784);
  }
  CHECK(data_kind_from_string(to_string(DataKind::random_patterns)) == DataKind::random_patterns);
  CHECK(thrown_kind([] { data_kind_from_string("cifar"); }) == kind(ErrorKind::parameter));
}

TEST_CASE("run seeds") {
  const auto a = run_seeds(9, 0), b = run_seeds(9, 1);
  CHECK(a.init == run_seeds(9, 0).init);
  CHECK(a.init != b.init);
  CHECK(a.init != a.shuffle);
  CHECK(data_seed(9) != a.run);
  CHECK(data_seed(9) != data_seed(10));
}

TEST_CASE("initialization redraw keeps hidden layers live") {
  const auto data = load_data(small_blobs(), 1).data;
  const auto spec = make_mlp(2, 2, 2, 2);
  std::size_t dead_without_rule = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    CHECK(has_live_hidden_layers(spec, draw_initialization(spec, InitConfig{}, data, seed), data));
    if (!has_live_hidden_layers(spec, draw_initialization(spec, InitConfig{.require_live = false}, data, seed),
                                data))
      ++dead_without_rule;
  }
  CHECK(dead_without_rule > 0);
  // a live first draw is kept as is
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto raw = init_params(spec, 0.2, InitMode::sphere, seed);
    if (has_live_hidden_layers(spec, raw, data)) CHECK(draw_initialization(spec, InitConfig{}, data, seed) == raw);
  }
}

TEST_CASE("parallel_for") {
  std::vector<int> out(100);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
  CHECK(thrown_kind([] {
          parallel_for(10, 3, [](std::size_t i) {
            if (i == 5) throw Error(ErrorKind::io, "x");
          });
        }) == kind(ErrorKind::io));
}

TEST_CASE("size sweep") {
  oracle::TempDir dir("sweep");
  SizeSweepConfig cfg;
  cfg.common = common_in(dir / "a");
  cfg.widths = {2, 6};
  cfg.seeds = 2;
  cfg.pre_training = true;
  cfg.data = small_blobs();
  cfg.train.max_steps = 300;
  const auto r = exp_size_sweep(cfg);
  REQUIRE(r.runs.size() == 4);
  CHECK(r.manifest.failures.empty());
  for (const auto& run : r.runs) {
    CHECK(run.eigenvalues.size() == (run.width == 2 ? 18u : 74u));
    CHECK(run.param_count == run.eigenvalues.size());
    CHECK(run.initial_stats);
  }
  check_artifacts_exist(cfg.common.out_dir, r.manifest);
  CHECK(read_spectrum_csv(cfg.common.out_dir / "spectrum_w6_s1.csv") == r.runs[3].eigenvalues);
  CHECK(read_manifest(cfg.common.out_dir / kManifestFile).experiment == "size-sweep");

  SUBCASE("rerun reproduces every artifact") { check_rerun_identical(cfg.common.out_dir, dir / "again"); }
  SUBCASE("concurrent runs give the same files") {
    SizeSweepConfig par = cfg;
    par.common.out_dir = dir / "par";
    par.common.jobs = 3;
    const auto p = exp_size_sweep(par);
    for (const auto& a : r.manifest.artifacts)
      CHECK(oracle::read_file(cfg.common.out_dir / a) == oracle::read_file(par.common.out_dir / a));
  }
  SUBCASE("a failing run is recorded and the sweep continues") {
    SizeSweepConfig guarded = cfg;
    guarded.common.out_dir = dir / "guard";
    guarded.common.hessian_guard = 20;
    const auto g = exp_size_sweep(guarded);
    CHECK(g.runs.size() == 2);
    CHECK(g.manifest.failures.size() == 2);
    for (const auto& f : g.manifest.failures) CHECK(f.find("w6") == 0);
    check_artifacts_exist(guarded.common.out_dir, g.manifest);
  }
  SUBCASE("config errors") {
    SizeSweepConfig bad = cfg;
    bad.widths.clear();
    CHECK(thrown_kind([&] { exp_size_sweep(bad); }) == kind(ErrorKind::config));
  }
}

TEST_CASE("data swap") {
  oracle::TempDir dir("swap");
  DataSwapConfig cfg;
  cfg.common = common_in(dir / "a");
  cfg.data = small_blobs(30);
  cfg.train.max_steps = 200;
  const auto r = exp_data_swap(cfg);
  CHECK(r.data_source == "blobs");
  CHECK(r.structured_initial.size() == 18);
  CHECK(r.random_trained.size() == 18);
  CHECK(r.initial_ks_distance >= 0.0);
  CHECK(r.initial_ks_distance <= 1.0);
  CHECK(r.initial_ks_distance == ks_distance(r.structured_initial, r.random_initial));
  check_artifacts_exist(cfg.common.out_dir, r.manifest);
  check_rerun_identical(cfg.common.out_dir, dir / "again");

  DataSwapConfig keep = cfg;
  keep.common.out_dir = dir / "keep";
  keep.randomize_labels = false;
  const auto k = exp_data_swap(keep);
  CHECK(k.structured_initial == r.structured_initial);
  CHECK_FALSE(k.random_initial == r.random_initial);
}

TEST_CASE("loss swap") {
  oracle::TempDir dir("loss");
  LossSwapConfig cfg;
  cfg.common = common_in(dir / "a");
  cfg.network.width = 4;
  cfg.data = small_blobs();
  cfg.train.max_steps = 400;
  const auto r = exp_loss_swap(cfg);
  // softmax outputs are uniform at zero parameters: (1/2 - 1)^2 + (1/2)^2
  CHECK(r.mse_initial_loss == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.nll_eigenvalues.size() == param_count(make_mlp(2, 4, 2, 2)));
  CHECK(r.mse_eigenvalues.size() == param_count(make_mlp(2, 4, 2, 2)));
  CHECK_FALSE(r.nll_params == r.mse_params);
  CHECK(r.manifest.summary.contains("mse_loss_at_zero_params"));
  check_artifacts_exist(cfg.common.out_dir, r.manifest);
}

TEST_CASE("training dynamics") {
  oracle::TempDir dir("dyn");
  DynamicsConfig cfg;
  cfg.common = common_in(dir / "a");
  cfg.network.width = 4;
  cfg.data = small_blobs();
  cfg.train = TrainConfig{.max_steps = 1000, .grad_norm_tol = 0.0, .snapshot_every = 250};
  cfg.seeds = 2;
  const auto r = exp_training_dynamics(cfg);
  REQUIRE(r.runs.size() == 2);
  for (const auto& run : r.runs) {
    REQUIRE(run.size() == 1000 / 250 + 1);
    for (std::size_t i = 0; i < run.size(); ++i) CHECK(run[i].step == 250 * i);
  }
  // the step-0 spectrum is the spectrum of the untrained initialization
  const auto loaded = load_data(cfg.data, data_seed(cfg.common.seed));
  const auto spec = make_mlp(2, 4, 2, 2);
  const auto theta0 = draw_initialization(spec, cfg.init, loaded.data, run_seeds(cfg.common.seed, 1).init);
  CHECK(read_spectrum_csv(cfg.common.out_dir / "spectrum_s1_step0.csv") ==
        compute_spectrum(spec, theta0, loaded.data).eigenvalues);
  CHECK(r.runs[1][0].loss == loss(spec, theta0, loaded.data));
  check_artifacts_exist(cfg.common.out_dir, r.manifest);

  DynamicsConfig bad = cfg;
  bad.train.snapshot_every.reset();
  CHECK(thrown_kind([&] { exp_training_dynamics(bad); }) == kind(ErrorKind::config));
}

TEST_CASE("initialization fluctuation") {
  oracle::TempDir dir("fluct");
  FluctuationConfig cfg;
  cfg.common = common_in(dir / "a");
  cfg.network.width = 2;
  cfg.data = small_blobs(20);
  cfg.train.max_steps = 200;
  cfg.runs = 4;
  const auto r = exp_init_fluctuation(cfg);
  REQUIRE(r.top_eigenvalues.size() == 4);
  CHECK(r.failed == 0);
  double sum = 0.0;
  for (const auto& [run, v] : r.top_eigenvalues) {
    sum += v;
    CHECK(v >= r.min);
    CHECK(v <= r.max);
  }
  CHECK(r.mean == doctest::Approx(sum / 4.0).epsilon(1e-14));
  CHECK(r.stddev > 0.0);
  {
    std::ifstream in(cfg.common.out_dir / "fluctuation.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "run,top_eigenvalue");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 4);
  }

  FluctuationConfig shared = cfg;
  shared.common.out_dir = dir / "shared";
  shared.shared_seed = true;
  const auto s = exp_init_fluctuation(shared);
  for (const auto& [run, v] : s.top_eigenvalues) CHECK(v == s.top_eigenvalues.front().second);
  CHECK(s.stddev == 0.0);

  FluctuationConfig one = cfg;
  one.runs = 1;
  CHECK(thrown_kind([&] { exp_init_fluctuation(one); }) == kind(ErrorKind::config));
}

TEST_CASE("separability sweep") {
  oracle::TempDir dir("sep");
  SeparabilityConfig cfg;
  cfg.common = common_in(dir / "a");
  cfg.network.width = 4;
  cfg.data = small_blobs(30);
  cfg.stds = {0.2, 0.6};
  cfg.seeds = 2;
  cfg.train.max_steps = 300;
  const auto r = exp_separability_sweep(cfg);
  REQUIRE(r.rows.size() == 4);
  for (const auto& row : r.rows) CHECK(row.lambda1 >= row.lambda2);
  check_artifacts_exist(cfg.common.out_dir, r.manifest);
  check_rerun_identical(cfg.common.out_dir, dir / "again");

  SeparabilityConfig bad = cfg;
  bad.stds = {0.6, 0.2};
  CHECK(thrown_kind([&] { exp_separability_sweep(bad); }) == kind(ErrorKind::config));
  bad.stds = {0.0, 0.2};
  CHECK(thrown_kind([&] { exp_separability_sweep(bad); }) == kind(ErrorKind::config));
  bad = cfg;
  bad.data.kind = DataKind::random_patterns;
  CHECK(thrown_kind([&] { exp_separability_sweep(bad); }) == kind(ErrorKind::config));
}

TEST_CASE("interpolation") {
  oracle::TempDir dir("interp");
  InterpolationConfig cfg;
  cfg.common = common_in(dir / "a");
  cfg.network.width = 4;
  cfg.data = small_blobs();
  cfg.first.max_steps = cfg.second.max_steps = 500;
  cfg.first.snapshot_every = cfg.second.snapshot_every = 100;
  cfg.alphas = default_alphas(5);

  SUBCASE("shared initialization") {
    const auto r = exp_interpolation(cfg);
    const auto& surf = r.surface;
    CHECK(surf.cosine_initial == doctest::Approx(1.0).epsilon(1e-15));
    REQUIRE(surf.steps.size() == 6);
    CHECK(surf.points.size() == 6 * 5);
    CHECK(surf.distances.front() == 0.0);
    // alpha = 0 and 1 reproduce the runs' own losses at the final snapshot
    std::ifstream in(cfg.common.out_dir / "trace_first.csv");
    std::string line, last;
    while (std::getline(in, line)) last = line;
    CHECK(std::abs(surf.first_losses.back() - std::stod(split_csv_line(last)[1])) <= 1e-12);
    check_artifacts_exist(cfg.common.out_dir, r.manifest);
    check_rerun_identical(cfg.common.out_dir, dir / "again");
  }
  SUBCASE("orthogonal initializations") {
    InterpolationConfig o = cfg;
    o.mode = InterpolationMode::orthogonal_inits_sgd_vs_sgd;
    o.network.width = 18;
    o.first.max_steps = o.second.max_steps = 200;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      o.common = common_in(dir / ("o" + std::to_string(seed)), seed);
      const auto r = exp_interpolation(o);
      CHECK(param_count(make_mlp(2, 18, 2, 2)) >= 400);
      CHECK(std::abs(r.surface.cosine_initial) <= 0.05);
      CHECK(r.surface.distances.front() > 0.0);
    }
  }
  SUBCASE("config errors") {
    InterpolationConfig bad = cfg;
    bad.second.snapshot_every = 50;
    CHECK(thrown_kind([&] { exp_interpolation(bad); }) == kind(ErrorKind::config));
    bad = cfg;
    bad.alphas = {0.0, 0.5};
    CHECK(thrown_kind([&] { exp_interpolation(bad); }) == kind(ErrorKind::config));
    bad.alphas = {0.0, 1.0, 1.5};
    CHECK(thrown_kind([&] { exp_interpolation(bad); }) == kind(ErrorKind::config));
    CHECK(thrown_kind([] { default_alphas(1); }) == kind(ErrorKind::parameter));
  }
}

TEST_CASE("heatmap export") {
  oracle::TempDir dir("heat");
  HeatmapConfig cfg;
  cfg.common = common_in(dir / "a");
  cfg.data = small_blobs();
  cfg.train.max_steps = 200;
  const auto r = exp_heatmap_export(cfg);
  CHECK(r.hessian.rows() == 18);
  const auto h = read_matrix_csv(cfg.common.out_dir / "hessian.csv");
  CHECK(h == r.hessian);
  CHECK(h.asymmetry() == 0.0);

  SUBCASE("parameters from a file; a dead unit gives zero rows") {
    const auto spec = make_mlp(2, 2, 2, 2);
    auto layers = unflatten(spec, read_vector_csv(cfg.common.out_dir / "params.csv"));
    // unit 0 of the first hidden layer never activates
    layers[0].weights(0, 0) = layers[0].weights(0, 1) = 0.0;
    layers[0].bias[0] = -1.0;
    write_vector_csv(dir / "p.csv", flatten(spec, layers));
    HeatmapConfig from_file = cfg;
    from_file.common.out_dir = dir / "b";
    from_file.params_path = (dir / "p.csv").string();
    from_file.train_first = false;
    const auto f = exp_heatmap_export(from_file);
    // rows 0, 1 (weights) and 4 (bias) belong to that unit in the flat layout
    for (std::size_t row : {0u, 1u, 4u})
      for (std::size_t j = 0; j < 18; ++j) CHECK(f.hessian(row, j) == 0.0);

    write_vector_csv(dir / "short.csv", ParamVector(5));
    from_file.params_path = (dir / "short.csv").string();
    CHECK(thrown_kind([&] { exp_heatmap_export(from_file); }) == kind(ErrorKind::dimension));
  }
}

TEST_CASE("train and spectrum runs") {
  oracle::TempDir dir("run");
  TrainRunConfig t;
  t.common = common_in(dir / "t");
  t.data = small_blobs();
  t.network.width = 2;
  t.train = TrainConfig{.max_steps = 300, .snapshot_every = 100};
  const auto m = run_train(t);
  check_artifacts_exist(t.common.out_dir, m);
  CHECK(std::filesystem::exists(t.common.out_dir / "snap_300.csv"));
  CHECK(oracle::read_file(t.common.out_dir / "trace.csv").rfind("step,loss,grad_norm,weight_norm\n", 0) == 0);

  SpectrumRunConfig s;
  s.common = common_in(dir / "s");
  s.data = t.data;
  s.network = t.network;
  s.params_path = (t.common.out_dir / "final_params.csv").string();
  s.write_hessian = true;
  const auto sm = run_spectrum(s);
  check_artifacts_exist(s.common.out_dir, sm);
  const auto spec = make_mlp(2, 2, 2, 2);
  const auto data = load_data(t.data, data_seed(7)).data;
  CHECK(read_spectrum_csv(s.common.out_dir / "spectrum.csv") ==
        compute_spectrum(spec, read_vector_csv(s.params_path), data).eigenvalues);
  check_rerun_identical(s.common.out_dir, dir / "again");
}

TEST_CASE("manifest errors") {
  oracle::TempDir dir("man");
  {
    std::ofstream out(dir / "broken.json");
    out << "{ not json";
  }
  CHECK(thrown_kind([&] { read_manifest(dir / "broken.json"); }) == kind(ErrorKind::format));
  CHECK(thrown_kind([&] { read_manifest(dir / "absent.json"); }) == kind(ErrorKind::io));
  {
    std::ofstream out(dir / "unknown.json");
    out << R"({"experiment": "nope", "config": {}, "master_seed": 0, "artifacts": []})";
  }
  CHECK(thrown_kind([&] { rerun_manifest(dir / "unknown.json", dir / "x"); }) == kind(ErrorKind::config));
  RunManifest m;
  m.experiment = "train";
  m.artifacts = {"missing.csv"};
  CHECK(thrown_kind([&] { write_manifest(dir.path(), m); }) == kind(ErrorKind::io));
}
