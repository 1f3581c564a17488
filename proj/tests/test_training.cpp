#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "hesslens/data.hpp"
#include "hesslens/training.hpp"
#include "hesslens/workbench.hpp"
#include "oracles.hpp"

using namespace hesslens;
using oracle::kind;
using oracle::thrown_kind;

namespace {

Dataset blobs(std::size_t per_class = 100, double std = 0.3) {
  BlobConfig cfg;
  cfg.n_per_class = per_class;
  cfg.std = std;
  return gaussian_blobs(cfg);
}

void check_trace_invariants(const TrainTrace& t, const TrainConfig& cfg) {
  REQUIRE_FALSE(t.rows.empty());
  CHECK(t.rows.front().step == 0);
  for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i - 1].step < t.rows[i].step);
  CHECK(t.final_row().step == t.total_steps);
  if (t.stop_reason == StopReason::tolerance) CHECK(t.final_row().grad_norm <= cfg.grad_norm_tol);
  CHECK(t.final_row().weight_norm == doctest::Approx(t.final_params.norm()).epsilon(1e-15));
  if (cfg.snapshot_every) {
    REQUIRE_FALSE(t.snapshots.empty());
    CHECK(t.snapshots.front().step == 0);
    CHECK(t.snapshots.back().step == t.total_steps);
    CHECK(t.snapshots.back().params == t.final_params);
  }
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(TrainConfig{}.validate());
  CHECK(thrown_kind([] { TrainConfig{.step_size = 0.0}.validate(); }) == kind(ErrorKind::parameter));
  CHECK(thrown_kind([] { TrainConfig{.max_steps = 0}.validate(); }) == kind(ErrorKind::parameter));
  CHECK(thrown_kind([] { TrainConfig{.grad_norm_tol = -1.0}.validate(); }) == kind(ErrorKind::parameter));
  CHECK(thrown_kind([] { TrainConfig{.snapshot_every = 0}.validate(); }) == kind(ErrorKind::parameter));
  CHECK(batch_mode_from_string("full") == BatchMode::full);
  CHECK(batch_mode_from_string("minibatch") == BatchMode::minibatch);
  CHECK(to_string(StopReason::tolerance) == "tolerance");
}

TEST_CASE("stops at step 0 on an exact critical point") {
  const auto data = blobs(20);
  const auto spec = make_mlp(2, 4, 2, 2);
  // zero parameters on balanced labels: every gradient component vanishes up to rounding
  const ParamVector zero(param_count(spec));
  CHECK(gradient(spec, zero, data).norm() <= 1e-15);
  const TrainConfig cfg{.snapshot_every = 10};
  const auto t = train(spec, zero, data, cfg);
  CHECK(t.stop_reason == StopReason::tolerance);
  CHECK(t.total_steps == 0);
  CHECK(t.rows.size() == 1);
  CHECK(t.snapshots.size() == 1);
  CHECK(t.final_params == zero);
}

TEST_CASE("full-batch training is deterministic and loss decreases for small steps") {
  const auto data = blobs();
  const auto spec = make_mlp(2, 6, 2, 2);
  const auto theta0 = draw_initialization(spec, InitConfig{}, data, 3);
  const TrainConfig cfg{.step_size = 0.01, .max_steps = 3000, .log_every = 1};
  const auto a = train(spec, theta0, data, cfg);
  const auto b = train(spec, theta0, data, cfg);
  CHECK(a.final_params == b.final_params);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].loss == b.rows[i].loss);
    CHECK(a.rows[i].grad_norm == b.rows[i].grad_norm);
  }
  check_trace_invariants(a, cfg);
  for (std::size_t i = 1; i < a.rows.size(); ++i) CHECK(a.rows[i].loss <= a.rows[i - 1].loss);
}

TEST_CASE("width-2 blob net reaches the gradient tolerance within the default budget") {
  const auto data = blobs();
  const auto spec = make_mlp(2, 2, 2, 2);
  const auto seeds = run_seeds(0, 0);
  const auto theta0 = draw_initialization(spec, InitConfig{}, data, seeds.init);
  const TrainConfig cfg{.step_size = 0.1, .grad_norm_tol = 1e-4};
  const auto t = train(spec, theta0, data, cfg);
  CHECK(t.stop_reason == StopReason::tolerance);
  CHECK(t.total_steps < cfg.max_steps);
  check_trace_invariants(t, cfg);
}

TEST_CASE("snapshots") {
  const auto data = blobs(30);
  const auto spec = make_mlp(2, 4, 2, 2);
  const auto theta0 = draw_initialization(spec, InitConfig{}, data, 8);
  SUBCASE("budget a multiple of the interval") {
    const TrainConfig cfg{.max_steps = 1000, .grad_norm_tol = 0.0, .snapshot_every = 250};
    const auto t = train(spec, theta0, data, cfg);
    CHECK(t.total_steps == 1000);
    CHECK(t.snapshots.size() == 1000 / 250 + 1);
    for (std::size_t i = 0; i < t.snapshots.size(); ++i) CHECK(t.snapshots[i].step == 250 * i);
    CHECK(t.snapshots.front().params == theta0);
    check_trace_invariants(t, cfg);
  }
  SUBCASE("final step always included") {
    const TrainConfig cfg{.max_steps = 1010, .grad_norm_tol = 0.0, .snapshot_every = 250};
    const auto t = train(spec, theta0, data, cfg);
    CHECK(t.snapshots.back().step == 1010);
    check_trace_invariants(t, cfg);
  }
}

TEST_CASE("minibatch training") {
  const auto data = blobs(45);
  const auto spec = make_mlp(2, 4, 2, 2);
  const auto theta0 = draw_initialization(spec, InitConfig{}, data, 2);
  const TrainConfig cfg{.max_steps = 500, .batch = BatchMode::minibatch, .batch_size = 32, .seed = 4};
  const auto a = train(spec, theta0, data, cfg);
  CHECK(a.final_params == train(spec, theta0, data, cfg).final_params);
  TrainConfig other = cfg;
  other.seed = 5;
  CHECK_FALSE(a.final_params == train(spec, theta0, data, other).final_params);
  check_trace_invariants(a, cfg);
  CHECK(a.final_row().loss < a.rows.front().loss);
}

TEST_CASE("epoch partition covers every example once") {
  Rng rng(1);
  for (std::size_t n : {1u, 31u, 32u, 33u, 200u}) {
    const auto parts = epoch_partition(n, 32, rng);
    std::vector<std::size_t> all;
    for (const auto& p : parts) {
      CHECK(p.size() <= 32);
      CHECK_FALSE(p.empty());
      all.insert(all.end(), p.begin(), p.end());
    }
    std::sort(all.begin(), all.end());
    REQUIRE(all.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(all[i] == i);
  }
}

TEST_CASE("divergence guard keeps the last finite trace") {
  const auto data = blobs(10);
  const auto spec = make_mlp(2, 4, 2, 2, LossKind::mse_on_logits);
  const auto theta0 = init_params(spec, 1.0, InitMode::gaussian, 1);
  const TrainConfig cfg{.step_size = 50.0, .max_steps = 10000, .log_every = 1};
  try {
    train(spec, theta0, data, cfg);
    FAIL("divergence not detected");
  } catch (const TrainingDiverged& e) {
    CHECK(e.kind() == ErrorKind::divergence);
    const auto& t = e.trace();
    REQUIRE_FALSE(t.rows.empty());
    for (const auto& r : t.rows) {
      CHECK(std::isfinite(r.loss));
      CHECK(std::isfinite(r.grad_norm));
    }
    for (double v : t.final_params.values()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("linear interpolation") {
  const ParamVector a(std::vector<double>{0.1, -0.3, 7.0}), b(std::vector<double>{2.0, 0.7, -1.0});
  CHECK(linear_interpolate(a, b, 0.0) == a);
  CHECK(linear_interpolate(a, b, 1.0) == b);
  for (double alpha : {0.0, 0.13, 0.5, 0.999, 1.0}) CHECK(linear_interpolate(a, a, alpha) == a);
  const auto mid = linear_interpolate(a, b, 0.5);
  CHECK(mid[0] == doctest::Approx(1.05));
  CHECK(thrown_kind([&] { linear_interpolate(a, ParamVector(2), 0.5); }) == kind(ErrorKind::dimension));
  CHECK(thrown_kind([&] { linear_interpolate(a, b, 1.5); }) == kind(ErrorKind::parameter));
}
