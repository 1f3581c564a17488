#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "hesslens/error.hpp"
#include "hesslens/model.hpp"
#include "hesslens/random.hpp"

namespace hesslens {

enum class BatchMode { full, minibatch };

struct TrainConfig {
  double step_size = 0.1;
  std::size_t max_steps = 100000;
  double grad_norm_tol = 1e-4;
  BatchMode batch = BatchMode::full;
  std::size_t batch_size = 32;  // minibatch mode only; reshuffled every epoch
  std::optional<std::size_t> snapshot_every;
  std::size_t log_every = 100;  // trace rows; step 0 and the final step are always logged
  std::uint64_t seed = 0;       // minibatch shuffling

  void validate() const;
};

enum class StopReason { tolerance, max_steps };

std::string_view to_string(StopReason reason);
std::string_view to_string(BatchMode mode);
BatchMode batch_mode_from_string(std::string_view name);

struct TraceRow {
  std::size_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;  // full-batch
  double weight_norm = 0.0;
};

struct Snapshot {
  std::size_t step = 0;
  ParamVector params;
};

struct TrainTrace {
  std::vector<TraceRow> rows;
  std::vector<Snapshot> snapshots;
  ParamVector final_params;
  StopReason stop_reason = StopReason::max_steps;
  std::size_t total_steps = 0;

  const TraceRow& final_row() const { return rows.back(); }
};

/// Thrown when the loss or gradient turns NaN/Inf; carries the trace up to the
/// last finite step.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, TrainTrace last_finite)
      : Error(ErrorKind::divergence, what), trace_(std::move(last_finite)) {}
  const TrainTrace& trace() const noexcept { return trace_; }

 private:
  TrainTrace trace_;
};

/// Ordered partition of 0..n-1 into batches of `batch_size` (last one may be short).
std::vector<std::vector<std::size_t>> epoch_partition(std::size_t n, std::size_t batch_size,
                                                      Rng& rng);

/// Constant-step gradient descent (full batch or epoch-shuffled minibatches).
/// The full-batch gradient norm is checked at step 0 and once per epoch;
/// training stops when it is <= grad_norm_tol or when max_steps is reached.
TrainTrace train(const MlpSpec& spec, const ParamVector& initial, const Dataset& data,
                 const TrainConfig& cfg);

/// (1 - alpha) * a + alpha * b.
ParamVector linear_interpolate(const ParamVector& a, const ParamVector& b, double alpha);

}  // namespace hesslens
