#include "hesslens/training.hpp"

#include <cmath>
#include <sstream>

namespace hesslens {

void TrainConfig::validate() const {
  if (!(step_size > 0.0)) throw Error(ErrorKind::parameter, "step_size must be > 0");
  if (max_steps < 1) throw Error(ErrorKind::parameter, "max_steps must be >= 1");
  if (!(grad_norm_tol >= 0.0)) throw Error(ErrorKind::parameter, "grad_norm_tol must be >= 0");
  if (batch == BatchMode::minibatch && batch_size < 1)
    throw Error(ErrorKind::parameter, "batch_size must be >= 1");
  if (snapshot_every && *snapshot_every < 1)
    throw Error(ErrorKind::parameter, "snapshot_every must be >= 1");
  if (log_every < 1) throw Error(ErrorKind::parameter, "log_every must be >= 1");
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::tolerance ? "tolerance" : "max_steps";
}

std::string_view to_string(BatchMode mode) {
  return mode == BatchMode::full ? "full" : "minibatch";
}

BatchMode batch_mode_from_string(std::string_view name) {
  if (name == "full") return BatchMode::full;
  if (name == "minibatch" || name == "sgd") return BatchMode::minibatch;
  throw Error(ErrorKind::parameter, "unknown batch mode '" + std::string(name) + "'");
}

std::vector<std::vector<std::size_t>> epoch_partition(std::size_t n, std::size_t batch_size,
                                                      Rng& rng) {
  const auto order = rng.permutation(n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

TrainTrace train(const MlpSpec& spec, const ParamVector& initial, const Dataset& data,
                 const TrainConfig& cfg) {
  cfg.validate();
  check_compatible(spec, data);
  if (initial.size() != param_count(spec))
    throw Error(ErrorKind::dimension, "initial parameters do not match the network");

  const std::size_t n = data.size();
  const std::size_t steps_per_epoch =
      cfg.batch == BatchMode::full ? 1 : (n + cfg.batch_size - 1) / cfg.batch_size;
  Rng rng(cfg.seed);
  ParamVector theta = initial;
  TrainTrace trace;
  ParamVector last_finite = initial;
  std::vector<std::vector<std::size_t>> batches;
  bool logged_any = false;
  std::size_t last_logged = 0;

  for (std::size_t t = 0;; ++t) {
    const bool checkpoint = t % steps_per_epoch == 0 || t == cfg.max_steps;
    std::optional<StopReason> stop;
    LossAndGradient full;
    if (checkpoint) {
      full = loss_and_gradient(spec, theta, data);
      const double gnorm = full.gradient.norm();
      if (!std::isfinite(full.loss) || !std::isfinite(gnorm)) {
        trace.final_params = last_finite;
        trace.total_steps = t;
        std::ostringstream msg;
        msg << "loss became non-finite at step " << t;
        throw TrainingDiverged(msg.str(), std::move(trace));
      }
      last_finite = theta;
      if (gnorm <= cfg.grad_norm_tol) {
        stop = StopReason::tolerance;
      } else if (t == cfg.max_steps) {
        stop = StopReason::max_steps;
      }
      if (!logged_any || t - last_logged >= cfg.log_every || stop) {
        trace.rows.push_back({t, full.loss, gnorm, theta.norm()});
        logged_any = true;
        last_logged = t;
      }
    }
    if (cfg.snapshot_every && (t % *cfg.snapshot_every == 0 || stop))
      trace.snapshots.push_back({t, theta});
    if (stop) {
      trace.stop_reason = *stop;
      trace.total_steps = t;
      trace.final_params = std::move(theta);
      return trace;
    }

    const ParamVector* g = &full.gradient;
    LossAndGradient batch;
    if (cfg.batch == BatchMode::minibatch) {
      if (t % steps_per_epoch == 0) batches = epoch_partition(n, cfg.batch_size, rng);
      batch = loss_and_gradient(spec, theta, data, batches[t % steps_per_epoch]);
      g = &batch.gradient;
    }
    auto th = theta.values();
    const auto gv = g->values();
    for (std::size_t i = 0; i < th.size(); ++i) th[i] -= cfg.step_size * gv[i];
  }
}

ParamVector linear_interpolate(const ParamVector& a, const ParamVector& b, double alpha) {
  if (a.size() != b.size()) throw Error(ErrorKind::dimension, "interpolation endpoints differ in size");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::parameter, "alpha must lie in [0, 1]");
  if (alpha == 0.0) return a;
  if (alpha == 1.0) return b;
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + alpha * (b[i] - a[i]);
  return out;
}

}  // namespace hesslens
