#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvri/checkpoint.hpp"
#include "cvri/config.hpp"
#include "cvri/dataset.hpp"
#include "cvri/metrics.hpp"
#include "cvri/network.hpp"
#include "cvri/operators.hpp"
#include "cvri/parallel.hpp"
#include "cvri/rvnet.hpp"

namespace cvri {

// Heavy-ball momentum update on one parameter component pair; with real
// scalars the complex arithmetic acts on the real and imaginary parts
// independently. Weight decay is passed as 0 for biases.
template <class Scalar>
void sgd_update(std::complex<Scalar>& p, const std::complex<Scalar>& g, std::complex<Scalar>& m,
                Scalar lr, Scalar momentum, Scalar decay) {
  m = momentum * m - lr * (g + decay * p);
  p += m;
}

template <class Scalar>
void sgd_update(Scalar& p, const Scalar& g, Scalar& m, Scalar lr, Scalar momentum, Scalar decay) {
  m = momentum * m - lr * (g + decay * p);
  p += m;
}

template <class Scalar>
void apply_update(NetworkState<Scalar>& net, const NetworkGrad<Scalar>& grad,
                  const TrainConfig& cfg) {
  const Scalar mu = static_cast<Scalar>(cfg.momentum);
  const Scalar wd = static_cast<Scalar>(cfg.weight_decay);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const bool last = (l + 1 == net.layers.size());
    const Scalar lr = static_cast<Scalar>(last ? cfg.lr_output : cfg.lr_hidden);
    auto& layer = net.layers[l];
    for (std::size_t i = 0; i < layer.weights.size(); ++i) {
      auto& m = layer.weight_momentum[i];
      m = mu * m - lr * (grad.layers[l].weights[i] + wd * layer.weights[i]);
      layer.weights[i] += m;
    }
    layer.bias_momentum = mu * layer.bias_momentum - lr * grad.layers[l].bias;
    layer.bias += layer.bias_momentum;
  }
}

template <class Scalar>
void apply_update(RvNetworkState<Scalar>& net, const RvNetworkGrad<Scalar>& grad,
                  const TrainConfig& cfg) {
  const Scalar mu = static_cast<Scalar>(cfg.momentum);
  const Scalar wd = static_cast<Scalar>(cfg.weight_decay);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const bool last = (l + 1 == net.layers.size());
    const Scalar lr = static_cast<Scalar>(last ? cfg.lr_output : cfg.lr_hidden);
    auto& layer = net.layers[l];
    for (std::size_t i = 0; i < layer.weights.size(); ++i) {
      auto& m = layer.weight_momentum[i];
      m = mu * m - lr * (grad.layers[l].weights[i] + wd * layer.weights[i]);
      layer.weights[i] += m;
    }
    layer.bias_momentum = mu * layer.bias_momentum - lr * grad.layers[l].bias;
    layer.bias += layer.bias_momentum;
  }
}

// 99th-percentile magnitude of the training-set matched-filter images,
// pooled over the first norm_sample_count examples. The constant is baked
// into the network state (and the checkpoint) so inference reuses it.
template <class Scalar>
Scalar compute_input_norm(const Dataset<Scalar>& data, const OperatorPlan<Scalar>& plan,
                          int n_threads = 0) {
  const long n = std::min<long>(data.config().norm_sample_count, data.size());
  std::vector<std::vector<Scalar>> mags(static_cast<std::size_t>(n));
  parallel_for(
      n,
      [&](long i) {
        const auto ex = data.example(i, 0);
        const auto adj = adjoint_image(ex.noisy_echo, plan);
        auto& out = mags[static_cast<std::size_t>(i)];
        out.resize(static_cast<std::size_t>(adj.values.size()));
        for (Eigen::Index k = 0; k < adj.values.size(); ++k)
          out[static_cast<std::size_t>(k)] = std::abs(adj.values.data()[k]);
      },
      n_threads);
  std::vector<Scalar> pool;
  for (const auto& m : mags) pool.insert(pool.end(), m.begin(), m.end());
  if (pool.empty()) return Scalar(1);
  const std::size_t idx = static_cast<std::size_t>(0.99 * (pool.size() - 1));
  std::nth_element(pool.begin(), pool.begin() + idx, pool.end());
  const Scalar q = pool[idx];
  return q > Scalar(0) ? q : Scalar(1);
}

struct StepLog {
  std::uint64_t step = 0;
  long epoch = 0;
  double loss = 0;
  double wall_ms = 0;
};

struct TrainingRun {
  std::vector<StepLog> steps;
  std::vector<std::string> checkpoint_paths;
  std::uint64_t final_step = 0;
  long final_epoch = 0;
};

struct TrainOptions {
  std::string checkpoint_dir;          // empty: no checkpoints written
  std::string checkpoint_prefix = "cv";
  std::ostream* log = nullptr;         // one line per step: step epoch loss wall_ms
  int n_threads = 0;
  long start_epoch = 0;                // nonzero when resuming
  std::uint64_t start_step = 0;
};

namespace detail {

template <class Scalar>
struct CvTraits {
  using State = NetworkState<Scalar>;
  using Grad = NetworkGrad<Scalar>;
  static std::pair<Scalar, Grad> example_pass(const State& net, const OperatorPlan<Scalar>& plan,
                                              const Example<Scalar>& ex) {
    const auto cache = forward(ex.noisy_echo, plan, net);
    return {loss(cache.output, ex.target), backward(cache, ex.target, net)};
  }
  static bool grad_finite(const Grad& g, std::size_t& bad_layer) {
    for (std::size_t l = 0; l < g.layers.size(); ++l) {
      for (const auto& w : g.layers[l].weights)
        if (!w.allFinite()) { bad_layer = l; return false; }
      if (!g.layers[l].bias.allFinite()) { bad_layer = l; return false; }
    }
    return true;
  }
  static void save(const std::string& path, const State& net, std::uint64_t step, long epoch) {
    save_checkpoint(path, net, step, static_cast<std::uint64_t>(epoch));
  }
};

template <class Scalar>
struct RvTraits {
  using State = RvNetworkState<Scalar>;
  using Grad = RvNetworkGrad<Scalar>;
  static std::pair<Scalar, Grad> example_pass(const State& net, const OperatorPlan<Scalar>& plan,
                                              const Example<Scalar>& ex) {
    const auto cache = rv_forward(ex.noisy_echo, plan, net);
    return {loss(cache.output, ex.target), rv_backward(cache, ex.target, net)};
  }
  static bool grad_finite(const Grad& g, std::size_t& bad_layer) {
    for (std::size_t l = 0; l < g.layers.size(); ++l) {
      for (const auto& w : g.layers[l].weights)
        if (!w.allFinite()) { bad_layer = l; return false; }
      if (!g.layers[l].bias.allFinite()) { bad_layer = l; return false; }
    }
    return true;
  }
  static void save(const std::string& path, const State& net, std::uint64_t step, long epoch) {
    save_checkpoint(path, net, step, static_cast<std::uint64_t>(epoch));
  }
};

// Momentum-SGD over the dataset. Batch members are processed concurrently;
// gradients are reduced in example-index order and averaged, so the result
// is bit-identical for any thread count.
template <class Scalar, class Traits>
TrainingRun train_loop(typename Traits::State& net, const Dataset<Scalar>& data,
                       const OperatorPlan<Scalar>& plan, const TrainOptions& opt) {
  const TrainConfig& cfg = data.config();
  const long batch = cfg.batch_size;
  const long steps_per_epoch = cfg.examples_total / batch;
  using Grad = typename Traits::Grad;

  TrainingRun run;
  std::uint64_t step = opt.start_step;
  std::vector<Grad> slot_grads(static_cast<std::size_t>(batch));
  std::vector<Scalar> slot_loss(static_cast<std::size_t>(batch));
  std::vector<std::string> slot_error(static_cast<std::size_t>(batch));

  for (long epoch = opt.start_epoch; epoch < cfg.epochs; ++epoch) {
    for (long bi = 0; bi < steps_per_epoch; ++bi) {
      const auto t0 = std::chrono::steady_clock::now();
      const long base = bi * batch;
      parallel_for(
          batch,
          [&](long s) {
            try {
              const auto ex = data.example(base + s, epoch);
              auto [l, g] = Traits::example_pass(net, plan, ex);
              slot_loss[static_cast<std::size_t>(s)] = l;
              slot_grads[static_cast<std::size_t>(s)] = std::move(g);
            } catch (const std::exception& e) {
              slot_error[static_cast<std::size_t>(s)] = e.what();
            }
          },
          opt.n_threads);
      for (const auto& err : slot_error)
        if (!err.empty()) throw std::runtime_error("training step " + std::to_string(step + 1) +
                                                   ": " + err);

      Grad total = slot_grads[0];
      Scalar mean_loss = slot_loss[0];
      for (long s = 1; s < batch; ++s) {
        total += slot_grads[static_cast<std::size_t>(s)];
        mean_loss += slot_loss[static_cast<std::size_t>(s)];
      }
      total *= Scalar(1) / static_cast<Scalar>(batch);
      mean_loss /= static_cast<Scalar>(batch);

      if (!std::isfinite(static_cast<double>(mean_loss)))
        throw std::runtime_error("training aborted at step " + std::to_string(step + 1) +
                                 ": non-finite loss");
      std::size_t bad_layer = 0;
      if (!Traits::grad_finite(total, bad_layer))
        throw std::runtime_error("training aborted at step " + std::to_string(step + 1) +
                                 ": non-finite gradient in layer " + std::to_string(bad_layer));

      apply_update(net, total, cfg);
      ++step;
      const double wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      run.steps.push_back({step, epoch, static_cast<double>(mean_loss), wall_ms});
      if (opt.log)
        (*opt.log) << step << ' ' << epoch << ' ' << static_cast<double>(mean_loss) << ' '
                   << wall_ms << '\n';
    }
    if (!opt.checkpoint_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_epoch%03ld.ckpt", opt.checkpoint_prefix.c_str(),
                    epoch + 1);
      const std::string path = opt.checkpoint_dir + "/" + name;
      Traits::save(path, net, step, epoch + 1);
      run.checkpoint_paths.push_back(path);
    }
    run.final_epoch = epoch + 1;
  }
  run.final_step = step;
  return run;
}

} // namespace detail

// Trains the complex-valued network. A fresh state (start_epoch 0) is bound
// to the geometry and gets its input-normalization constant here; a resumed
// state keeps the values restored from its checkpoint.
template <class Scalar>
TrainingRun train_cv(NetworkState<Scalar>& net, const Dataset<Scalar>& data,
                     const TrainOptions& opt = {}) {
  const auto plan = make_plan<Scalar>(data.geometry());
  if (opt.start_epoch == 0) {
    net.geometry_id = plan.geometry_id;
    net.input_norm = compute_input_norm(data, plan, opt.n_threads);
  }
  return detail::train_loop<Scalar, detail::CvTraits<Scalar>>(net, data, plan, opt);
}

template <class Scalar>
TrainingRun train_rv(RvNetworkState<Scalar>& net, const Dataset<Scalar>& data,
                     const TrainOptions& opt = {}) {
  const auto plan = make_plan<Scalar>(data.geometry());
  if (opt.start_epoch == 0) {
    net.geometry_id = plan.geometry_id;
    net.input_norm = compute_input_norm(data, plan, opt.n_threads);
  }
  return detail::train_loop<Scalar, detail::RvTraits<Scalar>>(net, data, plan, opt);
}

// Mean RMSE of a reconstruction method over held-out examples at one SNR.
// The held-out streams are disjoint from every training stream by
// construction. The scene stream does not depend on the SNR, so different
// SNR cells score the same scenes and per-step trends are paired
// comparisons rather than scene-resampling noise.
template <class Scalar, class MethodFn>
Scalar heldout_rmse(const ImagingGeometry& geom, const TrainConfig& cfg, double snr_db,
                    long n_examples, MethodFn&& method, int n_threads = 0) {
  TrainConfig ecfg = cfg;
  ecfg.snr_min_db = snr_db;
  ecfg.snr_max_db = snr_db;
  ecfg.examples_total = std::max<int>(static_cast<int>(n_examples), 1);
  ecfg.batch_size = 1;
  const auto data = heldout_dataset<Scalar>(geom, ecfg, 1ull << 32);
  std::vector<Scalar> errs(static_cast<std::size_t>(n_examples));
  parallel_for(
      n_examples,
      [&](long i) {
        const auto ex = data.example(i, 0);
        const ImageReal<Scalar> out = method(ex.noisy_echo);
        errs[static_cast<std::size_t>(i)] = rmse(out, ex.target);
      },
      n_threads);
  Scalar sum = 0;
  for (const Scalar e : errs) sum += e;
  return sum / static_cast<Scalar>(n_examples);
}

// Convenience wrapper for the trained network (the during-training
// evaluation path).
template <class Scalar>
Scalar heldout_rmse_cv(const NetworkState<Scalar>& net, const ImagingGeometry& geom,
                       const TrainConfig& cfg, double snr_db, long n_examples,
                       int n_threads = 0) {
  const auto plan = make_plan<Scalar>(geom);
  return heldout_rmse<Scalar>(
      geom, cfg, snr_db, n_examples,
      [&](const EchoMatrix<Scalar>& echo) { return forward(echo, plan, net).output; }, n_threads);
}

} // namespace cvri
