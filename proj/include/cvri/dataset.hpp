#pragma once

#include <cstdint>

#include "cvri/config.hpp"
#include "cvri/echo.hpp"
#include "cvri/geometry.hpp"
#include "cvri/ground_truth.hpp"
#include "cvri/random.hpp"
#include "cvri/scene.hpp"

namespace cvri {

template <class Scalar = double>
struct Example {
  Scene scene;
  EchoMatrix<Scalar> clean_echo;
  EchoMatrix<Scalar> noisy_echo;
  ImageReal<Scalar> target;
  double snr_db = 0;
};

// Lazy (echo, target) stream: every example is regenerated on demand from
// (seed, index), so nothing needs to be materialized and parallel generation
// stays deterministic. The scene (and with it the clean echo and the target)
// is a function of (seed, index) alone; the noise realization and the SNR
// draw are keyed by (seed, index, epoch) so each presentation sees fresh
// noise.
template <class Scalar = double>
class Dataset {
 public:
  Dataset(const ImagingGeometry& geom, const TrainConfig& cfg) : geom_(geom), cfg_(cfg) {
    validate(geom);
    validate(cfg);
  }

  long size() const { return cfg_.examples_total; }
  const ImagingGeometry& geometry() const { return geom_; }
  const TrainConfig& config() const { return cfg_; }

  Scene scene_for(long index) const {
    Rng rng(stream_seed(cfg_.seed, {kStreamScene, static_cast<std::uint64_t>(index)}));
    const int n = static_cast<int>(rng.uniform_int(cfg_.scatter_min, cfg_.scatter_max));
    return generate_scene(geom_, n, rng);
  }

  Example<Scalar> example(long index, long epoch = 0) const {
    Example<Scalar> ex;
    ex.scene = scene_for(index);
    ex.clean_echo = simulate_echo<Scalar>(ex.scene, geom_);
    ex.target = render_ground_truth<Scalar>(ex.scene, geom_);
    Rng noise_rng(stream_seed(cfg_.seed, {kStreamNoise, static_cast<std::uint64_t>(index),
                                          static_cast<std::uint64_t>(epoch)}));
    ex.snr_db = noise_rng.uniform(cfg_.snr_min_db, cfg_.snr_max_db);
    ex.noisy_echo = add_noise(ex.clean_echo, ex.snr_db, noise_rng);
    return ex;
  }

 private:
  ImagingGeometry geom_;
  TrainConfig cfg_;
};

// Held-out dataset whose streams are disjoint from any training dataset
// seeded with `train_seed`.
template <class Scalar = double>
Dataset<Scalar> heldout_dataset(const ImagingGeometry& geom, TrainConfig cfg,
                                std::uint64_t salt = 0) {
  cfg.seed = stream_seed(cfg.seed, {kStreamEval, salt});
  return Dataset<Scalar>(geom, cfg);
}

} // namespace cvri
