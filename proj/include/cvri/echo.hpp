#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "cvri/geometry.hpp"
#include "cvri/random.hpp"
#include "cvri/scene.hpp"
#include "cvri/types.hpp"

namespace cvri {

// Turntable echo: E(k_m, phi_n) = sum_i amp_i * exp(-2j k_m (x_i cos phi_n + y_i sin phi_n)).
// Evaluated one angle at a time: the phase matrix over (frequency, scatterer)
// is a wavenumber/projection outer product, so the column is a matrix-vector
// product against the amplitude vector.
template <class Scalar = double>
EchoMatrix<Scalar> simulate_echo(const Scene& scene, const ImagingGeometry& geom) {
  require(scene.geometry_id == geometry_id(geom), "simulate_echo: scene geometry does not match");
  using C = std::complex<Scalar>;

  const int m_count = geom.num_freq;
  const int n_count = geom.num_angle;
  const int s_count = static_cast<int>(scene.scatterers.size());

  EchoMatrix<Scalar> echo;
  echo.geometry_id = scene.geometry_id;
  echo.values = CMatrix<Scalar>::Zero(m_count, n_count);
  if (s_count == 0) return echo;

  RVector<Scalar> k(m_count);
  for (int m = 0; m < m_count; ++m) k(m) = static_cast<Scalar>(wavenumber_at(geom, m));

  RVector<Scalar> xs(s_count), ys(s_count);
  CVector<Scalar> amp(s_count);
  for (int i = 0; i < s_count; ++i) {
    xs(i) = static_cast<Scalar>(scene.scatterers[i].x);
    ys(i) = static_cast<Scalar>(scene.scatterers[i].y);
    amp(i) = static_cast<C>(scene.scatterers[i].amp);
  }

  RMatrix<Scalar> phase(m_count, s_count);
  CMatrix<Scalar> basis(m_count, s_count);
  for (int n = 0; n < n_count; ++n) {
    const Scalar c = static_cast<Scalar>(std::cos(angle_at(geom, n)));
    const Scalar s = static_cast<Scalar>(std::sin(angle_at(geom, n)));
    const RVector<Scalar> proj = c * xs + s * ys; // x cos + y sin per scatterer
    phase.noalias() = Scalar(-2) * k * proj.transpose();
    basis.real() = phase.array().cos();
    basis.imag() = phase.array().sin();
    echo.values.col(n).noalias() = basis * amp;
  }
  return echo;
}

// Mean per-sample signal power |e|^2.
template <class Scalar>
Scalar mean_power(const EchoMatrix<Scalar>& echo) {
  return echo.values.array().abs2().mean();
}

// Adds i.i.d. circular complex Gaussian noise with per-sample variance
// P_signal / 10^(snr_db/10), P_signal the mean per-sample power of `echo`.
// snr_db = +infinity is the documented no-noise sentinel.
template <class Scalar = double>
EchoMatrix<Scalar> add_noise(const EchoMatrix<Scalar>& echo, double snr_db, Rng& rng) {
  if (echo.values.size() == 0) throw std::invalid_argument("add_noise: empty echo");
  if (snr_db == std::numeric_limits<double>::infinity()) return echo;

  const Scalar power = mean_power(echo);
  if (power == Scalar(0)) throw std::invalid_argument("add_noise: all-zero echo, SNR undefined");
  const Scalar noise_var = power / static_cast<Scalar>(std::pow(10.0, snr_db / 10.0));
  const Scalar comp_std = std::sqrt(noise_var / Scalar(2)); // per real component

  EchoMatrix<Scalar> out = echo;
  auto* data = out.values.data();
  const auto count = out.values.size();
  for (Eigen::Index i = 0; i < count; ++i) {
    const double re = rng.normal();
    const double im = rng.normal();
    data[i] += std::complex<Scalar>(comp_std * static_cast<Scalar>(re),
                                    comp_std * static_cast<Scalar>(im));
  }
  return out;
}

} // namespace cvri
