#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>

#include "cvri/echo.hpp"
#include "cvri/geometry.hpp"
#include "cvri/types.hpp"

namespace cvri {

namespace detail {

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

// 2-D complex FFT, columns then rows. `inverse` uses the e^{+j} kernel and
// divides by the transform length (Eigen's convention).
template <class Scalar>
void fft2_inplace(CMatrix<Scalar>& a, bool inverse) {
  Eigen::FFT<Scalar> fft;
  CVector<Scalar> in(a.rows()), out(a.rows());
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    in = a.col(c);
    if (inverse)
      fft.inv(out, in);
    else
      fft.fwd(out, in);
    a.col(c) = out;
  }
  CVector<Scalar> rin(a.cols()), rout(a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    rin = a.row(r).transpose();
    if (inverse)
      fft.inv(rout, rin);
    else
      fft.fwd(rout, rin);
    a.row(r) = rout.transpose();
  }
}

} // namespace detail

// Precomputed plan for the FFT-implicit operator pair A / A^H under the
// small-angle rectangular-spectrum approximation: echo samples are treated
// as a uniform grid in (k_x, k_y) = (2k_m, 2 k_c phi_n) with k_c the center
// wavenumber. Zero-padding is the smallest power of two giving an image
// sample pitch at or below the requested pixel pitch; the inverse transform
// is centered, so the output grid always contains the origin.
//
// The matched-filter image therefore lives on the operator grid (pitch
// delta_x/delta_y, coordinates grid_x/grid_y) rather than on the normative
// pixel-center grid; the residual mismatch is part of the modeling error the
// enhancement network is trained to absorb.
template <class Scalar = double>
struct OperatorPlan {
  ImagingGeometry geom;
  std::uint64_t geometry_id = 0;
  int pad_x = 0, pad_y = 0;       // padded transform sizes (x <-> frequency rows, y <-> angle cols)
  Scalar dkx = 0, dky = 0;        // spectral sample spacing
  Scalar kx0 = 0, ky0 = 0;        // spectral grid origin (first sample)
  Scalar delta_x = 0, delta_y = 0; // operator-grid pitch
  int crop_x0 = 0, crop_y0 = 0;   // first retained transform sample per axis
  CVector<Scalar> ramp_x, ramp_y; // exp(j k0 * coordinate) over retained samples
  RVector<Scalar> mod_m, mod_n;   // (-1)^m, (-1)^n output-centering modulation
  Scalar scale = 0;               // 1/(M*N): unit scatterer at origin -> peak 1

  // Operator-grid coordinates of image sample (q, p).
  double grid_x(int p) const { return (crop_x0 + p - pad_x / 2) * static_cast<double>(delta_x); }
  double grid_y(int q) const { return (crop_y0 + q - pad_y / 2) * static_cast<double>(delta_y); }
};

template <class Scalar = double>
OperatorPlan<Scalar> make_plan(const ImagingGeometry& geom) {
  validate(geom);
  OperatorPlan<Scalar> plan;
  plan.geom = geom;
  plan.geometry_id = geometry_id(geom);

  const double kc = center_wavenumber(geom);
  const double dkx = 2.0 * 2.0 * kPi * freq_step(geom) / kSpeedOfLight;
  const double dky = 2.0 * kc * angle_step(geom);
  plan.dkx = static_cast<Scalar>(dkx);
  plan.dky = static_cast<Scalar>(dky);
  plan.kx0 = static_cast<Scalar>(2.0 * wavenumber_at(geom, 0));
  plan.ky0 = static_cast<Scalar>(2.0 * kc * angle_at(geom, 0));

  // The unambiguous swath 2*pi/dk must cover the imaging region, otherwise
  // the echo sampling aliases inside the image.
  if (2.0 * kPi / dkx < geom.region_x)
    throw std::invalid_argument("make_plan: frequency sampling too coarse for region_x (aliasing)");
  if (2.0 * kPi / dky < geom.region_y)
    throw std::invalid_argument("make_plan: angle sampling too coarse for region_y (aliasing)");

  const double pitch_x = pixel_pitch_x(geom);
  const double pitch_y = pixel_pitch_y(geom);
  const int need_x = static_cast<int>(std::ceil(2.0 * kPi / (dkx * pitch_x)));
  const int need_y = static_cast<int>(std::ceil(2.0 * kPi / (dky * pitch_y)));
  plan.pad_x = detail::next_pow2(std::max(geom.num_freq, need_x));
  plan.pad_y = detail::next_pow2(std::max(geom.num_angle, need_y));
  plan.delta_x = static_cast<Scalar>(2.0 * kPi / (plan.pad_x * dkx));
  plan.delta_y = static_cast<Scalar>(2.0 * kPi / (plan.pad_y * dky));
  plan.crop_x0 = plan.pad_x / 2 - geom.pixels_x / 2;
  plan.crop_y0 = plan.pad_y / 2 - geom.pixels_y / 2;

  plan.ramp_x.resize(geom.pixels_x);
  for (int p = 0; p < geom.pixels_x; ++p) {
    const double phase = plan.kx0 * plan.grid_x(p);
    plan.ramp_x(p) = std::complex<Scalar>(static_cast<Scalar>(std::cos(phase)),
                                          static_cast<Scalar>(std::sin(phase)));
  }
  plan.ramp_y.resize(geom.pixels_y);
  for (int q = 0; q < geom.pixels_y; ++q) {
    const double phase = plan.ky0 * plan.grid_y(q);
    plan.ramp_y(q) = std::complex<Scalar>(static_cast<Scalar>(std::cos(phase)),
                                          static_cast<Scalar>(std::sin(phase)));
  }

  plan.mod_m.resize(geom.num_freq);
  for (int m = 0; m < geom.num_freq; ++m) plan.mod_m(m) = (m % 2 == 0) ? Scalar(1) : Scalar(-1);
  plan.mod_n.resize(geom.num_angle);
  for (int n = 0; n < geom.num_angle; ++n) plan.mod_n(n) = (n % 2 == 0) ? Scalar(1) : Scalar(-1);

  plan.scale = Scalar(1) / static_cast<Scalar>(static_cast<double>(geom.num_freq) * geom.num_angle);
  return plan;
}

// Matched-filter image x_hat = A^H y via zero-padded centered 2-D inverse DFT.
template <class Scalar>
ImageComplex<Scalar> adjoint_image(const EchoMatrix<Scalar>& echo, const OperatorPlan<Scalar>& plan) {
  require(echo.geometry_id == plan.geometry_id, "adjoint_image: echo geometry does not match plan");
  require(echo.num_freq() == plan.geom.num_freq && echo.num_angle() == plan.geom.num_angle,
          "adjoint_image: echo dimensions do not match plan");

  CMatrix<Scalar> grid = CMatrix<Scalar>::Zero(plan.pad_x, plan.pad_y);
  grid.topLeftCorner(plan.geom.num_freq, plan.geom.num_angle) =
      echo.values.cwiseProduct((plan.mod_m * plan.mod_n.transpose()).template cast<std::complex<Scalar>>());
  detail::fft2_inplace(grid, /*inverse=*/true);

  const Scalar post = plan.scale * static_cast<Scalar>(plan.pad_x) * static_cast<Scalar>(plan.pad_y);
  ImageComplex<Scalar> img;
  img.geometry_id = plan.geometry_id;
  // Transform rows run along x (frequency axis), columns along y; the image
  // is indexed (y, x).
  img.values = grid.block(plan.crop_x0, plan.crop_y0, plan.geom.pixels_x, plan.geom.pixels_y)
                   .transpose()
                   .cwiseProduct(plan.ramp_y * plan.ramp_x.transpose()) *
               post;
  return img;
}

// Exact adjoint of adjoint_image (the approximate forward operator A):
// the same pipeline reversed with conjugated phase factors.
template <class Scalar>
EchoMatrix<Scalar> forward_echo(const ImageComplex<Scalar>& image, const OperatorPlan<Scalar>& plan) {
  require(image.geometry_id == plan.geometry_id, "forward_echo: image geometry does not match plan");
  require(image.values.rows() == plan.geom.pixels_y && image.values.cols() == plan.geom.pixels_x,
          "forward_echo: image dimensions do not match plan");

  CMatrix<Scalar> grid = CMatrix<Scalar>::Zero(plan.pad_x, plan.pad_y);
  grid.block(plan.crop_x0, plan.crop_y0, plan.geom.pixels_x, plan.geom.pixels_y) =
      image.values.cwiseProduct((plan.ramp_y * plan.ramp_x.transpose()).conjugate()).transpose();
  detail::fft2_inplace(grid, /*inverse=*/false);

  EchoMatrix<Scalar> echo;
  echo.geometry_id = plan.geometry_id;
  echo.values = grid.topLeftCorner(plan.geom.num_freq, plan.geom.num_angle)
                    .cwiseProduct((plan.mod_m * plan.mod_n.transpose()).template cast<std::complex<Scalar>>()) *
                plan.scale;
  return echo;
}

// Exact matched filter by direct summation on the normative pixel-center
// grid, with no rectangular-spectrum approximation. Test oracle: the gap
// between this and adjoint_image is the documented modeling error.
template <class Scalar = double>
ImageComplex<Scalar> oracle_adjoint(const EchoMatrix<Scalar>& echo, const ImagingGeometry& geom) {
  require_geometry(echo, geom, "oracle_adjoint");
  const double terms = static_cast<double>(geom.num_freq) * geom.num_angle *
                       static_cast<double>(geom.pixels_x) * geom.pixels_y;
  if (terms > 1e8)
    throw std::invalid_argument("oracle_adjoint: geometry too large for direct evaluation (" +
                                std::to_string(terms) + " terms > 1e8)");

  using C = std::complex<Scalar>;
  ImageComplex<Scalar> img;
  img.geometry_id = echo.geometry_id;
  img.values = CMatrix<Scalar>::Zero(geom.pixels_y, geom.pixels_x);

  RVector<Scalar> xs(geom.pixels_x), ys(geom.pixels_y);
  for (int p = 0; p < geom.pixels_x; ++p) xs(p) = static_cast<Scalar>(pixel_x(geom, p));
  for (int q = 0; q < geom.pixels_y; ++q) ys(q) = static_cast<Scalar>(pixel_y(geom, q));

  RMatrix<Scalar> proj(geom.pixels_y, geom.pixels_x);
  RMatrix<Scalar> phase(geom.pixels_y, geom.pixels_x);
  CMatrix<Scalar> basis(geom.pixels_y, geom.pixels_x);
  for (int n = 0; n < geom.num_angle; ++n) {
    const Scalar c = static_cast<Scalar>(std::cos(angle_at(geom, n)));
    const Scalar s = static_cast<Scalar>(std::sin(angle_at(geom, n)));
    proj.noalias() = s * ys * RVector<Scalar>::Ones(geom.pixels_x).transpose();
    proj.noalias() += c * RVector<Scalar>::Ones(geom.pixels_y) * xs.transpose();
    for (int m = 0; m < geom.num_freq; ++m) {
      const Scalar k2 = Scalar(2) * static_cast<Scalar>(wavenumber_at(geom, m));
      phase = k2 * proj;
      basis.real() = phase.array().cos();
      basis.imag() = phase.array().sin();
      img.values.noalias() += echo.values(m, n) * basis;
    }
  }
  img.values *= Scalar(1) / static_cast<Scalar>(static_cast<double>(geom.num_freq) * geom.num_angle);
  return img;
}

} // namespace cvri
