#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "cvri/geometry.hpp"
#include "cvri/scene.hpp"
#include "cvri/types.hpp"

namespace cvri {

// Renders the training target: each scatterer contributes
// |amp| * exp(-(x_p - x)^2 / sigma_x^2 - (y_q - y)^2 / sigma_y^2) at every
// pixel center. Gaussian tails are not truncated; the direct sum honors
// off-grid positions exactly. Evaluated as a rank-1 outer product per
// scatterer.
template <class Scalar = double>
ImageReal<Scalar> render_ground_truth(const Scene& scene, const ImagingGeometry& geom) {
  require(scene.geometry_id == geometry_id(geom), "render_ground_truth: scene geometry does not match");
  ImageReal<Scalar> img;
  img.geometry_id = scene.geometry_id;
  img.values = RMatrix<Scalar>::Zero(geom.pixels_y, geom.pixels_x);

  RVector<Scalar> gx(geom.pixels_x), gy(geom.pixels_y);
  for (const auto& s : scene.scatterers) {
    const Scalar mag = static_cast<Scalar>(std::abs(s.amp));
    if (mag == Scalar(0)) continue;
    for (int p = 0; p < geom.pixels_x; ++p) {
      const double dx = pixel_x(geom, p) - s.x;
      gx(p) = static_cast<Scalar>(std::exp(-dx * dx / (geom.sigma_x * geom.sigma_x)));
    }
    for (int q = 0; q < geom.pixels_y; ++q) {
      const double dy = pixel_y(geom, q) - s.y;
      gy(q) = static_cast<Scalar>(std::exp(-dy * dy / (geom.sigma_y * geom.sigma_y)));
    }
    img.values.noalias() += mag * gy * gx.transpose();
  }
  return img;
}

} // namespace cvri
