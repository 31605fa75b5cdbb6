#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include "cvri/types.hpp"

namespace cvri {

// Log-magnitude display mapping: 20*log10(v/v_max) clamped to
// [-dynamic_range_db, 0], mapped linearly onto 0..255. v = 0 (and any value
// at or below the floor) maps to 0; v = v_max maps to 255.
inline int render_intensity(double v, double v_max, double dynamic_range_db) {
  if (v <= 0.0 || v_max <= 0.0) return 0;
  double db = 20.0 * std::log10(v / v_max);
  db = std::max(-dynamic_range_db, std::min(0.0, db));
  return static_cast<int>(std::lround(255.0 * (dynamic_range_db + db) / dynamic_range_db));
}

// Writes an 8-bit binary PGM. Rows are emitted top-to-bottom with +y up, so
// the file displays in conventional image orientation. An all-zero image
// produces a uniform floor frame and a warning on stderr.
template <class Scalar>
void write_pgm(const std::string& path, const ImageReal<Scalar>& img, double dynamic_range_db) {
  require(dynamic_range_db > 0, "write_pgm: dynamic range must be > 0");
  require(img.values.minCoeff() >= Scalar(0), "write_pgm: image must be non-negative");
  const double v_max = static_cast<double>(img.values.maxCoeff());
  if (v_max <= 0.0)
    std::cerr << "write_pgm: all-zero image '" << path << "', emitting uniform floor\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "P5\n" << img.values.cols() << ' ' << img.values.rows() << "\n255\n";
  for (Eigen::Index q = img.values.rows(); q-- > 0;) {
    for (Eigen::Index p = 0; p < img.values.cols(); ++p) {
      const auto byte = static_cast<std::uint8_t>(
          render_intensity(static_cast<double>(img.values(q, p)), v_max, dynamic_range_db));
      out.write(reinterpret_cast<const char*>(&byte), 1);
    }
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

} // namespace cvri
