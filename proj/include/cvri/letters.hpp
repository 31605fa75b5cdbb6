#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvri/geometry.hpp"
#include "cvri/scene.hpp"

namespace cvri {

namespace detail {

// Dot-matrix glyphs on a 3x5 grid, row 0 at the top.
inline const std::map<char, std::vector<std::pair<int, int>>>& glyph_table() {
  static const std::map<char, std::vector<std::pair<int, int>>> table = {
      // (col, row)
      {'N', {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2}, {2, 0}, {2, 1}, {2, 2}, {2, 3}, {2, 4}}},
      {'U', {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 0}, {2, 1}, {2, 2}, {2, 3}}},
      {'D', {{0, 0}, {0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 0}, {1, 4}, {2, 1}, {2, 2}, {2, 3}}},
      {'T', {{0, 0}, {1, 0}, {2, 0}, {1, 1}, {1, 2}, {1, 3}, {1, 4}}},
      {'C', {{1, 0}, {2, 0}, {0, 1}, {0, 2}, {0, 3}, {1, 4}, {2, 4}}},
      {'V', {{0, 0}, {0, 1}, {0, 2}, {2, 0}, {2, 1}, {2, 2}, {1, 3}, {1, 4}}},
      {'I', {{0, 0}, {1, 0}, {2, 0}, {1, 1}, {1, 2}, {1, 3}, {0, 4}, {1, 4}, {2, 4}}},
  };
  return table;
}

} // namespace detail

// Deterministic layout of unit-amplitude point scatterers tracing the glyphs
// of `name`, centered in the imaging region. Dot spacing is derived from the
// region so the word spans 90% of the x extent; every coordinate is offset by
// an irrational fraction (1/sqrt(5)) of the pixel pitch so no scatterer sits
// on a pixel center.
inline Scene letter_scene(const std::string& name, const ImagingGeometry& geom) {
  if (name.empty()) throw std::invalid_argument("letter_scene: empty name");
  const auto& table = detail::glyph_table();
  for (char c : name)
    if (table.find(static_cast<char>(std::toupper(static_cast<unsigned char>(c)))) == table.end())
      throw std::invalid_argument("letter_scene: no glyph for '" + std::string(1, c) + "'");

  const int n_letters = static_cast<int>(name.size());
  const int width_dots = 3 * n_letters + (n_letters - 1); // 1-dot gap between letters
  const double d = std::min(0.9 * geom.region_x / std::max(1, width_dots - 1),
                            0.9 * geom.region_y / 4.0);
  const double x0 = -0.5 * (width_dots - 1) * d;
  const double offset_x = pixel_pitch_x(geom) / std::sqrt(5.0);
  const double offset_y = pixel_pitch_y(geom) / std::sqrt(5.0);

  Scene scene;
  scene.geometry_id = geometry_id(geom);
  for (int li = 0; li < n_letters; ++li) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(name[li])));
    for (const auto& [col, row] : table.at(c)) {
      Scatterer s;
      s.x = x0 + (4 * li + col) * d + offset_x;
      s.y = (2 - row) * d + offset_y;
      s.amp = {1.0, 0.0};
      scene.scatterers.push_back(s);
    }
  }
  return scene;
}

} // namespace cvri
