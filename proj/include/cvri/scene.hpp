#pragma once

#include <complex>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvri/geometry.hpp"
#include "cvri/random.hpp"

namespace cvri {

// A single ideal point scatterer. Coordinates are continuous, deliberately
// not snapped to pixel centers.
struct Scatterer {
  double x = 0.0; // m
  double y = 0.0; // m
  std::complex<double> amp;
};

struct Scene {
  std::vector<Scatterer> scatterers;
  std::uint64_t geometry_id = 0;
};

// Draws n scatterers with coordinates i.i.d. uniform over the imaging region
// and amplitudes standard complex Gaussian. Per scatterer the stream is
// consumed in the order x, y, Re(amp), Im(amp).
inline Scene generate_scene(const ImagingGeometry& geom, int n_scatterers, Rng& rng) {
  if (n_scatterers < 1) throw std::invalid_argument("generate_scene: n_scatterers must be >= 1");
  Scene scene;
  scene.geometry_id = geometry_id(geom);
  scene.scatterers.reserve(static_cast<std::size_t>(n_scatterers));
  const double hx = 0.5 * geom.region_x;
  const double hy = 0.5 * geom.region_y;
  for (int i = 0; i < n_scatterers; ++i) {
    Scatterer s;
    s.x = rng.uniform(-hx, hx);
    s.y = rng.uniform(-hy, hy);
    const double re = rng.normal();
    const double im = rng.normal();
    s.amp = {re, im};
    scene.scatterers.push_back(s);
  }
  return scene;
}

// Text format: one scatterer per line "x y Re(amp) Im(amp)", '#' comments.
inline void save_scene(std::ostream& out, const Scene& scene) {
  out.precision(17);
  out << "# x_m y_m amp_re amp_im\n";
  for (const auto& s : scene.scatterers)
    out << s.x << ' ' << s.y << ' ' << s.amp.real() << ' ' << s.amp.imag() << '\n';
}

inline void save_scene(const std::string& path, const Scene& scene) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  save_scene(out, scene);
}

inline Scene load_scene(std::istream& in, const ImagingGeometry& geom) {
  Scene scene;
  scene.geometry_id = geometry_id(geom);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ss(line);
    Scatterer s;
    double re = 0.0, im = 0.0;
    if (!(ss >> s.x)) continue; // blank line
    if (!(ss >> s.y >> re >> im))
      throw std::runtime_error("scene line " + std::to_string(lineno) +
                               ": expected 'x y amp_re amp_im'");
    s.amp = {re, im};
    scene.scatterers.push_back(s);
  }
  return scene;
}

inline Scene load_scene(const std::string& path, const ImagingGeometry& geom) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file '" + path + "'");
  return load_scene(in, geom);
}

} // namespace cvri
