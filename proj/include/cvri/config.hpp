#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cvri/geometry.hpp"

namespace cvri {

// Training hyperparameters and dataset recipe. Defaults are the full-scale
// values; the desk preset shrinks only dataset size and geometry.
struct TrainConfig {
  int examples_total = 50000;
  int batch_size = 50;
  int epochs = 5;
  double momentum = 0.9;
  double weight_decay = 0.001;
  double lr_hidden = 3e-5;  // first three conv layers
  double lr_output = 1e-5;  // final conv layer
  std::uint64_t seed = 1;
  double snr_min_db = -10.0;
  double snr_max_db = 10.0;
  int scatter_min = 50;   // scatterers per training scene, uniform draw
  int scatter_max = 300;
  int cv_hidden_channels = 16;
  int rv_hidden_channels = 23;
  int hidden_layers = 3;  // trainable conv layers before the output layer
  int kernel_size = 5;
  int norm_sample_count = 100; // examples pooled for the input-normalization constant
};

inline void validate(const TrainConfig& c) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("TrainConfig: " + msg); };
  if (c.examples_total < 1) fail("examples_total must be >= 1");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (c.examples_total % c.batch_size != 0)
    fail("batch_size must divide examples_total (got " + std::to_string(c.batch_size) + " vs " +
         std::to_string(c.examples_total) + ")");
  if (c.epochs < 1) fail("epochs must be >= 1");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) fail("momentum must be in [0, 1)");
  if (!(c.weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (!(c.lr_hidden > 0.0)) fail("lr_hidden must be > 0");
  if (!(c.lr_output > 0.0)) fail("lr_output must be > 0");
  if (!(c.snr_max_db >= c.snr_min_db)) fail("snr_max_db must be >= snr_min_db");
  if (c.scatter_min < 1) fail("scatter_min must be >= 1");
  if (c.scatter_max < c.scatter_min) fail("scatter_max must be >= scatter_min");
  if (c.cv_hidden_channels < 1) fail("cv_hidden_channels must be >= 1");
  if (c.rv_hidden_channels < 1) fail("rv_hidden_channels must be >= 1");
  if (c.hidden_layers < 1) fail("hidden_layers must be >= 1");
  if (c.kernel_size < 1 || c.kernel_size % 2 == 0) fail("kernel_size must be odd and >= 1");
  if (c.norm_sample_count < 1) fail("norm_sample_count must be >= 1");
}

// Full-scale geometry: 213.6-226.4 GHz over 500 samples, -1.68..1.67 deg over
// 300 samples, 0.7 x 0.7 m region on a 236 x 236 grid, 4 mm PSF width.
inline ImagingGeometry paper_geometry() {
  ImagingGeometry g;
  g.f_min = 213.6e9;
  g.f_max = 226.4e9;
  g.num_freq = 500;
  g.phi_min = deg_to_rad(-1.68);
  g.phi_max = deg_to_rad(1.67);
  g.num_angle = 300;
  g.region_x = 0.7;
  g.region_y = 0.7;
  g.pixels_x = 236;
  g.pixels_y = 236;
  g.sigma_x = 0.004;
  g.sigma_y = 0.004;
  return g;
}

inline TrainConfig paper_train_config() { return TrainConfig{}; }

// Desk-scale geometry: bandwidth and angle span scaled so the conventional /
// target resolution ratio stays ~2.5 while everything runs in seconds.
// 64 x 48 echo samples, 64 x 64 pixels, 5.4 mm PSF width. The region extents
// are chosen so the power-of-two operator grid covers ~98% of the region on
// both axes (pitch 4 mm in x, 3 mm in y).
inline ImagingGeometry desk_geometry() {
  ImagingGeometry g;
  g.f_min = 215.3e9;
  g.f_max = 224.7e9; // 9.4 GHz bandwidth -> 1.59 cm range resolution
  g.num_freq = 64;
  g.phi_min = deg_to_rad(-1.225);
  g.phi_max = deg_to_rad(1.225); // 2.45 deg span -> 1.59 cm azimuth resolution
  g.num_angle = 48;
  g.region_x = 0.256;
  g.region_y = 0.192;
  g.pixels_x = 64;
  g.pixels_y = 64;
  g.sigma_x = 0.0054;
  g.sigma_y = 0.0054;
  return g;
}

inline TrainConfig desk_train_config() {
  TrainConfig c;
  c.examples_total = 2000;
  return c;
}

struct FullConfig {
  ImagingGeometry geometry;
  TrainConfig train;
};

inline FullConfig preset_config(const std::string& name) {
  if (name == "paper") return {paper_geometry(), paper_train_config()};
  if (name == "desk") return {desk_geometry(), desk_train_config()};
  throw std::invalid_argument("unknown preset '" + name + "' (expected paper or desk)");
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct ConfigParser {
  std::map<std::string, std::pair<std::string, int>> entries; // key -> (value, line)
  std::string path;

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
  }

  void parse(std::istream& in) {
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = raw;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(lineno, "expected 'key = value', got '" + trim(raw) + "'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) fail(lineno, "empty key");
      if (value.empty()) fail(lineno, "empty value for key '" + key + "'");
      entries[key] = {value, lineno};
    }
  }

  template <class T, class Fn>
  void take(const std::string& key, T& out, Fn convert) {
    auto it = entries.find(key);
    if (it == entries.end()) return;
    try {
      out = convert(it->second.first);
    } catch (const std::exception& e) {
      fail(it->second.second, "field '" + key + "': " + e.what());
    }
    entries.erase(it);
  }

  void take_double(const std::string& key, double& out) {
    take(key, out, [](const std::string& v) {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing characters in '" + v + "'");
      return d;
    });
  }

  void take_int(const std::string& key, int& out) {
    take(key, out, [](const std::string& v) {
      std::size_t pos = 0;
      const long d = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing characters in '" + v + "'");
      return static_cast<int>(d);
    });
  }

  void take_u64(const std::string& key, std::uint64_t& out) {
    take(key, out, [](const std::string& v) {
      std::size_t pos = 0;
      const unsigned long long d = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument("trailing characters in '" + v + "'");
      return static_cast<std::uint64_t>(d);
    });
  }
};

} // namespace detail

// Loads a key=value config file on top of a base preset. Angles are given in
// degrees in the file and converted to radians here; frequencies in Hz,
// lengths in meters. Unknown keys and invariant violations are reported with
// file/line diagnostics naming the field.
inline FullConfig load_config_stream(std::istream& in, const std::string& path_for_errors,
                                     FullConfig base = {paper_geometry(), paper_train_config()}) {
  detail::ConfigParser p;
  p.path = path_for_errors;
  p.parse(in);

  // The preset key is applied first so later keys override it.
  {
    auto it = p.entries.find("preset");
    if (it != p.entries.end()) {
      try {
        base = preset_config(it->second.first);
      } catch (const std::exception& e) {
        p.fail(it->second.second, e.what());
      }
      p.entries.erase(it);
    }
  }

  ImagingGeometry& g = base.geometry;
  TrainConfig& t = base.train;
  double phi_min_deg = rad_to_deg(g.phi_min);
  double phi_max_deg = rad_to_deg(g.phi_max);

  p.take_double("f_min_hz", g.f_min);
  p.take_double("f_max_hz", g.f_max);
  p.take_int("num_freq", g.num_freq);
  p.take_double("phi_min_deg", phi_min_deg);
  p.take_double("phi_max_deg", phi_max_deg);
  p.take_int("num_angle", g.num_angle);
  p.take_double("region_x_m", g.region_x);
  p.take_double("region_y_m", g.region_y);
  p.take_int("pixels_x", g.pixels_x);
  p.take_int("pixels_y", g.pixels_y);
  p.take_double("sigma_x_m", g.sigma_x);
  p.take_double("sigma_y_m", g.sigma_y);
  g.phi_min = deg_to_rad(phi_min_deg);
  g.phi_max = deg_to_rad(phi_max_deg);

  p.take_int("examples_total", t.examples_total);
  p.take_int("batch_size", t.batch_size);
  p.take_int("epochs", t.epochs);
  p.take_double("momentum", t.momentum);
  p.take_double("weight_decay", t.weight_decay);
  p.take_double("lr_hidden", t.lr_hidden);
  p.take_double("lr_output", t.lr_output);
  p.take_u64("seed", t.seed);
  p.take_double("snr_min_db", t.snr_min_db);
  p.take_double("snr_max_db", t.snr_max_db);
  p.take_int("scatter_min", t.scatter_min);
  p.take_int("scatter_max", t.scatter_max);
  p.take_int("cv_hidden_channels", t.cv_hidden_channels);
  p.take_int("rv_hidden_channels", t.rv_hidden_channels);
  p.take_int("hidden_layers", t.hidden_layers);
  p.take_int("kernel_size", t.kernel_size);
  p.take_int("norm_sample_count", t.norm_sample_count);

  if (!p.entries.empty()) {
    const auto& first = *p.entries.begin();
    p.fail(first.second.second, "unknown key '" + first.first + "'");
  }

  validate(g);
  validate(t);
  return base;
}

inline FullConfig load_config(const std::string& path,
                              FullConfig base = {paper_geometry(), paper_train_config()}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return load_config_stream(in, path, base);
}

} // namespace cvri
