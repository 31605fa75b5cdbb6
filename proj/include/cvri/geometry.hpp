#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace cvri {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Turntable imaging geometry: frequency/angle sampling grid, imaging region,
// pixel grid and the Gaussian PSF widths that define the enhancement target.
// Immutable after construction; every other module takes it by const ref.
struct ImagingGeometry {
  double f_min = 0.0;   // Hz
  double f_max = 0.0;   // Hz
  int num_freq = 0;     // M, samples inclusive of both band edges
  double phi_min = 0.0; // rad
  double phi_max = 0.0; // rad
  int num_angle = 0;    // N, samples inclusive of both endpoints
  double region_x = 0.0; // m, centered on the origin
  double region_y = 0.0; // m
  int pixels_x = 0;
  int pixels_y = 0;
  double sigma_x = 0.0; // m, PSF width
  double sigma_y = 0.0; // m
};

// Throws std::invalid_argument naming the offending field.
inline void validate(const ImagingGeometry& g) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("ImagingGeometry: " + msg); };
  if (!(g.f_min > 0.0)) fail("f_min must be > 0 (got " + std::to_string(g.f_min) + ")");
  if (!(g.f_max > g.f_min)) fail("f_max must be > f_min");
  if (g.num_freq < 2) fail("num_freq must be >= 2 (got " + std::to_string(g.num_freq) + ")");
  if (!(g.phi_max > g.phi_min)) fail("phi_max must be > phi_min");
  if (g.num_angle < 2) fail("num_angle must be >= 2 (got " + std::to_string(g.num_angle) + ")");
  if (!(g.region_x > 0.0)) fail("region_x must be > 0");
  if (!(g.region_y > 0.0)) fail("region_y must be > 0");
  if (g.pixels_x < 1) fail("pixels_x must be >= 1 (got " + std::to_string(g.pixels_x) + ")");
  if (g.pixels_y < 1) fail("pixels_y must be >= 1 (got " + std::to_string(g.pixels_y) + ")");
  if (!(g.sigma_x > 0.0)) fail("sigma_x must be > 0");
  if (!(g.sigma_y > 0.0)) fail("sigma_y must be > 0");
}

// Fingerprint used to tag scenes/echoes/images with the geometry they belong to.
inline std::uint64_t geometry_id(const ImagingGeometry& g) {
  std::uint64_t h = 1469598103934665603ull; // FNV-1a
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  auto mixd = [&](double v) { mix(&v, sizeof v); };
  auto mixi = [&](int v) { mix(&v, sizeof v); };
  mixd(g.f_min); mixd(g.f_max); mixi(g.num_freq);
  mixd(g.phi_min); mixd(g.phi_max); mixi(g.num_angle);
  mixd(g.region_x); mixd(g.region_y); mixi(g.pixels_x); mixi(g.pixels_y);
  mixd(g.sigma_x); mixd(g.sigma_y);
  return h;
}

inline double freq_step(const ImagingGeometry& g) { return (g.f_max - g.f_min) / (g.num_freq - 1); }
inline double freq_at(const ImagingGeometry& g, int m) { return g.f_min + m * freq_step(g); }
inline double angle_step(const ImagingGeometry& g) { return (g.phi_max - g.phi_min) / (g.num_angle - 1); }
inline double angle_at(const ImagingGeometry& g, int n) { return g.phi_min + n * angle_step(g); }
inline double center_freq(const ImagingGeometry& g) { return 0.5 * (g.f_min + g.f_max); }

inline double wavenumber(double freq_hz) { return 2.0 * kPi * freq_hz / kSpeedOfLight; }
inline double wavenumber_at(const ImagingGeometry& g, int m) { return wavenumber(freq_at(g, m)); }
inline double center_wavenumber(const ImagingGeometry& g) { return wavenumber(center_freq(g)); }

inline double pixel_pitch_x(const ImagingGeometry& g) { return g.region_x / g.pixels_x; }
inline double pixel_pitch_y(const ImagingGeometry& g) { return g.region_y / g.pixels_y; }

// Normative pixel-center mapping shared by every module: pixel p covers
// [-region/2 + p*pitch, -region/2 + (p+1)*pitch) and is sampled at its center.
inline double pixel_x(const ImagingGeometry& g, int p) { return -0.5 * g.region_x + (p + 0.5) * pixel_pitch_x(g); }
inline double pixel_y(const ImagingGeometry& g, int q) { return -0.5 * g.region_y + (q + 0.5) * pixel_pitch_y(g); }

struct DerivedResolution {
  double range_res = 0.0;    // c / (2 * bandwidth)
  double azimuth_res = 0.0;  // lambda_center / (2 * angle span)
  double target_res_x = 0.0; // 1.18 * sigma_x (-3 dB width of the Gaussian PSF)
  double target_res_y = 0.0;
  double superres_ratio = 0.0; // range_res / target_res_x
};

inline DerivedResolution derive_resolution(const ImagingGeometry& g) {
  validate(g);
  DerivedResolution r;
  r.range_res = kSpeedOfLight / (2.0 * (g.f_max - g.f_min));
  const double lambda_c = kSpeedOfLight / center_freq(g);
  r.azimuth_res = lambda_c / (2.0 * (g.phi_max - g.phi_min));
  r.target_res_x = 1.18 * g.sigma_x;
  r.target_res_y = 1.18 * g.sigma_y;
  r.superres_ratio = r.range_res / r.target_res_x;
  return r;
}

} // namespace cvri
