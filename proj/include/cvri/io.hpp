#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "cvri/types.hpp"

namespace cvri {

// Flat binary container for echo matrices and images. Little-endian layout:
//   bytes 0..3   magic "CVRB"
//   u32          version (1)
//   u8           kind: 0 echo, 1 complex image, 2 real image
//   u8[3]        reserved, zero
//   u64          geometry id
//   u32          rows, u32 cols
//   payload      row-major float64; complex samples interleaved (re, im)
// Echo rows are frequency samples; image rows are y indices.

namespace detail {

inline constexpr char kBinMagic[4] = {'C', 'V', 'R', 'B'};
inline constexpr std::uint32_t kBinVersion = 1;

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("unexpected end of file");
  return v;
}

inline void write_bin_header(std::ostream& out, std::uint8_t kind, std::uint64_t geom_id,
                             std::uint32_t rows, std::uint32_t cols) {
  out.write(kBinMagic, 4);
  write_pod(out, kBinVersion);
  write_pod(out, kind);
  const std::uint8_t zero[3] = {0, 0, 0};
  out.write(reinterpret_cast<const char*>(zero), 3);
  write_pod(out, geom_id);
  write_pod(out, rows);
  write_pod(out, cols);
}

struct BinHeader {
  std::uint8_t kind;
  std::uint64_t geometry_id;
  std::uint32_t rows, cols;
};

inline BinHeader read_bin_header(std::istream& in, const std::string& what) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kBinMagic, 4) != 0)
    throw std::runtime_error(what + ": not a CVRB file");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kBinVersion)
    throw std::runtime_error(what + ": unsupported version " + std::to_string(version));
  BinHeader h;
  h.kind = read_pod<std::uint8_t>(in);
  char reserved[3];
  in.read(reserved, 3);
  h.geometry_id = read_pod<std::uint64_t>(in);
  h.rows = read_pod<std::uint32_t>(in);
  h.cols = read_pod<std::uint32_t>(in);
  if (!in) throw std::runtime_error(what + ": truncated header");
  return h;
}

template <class Scalar>
void write_complex_rowmajor(std::ostream& out, const CMatrix<Scalar>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      write_pod(out, static_cast<double>(m(r, c).real()));
      write_pod(out, static_cast<double>(m(r, c).imag()));
    }
}

template <class Scalar>
void read_complex_rowmajor(std::istream& in, CMatrix<Scalar>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double re = read_pod<double>(in);
      const double im = read_pod<double>(in);
      m(r, c) = std::complex<Scalar>(static_cast<Scalar>(re), static_cast<Scalar>(im));
    }
}

} // namespace detail

template <class Scalar>
void save_echo(const std::string& path, const EchoMatrix<Scalar>& echo) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  detail::write_bin_header(out, 0, echo.geometry_id, static_cast<std::uint32_t>(echo.values.rows()),
                           static_cast<std::uint32_t>(echo.values.cols()));
  detail::write_complex_rowmajor(out, echo.values);
}

template <class Scalar = double>
EchoMatrix<Scalar> load_echo(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open echo file '" + path + "'");
  const auto h = detail::read_bin_header(in, path);
  if (h.kind != 0) throw std::runtime_error(path + ": not an echo file");
  EchoMatrix<Scalar> echo;
  echo.geometry_id = h.geometry_id;
  echo.values.resize(h.rows, h.cols);
  detail::read_complex_rowmajor(in, echo.values);
  return echo;
}

template <class Scalar>
void save_image(const std::string& path, const ImageComplex<Scalar>& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  detail::write_bin_header(out, 1, img.geometry_id, static_cast<std::uint32_t>(img.values.rows()),
                           static_cast<std::uint32_t>(img.values.cols()));
  detail::write_complex_rowmajor(out, img.values);
}

template <class Scalar = double>
ImageComplex<Scalar> load_image_complex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image file '" + path + "'");
  const auto h = detail::read_bin_header(in, path);
  if (h.kind != 1) throw std::runtime_error(path + ": not a complex image file");
  ImageComplex<Scalar> img;
  img.geometry_id = h.geometry_id;
  img.values.resize(h.rows, h.cols);
  detail::read_complex_rowmajor(in, img.values);
  return img;
}

template <class Scalar>
void save_image(const std::string& path, const ImageReal<Scalar>& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  detail::write_bin_header(out, 2, img.geometry_id, static_cast<std::uint32_t>(img.values.rows()),
                           static_cast<std::uint32_t>(img.values.cols()));
  for (Eigen::Index r = 0; r < img.values.rows(); ++r)
    for (Eigen::Index c = 0; c < img.values.cols(); ++c)
      detail::write_pod(out, static_cast<double>(img.values(r, c)));
}

template <class Scalar = double>
ImageReal<Scalar> load_image_real(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image file '" + path + "'");
  const auto h = detail::read_bin_header(in, path);
  if (h.kind != 2) throw std::runtime_error(path + ": not a real image file");
  ImageReal<Scalar> img;
  img.geometry_id = h.geometry_id;
  img.values.resize(h.rows, h.cols);
  for (Eigen::Index r = 0; r < img.values.rows(); ++r)
    for (Eigen::Index c = 0; c < img.values.cols(); ++c)
      img.values(r, c) = static_cast<Scalar>(detail::read_pod<double>(in));
  return img;
}

} // namespace cvri
