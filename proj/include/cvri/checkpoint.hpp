#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "cvri/io.hpp"
#include "cvri/network.hpp"
#include "cvri/rvnet.hpp"

namespace cvri {

// Versioned binary checkpoint holding the geometry hash, layer specs, the
// input-normalization constant, training counters, and all weights/biases
// with their momentum buffers as float64 (pairs). Round-trips bit-exactly.

namespace detail {

inline constexpr char kCkptMagic[8] = {'C', 'V', 'R', 'I', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCkptVersion = 1;

struct CkptHeader {
  std::uint8_t kind = 0; // 0 = complex-valued network, 1 = real-valued network
  std::uint64_t geometry_id = 0;
  double input_norm = 1.0;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  std::uint32_t n_layers = 0;
};

inline void write_ckpt_header(std::ostream& out, const CkptHeader& h) {
  out.write(kCkptMagic, 8);
  write_pod(out, kCkptVersion);
  write_pod(out, h.kind);
  const std::uint8_t zero[3] = {0, 0, 0};
  out.write(reinterpret_cast<const char*>(zero), 3);
  write_pod(out, h.geometry_id);
  write_pod(out, h.input_norm);
  write_pod(out, h.step);
  write_pod(out, h.epoch);
  write_pod(out, h.n_layers);
}

inline CkptHeader read_ckpt_header(std::istream& in, const std::string& what) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw std::runtime_error(what + ": not a checkpoint file");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCkptVersion)
    throw std::runtime_error(what + ": unsupported checkpoint version " + std::to_string(version));
  CkptHeader h;
  h.kind = read_pod<std::uint8_t>(in);
  char reserved[3];
  in.read(reserved, 3);
  h.geometry_id = read_pod<std::uint64_t>(in);
  h.input_norm = read_pod<double>(in);
  h.step = read_pod<std::uint64_t>(in);
  h.epoch = read_pod<std::uint64_t>(in);
  h.n_layers = read_pod<std::uint32_t>(in);
  if (!in) throw std::runtime_error(what + ": truncated header");
  return h;
}

template <class Scalar>
void write_cmat(std::ostream& out, const CMatrix<Scalar>& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    write_pod(out, static_cast<double>(m.data()[i].real()));
    write_pod(out, static_cast<double>(m.data()[i].imag()));
  }
}

template <class Scalar>
void read_cmat(std::istream& in, CMatrix<Scalar>& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double re = read_pod<double>(in);
    const double im = read_pod<double>(in);
    m.data()[i] = std::complex<Scalar>(static_cast<Scalar>(re), static_cast<Scalar>(im));
  }
}

template <class Scalar>
void write_rmat(std::ostream& out, const RMatrix<Scalar>& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) write_pod(out, static_cast<double>(m.data()[i]));
}

template <class Scalar>
void read_rmat(std::istream& in, RMatrix<Scalar>& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<Scalar>(read_pod<double>(in));
}

} // namespace detail

struct CheckpointInfo {
  std::uint8_t kind = 0;
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
};

inline CheckpointInfo peek_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  const auto h = detail::read_ckpt_header(in, path);
  return {h.kind, h.step, h.epoch};
}

template <class Scalar>
void save_checkpoint(const std::string& path, const NetworkState<Scalar>& net, std::uint64_t step,
                     std::uint64_t epoch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  detail::CkptHeader h;
  h.kind = 0;
  h.geometry_id = net.geometry_id;
  h.input_norm = static_cast<double>(net.input_norm);
  h.step = step;
  h.epoch = epoch;
  h.n_layers = static_cast<std::uint32_t>(net.layers.size());
  detail::write_ckpt_header(out, h);
  for (const auto& layer : net.layers) {
    detail::write_pod(out, static_cast<std::uint32_t>(layer.spec.in_channels));
    detail::write_pod(out, static_cast<std::uint32_t>(layer.spec.out_channels));
    detail::write_pod(out, static_cast<std::uint32_t>(layer.spec.kernel_h));
    detail::write_pod(out, static_cast<std::uint32_t>(layer.spec.kernel_w));
    detail::write_pod(out, static_cast<std::uint8_t>(layer.spec.activation));
    detail::write_pod(out, layer.spec.leaky_slope);
    for (const auto& w : layer.weights) detail::write_cmat(out, w);
    CMatrix<Scalar> bias = layer.bias;
    detail::write_cmat(out, bias);
    for (const auto& m : layer.weight_momentum) detail::write_cmat(out, m);
    CMatrix<Scalar> bm = layer.bias_momentum;
    detail::write_cmat(out, bm);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

template <class Scalar = double>
NetworkState<Scalar> load_checkpoint(const std::string& path, std::uint64_t* step = nullptr,
                                     std::uint64_t* epoch = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  const auto h = detail::read_ckpt_header(in, path);
  if (h.kind != 0) throw std::runtime_error(path + ": not a complex-network checkpoint");
  NetworkState<Scalar> net;
  net.geometry_id = h.geometry_id;
  net.input_norm = static_cast<Scalar>(h.input_norm);
  if (step) *step = h.step;
  if (epoch) *epoch = h.epoch;
  for (std::uint32_t l = 0; l < h.n_layers; ++l) {
    ConvLayer<Scalar> layer;
    layer.spec.in_channels = static_cast<int>(detail::read_pod<std::uint32_t>(in));
    layer.spec.out_channels = static_cast<int>(detail::read_pod<std::uint32_t>(in));
    layer.spec.kernel_h = static_cast<int>(detail::read_pod<std::uint32_t>(in));
    layer.spec.kernel_w = static_cast<int>(detail::read_pod<std::uint32_t>(in));
    layer.spec.activation = static_cast<Activation>(detail::read_pod<std::uint8_t>(in));
    layer.spec.leaky_slope = detail::read_pod<double>(in);
    const std::size_t n_pairs =
        static_cast<std::size_t>(layer.spec.out_channels) * layer.spec.in_channels;
    layer.weights.resize(n_pairs);
    layer.weight_momentum.resize(n_pairs);
    for (auto& w : layer.weights) {
      w.resize(layer.spec.kernel_h, layer.spec.kernel_w);
      detail::read_cmat(in, w);
    }
    CMatrix<Scalar> bias(layer.spec.out_channels, 1);
    detail::read_cmat(in, bias);
    layer.bias = bias;
    for (auto& m : layer.weight_momentum) {
      m.resize(layer.spec.kernel_h, layer.spec.kernel_w);
      detail::read_cmat(in, m);
    }
    CMatrix<Scalar> bm(layer.spec.out_channels, 1);
    detail::read_cmat(in, bm);
    layer.bias_momentum = bm;
    net.layers.push_back(std::move(layer));
  }
  validate_spec(net.spec(), net.layers.front().spec.in_channels);
  return net;
}

template <class Scalar>
void save_checkpoint(const std::string& path, const RvNetworkState<Scalar>& net, std::uint64_t step,
                     std::uint64_t epoch) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  detail::CkptHeader h;
  h.kind = 1;
  h.geometry_id = net.geometry_id;
  h.input_norm = static_cast<double>(net.input_norm);
  h.step = step;
  h.epoch = epoch;
  h.n_layers = static_cast<std::uint32_t>(net.layers.size());
  detail::write_ckpt_header(out, h);
  for (const auto& layer : net.layers) {
    detail::write_pod(out, static_cast<std::uint32_t>(layer.spec.in_channels));
    detail::write_pod(out, static_cast<std::uint32_t>(layer.spec.out_channels));
    detail::write_pod(out, static_cast<std::uint32_t>(layer.spec.kernel_h));
    detail::write_pod(out, static_cast<std::uint32_t>(layer.spec.kernel_w));
    detail::write_pod(out, static_cast<std::uint8_t>(layer.spec.activation));
    detail::write_pod(out, layer.spec.leaky_slope);
    for (const auto& w : layer.weights) detail::write_rmat(out, w);
    RMatrix<Scalar> bias = layer.bias;
    detail::write_rmat(out, bias);
    for (const auto& m : layer.weight_momentum) detail::write_rmat(out, m);
    RMatrix<Scalar> bm = layer.bias_momentum;
    detail::write_rmat(out, bm);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

template <class Scalar = double>
RvNetworkState<Scalar> load_rv_checkpoint(const std::string& path, std::uint64_t* step = nullptr,
                                          std::uint64_t* epoch = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  const auto h = detail::read_ckpt_header(in, path);
  if (h.kind != 1) throw std::runtime_error(path + ": not a real-network checkpoint");
  RvNetworkState<Scalar> net;
  net.geometry_id = h.geometry_id;
  net.input_norm = static_cast<Scalar>(h.input_norm);
  if (step) *step = h.step;
  if (epoch) *epoch = h.epoch;
  for (std::uint32_t l = 0; l < h.n_layers; ++l) {
    RvConvLayer<Scalar> layer;
    layer.spec.in_channels = static_cast<int>(detail::read_pod<std::uint32_t>(in));
    layer.spec.out_channels = static_cast<int>(detail::read_pod<std::uint32_t>(in));
    layer.spec.kernel_h = static_cast<int>(detail::read_pod<std::uint32_t>(in));
    layer.spec.kernel_w = static_cast<int>(detail::read_pod<std::uint32_t>(in));
    layer.spec.activation = static_cast<RvActivation>(detail::read_pod<std::uint8_t>(in));
    layer.spec.leaky_slope = detail::read_pod<double>(in);
    const std::size_t n_pairs =
        static_cast<std::size_t>(layer.spec.out_channels) * layer.spec.in_channels;
    layer.weights.resize(n_pairs);
    layer.weight_momentum.resize(n_pairs);
    for (auto& w : layer.weights) {
      w.resize(layer.spec.kernel_h, layer.spec.kernel_w);
      detail::read_rmat(in, w);
    }
    RMatrix<Scalar> bias(layer.spec.out_channels, 1);
    detail::read_rmat(in, bias);
    layer.bias = bias;
    for (auto& m : layer.weight_momentum) {
      m.resize(layer.spec.kernel_h, layer.spec.kernel_w);
      detail::read_rmat(in, m);
    }
    RMatrix<Scalar> bm(layer.spec.out_channels, 1);
    detail::read_rmat(in, bm);
    layer.bias_momentum = bm;
    net.layers.push_back(std::move(layer));
  }
  validate_rv_spec(net.spec(), net.layers.front().spec.in_channels);
  return net;
}

} // namespace cvri
