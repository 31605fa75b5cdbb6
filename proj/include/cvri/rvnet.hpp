#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvri/network.hpp"
#include "cvri/operators.hpp"
#include "cvri/random.hpp"
#include "cvri/tensor.hpp"
#include "cvri/types.hpp"

namespace cvri {

enum class RvActivation { relu, leaky_relu, magnitude, identity };

struct RvLayerSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  RvActivation activation = RvActivation::relu;
  double leaky_slope = 0.01;
};

using RvNetworkSpec = std::vector<RvLayerSpec>;

// Real and imaginary parts of the matched-filter image enter as two
// independent channels; the final conv produces two channels combined as
// sqrt(c1^2 + c2^2) per pixel, mirroring the magnitude output neuron.
inline void validate_rv_spec(const RvNetworkSpec& spec, int input_channels = 2) {
  require(!spec.empty(), "RvNetworkSpec: at least one layer required");
  int ch = input_channels;
  for (std::size_t l = 0; l < spec.size(); ++l) {
    const auto& s = spec[l];
    const std::string where = "RvNetworkSpec layer " + std::to_string(l) + ": ";
    require(s.in_channels == ch, where + "in_channels mismatch");
    require(s.out_channels >= 1, where + "out_channels must be >= 1");
    require(s.kernel_h >= 1 && s.kernel_h % 2 == 1, where + "kernel_h must be odd");
    require(s.kernel_w >= 1 && s.kernel_w % 2 == 1, where + "kernel_w must be odd");
    const bool last = (l + 1 == spec.size());
    if (s.activation == RvActivation::magnitude) {
      require(last, where + "magnitude combine is permitted only on the final layer");
      require(s.out_channels == 2, where + "magnitude layer must have out_channels = 2");
    }
    if (last) require(s.activation == RvActivation::magnitude, where + "final layer must be magnitude");
    ch = s.out_channels;
  }
}

// Default widths chosen as the smallest integers whose real parameter count
// exceeds the default complex network's.
inline RvNetworkSpec default_rv_spec(int hidden_channels = 23, int hidden_layers = 3,
                                     int kernel = 5) {
  RvNetworkSpec spec;
  int in = 2;
  for (int l = 0; l < hidden_layers; ++l) {
    spec.push_back({in, hidden_channels, kernel, kernel, RvActivation::relu, 0.01});
    in = hidden_channels;
  }
  spec.push_back({in, 2, kernel, kernel, RvActivation::magnitude, 0.01});
  validate_rv_spec(spec);
  return spec;
}

inline long rv_param_count(const RvNetworkSpec& spec) {
  long n = 0;
  for (const auto& s : spec)
    n += static_cast<long>(s.out_channels) * s.in_channels * s.kernel_h * s.kernel_w +
         s.out_channels;
  return n;
}

template <class Scalar = double>
struct RvConvLayer {
  RvLayerSpec spec;
  std::vector<RMatrix<Scalar>> weights; // [o * in_channels + i]
  RVector<Scalar> bias;
  std::vector<RMatrix<Scalar>> weight_momentum;
  RVector<Scalar> bias_momentum;
};

template <class Scalar = double>
struct RvNetworkState {
  std::vector<RvConvLayer<Scalar>> layers;
  Scalar input_norm = 1;
  std::uint64_t geometry_id = 0;

  RvNetworkSpec spec() const {
    RvNetworkSpec s;
    for (const auto& l : layers) s.push_back(l.spec);
    return s;
  }
};

// Gaussian init with std 1/sqrt(fan_in): the same pre-activation variance as
// the complex network's, so the two consume identically scaled inputs.
template <class Scalar = double>
RvNetworkState<Scalar> init_rv_network(const RvNetworkSpec& spec, std::uint64_t seed) {
  validate_rv_spec(spec);
  RvNetworkState<Scalar> net;
  Rng rng(stream_seed(seed, {kStreamInit, 0x7276ull}));
  for (const auto& s : spec) {
    RvConvLayer<Scalar> layer;
    layer.spec = s;
    const double std_dev = 1.0 / std::sqrt(static_cast<double>(s.in_channels) * s.kernel_h * s.kernel_w);
    layer.weights.resize(static_cast<std::size_t>(s.out_channels) * s.in_channels);
    layer.weight_momentum.resize(layer.weights.size());
    for (auto& w : layer.weights) {
      w.resize(s.kernel_h, s.kernel_w);
      for (Eigen::Index idx = 0; idx < w.size(); ++idx)
        w.data()[idx] = static_cast<Scalar>(std_dev * rng.normal());
    }
    for (auto& m : layer.weight_momentum) m = RMatrix<Scalar>::Zero(s.kernel_h, s.kernel_w);
    layer.bias = RVector<Scalar>::Zero(s.out_channels);
    layer.bias_momentum = RVector<Scalar>::Zero(s.out_channels);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

template <class Scalar>
RMatrix<Scalar> rv_apply_activation(const RMatrix<Scalar>& v, RvActivation act, double slope) {
  switch (act) {
    case RvActivation::relu:
      return v.cwiseMax(Scalar(0));
    case RvActivation::leaky_relu:
      return v.cwiseMax(static_cast<Scalar>(slope) * v);
    case RvActivation::identity:
      return v;
    case RvActivation::magnitude:
      break;
  }
  throw std::logic_error("rv_apply_activation: magnitude handled in rv_forward_net");
}

template <class Scalar>
RMatrix<Scalar> rv_grad_mask(const RMatrix<Scalar>& v, RvActivation act, double slope) {
  switch (act) {
    case RvActivation::relu: {
      RMatrix<Scalar> mask(v.rows(), v.cols());
      for (Eigen::Index i = 0; i < v.size(); ++i)
        mask.data()[i] = v.data()[i] > Scalar(0) ? Scalar(1) : Scalar(0);
      return mask;
    }
    case RvActivation::leaky_relu: {
      RMatrix<Scalar> mask(v.rows(), v.cols());
      for (Eigen::Index i = 0; i < v.size(); ++i)
        mask.data()[i] = v.data()[i] > Scalar(0) ? Scalar(1) : static_cast<Scalar>(slope);
      return mask;
    }
    case RvActivation::identity:
      return RMatrix<Scalar>::Ones(v.rows(), v.cols());
    case RvActivation::magnitude:
      break;
  }
  throw std::logic_error("rv_grad_mask: magnitude has no componentwise mask");
}

template <class Scalar>
RealTensor<Scalar> conv2d_real(const RealTensor<Scalar>& input, const RvConvLayer<Scalar>& layer) {
  const auto& s = layer.spec;
  require(input.channels() == s.in_channels, "conv2d_real: channel count mismatch");
  const int h = input.height(), w = input.width();
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;

  RMatrix<Scalar> patches, wmat;
  detail::im2col(input, s.kernel_h, s.kernel_w, patches);
  detail::weight_matrix(layer, wmat);
  RMatrix<Scalar> pre(hw, s.out_channels);
  pre.noalias() = patches * wmat;

  RealTensor<Scalar> out(s.out_channels, h, w);
  for (int o = 0; o < s.out_channels; ++o) {
    out.maps[o] = Eigen::Map<RMatrix<Scalar>>(pre.col(o).data(), h, w);
    out.maps[o].array() += layer.bias(o);
  }
  return out;
}

template <class Scalar = double>
struct RvForwardCache {
  RealTensor<Scalar> input;
  std::vector<RealTensor<Scalar>> pre_act;
  std::vector<RealTensor<Scalar>> hidden;
  ImageReal<Scalar> output;
};

template <class Scalar>
RvForwardCache<Scalar> rv_forward_net(const RealTensor<Scalar>& input,
                                      const RvNetworkState<Scalar>& net) {
  require(!net.layers.empty(), "rv_forward_net: empty network");
  RvForwardCache<Scalar> cache;
  cache.input = input;
  const RealTensor<Scalar>* cur = &cache.input;
  const std::size_t n_layers = net.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = net.layers[l];
    cache.pre_act.push_back(conv2d_real(*cur, layer));
    if (l + 1 == n_layers) {
      require(layer.spec.activation == RvActivation::magnitude,
              "rv_forward_net: final layer must be magnitude");
      const auto& z = cache.pre_act.back();
      cache.output.values = (z.maps[0].cwiseAbs2() + z.maps[1].cwiseAbs2()).cwiseSqrt();
    } else {
      RealTensor<Scalar> act;
      act.maps.reserve(cache.pre_act.back().maps.size());
      for (const auto& z : cache.pre_act.back().maps)
        act.maps.push_back(rv_apply_activation(z, layer.spec.activation, layer.spec.leaky_slope));
      cache.hidden.push_back(std::move(act));
      cur = &cache.hidden.back();
    }
  }
  return cache;
}

template <class Scalar>
RvForwardCache<Scalar> rv_forward(const EchoMatrix<Scalar>& echo, const OperatorPlan<Scalar>& plan,
                                  const RvNetworkState<Scalar>& net) {
  if (net.geometry_id != 0)
    require(net.geometry_id == plan.geometry_id, "rv_forward: network bound to a different geometry");
  const ImageComplex<Scalar> adj = adjoint_image(echo, plan);
  RealTensor<Scalar> input(2, plan.geom.pixels_y, plan.geom.pixels_x);
  input.maps[0] = adj.values.real() / net.input_norm;
  input.maps[1] = adj.values.imag() / net.input_norm;
  RvForwardCache<Scalar> cache = rv_forward_net(input, net);
  cache.output.geometry_id = plan.geometry_id;
  return cache;
}

template <class Scalar = double>
struct RvLayerGrad {
  std::vector<RMatrix<Scalar>> weights;
  RVector<Scalar> bias;
};

template <class Scalar = double>
struct RvNetworkGrad {
  std::vector<RvLayerGrad<Scalar>> layers;

  static RvNetworkGrad zeros_like(const RvNetworkState<Scalar>& net) {
    RvNetworkGrad g;
    g.layers.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      g.layers[l].weights.resize(net.layers[l].weights.size());
      for (std::size_t i = 0; i < net.layers[l].weights.size(); ++i)
        g.layers[l].weights[i] = RMatrix<Scalar>::Zero(net.layers[l].spec.kernel_h,
                                                       net.layers[l].spec.kernel_w);
      g.layers[l].bias = RVector<Scalar>::Zero(net.layers[l].spec.out_channels);
    }
    return g;
  }

  RvNetworkGrad& operator+=(const RvNetworkGrad& other) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t i = 0; i < layers[l].weights.size(); ++i)
        layers[l].weights[i] += other.layers[l].weights[i];
      layers[l].bias += other.layers[l].bias;
    }
    return *this;
  }

  RvNetworkGrad& operator*=(Scalar f) {
    for (auto& l : layers) {
      for (auto& w : l.weights) w *= f;
      l.bias *= f;
    }
    return *this;
  }
};

// Standard real backprop; the magnitude combine gets the same eps-guarded
// derivative as the complex Abs output.
template <class Scalar>
RvNetworkGrad<Scalar> rv_backward(const RvForwardCache<Scalar>& cache, const ImageReal<Scalar>& target,
                                  const RvNetworkState<Scalar>& net) {
  require(!cache.pre_act.empty(), "rv_backward: forward caches missing");
  require(cache.output.values.rows() == target.values.rows() &&
              cache.output.values.cols() == target.values.cols(),
          "rv_backward: target dimensions differ from output");

  const std::size_t n_layers = net.layers.size();
  RvNetworkGrad<Scalar> grad = RvNetworkGrad<Scalar>::zeros_like(net);

  const auto& z_out = cache.pre_act.back();
  const RMatrix<Scalar> err = cache.output.values - target.values;
  const RMatrix<Scalar> denom = cache.output.values.cwiseMax(Scalar(1e-12));
  RealTensor<Scalar> delta(2, static_cast<int>(err.rows()), static_cast<int>(err.cols()));
  delta.maps[0] = err.cwiseProduct(z_out.maps[0].cwiseQuotient(denom));
  delta.maps[1] = err.cwiseProduct(z_out.maps[1].cwiseQuotient(denom));

  RMatrix<Scalar> patches;
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = net.layers[l];
    const auto& s = layer.spec;
    const RealTensor<Scalar>& layer_in = (l == 0) ? cache.input : cache.hidden[l - 1];
    const int h = layer_in.height(), w = layer_in.width();
    const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;

    RMatrix<Scalar> delta_mat(hw, s.out_channels);
    for (int o = 0; o < s.out_channels; ++o) {
      delta_mat.col(o) = Eigen::Map<const RVector<Scalar>>(delta.maps[o].data(), hw);
      grad.layers[l].bias(o) = delta.maps[o].sum();
    }

    detail::im2col(layer_in, s.kernel_h, s.kernel_w, patches);
    RMatrix<Scalar> gw(patches.cols(), s.out_channels);
    gw.noalias() = patches.transpose() * delta_mat;
    for (int o = 0; o < s.out_channels; ++o) {
      Eigen::Index p = 0;
      for (int i = 0; i < s.in_channels; ++i) {
        auto& wslot = grad.layers[l].weights[static_cast<std::size_t>(o) * s.in_channels + i];
        for (int r = 0; r < s.kernel_h; ++r)
          for (int c = 0; c < s.kernel_w; ++c) wslot(r, c) = gw(p++, o);
      }
    }

    if (l == 0) break;

    RMatrix<Scalar> wmat;
    detail::weight_matrix(layer, wmat);
    RMatrix<Scalar> gpatches(hw, patches.cols());
    gpatches.noalias() = delta_mat * wmat.transpose();
    RealTensor<Scalar> err_in;
    detail::col2im(gpatches, s.in_channels, h, w, s.kernel_h, s.kernel_w, err_in);

    const auto& prev = net.layers[l - 1];
    const RealTensor<Scalar>& z_prev = cache.pre_act[l - 1];
    RealTensor<Scalar> next_delta(s.in_channels, h, w);
    for (int i = 0; i < s.in_channels; ++i)
      next_delta.maps[i] = err_in.maps[i].cwiseProduct(
          rv_grad_mask(z_prev.maps[i], prev.spec.activation, prev.spec.leaky_slope));
    delta = std::move(next_delta);
  }
  return grad;
}

} // namespace cvri
