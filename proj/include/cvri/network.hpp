#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvri/operators.hpp"
#include "cvri/random.hpp"
#include "cvri/tensor.hpp"
#include "cvri/types.hpp"

namespace cvri {

enum class Activation { crelu, leaky_crelu, abs, identity };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::crelu: return "crelu";
    case Activation::leaky_crelu: return "leaky_crelu";
    case Activation::abs: return "abs";
    case Activation::identity: return "identity";
  }
  return "?";
}

struct ConvLayerSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_h = 0; // odd, so "same" padding is symmetric
  int kernel_w = 0;
  Activation activation = Activation::crelu;
  double leaky_slope = 0.01;
};

using NetworkSpec = std::vector<ConvLayerSpec>;

inline void validate_spec(const NetworkSpec& spec, int input_channels) {
  require(!spec.empty(), "NetworkSpec: at least one layer required");
  int ch = input_channels;
  for (std::size_t l = 0; l < spec.size(); ++l) {
    const auto& s = spec[l];
    const std::string where = "NetworkSpec layer " + std::to_string(l) + ": ";
    require(s.in_channels == ch, where + "in_channels mismatch");
    require(s.out_channels >= 1, where + "out_channels must be >= 1");
    require(s.kernel_h >= 1 && s.kernel_h % 2 == 1, where + "kernel_h must be odd");
    require(s.kernel_w >= 1 && s.kernel_w % 2 == 1, where + "kernel_w must be odd");
    const bool last = (l + 1 == spec.size());
    if (s.activation == Activation::abs) {
      require(last, where + "Abs activation is permitted only on the final layer");
      require(s.out_channels == 1, where + "Abs layer must have out_channels = 1");
    }
    if (last) require(s.activation == Activation::abs, where + "final layer must use Abs");
    ch = s.out_channels;
  }
}

// Default topology: hidden_layers cReLU convs followed by a 1-channel Abs
// output conv, all with the same odd kernel.
inline NetworkSpec default_cv_spec(int hidden_channels = 16, int hidden_layers = 3,
                                   int kernel = 5) {
  NetworkSpec spec;
  int in = 1;
  for (int l = 0; l < hidden_layers; ++l) {
    spec.push_back({in, hidden_channels, kernel, kernel, Activation::crelu, 0.01});
    in = hidden_channels;
  }
  spec.push_back({in, 1, kernel, kernel, Activation::abs, 0.01});
  validate_spec(spec, 1);
  return spec;
}

// Real parameter count: each complex weight/bias counts as two reals.
inline long cv_param_count(const NetworkSpec& spec) {
  long n = 0;
  for (const auto& s : spec)
    n += 2L * (static_cast<long>(s.out_channels) * s.in_channels * s.kernel_h * s.kernel_w +
               s.out_channels);
  return n;
}

template <class Scalar = double>
struct ConvLayer {
  ConvLayerSpec spec;
  std::vector<CMatrix<Scalar>> weights; // [o * in_channels + i], each kernel_h x kernel_w
  CVector<Scalar> bias;                 // per output channel
  std::vector<CMatrix<Scalar>> weight_momentum;
  CVector<Scalar> bias_momentum;
};

template <class Scalar = double>
struct NetworkState {
  std::vector<ConvLayer<Scalar>> layers;
  Scalar input_norm = 1; // adjoint image divisor, baked into the checkpoint
  std::uint64_t geometry_id = 0;

  NetworkSpec spec() const {
    NetworkSpec s;
    for (const auto& l : layers) s.push_back(l.spec);
    return s;
  }
};

// Complex Gaussian initialization, per-component std 1/sqrt(2 * fan_in);
// biases and momentum start at zero.
template <class Scalar = double>
NetworkState<Scalar> init_network(const NetworkSpec& spec, std::uint64_t seed,
                                  int input_channels = 1) {
  validate_spec(spec, input_channels);
  NetworkState<Scalar> net;
  Rng rng(stream_seed(seed, {kStreamInit, 0x6376ull}));
  for (const auto& s : spec) {
    ConvLayer<Scalar> layer;
    layer.spec = s;
    const double std_dev = 1.0 / std::sqrt(2.0 * s.in_channels * s.kernel_h * s.kernel_w);
    layer.weights.resize(static_cast<std::size_t>(s.out_channels) * s.in_channels);
    layer.weight_momentum.resize(layer.weights.size());
    for (auto& w : layer.weights) {
      w.resize(s.kernel_h, s.kernel_w);
      for (Eigen::Index idx = 0; idx < w.size(); ++idx) {
        w.data()[idx] = std::complex<Scalar>(static_cast<Scalar>(std_dev * rng.normal()),
                                             static_cast<Scalar>(std_dev * rng.normal()));
      }
    }
    for (auto& m : layer.weight_momentum) m = CMatrix<Scalar>::Zero(s.kernel_h, s.kernel_w);
    layer.bias = CVector<Scalar>::Zero(s.out_channels);
    layer.bias_momentum = CVector<Scalar>::Zero(s.out_channels);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

// Single-channel pass-through network: center-tap kernels, zero bias,
// identity hidden activations, Abs output. Reproduces the bare
// matched-filter magnitude image.
template <class Scalar = double>
NetworkState<Scalar> make_identity_network(int n_layers = 4, int kernel = 5) {
  NetworkSpec spec;
  for (int l = 0; l < n_layers; ++l)
    spec.push_back({1, 1, kernel, kernel,
                    (l + 1 == n_layers) ? Activation::abs : Activation::identity, 0.01});
  NetworkState<Scalar> net = init_network<Scalar>(spec, 0);
  for (auto& layer : net.layers) {
    layer.weights[0].setZero();
    layer.weights[0](kernel / 2, kernel / 2) = std::complex<Scalar>(1, 0);
    layer.bias.setZero();
  }
  net.input_norm = 1;
  return net;
}

// --- activations ------------------------------------------------------------

// cReLU: max(v_R, 0) + j max(v_I, 0), parts rectified independently.
template <class Scalar>
CMatrix<Scalar> crelu(const CMatrix<Scalar>& v) {
  CMatrix<Scalar> out(v.rows(), v.cols());
  out.real() = v.real().cwiseMax(Scalar(0));
  out.imag() = v.imag().cwiseMax(Scalar(0));
  return out;
}

template <class Scalar>
ComplexTensor<Scalar> crelu(const ComplexTensor<Scalar>& t) {
  ComplexTensor<Scalar> out;
  out.maps.reserve(t.maps.size());
  for (const auto& m : t.maps) out.maps.push_back(crelu(m));
  return out;
}

// Indicator pair packed as a complex value: real part 1 iff v_R > 0,
// imaginary part 1 iff v_I > 0 (strict; the boundary derivative is 0).
template <class Scalar>
CMatrix<Scalar> crelu_grad_mask(const CMatrix<Scalar>& v) {
  CMatrix<Scalar> mask(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const auto& z = v.data()[i];
    mask.data()[i] = std::complex<Scalar>(z.real() > Scalar(0) ? Scalar(1) : Scalar(0),
                                          z.imag() > Scalar(0) ? Scalar(1) : Scalar(0));
  }
  return mask;
}

template <class Scalar>
ComplexTensor<Scalar> crelu_grad_mask(const ComplexTensor<Scalar>& t) {
  ComplexTensor<Scalar> out;
  out.maps.reserve(t.maps.size());
  for (const auto& m : t.maps) out.maps.push_back(crelu_grad_mask(m));
  return out;
}

// Activation derivative factors packed like crelu_grad_mask, for any hidden
// activation kind.
template <class Scalar>
CMatrix<Scalar> activation_grad_mask(const CMatrix<Scalar>& v, Activation act, double slope) {
  switch (act) {
    case Activation::crelu:
      return crelu_grad_mask(v);
    case Activation::leaky_crelu: {
      const Scalar lo = static_cast<Scalar>(slope);
      CMatrix<Scalar> mask(v.rows(), v.cols());
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        const auto& z = v.data()[i];
        mask.data()[i] = std::complex<Scalar>(z.real() > Scalar(0) ? Scalar(1) : lo,
                                              z.imag() > Scalar(0) ? Scalar(1) : lo);
      }
      return mask;
    }
    case Activation::identity:
      return CMatrix<Scalar>::Constant(v.rows(), v.cols(), std::complex<Scalar>(1, 1));
    case Activation::abs:
      break;
  }
  throw std::logic_error("activation_grad_mask: Abs has no componentwise mask");
}

template <class Scalar>
CMatrix<Scalar> apply_activation(const CMatrix<Scalar>& v, Activation act, double slope) {
  switch (act) {
    case Activation::crelu:
      return crelu(v);
    case Activation::leaky_crelu: {
      const Scalar lo = static_cast<Scalar>(slope);
      CMatrix<Scalar> out(v.rows(), v.cols());
      out.real() = v.real().cwiseMax(lo * v.real());
      out.imag() = v.imag().cwiseMax(lo * v.imag());
      return out;
    }
    case Activation::identity:
      return v;
    case Activation::abs:
      break;
  }
  throw std::logic_error("apply_activation: Abs handled by abs_activation");
}

// Output-layer activation: elementwise complex magnitude.
template <class Scalar>
RMatrix<Scalar> abs_activation(const CMatrix<Scalar>& v) {
  return v.cwiseAbs();
}

template <class Scalar>
RMatrix<Scalar> abs_activation(const ComplexTensor<Scalar>& t) {
  require(t.channels() == 1, "abs_activation: expected a single channel");
  return abs_activation(t.maps[0]);
}

// (df/dv_R, df/dv_I) = (v_R, v_I) / max(f, eps), packed as a complex value.
// The subgradient at the origin is (0, 0).
template <class Scalar>
std::complex<Scalar> abs_grad(std::complex<Scalar> v, Scalar f_o) {
  const Scalar denom = std::max(f_o, Scalar(1e-12));
  return {v.real() / denom, v.imag() / denom};
}

// --- convolution ------------------------------------------------------------

namespace detail {

// Shift geometry shared by im2col, col2im and the test references: for
// kernel offset (dy, dx), the overlap of the shifted image with the grid.
struct ShiftBlock {
  int out_y, out_x; // origin in the output/position grid
  int in_y, in_x;   // origin in the source image
  int h, w;
};

inline ShiftBlock shift_block(int height, int width, int dy, int dx) {
  ShiftBlock b;
  b.out_y = std::max(0, -dy);
  b.out_x = std::max(0, -dx);
  b.in_y = std::max(0, dy);
  b.in_x = std::max(0, dx);
  b.h = height - std::abs(dy);
  b.w = width - std::abs(dx);
  return b;
}

// Patch matrix for "same" zero-padded correlation: column (i*kh + r)*kw + s
// holds the input channel i shifted by the kernel offset (r, s), flattened
// column-major, zeros outside. pre-activations are then a single GEMM.
// Generic over complex/real tensors.
template <class Tensor, class Mat>
void im2col(const Tensor& in, int kh, int kw, Mat& patches) {
  const int h = in.height(), w = in.width();
  const int ph = kh / 2, pw = kw / 2;
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  patches.resize(hw, static_cast<Eigen::Index>(in.channels()) * kh * kw);
  patches.setZero();
  Eigen::Index col = 0;
  for (int i = 0; i < in.channels(); ++i) {
    for (int r = 0; r < kh; ++r) {
      for (int s = 0; s < kw; ++s, ++col) {
        const auto b = shift_block(h, w, r - ph, s - pw);
        if (b.h <= 0 || b.w <= 0) continue;
        Eigen::Map<Mat> view(patches.col(col).data(), h, w);
        view.block(b.out_y, b.out_x, b.h, b.w) = in.maps[i].block(b.in_y, b.in_x, b.h, b.w);
      }
    }
  }
}

// Adjoint of im2col: scatter-add patch-gradient columns back onto the input.
template <class Tensor, class Mat>
void col2im(const Mat& gpatches, int channels, int h, int w, int kh, int kw, Tensor& gin) {
  const int ph = kh / 2, pw = kw / 2;
  gin = Tensor(channels, h, w);
  Eigen::Index col = 0;
  for (int i = 0; i < channels; ++i) {
    for (int r = 0; r < kh; ++r) {
      for (int s = 0; s < kw; ++s, ++col) {
        const auto b = shift_block(h, w, r - ph, s - pw);
        if (b.h <= 0 || b.w <= 0) continue;
        Eigen::Map<const Mat> view(gpatches.col(col).data(), h, w);
        gin.maps[i].block(b.in_y, b.in_x, b.h, b.w) += view.block(b.out_y, b.out_x, b.h, b.w);
      }
    }
  }
}

// Flattens per-pair kernels into a (in*kh*kw) x out matrix matching the
// im2col column order.
template <class Layer, class Mat>
void weight_matrix(const Layer& layer, Mat& wmat) {
  const auto& s = layer.spec;
  wmat.resize(static_cast<Eigen::Index>(s.in_channels) * s.kernel_h * s.kernel_w, s.out_channels);
  for (int o = 0; o < s.out_channels; ++o) {
    Eigen::Index p = 0;
    for (int i = 0; i < s.in_channels; ++i) {
      const auto& w = layer.weights[static_cast<std::size_t>(o) * s.in_channels + i];
      for (int r = 0; r < s.kernel_h; ++r)
        for (int c = 0; c < s.kernel_w; ++c) wmat(p++, o) = w(r, c);
    }
  }
}

} // namespace detail

// "Same"-padded complex 2-D cross-correlation plus bias:
// v[o] = sum_i w[o,i] (star) f[i] + b[o].
template <class Scalar>
ComplexTensor<Scalar> conv2d_complex(const ComplexTensor<Scalar>& input,
                                     const ConvLayer<Scalar>& layer) {
  const auto& s = layer.spec;
  require(input.channels() == s.in_channels, "conv2d_complex: channel count mismatch");
  const int h = input.height(), w = input.width();
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;

  CMatrix<Scalar> patches, wmat;
  detail::im2col(input, s.kernel_h, s.kernel_w, patches);
  detail::weight_matrix(layer, wmat);
  CMatrix<Scalar> pre(hw, s.out_channels);
  pre.noalias() = patches * wmat;

  ComplexTensor<Scalar> out(s.out_channels, h, w);
  for (int o = 0; o < s.out_channels; ++o) {
    out.maps[o] = Eigen::Map<CMatrix<Scalar>>(pre.col(o).data(), h, w);
    out.maps[o].array() += layer.bias(o);
  }
  return out;
}

// --- forward / loss / backward ----------------------------------------------

template <class Scalar = double>
struct ForwardCache {
  ComplexTensor<Scalar> input;                  // normalized adjoint image, a^0
  std::vector<ComplexTensor<Scalar>> pre_act;   // z^l per layer
  std::vector<ComplexTensor<Scalar>> hidden;    // a^l for hidden layers
  ImageReal<Scalar> output;
};

template <class Scalar>
ForwardCache<Scalar> forward_net(const ComplexTensor<Scalar>& input, const NetworkState<Scalar>& net) {
  require(!net.layers.empty(), "forward_net: empty network");
  ForwardCache<Scalar> cache;
  cache.input = input;
  const ComplexTensor<Scalar>* cur = &cache.input;
  const std::size_t n_layers = net.layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& layer = net.layers[l];
    cache.pre_act.push_back(conv2d_complex(*cur, layer));
    if (l + 1 == n_layers) {
      require(layer.spec.activation == Activation::abs, "forward_net: final layer must be Abs");
      cache.output.values = abs_activation(cache.pre_act.back());
    } else {
      ComplexTensor<Scalar> act;
      act.maps.reserve(cache.pre_act.back().maps.size());
      for (const auto& z : cache.pre_act.back().maps)
        act.maps.push_back(apply_activation(z, layer.spec.activation, layer.spec.leaky_slope));
      cache.hidden.push_back(std::move(act));
      cur = &cache.hidden.back();
    }
  }
  return cache;
}

// Full imaging pipeline: fixed matched-filter stage, input normalization,
// then the trainable conv stack. Gradients never flow into the operator.
template <class Scalar>
ForwardCache<Scalar> forward(const EchoMatrix<Scalar>& echo, const OperatorPlan<Scalar>& plan,
                             const NetworkState<Scalar>& net) {
  if (net.geometry_id != 0)
    require(net.geometry_id == plan.geometry_id, "forward: network bound to a different geometry");
  const ImageComplex<Scalar> adj = adjoint_image(echo, plan);
  ComplexTensor<Scalar> input(1, plan.geom.pixels_y, plan.geom.pixels_x);
  input.maps[0] = adj.values / net.input_norm;
  ForwardCache<Scalar> cache = forward_net(input, net);
  cache.output.geometry_id = plan.geometry_id;
  return cache;
}

// E = 1/2 sum (O - f^o)^2 over all pixels.
template <class Scalar>
Scalar loss(const ImageReal<Scalar>& pred, const ImageReal<Scalar>& target) {
  require(pred.values.rows() == target.values.rows() && pred.values.cols() == target.values.cols(),
          "loss: image dimensions differ");
  return Scalar(0.5) * (pred.values - target.values).squaredNorm();
}

template <class Scalar = double>
struct LayerGrad {
  std::vector<CMatrix<Scalar>> weights;
  CVector<Scalar> bias;
};

template <class Scalar = double>
struct NetworkGrad {
  std::vector<LayerGrad<Scalar>> layers;

  static NetworkGrad zeros_like(const NetworkState<Scalar>& net) {
    NetworkGrad g;
    g.layers.resize(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      g.layers[l].weights.resize(net.layers[l].weights.size());
      for (std::size_t i = 0; i < net.layers[l].weights.size(); ++i)
        g.layers[l].weights[i] = CMatrix<Scalar>::Zero(net.layers[l].spec.kernel_h,
                                                       net.layers[l].spec.kernel_w);
      g.layers[l].bias = CVector<Scalar>::Zero(net.layers[l].spec.out_channels);
    }
    return g;
  }

  NetworkGrad& operator+=(const NetworkGrad& other) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t i = 0; i < layers[l].weights.size(); ++i)
        layers[l].weights[i] += other.layers[l].weights[i];
      layers[l].bias += other.layers[l].bias;
    }
    return *this;
  }

  NetworkGrad& operator*=(Scalar f) {
    for (auto& l : layers) {
      for (auto& w : l.weights) w *= f;
      l.bias *= f;
    }
    return *this;
  }
};

// Hand-derived split-real backward pass. The error at a pre-activation is
// packed as dE/dv_R + j dE/dv_I; with that convention the weight gradient is
// a correlation of the error with the conjugated layer input, and the error
// propagates through a weight as delta * conj(w) before the activation mask
// (the mask multiplies real and imaginary parts independently).
template <class Scalar>
NetworkGrad<Scalar> backward(const ForwardCache<Scalar>& cache, const ImageReal<Scalar>& target,
                             const NetworkState<Scalar>& net) {
  require(!cache.pre_act.empty(), "backward: forward caches missing");
  require(cache.output.values.rows() == target.values.rows() &&
              cache.output.values.cols() == target.values.cols(),
          "backward: target dimensions differ from output");

  const std::size_t n_layers = net.layers.size();
  NetworkGrad<Scalar> grad = NetworkGrad<Scalar>::zeros_like(net);

  // Output-layer seed: (f^o - O) times the Abs derivative pair.
  const CMatrix<Scalar>& z_out = cache.pre_act.back().maps[0];
  const RMatrix<Scalar> err = cache.output.values - target.values;
  ComplexTensor<Scalar> delta(1, static_cast<int>(z_out.rows()), static_cast<int>(z_out.cols()));
  {
    RMatrix<Scalar> denom = cache.output.values.cwiseMax(Scalar(1e-12));
    delta.maps[0].real() = err.cwiseProduct(z_out.real().cwiseQuotient(denom));
    delta.maps[0].imag() = err.cwiseProduct(z_out.imag().cwiseQuotient(denom));
  }

  CMatrix<Scalar> patches;
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = net.layers[l];
    const auto& s = layer.spec;
    const ComplexTensor<Scalar>& layer_in = (l == 0) ? cache.input : cache.hidden[l - 1];
    const int h = layer_in.height(), w = layer_in.width();
    const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;

    CMatrix<Scalar> delta_mat(hw, s.out_channels);
    for (int o = 0; o < s.out_channels; ++o) {
      delta_mat.col(o) = Eigen::Map<const CVector<Scalar>>(delta.maps[o].data(), hw);
      grad.layers[l].bias(o) = delta.maps[o].sum();
    }

    detail::im2col(layer_in, s.kernel_h, s.kernel_w, patches);
    CMatrix<Scalar> gw(patches.cols(), s.out_channels);
    gw.noalias() = patches.adjoint() * delta_mat;
    for (int o = 0; o < s.out_channels; ++o) {
      Eigen::Index p = 0;
      for (int i = 0; i < s.in_channels; ++i) {
        auto& wslot = grad.layers[l].weights[static_cast<std::size_t>(o) * s.in_channels + i];
        for (int r = 0; r < s.kernel_h; ++r)
          for (int c = 0; c < s.kernel_w; ++c) wslot(r, c) = gw(p++, o);
      }
    }

    if (l == 0) break;

    CMatrix<Scalar> wmat;
    detail::weight_matrix(layer, wmat);
    CMatrix<Scalar> gpatches(hw, patches.cols());
    gpatches.noalias() = delta_mat * wmat.adjoint();
    ComplexTensor<Scalar> err_in;
    detail::col2im(gpatches, s.in_channels, h, w, s.kernel_h, s.kernel_w, err_in);

    const auto& prev = net.layers[l - 1];
    const ComplexTensor<Scalar>& z_prev = cache.pre_act[l - 1];
    ComplexTensor<Scalar> next_delta(s.in_channels, h, w);
    for (int i = 0; i < s.in_channels; ++i) {
      const CMatrix<Scalar> mask =
          activation_grad_mask(z_prev.maps[i], prev.spec.activation, prev.spec.leaky_slope);
      next_delta.maps[i] = componentwise_mul(err_in.maps[i], mask);
    }
    delta = std::move(next_delta);
  }
  return grad;
}

} // namespace cvri
