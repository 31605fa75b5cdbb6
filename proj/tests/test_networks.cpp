#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <vector>

#include "cvri/config.hpp"
#include "cvri/echo.hpp"
#include "cvri/network.hpp"
#include "cvri/operators.hpp"
#include "cvri/rvnet.hpp"
#include "cvri/scene.hpp"

using namespace cvri;
using C = std::complex<double>;

namespace {

ComplexTensor<double> random_tensor(int ch, int h, int w, Rng& rng) {
  ComplexTensor<double> t(ch, h, w);
  for (auto& m : t.maps)
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.complex_normal();
  return t;
}

RealTensor<double> random_real_tensor(int ch, int h, int w, Rng& rng) {
  RealTensor<double> t(ch, h, w);
  for (auto& m : t.maps)
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return t;
}

ImageReald random_target(int h, int w, Rng& rng) {
  ImageReald img;
  img.values.resize(h, w);
  for (Eigen::Index i = 0; i < img.values.size(); ++i)
    img.values.data()[i] = std::abs(rng.normal());
  return img;
}

// Brute-force "same"-padded complex cross-correlation, the conv oracle.
CMatrix<double> naive_conv_channel(const ComplexTensor<double>& in,
                                   const std::vector<CMatrix<double>>& w, int in_ch, C bias,
                                   int o) {
  const int h = in.height(), width = in.width();
  const int kh = static_cast<int>(w[0].rows()), kw = static_cast<int>(w[0].cols());
  CMatrix<double> out = CMatrix<double>::Constant(h, width, bias);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < width; ++x)
      for (int i = 0; i < in_ch; ++i)
        for (int r = 0; r < kh; ++r)
          for (int s = 0; s < kw; ++s) {
            const int yy = y + r - kh / 2;
            const int xx = x + s - kw / 2;
            if (yy < 0 || yy >= h || xx < 0 || xx >= width) continue;
            out(y, x) += w[static_cast<std::size_t>(o) * in_ch + i](r, s) * in.maps[i](yy, xx);
          }
  return out;
}

double cv_loss_of(const ComplexTensor<double>& input, const NetworkState<double>& net,
                  const ImageReald& target) {
  const auto cache = forward_net(input, net);
  return loss(cache.output, target);
}

double rv_loss_of(const RealTensor<double>& input, const RvNetworkState<double>& net,
                  const ImageReald& target) {
  const auto cache = rv_forward_net(input, net);
  return loss(cache.output, target);
}

double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale < 1e-10) return 0.0;
  return std::abs(a - b) / scale;
}

// Central finite differences against every real weight/bias component.
void check_cv_gradients(NetworkState<double>& net, const ComplexTensor<double>& input,
                        const ImageReald& target, double h, double tol) {
  const auto cache = forward_net(input, net);
  const auto grad = backward(cache, target, net);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    for (std::size_t wi = 0; wi < net.layers[l].weights.size(); ++wi) {
      auto& w = net.layers[l].weights[wi];
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        for (int part = 0; part < 2; ++part) {
          const C delta = (part == 0) ? C(h, 0) : C(0, h);
          const C saved = w.data()[i];
          w.data()[i] = saved + delta;
          const double lp = cv_loss_of(input, net, target);
          w.data()[i] = saved - delta;
          const double lm = cv_loss_of(input, net, target);
          w.data()[i] = saved;
          const double fd = (lp - lm) / (2 * h);
          const double an = (part == 0) ? grad.layers[l].weights[wi].data()[i].real()
                                        : grad.layers[l].weights[wi].data()[i].imag();
          CAPTURE(l);
          CAPTURE(wi);
          CAPTURE(i);
          CAPTURE(part);
          CHECK(rel_err(fd, an) < tol);
        }
      }
    }
    for (Eigen::Index b = 0; b < net.layers[l].bias.size(); ++b) {
      for (int part = 0; part < 2; ++part) {
        const C delta = (part == 0) ? C(h, 0) : C(0, h);
        const C saved = net.layers[l].bias(b);
        net.layers[l].bias(b) = saved + delta;
        const double lp = cv_loss_of(input, net, target);
        net.layers[l].bias(b) = saved - delta;
        const double lm = cv_loss_of(input, net, target);
        net.layers[l].bias(b) = saved;
        const double fd = (lp - lm) / (2 * h);
        const double an = (part == 0) ? grad.layers[l].bias(b).real() : grad.layers[l].bias(b).imag();
        CAPTURE(l);
        CAPTURE(b);
        CAPTURE(part);
        CHECK(rel_err(fd, an) < tol);
      }
    }
  }
}

void check_rv_gradients(RvNetworkState<double>& net, const RealTensor<double>& input,
                        const ImageReald& target, double h, double tol) {
  const auto cache = rv_forward_net(input, net);
  const auto grad = rv_backward(cache, target, net);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    for (std::size_t wi = 0; wi < net.layers[l].weights.size(); ++wi) {
      auto& w = net.layers[l].weights[wi];
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double saved = w.data()[i];
        w.data()[i] = saved + h;
        const double lp = rv_loss_of(input, net, target);
        w.data()[i] = saved - h;
        const double lm = rv_loss_of(input, net, target);
        w.data()[i] = saved;
        const double fd = (lp - lm) / (2 * h);
        const double an = grad.layers[l].weights[wi].data()[i];
        CAPTURE(l);
        CAPTURE(wi);
        CAPTURE(i);
        CHECK(rel_err(fd, an) < tol);
      }
    }
    for (Eigen::Index b = 0; b < net.layers[l].bias.size(); ++b) {
      const double saved = net.layers[l].bias(b);
      net.layers[l].bias(b) = saved + h;
      const double lp = rv_loss_of(input, net, target);
      net.layers[l].bias(b) = saved - h;
      const double lm = rv_loss_of(input, net, target);
      net.layers[l].bias(b) = saved;
      const double fd = (lp - lm) / (2 * h);
      const double an = grad.layers[l].bias(b);
      CAPTURE(l);
      CAPTURE(b);
      CHECK(rel_err(fd, an) < tol);
    }
  }
}

NetworkSpec tiny_cv_spec(Activation hidden) {
  NetworkSpec spec;
  spec.push_back({1, 4, 3, 3, hidden, 0.01});
  spec.push_back({4, 1, 3, 3, Activation::abs, 0.01});
  return spec;
}

} // namespace

TEST_CASE("crelu rectifies real and imaginary parts independently") {
  CMatrix<double> v(1, 3);
  v << C(1, 2), C(-1, 2), C(-1, -2);
  const CMatrix<double> f = crelu(v);
  CHECK(f(0, 0) == C(1, 2));
  CHECK(f(0, 1) == C(0, 2));
  CHECK(f(0, 2) == C(0, 0));
}

TEST_CASE("crelu_grad_mask uses strict inequality") {
  CMatrix<double> v(1, 3);
  v << C(1, 2), C(-1, 2), C(0, 0);
  const CMatrix<double> m = crelu_grad_mask(v);
  CHECK(m(0, 0) == C(1, 1));
  CHECK(m(0, 1) == C(0, 1));
  CHECK(m(0, 2) == C(0, 0));
}

TEST_CASE("abs activation and its guarded gradient") {
  CMatrix<double> v(1, 3);
  v << C(3, 4), C(0, 0), C(-3, 4);
  const RMatrix<double> f = abs_activation(v);
  CHECK(f(0, 0) == doctest::Approx(5.0));
  CHECK(f(0, 1) == 0.0);
  CHECK(f(0, 2) == doctest::Approx(5.0));

  const C g = abs_grad(C(3, 4), 5.0);
  CHECK(g.real() == doctest::Approx(0.6));
  CHECK(g.imag() == doctest::Approx(0.8));
  CHECK(abs_grad(C(0, 0), 0.0) == C(0, 0));
  CHECK(abs_grad(C(1, 0), 1.0) == C(1, 0));
}

TEST_CASE("conv2d_complex: 1x1 kernel is a complex scalar multiply") {
  ConvLayer<double> layer;
  layer.spec = {1, 1, 1, 1, Activation::identity, 0.01};
  layer.weights.push_back(CMatrix<double>::Constant(1, 1, C(0, 1)));
  layer.bias = CVector<double>::Zero(1);
  ComplexTensor<double> in(1, 2, 2);
  in.maps[0].setConstant(C(1, 0));
  const auto out = conv2d_complex(in, layer);
  CHECK(out.maps[0](0, 0) == C(0, 1));
  CHECK(out.maps[0](1, 1) == C(0, 1));
}

TEST_CASE("conv2d_complex: center-tap identity kernel preserves the input") {
  Rng rng(3);
  ConvLayer<double> layer;
  layer.spec = {1, 1, 3, 3, Activation::identity, 0.01};
  layer.weights.push_back(CMatrix<double>::Zero(3, 3));
  layer.weights[0](1, 1) = C(1, 0);
  layer.bias = CVector<double>::Zero(1);
  const auto in = random_tensor(1, 6, 7, rng);
  const auto out = conv2d_complex(in, layer);
  CHECK((out.maps[0] - in.maps[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("conv2d_complex matches the quadruple-loop reference") {
  Rng rng(11);
  ConvLayer<double> layer;
  layer.spec = {2, 3, 3, 3, Activation::identity, 0.01};
  layer.weights.resize(6);
  for (auto& w : layer.weights) {
    w.resize(3, 3);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.complex_normal();
  }
  layer.bias.resize(3);
  for (int o = 0; o < 3; ++o) layer.bias(o) = rng.complex_normal();

  const auto in = random_tensor(2, 5, 5, rng);
  const auto out = conv2d_complex(in, layer);
  for (int o = 0; o < 3; ++o) {
    const auto ref = naive_conv_channel(in, layer.weights, 2, layer.bias(o), o);
    CHECK((out.maps[o] - ref).cwiseAbs().maxCoeff() < 1e-12 * (1 + ref.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("conv layers commute with translation on interior pixels") {
  Rng rng(17);
  NetworkState<double> net = init_network<double>(tiny_cv_spec(Activation::crelu), 5);
  const int h = 12, w = 12;
  const auto in = random_tensor(1, h, w, rng);
  ComplexTensor<double> shifted(1, h, w);
  shifted.maps[0].setZero();
  shifted.maps[0].block(1, 1, h - 1, w - 1) = in.maps[0].block(0, 0, h - 1, w - 1);

  const auto out = forward_net(in, net).output.values;
  const auto out_shifted = forward_net(shifted, net).output.values;
  // interior excludes a kernel-sized margin where padding differs
  const int m = 3;
  const auto a = out.block(m, m, h - 2 * m - 1, w - 2 * m - 1);
  const auto b = out_shifted.block(m + 1, m + 1, h - 2 * m - 1, w - 2 * m - 1);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward: all-zero echo with zero biases gives an all-zero output") {
  const auto geom = desk_geometry();
  const auto plan = make_plan<double>(geom);
  auto net = init_network<double>(default_cv_spec(4, 2, 3), 9);
  for (auto& l : net.layers) l.bias.setZero();
  EchoMatrixd echo;
  echo.geometry_id = plan.geometry_id;
  echo.values = CMatrix<double>::Zero(geom.num_freq, geom.num_angle);
  const auto cache = forward(echo, plan, net);
  CHECK(cache.output.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward output is always non-negative") {
  const auto geom = desk_geometry();
  const auto plan = make_plan<double>(geom);
  const auto net = init_network<double>(default_cv_spec(4, 2, 3), 13);
  Rng rng(99);
  const auto scene = generate_scene(geom, 20, rng);
  const auto cache = forward(simulate_echo(scene, geom), plan, net);
  CHECK(cache.output.values.minCoeff() >= 0.0);
}

TEST_CASE("degradation identity: pass-through network reproduces |A^H y|") {
  const auto geom = desk_geometry();
  const auto plan = make_plan<double>(geom);
  Rng rng(7);
  const auto scene = generate_scene(geom, 30, rng);
  const auto echo = simulate_echo(scene, geom);
  const auto net = make_identity_network<double>(4, 5);
  const auto cache = forward(echo, plan, net);
  const auto mf = adjoint_image(echo, plan).values.cwiseAbs();
  CHECK((cache.output.values - mf).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("single identity layer with Abs equals the normalized adjoint magnitude") {
  const auto geom = desk_geometry();
  const auto plan = make_plan<double>(geom);
  Rng rng(8);
  const auto scene = generate_scene(geom, 10, rng);
  const auto echo = simulate_echo(scene, geom);
  auto net = make_identity_network<double>(1, 3);
  net.input_norm = 2.5;
  const auto cache = forward(echo, plan, net);
  const auto expect = (adjoint_image(echo, plan).values / 2.5).cwiseAbs();
  CHECK((cache.output.values - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("loss: half sum of squared differences") {
  ImageReald a, b;
  a.values = RMatrix<double>::Zero(1, 1);
  b.values = RMatrix<double>::Constant(1, 1, 2.0);
  CHECK(loss(a, b) == doctest::Approx(2.0));
  CHECK(loss(b, b) == 0.0);

  Rng rng(4);
  ImageReald p = random_target(6, 5, rng);
  ImageReald t = random_target(6, 5, rng);
  double manual = 0.0;
  for (Eigen::Index i = 0; i < p.values.size(); ++i) {
    const double d = t.values.data()[i] - p.values.data()[i];
    manual += 0.5 * d * d;
  }
  CHECK(rel_err(loss(p, t), manual) < 1e-12);
}

TEST_CASE("backward: zero output error gives zero gradients") {
  Rng rng(21);
  const auto net = init_network<double>(tiny_cv_spec(Activation::crelu), 3);
  const auto in = random_tensor(1, 8, 8, rng);
  const auto cache = forward_net(in, net);
  ImageReald target;
  target.values = cache.output.values;
  const auto grad = backward(cache, target, net);
  for (const auto& l : grad.layers) {
    for (const auto& w : l.weights) CHECK(w.cwiseAbs().maxCoeff() == 0.0);
    CHECK(l.bias.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gradient check: CV-CNN vs central finite differences") {
  for (std::uint64_t seed : {101, 202, 303}) {
    CAPTURE(seed);
    Rng rng(seed);
    auto net = init_network<double>(tiny_cv_spec(Activation::crelu), seed);
    const auto in = random_tensor(1, 8, 8, rng);
    const auto target = random_target(8, 8, rng);
    check_cv_gradients(net, in, target, 1e-5, 1e-4);
  }
}

TEST_CASE("gradient check: leaky-cReLU hidden layers") {
  for (std::uint64_t seed : {404, 505, 606}) {
    CAPTURE(seed);
    Rng rng(seed);
    auto net = init_network<double>(tiny_cv_spec(Activation::leaky_crelu), seed);
    const auto in = random_tensor(1, 8, 8, rng);
    const auto target = random_target(8, 8, rng);
    check_cv_gradients(net, in, target, 1e-5, 1e-4);
  }
}

TEST_CASE("gradient check: RV-CNN vs central finite differences") {
  for (std::uint64_t seed : {111, 222, 333}) {
    CAPTURE(seed);
    Rng rng(seed);
    RvNetworkSpec spec;
    spec.push_back({2, 4, 3, 3, RvActivation::relu, 0.01});
    spec.push_back({4, 2, 3, 3, RvActivation::magnitude, 0.01});
    auto net = init_rv_network<double>(spec, seed);
    const auto in = random_real_tensor(2, 8, 8, rng);
    const auto target = random_target(8, 8, rng);
    check_rv_gradients(net, in, target, 1e-5, 1e-4);
  }
}

TEST_CASE("forward is deterministic") {
  Rng rng(55);
  const auto net = init_network<double>(tiny_cv_spec(Activation::crelu), 55);
  const auto in = random_tensor(1, 10, 10, rng);
  const auto a = forward_net(in, net).output.values;
  const auto b = forward_net(in, net).output.values;
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("output-layer error seed scales linearly with the target") {
  // With a zero network output the residual is -O, so doubling the target
  // doubles the output error term.
  ImageReald out;
  out.values = RMatrix<double>::Zero(4, 4);
  RMatrix<double> target = RMatrix<double>::Constant(4, 4, 1.5);
  const RMatrix<double> err1 = out.values - target;
  const RMatrix<double> err2 = out.values - 2.0 * target;
  CHECK((err2 - 2.0 * err1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rv_forward: zero echo and zero biases give zero output; output non-negative") {
  const auto geom = desk_geometry();
  const auto plan = make_plan<double>(geom);
  auto net = init_rv_network<double>(default_rv_spec(6, 2, 3), 2);
  for (auto& l : net.layers) l.bias.setZero();
  EchoMatrixd echo;
  echo.geometry_id = plan.geometry_id;
  echo.values = CMatrix<double>::Zero(geom.num_freq, geom.num_angle);
  const auto cache = rv_forward(echo, plan, net);
  CHECK(cache.output.values.cwiseAbs().maxCoeff() == 0.0);

  Rng rng(31);
  const auto scene = generate_scene(geom, 15, rng);
  const auto cache2 = rv_forward(simulate_echo(scene, geom), plan, net);
  CHECK(cache2.output.values.minCoeff() >= 0.0);
}

TEST_CASE("parameter counts match hand counts") {
  NetworkSpec cv1;
  cv1.push_back({1, 16, 5, 5, Activation::crelu, 0.01});
  CHECK(cv_param_count(cv1) == 16 * 1 * 25 * 2 + 16 * 2); // 832

  RvNetworkSpec rv1;
  rv1.push_back({2, 22, 5, 5, RvActivation::relu, 0.01});
  CHECK(rv_param_count(rv1) == 22 * 2 * 25 + 22); // 1122

  // shipped defaults: RV real DoF exceeds CV real DoF
  const long cv_dof = cv_param_count(default_cv_spec());
  const long rv_dof = rv_param_count(default_rv_spec());
  CHECK(rv_dof > cv_dof);
  MESSAGE("default real DoF: cv=", cv_dof, " rv=", rv_dof, " surplus=", rv_dof - cv_dof);
}

TEST_CASE("network spec validation rejects malformed topologies") {
  NetworkSpec bad1; // Abs mid-network
  bad1.push_back({1, 1, 3, 3, Activation::abs, 0.01});
  bad1.push_back({1, 1, 3, 3, Activation::abs, 0.01});
  CHECK_THROWS(validate_spec(bad1, 1));

  NetworkSpec bad2; // even kernel
  bad2.push_back({1, 1, 4, 4, Activation::abs, 0.01});
  CHECK_THROWS(validate_spec(bad2, 1));

  NetworkSpec bad3; // Abs with multiple channels
  bad3.push_back({1, 2, 3, 3, Activation::abs, 0.01});
  CHECK_THROWS(validate_spec(bad3, 1));
}
