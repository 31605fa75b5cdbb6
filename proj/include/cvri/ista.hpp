#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "cvri/operators.hpp"
#include "cvri/random.hpp"
#include "cvri/types.hpp"

namespace cvri {

// Largest eigenvalue of A^H A (= ||A||^2) by power iteration from a
// deterministic plan-seeded start.
template <class Scalar>
Scalar estimate_operator_norm_sq(const OperatorPlan<Scalar>& plan, int iters = 20) {
  Rng rng(stream_seed(plan.geometry_id, {kStreamInit, 0x706f776572ull}));
  ImageComplex<Scalar> z;
  z.geometry_id = plan.geometry_id;
  z.values.resize(plan.geom.pixels_y, plan.geom.pixels_x);
  for (Eigen::Index i = 0; i < z.values.size(); ++i) {
    const auto g = rng.complex_normal();
    z.values.data()[i] = std::complex<Scalar>(static_cast<Scalar>(g.real()), static_cast<Scalar>(g.imag()));
  }
  z.values /= z.values.norm();

  Scalar lambda = Scalar(0);
  for (int it = 0; it < iters; ++it) {
    ImageComplex<Scalar> w = adjoint_image(forward_echo(z, plan), plan);
    lambda = w.values.norm();
    if (lambda == Scalar(0)) return Scalar(0);
    z.values = w.values / lambda;
  }
  return lambda;
}

// The sparse solver works against the physical forward operator of the echo
// model (a unit scatterer produces a unit-magnitude echo sample), which is
// the display-normalized operator pair scaled by M*N. Solutions then live on
// the scene amplitude scale, directly comparable with the rendered targets.
template <class Scalar>
Scalar physical_operator_scale(const OperatorPlan<Scalar>& plan) {
  return static_cast<Scalar>(static_cast<double>(plan.geom.num_freq) * plan.geom.num_angle);
}

// lambda = 0.05 * max |A^H y| under the physical operator scale.
template <class Scalar>
Scalar default_ista_lambda(const EchoMatrix<Scalar>& echo, const OperatorPlan<Scalar>& plan) {
  return Scalar(0.05) * physical_operator_scale(plan) *
         adjoint_image(echo, plan).values.cwiseAbs().maxCoeff();
}

template <class Scalar>
Scalar ista_objective(const EchoMatrix<Scalar>& echo, const OperatorPlan<Scalar>& plan,
                      const ImageComplex<Scalar>& x, Scalar lambda) {
  const EchoMatrix<Scalar> ax = forward_echo(x, plan);
  const Scalar fidelity =
      (physical_operator_scale(plan) * ax.values - echo.values).squaredNorm();
  return fidelity + lambda * x.values.cwiseAbs().sum();
}

template <class Scalar>
struct IstaResult {
  ImageComplex<Scalar> image;
  std::vector<Scalar> objective; // ||y - Ax||^2 + lambda*||x||_1 after each iteration
};

// Iterative shrinkage-thresholding on ||y - Ax||^2 + lambda*||x||_1 with
// complex soft-thresholding (shrink magnitude, keep phase). The gradient of
// the fidelity term is 2 A^H (Ax - y), so the step is 1 / (2 ||A||^2) with a
// small safety margin against power-iteration underestimation. The objective
// trace is instrumentation and is only computed when requested.
template <class Scalar>
ImageComplex<Scalar> ista_reconstruct(const EchoMatrix<Scalar>& echo,
                                      const OperatorPlan<Scalar>& plan, Scalar lambda, int iters,
                                      std::vector<Scalar>* objective_trace = nullptr) {
  require(iters >= 1, "ista_reconstruct: iters must be >= 1");
  require(lambda > Scalar(0), "ista_reconstruct: lambda must be > 0");
  require(echo.geometry_id == plan.geometry_id, "ista_reconstruct: echo geometry does not match plan");

  const Scalar scale = physical_operator_scale(plan);
  const Scalar norm_sq = scale * scale * estimate_operator_norm_sq(plan);
  const Scalar lipschitz = Scalar(2) * norm_sq * Scalar(1.05);
  const Scalar step = Scalar(1) / lipschitz;
  const Scalar threshold = step * lambda;

  ImageComplex<Scalar> x;
  x.geometry_id = plan.geometry_id;
  x.values = CMatrix<Scalar>::Zero(plan.geom.pixels_y, plan.geom.pixels_x);
  if (objective_trace) objective_trace->reserve(static_cast<std::size_t>(iters));

  for (int it = 0; it < iters; ++it) {
    EchoMatrix<Scalar> residual = forward_echo(x, plan);
    residual.values = scale * residual.values - echo.values;
    const ImageComplex<Scalar> grad_half = adjoint_image(residual, plan); // (1/scale) A^H (Ax - y)
    CMatrix<Scalar> z = x.values - (Scalar(2) * step * scale) * grad_half.values;
    // soft-threshold magnitudes: x = z * max(0, 1 - threshold/|z|)
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const Scalar mag = std::abs(z.data()[i]);
      z.data()[i] = (mag > threshold) ? z.data()[i] * ((mag - threshold) / mag)
                                      : std::complex<Scalar>(0, 0);
    }
    x.values = std::move(z);
    if (objective_trace) objective_trace->push_back(ista_objective(echo, plan, x, lambda));
  }
  return x;
}

template <class Scalar>
IstaResult<Scalar> ista_reconstruct_traced(const EchoMatrix<Scalar>& echo,
                                           const OperatorPlan<Scalar>& plan, Scalar lambda,
                                           int iters) {
  IstaResult<Scalar> result;
  result.image = ista_reconstruct(echo, plan, lambda, iters, &result.objective);
  return result;
}

} // namespace cvri
