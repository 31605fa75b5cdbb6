#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

#include "cvri/types.hpp"

namespace cvri {

// Rank-3 complex array (channels x height x width), one Eigen matrix per
// channel, indexed (y, x).
template <class Scalar = double>
struct ComplexTensor {
  std::vector<CMatrix<Scalar>> maps;

  ComplexTensor() = default;
  ComplexTensor(int channels, int height, int width)
      : maps(static_cast<std::size_t>(channels), CMatrix<Scalar>::Zero(height, width)) {}

  int channels() const { return static_cast<int>(maps.size()); }
  int height() const { return maps.empty() ? 0 : static_cast<int>(maps[0].rows()); }
  int width() const { return maps.empty() ? 0 : static_cast<int>(maps[0].cols()); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(maps.size()) * height() * width(); }
};

template <class Scalar = double>
struct RealTensor {
  std::vector<RMatrix<Scalar>> maps;

  RealTensor() = default;
  RealTensor(int channels, int height, int width)
      : maps(static_cast<std::size_t>(channels), RMatrix<Scalar>::Zero(height, width)) {}

  int channels() const { return static_cast<int>(maps.size()); }
  int height() const { return maps.empty() ? 0 : static_cast<int>(maps[0].rows()); }
  int width() const { return maps.empty() ? 0 : static_cast<int>(maps[0].cols()); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(maps.size()) * height() * width(); }
};

// Componentwise product (a_R b_R) + j (a_I b_I): applies a backward-pass
// indicator mask without mixing real and imaginary parts.
template <class Scalar>
CMatrix<Scalar> componentwise_mul(const CMatrix<Scalar>& a, const CMatrix<Scalar>& b) {
  CMatrix<Scalar> out(a.rows(), a.cols());
  out.real() = a.real().cwiseProduct(b.real());
  out.imag() = a.imag().cwiseProduct(b.imag());
  return out;
}

} // namespace cvri
