#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "cvri/geometry.hpp"

namespace cvri {

template <class Scalar>
using CMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using RMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <class Scalar>
using CVector = Eigen::Vector<std::complex<Scalar>, Eigen::Dynamic>;

template <class Scalar>
using RVector = Eigen::Vector<Scalar, Eigen::Dynamic>;

// Complex echo samples over (frequency, angle): row m <-> frequency f_m,
// column n <-> angle phi_n.
template <class Scalar = double>
struct EchoMatrix {
  CMatrix<Scalar> values;
  std::uint64_t geometry_id = 0;

  int num_freq() const { return static_cast<int>(values.rows()); }
  int num_angle() const { return static_cast<int>(values.cols()); }
};

// Complex-valued image on a pixels_y x pixels_x grid: values(q, p) with
// q the y index and p the x index.
template <class Scalar = double>
struct ImageComplex {
  CMatrix<Scalar> values;
  std::uint64_t geometry_id = 0;
};

// Non-negative magnitude image, same indexing as ImageComplex.
template <class Scalar = double>
struct ImageReal {
  RMatrix<Scalar> values;
  std::uint64_t geometry_id = 0;
};

using EchoMatrixd = EchoMatrix<double>;
using ImageComplexd = ImageComplex<double>;
using ImageReald = ImageReal<double>;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

template <class Scalar>
void require_geometry(const EchoMatrix<Scalar>& e, const ImagingGeometry& g, const char* what) {
  require(e.geometry_id == geometry_id(g), std::string(what) + ": echo geometry does not match");
  require(e.num_freq() == g.num_freq && e.num_angle() == g.num_angle,
          std::string(what) + ": echo dimensions do not match geometry");
}

} // namespace cvri
