#pragma once

#include <cmath>

#include "cvri/types.hpp"

namespace cvri {

// Root-mean-square pixel error between two magnitude images.
template <class Scalar>
Scalar rmse(const ImageReal<Scalar>& pred, const ImageReal<Scalar>& truth) {
  require(pred.values.rows() == truth.values.rows() && pred.values.cols() == truth.values.cols(),
          "rmse: image dimensions differ");
  const Scalar mse = (pred.values - truth.values).squaredNorm() /
                     static_cast<Scalar>(pred.values.size());
  return std::sqrt(mse);
}

} // namespace cvri
