#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bigg {

using Index = Eigen::Index;

/// Dense row-major matrix. Every value in the library is two-dimensional;
/// vectors are 1xN or Nx1 and scalars are 1x1.
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using TensorD = Tensor<double>;
using TensorF = Tensor<float>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that does not satisfy a documented contract (bad JSON, unknown
/// table, nonpositive latency...). The CLI maps these to exit status 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

template <typename Derived>
std::string shape_string(const Eigen::DenseBase<Derived>& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

template <typename Scalar>
bool all_finite(const Tensor<Scalar>& t) {
  return t.allFinite();
}

}  // namespace bigg
