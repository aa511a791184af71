// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sgdlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid or ill-posed objective model (bad weights, singular Σ, Newton failure).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// A chain left the stability region: non-finite iterate or runaway distance.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::uint64_t step)
      : Error(what), step_(step) {}
  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
};

class SingularOperatorError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Requested precision is below what the Monte Carlo budget can resolve.
class NoiseFloorError : public Error {
 public:
  using Error::Error;
};

class ToleranceError : public Error {
 public:
  using Error::Error;
};

inline void require_dim(const Vector& v, Eigen::Index d, const char* what) {
  if (v.size() != d) {
    throw DimensionError(std::string(what) + ": expected dimension " +
                         std::to_string(d) + ", got " + std::to_string(v.size()));
  }
}

/// Dense rank-3 tensor with index order (i, j, l).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int d) : d_(d), data_(static_cast<std::size_t>(d) * d * d, 0.0) {}

  int dim() const { return d_; }
  double& operator()(int i, int j, int l) { return data_[index(i, j, l)]; }
  double operator()(int i, int j, int l) const { return data_[index(i, j, l)]; }

  /// v_l = Σ_ij M_ij T_ijl
  Vector contract(const Matrix& m) const {
    Vector v = Vector::Zero(d_);
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j)
        for (int l = 0; l < d_; ++l) v(l) += m(i, j) * (*this)(i, j, l);
    return v;
  }

  double contract(const Vector& u, const Vector& v, const Vector& w) const {
    double s = 0.0;
    for (int i = 0; i < d_; ++i)
      for (int j = 0; j < d_; ++j)
        for (int l = 0; l < d_; ++l) s += (*this)(i, j, l) * u(i) * v(j) * w(l);
    return s;
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::abs(x));
    return m;
  }

 private:
  std::size_t index(int i, int j, int l) const {
    return (static_cast<std::size_t>(i) * d_ + j) * d_ + l;
  }

  int d_ = 0;
  std::vector<double> data_;
};

}  // namespace sgdlab
