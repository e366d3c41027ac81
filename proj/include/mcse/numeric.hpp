// Copyright 2026 The MCSE Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MCSE_NUMERIC_HPP_
#define MCSE_NUMERIC_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mcse {

// Dense carriers. Matrices are row-major with one instance per row.
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VectorXs = Vector<double>;
using MatrixXs = Matrix<double>;
using Index = Eigen::Index;

// Thrown for degenerate inputs (zero norm, empty sets, shape mismatch).
class NumericError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed files, inconsistent datasets and configuration problems.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kNormEpsilon = 1e-12;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_sim(const Eigen::MatrixBase<DerivedA>& a,
                                     const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw NumericError("cosine_sim: dimension mismatch");
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (!(na > Scalar(0)) || !(nb > Scalar(0))) {
    throw NumericError("cosine_sim: zero-norm input");
  }
  const Scalar c = a.dot(b) / (na * nb);
  // Rounding can push |c| a hair past 1.
  return std::clamp(c, Scalar(-1), Scalar(1));
}

template <typename Derived>
Vector<typename Derived::Scalar> l2_normalize(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const Scalar n = a.norm();
  if (!(n > Scalar(kNormEpsilon))) {
    throw NumericError("l2_normalize: degenerate input with near-zero norm");
  }
  return a / n;
}

// Normalizes every row in place.
template <typename Scalar>
void normalize_rows(Matrix<Scalar>& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    const Scalar n = m.row(i).norm();
    if (!(n > Scalar(kNormEpsilon))) {
      throw NumericError("normalize_rows: row " + std::to_string(i) + " has near-zero norm");
    }
    m.row(i) /= n;
  }
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& xs) {
  using Scalar = typename Derived::Scalar;
  if (xs.size() == 0) throw NumericError("log_sum_exp: empty input");
  const Scalar m = xs.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((xs.derived().array() - m).exp().sum());
}

// -log softmax(scores)[target].
template <typename Derived>
typename Derived::Scalar softmax_nll(const Eigen::DenseBase<Derived>& scores, Index target) {
  if (scores.size() == 0) throw NumericError("softmax_nll: empty scores");
  if (target < 0 || target >= scores.size()) {
    throw NumericError("softmax_nll: target index out of range");
  }
  const auto nll = log_sum_exp(scores) - scores(target);
  // lse >= any single entry mathematically; clamp the last-ulp rounding.
  return nll < 0 ? typename Derived::Scalar(0) : nll;
}

// Row-wise softmax; each row of the result sums to one.
template <typename Scalar>
Matrix<Scalar> softmax_rows(const Matrix<Scalar>& logits) {
  Matrix<Scalar> p(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const Scalar m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

// Central-difference gradient of f at point, one coordinate at a time.
template <typename Scalar>
Vector<Scalar> finite_diff_grad(const std::function<Scalar(const Vector<Scalar>&)>& f,
                                const Vector<Scalar>& point, Scalar eps = Scalar(1e-5)) {
  if (!(eps > Scalar(0))) throw NumericError("finite_diff_grad: eps must be positive");
  Vector<Scalar> grad(point.size());
  Vector<Scalar> x = point;
  for (Index k = 0; k < point.size(); ++k) {
    const Scalar saved = x(k);
    x(k) = saved + eps;
    const Scalar up = f(x);
    x(k) = saved - eps;
    const Scalar down = f(x);
    x(k) = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite function value at coordinate " +
                         std::to_string(k));
    }
    grad(k) = (up - down) / (Scalar(2) * eps);
  }
  return grad;
}

// Backward pass of y = u / |u| given y and |u|: du = (dy - y (y . dy)) / |u|.
template <typename DerivedY, typename DerivedG>
Vector<typename DerivedY::Scalar> normalize_backward(const Eigen::MatrixBase<DerivedY>& y,
                                                     const Eigen::MatrixBase<DerivedG>& dy,
                                                     typename DerivedY::Scalar norm_u) {
  return (dy - y * y.dot(dy)) / norm_u;
}

}  // namespace mcse

#endif  // MCSE_NUMERIC_HPP_
