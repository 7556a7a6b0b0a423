// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

namespace lmtc {

// Dense numeric types. Scalar stays double project-wide: the finite-difference
// gradient checks require 64-bit arithmetic.
template <class S>
using MatrixT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VectorT = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using RowVectorT = Eigen::Matrix<S, 1, Eigen::Dynamic>;

using Scalar = double;
using Matrix = MatrixT<Scalar>;
using Vector = VectorT<Scalar>;
using RowVector = RowVectorT<Scalar>;
using Index = Eigen::Index;

}  // namespace lmtc
