// Copyright 2026 The Vulnspace Authors.
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

#ifndef VULNSPACE_TYPES_HPP
#define VULNSPACE_TYPES_HPP

#include <Eigen/Core>

#include <vector>

namespace vulnspace {

using Index = Eigen::Index;

// Rows are observations throughout, so dense storage is row-major.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXr = Matrix<double>;
using VectorXr = Vector<double>;

/// Cluster id for rows a density method leaves unassigned.
inline constexpr int kNoise = -1;
/// Target id for rows without a label for the task at hand.
inline constexpr int kMissing = -1;

using Labels = std::vector<int>;

}  // namespace vulnspace

#endif  // VULNSPACE_TYPES_HPP
