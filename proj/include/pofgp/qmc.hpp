/*
 * Copyright 2026 The pofgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef POFGP_QMC_HPP_
#define POFGP_QMC_HPP_

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace pofgp {

/// N x d block of points, one point per row. Node sets produced by this
/// module lie strictly inside the open unit cube.
using SampleMatrix = Eigen::MatrixXd;

enum class SequenceKind { low_discrepancy, iid };

struct SequenceConfig {
  SequenceKind kind = SequenceKind::low_discrepancy;
  std::uint64_t seed = 0;
  std::size_t dimension = 1;
};

/// Largest dimension served by the bundled direction numbers.
inline constexpr std::size_t kMaxSobolDimension = 32;

/// Rows [first, first + count) of the stream described by `config`.
/// Low-discrepancy streams are a base-2 Sobol' net in gray-code order with a
/// 64-bit random digital shift per coordinate; IID streams are counter based.
/// Either way row i depends only on (config, i), so disjoint ranges can be
/// produced independently and concatenated.
SampleMatrix generate_nodes(const SequenceConfig& config, std::size_t first,
                            std::size_t count);

inline SampleMatrix generate_nodes(const SequenceConfig& config,
                                   std::size_t n) {
  return generate_nodes(config, 0, n);
}

/// Standard normal CDF.
double normal_cdf(double z);

/// Inverse of the standard normal CDF on (0, 1).
double inverse_normal_cdf(double u);

/// Row i of the result is `mean + factor * inverse_normal_cdf(nodes.row(i))`.
/// `factor` is typically the Cholesky factor of the target covariance.
Eigen::MatrixXd transform_gaussian(const SampleMatrix& nodes,
                                   const Eigen::VectorXd& mean,
                                   const Eigen::MatrixXd& factor);

// Counter-based randomness shared by every module that needs it.

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Independent child seed for a named purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// Uniform draw in (0, 1) fully determined by (seed, stream, index).
double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t index);

namespace detail {
/// Unshifted Sobol' coordinate of point `index` (gray-code order) as a
/// 32-bit fraction, i.e. the value times 2^32.
std::uint32_t sobol_raw(std::size_t index, std::size_t coordinate);
}  // namespace detail

}  // namespace pofgp

#endif  // POFGP_QMC_HPP_
