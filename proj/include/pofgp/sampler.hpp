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

#ifndef POFGP_SAMPLER_HPP_
#define POFGP_SAMPLER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "pofgp/gp.hpp"

namespace pofgp {

struct RejectionResult {
  Eigen::MatrixXd accepted;   // b x d
  std::size_t tries = 0;
  std::size_t density_evals = 0;
};

/// Unnormalized density on [0,1]^d with values in [0, 1].
using Density = std::function<double(const Eigen::Ref<const Eigen::RowVectorXd>&)>;

/// Rejection sampling: draw a uniform candidate X_t and a uniform threshold
/// U_t, accept iff U_t <= density(X_t), until b points are accepted. Try t
/// is a pure function of (seed, t). Throws EfficiencyExhausted after
/// `max_tries` candidates.
RejectionResult rejection_sample(const Density& density, std::size_t b,
                                 std::size_t d, std::uint64_t seed,
                                 std::size_t max_tries);

struct BatchProposal {
  Eigen::MatrixXd points;  // b x d, empty when certainty_reached
  std::size_t tries = 0;
  std::size_t density_evals = 0;
  bool certainty_reached = false;
};

/// Default cap on candidates per requested point.
inline constexpr std::size_t kDefaultTriesPerPoint = 1'000'000;

/// b IID draws from the density proportional to ERR_n(u) = min(p_n, 1 - p_n)
/// under `model`, via rejection sampling of 2 ERR_n <= 1 with candidates
/// drawn exactly as in `rejection_sample`. Candidates closer than 1e-10 to an
/// observation or to an earlier draw of the batch are rejected and the
/// search continues. Exhausting `max_tries` (0 = b * kDefaultTriesPerPoint)
/// reports certainty_reached instead of throwing.
BatchProposal propose_batch(const GPModel& model, std::size_t b,
                            std::uint64_t seed, std::size_t max_tries = 0);

/// First n0 points of a randomized Sobol' stream reserved for designs.
Eigen::MatrixXd initial_design(std::size_t d, std::size_t n0, std::uint64_t seed);

}  // namespace pofgp

#endif  // POFGP_SAMPLER_HPP_
