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

#ifndef POFGP_ADAPTIVE_HPP_
#define POFGP_ADAPTIVE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pofgp/estimators.hpp"
#include "pofgp/gp.hpp"
#include "pofgp/problems.hpp"
#include "pofgp/sampler.hpp"

namespace pofgp {

enum class HyperoptPolicy { initial_only, every_iteration, never };
enum class StopReason { width_reached, budget_exhausted, certainty_reached };

std::string_view to_string(HyperoptPolicy policy);
std::string_view to_string(StopReason reason);

struct AdaptiveConfig {
  double alpha = 0.05;
  std::size_t nodes = std::size_t{1} << 16;  // N, fixed for the whole run
  std::size_t n0 = 8;
  std::size_t batch = 4;
  std::size_t budget = 64;
  double target_width = 0.0;  // <= 0 disables the width rule
  std::uint64_t seed = 0;
  HyperoptPolicy hyperopt = HyperoptPolicy::initial_only;
  PriorSpec prior;
  HyperparameterSearch search;
  std::size_t max_tries_per_point = kDefaultTriesPerPoint;
  // Off: every iteration re-predicts from scratch instead of folding the
  // batch into the node cache. Results agree to round-off.
  bool incremental = true;
};

struct IterationRecord {
  std::size_t n = 0;
  double p_hat = 0.0;
  double gamma_hat = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double p_check = 0.0;
  double gamma_check = 0.0;
  std::size_t tries = 0;  // rejection-sampling candidates spent on this batch
  double elapsed = 0.0;   // wall seconds since the run started
};

struct RunResult {
  std::vector<IterationRecord> history;
  PofEstimate final_estimate;
  StopReason stop_reason = StopReason::budget_exhausted;
  PriorSpec prior;  // hyperparameters in force at the end
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

/// Thrown when the simulation or the GP fails mid-run. `partial` holds the
/// history recorded so far.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, RunResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}

  const RunResult& partial() const noexcept { return partial_; }

 private:
  RunResult partial_;
};

/// Evaluates g at each row; the result is ordered like the rows.
using BatchEvaluator = std::function<std::vector<double>(const Eigen::MatrixXd&)>;

BatchEvaluator in_process_evaluator(const ProblemSpec& problem);

struct RefreshedEstimates {
  PofEstimate estimate;
  double p_check = 0.0;
  double gamma_check = 0.0;
};

RefreshedEstimates refresh_estimates(const PredictionCache& cache, double alpha);

void validate(const AdaptiveConfig& config);

/// Runs the adaptive loop: initial Sobol' design, GP fit, then batches of
/// 2 ERR rejection samples until the interval is narrow enough, the budget
/// is spent, or the posterior is certain everywhere. Stop rules are checked
/// in that last-to-first order: certainty, width, budget.
RunResult run(std::size_t dimension, const AdaptiveConfig& config,
              const BatchEvaluator& evaluator);

RunResult run(const ProblemSpec& problem, const AdaptiveConfig& config);

}  // namespace pofgp

#endif  // POFGP_ADAPTIVE_HPP_
