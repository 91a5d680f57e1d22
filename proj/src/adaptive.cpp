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

#include "pofgp/adaptive.hpp"

#include <algorithm>
#include <chrono>
#include <optional>
#include <utility>

#include "pofgp/errors.hpp"
#include "pofgp/qmc.hpp"

namespace pofgp {

namespace {

constexpr std::uint64_t kNodesTag = 0x6e6f646573ULL;       // "nodes"
constexpr std::uint64_t kProposalTag = 0x70726f706f7365ULL;  // "propose"

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct LoopState {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  PriorSpec prior;
  std::optional<GPModel> model;
  std::optional<PredictionCache> cache;
  bool escalated = false;
};

RunResult snapshot(const LoopState& state, std::vector<IterationRecord> history,
                   StopReason reason, double alpha, std::size_t nodes) {
  RunResult result;
  result.history = std::move(history);
  result.stop_reason = reason;
  result.prior = state.prior;
  result.X = state.X;
  result.y = state.y;
  if (!result.history.empty()) {
    const IterationRecord& last = result.history.back();
    result.final_estimate = {last.p_hat, last.gamma_hat, last.lower, last.upper,
                             alpha,      last.n,         nodes};
  }
  return result;
}

void append_rows(Eigen::MatrixXd& X, Eigen::VectorXd& y, const Eigen::MatrixXd& X_new,
                 const Eigen::VectorXd& y_new) {
  const Eigen::Index n = X.rows();
  X.conservativeResize(n + X_new.rows(), X_new.cols());
  X.bottomRows(X_new.rows()) = X_new;
  y.conservativeResize(n + y_new.size());
  y.tail(y_new.size()) = y_new;
}

}  // namespace

std::string_view to_string(HyperoptPolicy policy) {
  switch (policy) {
    case HyperoptPolicy::initial_only: return "initial";
    case HyperoptPolicy::every_iteration: return "every";
    case HyperoptPolicy::never: return "never";
  }
  return "?";
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::width_reached: return "width_reached";
    case StopReason::budget_exhausted: return "budget_exhausted";
    case StopReason::certainty_reached: return "certainty_reached";
  }
  return "?";
}

BatchEvaluator in_process_evaluator(const ProblemSpec& problem) {
  return [evaluator = problem.evaluator](const Eigen::MatrixXd& points) {
    std::vector<double> out(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const Eigen::RowVectorXd u = points.row(i);
      out[static_cast<std::size_t>(i)] =
          evaluator(std::span<const double>(u.data(), u.size()));
    }
    return out;
  };
}

RefreshedEstimates refresh_estimates(const PredictionCache& cache, double alpha) {
  const VerticalField field = err_field(cache);
  RefreshedEstimates out;
  PofEstimate& e = out.estimate;
  e.p_hat = estimate_p_hat(cache);
  e.gamma_hat = estimate_gamma_hat(field, alpha);
  std::tie(e.lower, e.upper) = credible_interval(e.p_hat, e.gamma_hat);
  e.alpha = alpha;
  e.n = cache.observations();
  e.N = cache.node_count();
  out.p_check = estimate_p_check(field);
  out.gamma_check = estimate_gamma_check(field, alpha);
  return out;
}

void validate(const AdaptiveConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
    throw InvalidArgument("alpha must lie in (0, 1)");
  }
  if (config.n0 < 2) throw InvalidArgument("n0 must be at least 2");
  if (config.batch < 1) throw InvalidArgument("batch size must be at least 1");
  if (config.budget < config.n0) throw InvalidArgument("budget must be at least n0");
  if (config.nodes < 1) throw InvalidArgument("node count must be positive");
  if (config.max_tries_per_point < 1) {
    throw InvalidArgument("max_tries_per_point must be positive");
  }
}

RunResult run(std::size_t dimension, const AdaptiveConfig& config,
              const BatchEvaluator& evaluator) {
  validate(config);
  if (dimension == 0) throw InvalidArgument("dimension must be positive");
  const Stopwatch clock;
  LoopState state;
  state.prior = config.prior;
  std::vector<IterationRecord> history;

  auto aborted = [&](const std::string& why) -> RunAborted {
    return RunAborted(why, snapshot(state, history, StopReason::budget_exhausted,
                                    config.alpha, config.nodes));
  };

  auto evaluate = [&](const Eigen::MatrixXd& points) {
    Eigen::VectorXd values(points.rows());
    for (Eigen::Index start = 0; start < points.rows();
         start += static_cast<Eigen::Index>(config.batch)) {
      const Eigen::Index count =
          std::min<Eigen::Index>(static_cast<Eigen::Index>(config.batch),
                                 points.rows() - start);
      std::vector<double> out;
      try {
        out = evaluator(points.middleRows(start, count));
      } catch (const std::exception& e) {
        throw aborted(std::string("simulation failed: ") + e.what());
      }
      if (out.size() != static_cast<std::size_t>(count)) {
        throw aborted("simulation returned " + std::to_string(out.size()) +
                    " values for " + std::to_string(count) + " points");
      }
      for (Eigen::Index i = 0; i < count; ++i) {
        values[start + i] = out[static_cast<std::size_t>(i)];
      }
    }
    return values;
  };

  const SampleMatrix nodes = generate_nodes(
      {SequenceKind::low_discrepancy, derive_seed(config.seed, kNodesTag), dimension},
      config.nodes);

  // Full refit and fresh prediction, escalating the jitter once on failure.
  auto refit = [&](bool optimize) {
    for (;;) {
      try {
        if (optimize) state.prior = optimize_hyperparameters(state.prior, state.X,
                                                             state.y, config.search);
        state.model = fit(state.prior, state.X, state.y);
        state.cache = predict(*state.model, nodes);
        return;
      } catch (const NumericalError& e) {
        if (state.escalated) throw aborted(std::string("GP failure: ") + e.what());
        state.escalated = true;
        state.prior.jitter = e.suggested_jitter();
      }
    }
  };

  state.X = initial_design(dimension, config.n0, config.seed);
  state.y = evaluate(state.X);
  refit(config.hyperopt != HyperoptPolicy::never);

  std::size_t tries = 0;
  for (std::uint64_t iteration = 0;; ++iteration) {
    const RefreshedEstimates r = refresh_estimates(*state.cache, config.alpha);
    history.push_back({state.model->size(), r.estimate.p_hat, r.estimate.gamma_hat,
                       r.estimate.lower, r.estimate.upper, r.p_check, r.gamma_check,
                       tries, clock.seconds()});

    std::optional<StopReason> stop;
    if (r.estimate.gamma_hat == 0.0) {
      stop = StopReason::certainty_reached;
    } else if (config.target_width > 0.0 &&
               r.estimate.upper - r.estimate.lower <= config.target_width) {
      stop = StopReason::width_reached;
    } else if (state.model->size() >= config.budget) {
      stop = StopReason::budget_exhausted;
    }
    if (stop) return snapshot(state, std::move(history), *stop, config.alpha, config.nodes);

    const std::size_t b = std::min(config.batch, config.budget - state.model->size());
    const BatchProposal proposal =
        propose_batch(*state.model, b, derive_seed(config.seed, kProposalTag + iteration),
                      b * config.max_tries_per_point);
    if (proposal.certainty_reached) {
      return snapshot(state, std::move(history), StopReason::certainty_reached,
                      config.alpha, config.nodes);
    }
    tries = proposal.tries;
    const Eigen::VectorXd y_new = evaluate(proposal.points);
    append_rows(state.X, state.y, proposal.points, y_new);

    if (config.hyperopt == HyperoptPolicy::every_iteration) {
      refit(true);
      continue;
    }
    try {
      GPModel next = update(*state.model, proposal.points, y_new);
      if (config.incremental) {
        state.cache = update_predictions(*state.model, std::move(*state.cache),
                                         proposal.points, y_new, next);
      } else {
        state.cache = predict(next, nodes);
      }
      state.model = std::move(next);
    } catch (const NumericalError& e) {
      if (state.escalated) throw aborted(std::string("GP failure: ") + e.what());
      state.escalated = true;
      state.prior.jitter = e.suggested_jitter();
      refit(false);
    }
  }
}

RunResult run(const ProblemSpec& problem, const AdaptiveConfig& config) {
  return run(problem.dimension, config, in_process_evaluator(problem));
}

}  // namespace pofgp
