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

#ifndef POFGP_ESTIMATORS_HPP_
#define POFGP_ESTIMATORS_HPP_

#include <cstddef>
#include <span>
#include <utility>

#include <Eigen/Dense>

#include "pofgp/gp.hpp"

namespace pofgp {

/// Point estimate of the failure probability with its credible interval
/// [lower, upper] = [max(p_hat - gamma_hat, 0), min(p_hat + gamma_hat, 1)].
struct PofEstimate {
  double p_hat = 0.0;
  double gamma_hat = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;
  std::size_t n = 0;  // simulation evaluations behind the posterior
  std::size_t N = 0;  // QMC nodes behind the averages
};

/// Per-node posterior failure probability p = P(g(u) >= 0) and the expected
/// misclassification rate err = min(p, 1 - p) of the sign-of-mean classifier.
struct VerticalField {
  Eigen::VectorXd p;
  Eigen::VectorXd err;
};

double vertical_p(double mean, double sd);

VerticalField err_field(const Eigen::VectorXd& mean, const Eigen::VectorXd& sd);
VerticalField err_field(const PredictionCache& cache);
/// Field from probabilities alone.
VerticalField field_from_probabilities(Eigen::VectorXd p);

/// Fraction of nodes whose posterior mean is >= 0.
double estimate_p_hat(const Eigen::VectorXd& mean);
double estimate_p_hat(const PredictionCache& cache);

/// mean(err) / alpha.
double estimate_gamma_hat(const VerticalField& field, double alpha);

/// mean(p).
double estimate_p_check(const VerticalField& field);

/// 2 mean(p (1 - p)) / alpha.
double estimate_gamma_check(const VerticalField& field, double alpha);

std::pair<double, double> credible_interval(double point, double gamma);

struct CmcResult {
  double mean = 0.0;
  double variance = 0.0;  // of the estimator: population variance / N
};

CmcResult cmc_estimate(std::span<const double> values);

/// (1/N) sum f_i / q_i. Nodes with f_i == 0 contribute nothing regardless
/// of q_i.
double ismc_estimate(std::span<const double> f_values,
                     std::span<const double> q_values);

}  // namespace pofgp

#endif  // POFGP_ESTIMATORS_HPP_
