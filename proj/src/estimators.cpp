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

#include "pofgp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pofgp/errors.hpp"
#include "pofgp/qmc.hpp"

namespace pofgp {

namespace {

void check_alpha(double alpha, const char* what) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument(std::string(what) + ": alpha must lie in (0, 1)");
  }
}

void check_nonempty(const VerticalField& field, const char* what) {
  if (field.p.size() == 0) throw InvalidArgument(std::string(what) + ": empty field");
}

}  // namespace

double vertical_p(double mean, double sd) {
  if (sd <= 0.0) return mean >= 0.0 ? 1.0 : 0.0;
  return normal_cdf(mean / sd);
}

VerticalField err_field(const Eigen::VectorXd& mean, const Eigen::VectorXd& sd) {
  if (mean.size() != sd.size()) {
    throw InvalidArgument("err_field: mean and sd lengths differ");
  }
  Eigen::VectorXd p(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) p[i] = vertical_p(mean[i], sd[i]);
  return field_from_probabilities(std::move(p));
}

VerticalField err_field(const PredictionCache& cache) {
  return err_field(cache.mean(), cache.sd());
}

VerticalField field_from_probabilities(Eigen::VectorXd p) {
  VerticalField field;
  field.err = p.cwiseMin((1.0 - p.array()).matrix());
  field.p = std::move(p);
  return field;
}

double estimate_p_hat(const Eigen::VectorXd& mean) {
  if (mean.size() == 0) throw InvalidArgument("estimate_p_hat: no nodes");
  const auto failures = (mean.array() >= 0.0).count();
  return static_cast<double>(failures) / static_cast<double>(mean.size());
}

double estimate_p_hat(const PredictionCache& cache) {
  return estimate_p_hat(cache.mean());
}

double estimate_gamma_hat(const VerticalField& field, double alpha) {
  check_alpha(alpha, "estimate_gamma_hat");
  check_nonempty(field, "estimate_gamma_hat");
  return field.err.mean() / alpha;
}

double estimate_p_check(const VerticalField& field) {
  check_nonempty(field, "estimate_p_check");
  return field.p.mean();
}

double estimate_gamma_check(const VerticalField& field, double alpha) {
  check_alpha(alpha, "estimate_gamma_check");
  check_nonempty(field, "estimate_gamma_check");
  return 2.0 * (field.p.array() * (1.0 - field.p.array())).mean() / alpha;
}

std::pair<double, double> credible_interval(double point, double gamma) {
  return {std::max(point - gamma, 0.0), std::min(point + gamma, 1.0)};
}

CmcResult cmc_estimate(std::span<const double> values) {
  if (values.size() < 2) {
    throw InvalidArgument("cmc_estimate: need at least 2 values, got " +
                          std::to_string(values.size()));
  }
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, ss / n / n};
}

double ismc_estimate(std::span<const double> f_values,
                     std::span<const double> q_values) {
  if (f_values.size() != q_values.size() || f_values.empty()) {
    throw InvalidArgument("ismc_estimate: f and q must be nonempty and of equal length");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < f_values.size(); ++i) {
    if (f_values[i] == 0.0) continue;
    if (!(q_values[i] > 0.0)) {
      throw InvalidArgument("ismc_estimate: proposal density vanishes at node " +
                            std::to_string(i) + " where f is nonzero");
    }
    sum += f_values[i] / q_values[i];
  }
  return sum / static_cast<double>(f_values.size());
}

}  // namespace pofgp
