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

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "pofgp/errors.hpp"
#include "pofgp/estimators.hpp"
#include "pofgp/qmc.hpp"

using namespace pofgp;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (const double x : values) v(i++) = x;
  return v;
}

Eigen::MatrixXd grid_1d(int m) {
  Eigen::MatrixXd g(m, 1);
  for (int i = 0; i < m; ++i) g(i, 0) = (i + 0.5) / m;
  return g;
}

// Posterior covariance on a grid by dense algebra.
Eigen::MatrixXd posterior_covariance(const PriorSpec& prior, const Eigen::MatrixXd& X,
                                     const Eigen::MatrixXd& U) {
  Eigen::MatrixXd K = oracle::gram(prior.kernel, X, X);
  K.diagonal().array() += prior.jitter;
  const Eigen::MatrixXd KUX = oracle::gram(prior.kernel, U, X);
  return oracle::gram(prior.kernel, U, U) - KUX * K.fullPivLu().solve(KUX.transpose());
}

}  // namespace

TEST_CASE("vertical probability") {
  CHECK(vertical_p(0.0, 1.0) == 0.5);
  CHECK(vertical_p(3.0, 0.0) == 1.0);
  CHECK(vertical_p(0.0, 0.0) == 1.0);
  CHECK(vertical_p(-1e-300, 0.0) == 0.0);
  CHECK(std::abs(vertical_p(1.0, 1.0) - oracle::normal_cdf(1.0)) < 1e-12);
  CHECK(std::abs(vertical_p(-2.0, 0.5) - oracle::normal_cdf(-4.0)) < 1e-12);
}

TEST_CASE("error field from probabilities") {
  const VerticalField f = field_from_probabilities(vec({0.5, 0.0, 0.9, 1.0, 0.25}));
  CHECK(f.err(0) == 0.5);
  CHECK(f.err(1) == 0.0);
  CHECK(f.err(2) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(f.err(3) == 0.0);
  CHECK(f.err(4) == 0.25);
}

TEST_CASE("error field from a posterior") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  Eigen::VectorXd mean(200), sd(200);
  for (int i = 0; i < 200; ++i) {
    mean(i) = z(rng);
    sd(i) = i % 10 == 0 ? 0.0 : std::abs(z(rng));
  }
  const VerticalField f = err_field(mean, sd);
  for (int i = 0; i < 200; ++i) {
    CHECK(f.p(i) >= 0.0);
    CHECK(f.p(i) <= 1.0);
    CHECK(f.err(i) == std::min(f.p(i), 1.0 - f.p(i)));
    CHECK(f.err(i) <= 0.5);
  }
  CHECK_THROWS_AS(err_field(mean, sd.head(10)), InvalidArgument);
}

TEST_CASE("error field of a prediction cache") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd X = oracle::random_points(6, 1, rng);
  const Eigen::MatrixXd U = oracle::random_points(40, 1, rng);
  const PredictionCache c = predict(fit({}, X, (X.col(0).array() - 0.5).matrix()), U);
  const VerticalField a = err_field(c);
  const VerticalField b = err_field(c.mean(), c.sd());
  CHECK(a.p == b.p);
  CHECK(estimate_p_hat(c) == estimate_p_hat(c.mean()));
}

TEST_CASE("predicted failure fraction") {
  CHECK(estimate_p_hat(vec({-1.0, -2.0, -1e-12})) == 0.0);
  CHECK(estimate_p_hat(vec({0.0, 2.0, 1e-12})) == 1.0);
  CHECK(estimate_p_hat(vec({0.0, -1.0})) == 0.5);
  const SampleMatrix u = generate_nodes({SequenceKind::low_discrepancy, 3, 1}, 1 << 14);
  CHECK(std::abs(estimate_p_hat((u.col(0).array() - 0.5).matrix()) - 0.5) < 1e-3);
  CHECK_THROWS_AS(estimate_p_hat(Eigen::VectorXd(0)), InvalidArgument);
}

TEST_CASE("credible half widths") {
  const auto constant_err = [](double p, int n) {
    return field_from_probabilities(Eigen::VectorXd::Constant(n, p));
  };
  CHECK(estimate_gamma_hat(constant_err(0.0, 8), 0.05) == 0.0);
  CHECK(estimate_gamma_hat(constant_err(0.5, 8), 0.5) == 1.0);
  CHECK(estimate_gamma_hat(constant_err(0.01, 8), 0.05) == doctest::Approx(0.2));
  CHECK(estimate_gamma_check(constant_err(0.0, 8), 0.05) == 0.0);
  CHECK(estimate_gamma_check(constant_err(0.5, 8), 0.5) == 1.0);
  CHECK(estimate_p_check(constant_err(1.0, 8)) == 1.0);
  CHECK(estimate_p_check(constant_err(0.5, 8)) == 0.5);
  for (const double alpha : {0.0, 1.0, -0.1, 1.5, std::numeric_limits<double>::quiet_NaN()}) {
    CHECK_THROWS_AS(estimate_gamma_hat(constant_err(0.2, 4), alpha), InvalidArgument);
    CHECK_THROWS_AS(estimate_gamma_check(constant_err(0.2, 4), alpha), InvalidArgument);
  }
}

TEST_CASE("the misclassification half width is the tighter one") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd p(64);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double x = u(rng);
      p(i) = trial % 3 == 0 ? (x < 0.5 ? 0.0 : 1.0) : x * x;
    }
    const VerticalField f = field_from_probabilities(p);
    CHECK(estimate_gamma_hat(f, 0.1) <= estimate_gamma_check(f, 0.1));
  }
}

TEST_CASE("point estimates agree on certain fields") {
  Eigen::VectorXd mean(5), sd = Eigen::VectorXd::Zero(5);
  mean << -1.0, 0.0, 2.0, -0.5, 3.0;
  const VerticalField f = err_field(mean, sd);
  CHECK(estimate_p_hat(mean) == estimate_p_check(f));
  CHECK(estimate_gamma_hat(f, 0.05) == 0.0);
}

TEST_CASE("posterior mean probability matches sampled paths") {
  const Eigen::MatrixXd grid = grid_1d(64);
  Eigen::MatrixXd X(4, 1);
  X << 0.1, 0.35, 0.6, 0.9;
  const Eigen::VectorXd y = vec({0.4, -0.3, 0.2, -0.6});
  PriorSpec prior;
  prior.kernel = {Smoothness::five_halves, 0.15, 1.0};
  prior.jitter = 1e-8;
  const PredictionCache c = predict(fit(prior, X, y), grid);
  const double p_check = estimate_p_check(err_field(c));

  Eigen::MatrixXd cov = posterior_covariance(prior, X, grid);
  cov.diagonal().array() += 1e-10;
  const Eigen::MatrixXd L = cov.llt().matrixL();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  const int draws = 1000;
  std::vector<double> measures(draws);
  for (int k = 0; k < draws; ++k) {
    Eigen::VectorXd e(grid.rows());
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = z(rng);
    const Eigen::VectorXd path = c.mean() + L * e;
    measures[k] = (path.array() >= 0.0).cast<double>().mean();
  }
  const CmcResult mc = cmc_estimate(measures);
  CHECK(std::abs(mc.mean - p_check) <= 3.0 * std::sqrt(mc.variance));
}

TEST_CASE("credible interval clamps") {
  auto [a, b] = credible_interval(0.5, 0.1);
  CHECK(a == doctest::Approx(0.4));
  CHECK(b == doctest::Approx(0.6));
  std::tie(a, b) = credible_interval(0.05, 0.2);
  CHECK(a == 0.0);
  CHECK(b == doctest::Approx(0.25));
  std::tie(a, b) = credible_interval(0.95, 0.2);
  CHECK(a == doctest::Approx(0.75));
  CHECK(b == 1.0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng), g = 2.0 * u(rng);
    std::tie(a, b) = credible_interval(p, g);
    CHECK(0.0 <= a);
    CHECK(a <= p);
    CHECK(p <= b);
    CHECK(b <= 1.0);
  }
}

TEST_CASE("crude Monte Carlo") {
  const std::vector<double> constant(10, 0.3);
  CHECK(cmc_estimate(constant).mean == doctest::Approx(0.3));
  CHECK(cmc_estimate(constant).variance == doctest::Approx(0.0));
  const std::vector<double> two = {0.0, 1.0};
  CHECK(cmc_estimate(two).mean == 0.5);
  CHECK(cmc_estimate(two).variance == 0.125);
  CHECK_THROWS_AS(cmc_estimate(std::vector<double>{1.0}), InvalidArgument);
}

TEST_CASE("crude Monte Carlo variance law") {
  const double mu = 0.3;
  const int N = 1000, reps = 1000;
  std::vector<double> estimates(reps);
  std::vector<double> values(N);
  for (int r = 0; r < reps; ++r) {
    for (int i = 0; i < N; ++i) {
      values[i] = counter_uniform(99, static_cast<std::uint64_t>(r),
                                  static_cast<std::uint64_t>(i)) < mu;
    }
    estimates[r] = cmc_estimate(values).mean;
  }
  const CmcResult spread = cmc_estimate(estimates);
  const double empirical = spread.variance * reps * reps / (reps - 1);
  CHECK(std::abs(empirical / (mu * (1 - mu) / N) - 1.0) < 0.2);
}

TEST_CASE("importance sampling") {
  const std::vector<double> f = {0.2, 0.0, 1.0, 0.7};
  const std::vector<double> ones(4, 1.0);
  CHECK(ismc_estimate(f, ones) == doctest::Approx(cmc_estimate(f).mean));

  // Zero-variance proposal q = 1_F / mu.
  const double mu = 0.3;
  const std::vector<double> fi = {1.0, 1.0, 1.0};
  const std::vector<double> qi(3, 1.0 / mu);
  CHECK(ismc_estimate(fi, qi) == doctest::Approx(mu).epsilon(1e-15));

  const std::vector<double> f_zero = {0.0, 1.0};
  const std::vector<double> q_zero = {0.0, 2.0};
  CHECK(ismc_estimate(f_zero, q_zero) == 0.25);
  const std::vector<double> q_bad = {2.0, 0.0};
  CHECK_THROWS_AS(ismc_estimate(f_zero, q_bad), InvalidArgument);
  CHECK_THROWS_AS(ismc_estimate(f_zero, ones), InvalidArgument);

  const int N = 10000;
  std::vector<double> fv(N), qv(N, 2.0), ratio(N);
  for (int i = 0; i < N; ++i) {
    const double u = 0.5 * counter_uniform(5, 0, static_cast<std::uint64_t>(i));
    fv[i] = u <= 0.25 ? 1.0 : 0.0;
    ratio[i] = fv[i] / qv[i];
  }
  const double se = std::sqrt(cmc_estimate(ratio).variance);
  CHECK(std::abs(ismc_estimate(fv, qv) - 0.25) <= 3.0 * se);
}

TEST_CASE("interval coverage on paths drawn from the prior") {
  const double alpha = 0.2;
  const int reps = 200;
  const Eigen::MatrixXd grid = grid_1d(128);
  PriorSpec prior;
  prior.kernel = {Smoothness::five_halves, 0.1, 1.0};
  prior.jitter = 1e-8;
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd paths = oracle::prior_paths(prior.kernel, grid, reps, rng);
  const int idx[] = {5, 30, 61, 90, 117};
  Eigen::MatrixXd X(5, 1);
  for (int k = 0; k < 5; ++k) X(k, 0) = grid(idx[k], 0);
  int covered = 0;
  for (int r = 0; r < reps; ++r) {
    Eigen::VectorXd y(5);
    for (int k = 0; k < 5; ++k) y(k) = paths(idx[k], r);
    const PredictionCache c = predict(fit(prior, X, y), grid);
    const double p_hat = estimate_p_hat(c);
    const double gamma = estimate_gamma_hat(err_field(c), alpha);
    const auto [lo, hi] = credible_interval(p_hat, gamma);
    const double truth = (paths.col(r).array() >= 0.0).cast<double>().mean();
    covered += lo <= truth && truth <= hi;
  }
  CHECK(covered >= static_cast<int>(std::ceil((1.0 - alpha - 0.09) * reps)));
}
