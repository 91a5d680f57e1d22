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

#include "pofgp/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "pofgp/errors.hpp"

namespace pofgp {

namespace forms {

double sine(double u) { return std::sin(6.0 * std::numbers::pi * u); }

// Bichon et al. (2008).
double multimodal(double v1, double v2) {
  return (v1 * v1 + 4.0) * (v2 - 1.0) / 20.0 - std::sin(2.5 * v1) - 2.0;
}

// Four-branch series system, Schoebi et al. (2017), with 7/sqrt(2) offsets.
double four_branch(double v1, double v2) {
  const double r = std::numbers::sqrt2;
  const double sq = 0.1 * (v1 - v2) * (v1 - v2);
  return std::min({3.0 + sq - (v1 + v2) / r, 3.0 + sq + (v1 + v2) / r,
                   (v1 - v2) + 7.0 / r, (v2 - v1) + 7.0 / r});
}

// Ishigami & Homma (1990) with a = 7, b = 0.1.
double ishigami(double v1, double v2, double v3) {
  const double s2 = std::sin(v2);
  return std::sin(v1) + 7.0 * s2 * s2 + 0.1 * v3 * v3 * v3 * v3 * std::sin(v1);
}

// Positive 6-d Hartmann (the usual test function is its negative).
double hartmann6(std::span<const double> u) {
  static constexpr std::array<double, 4> alpha = {1.0, 1.2, 3.0, 3.2};
  static constexpr double a[4][6] = {{10, 3, 17, 3.5, 1.7, 8},
                                     {0.05, 10, 17, 0.1, 8, 14},
                                     {3, 3.5, 1.7, 10, 17, 8},
                                     {17, 8, 0.05, 10, 0.1, 14}};
  static constexpr double p[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                     {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                     {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                     {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    double e = 0.0;
    for (int j = 0; j < 6; ++j) e += a[i][j] * (u[j] - p[i][j]) * (u[j] - p[i][j]);
    total += alpha[i] * std::exp(-e);
  }
  return total;
}

}  // namespace forms

namespace {

constexpr std::size_t kCalibrationNodes = std::size_t{1} << 22;
constexpr std::uint64_t kCalibrationSeed = 7;

// Thresholds from calibrate_threshold(raw_problem(name), d, true_p,
// kCalibrationNodes, kCalibrationSeed). Mirrored in data/problems.json.
constexpr double kMultimodalThreshold = 0.017225570880405883;
constexpr double kFourBranchThreshold = -0.011484827433699607;
constexpr double kIshigamiThreshold = 7.0295756154320959;
constexpr double kHartmannThreshold = 1.9979234793220946;

double affine(double u, double lo, double hi) { return lo + (hi - lo) * u; }

ProblemSpec make_problem(const ProblemFixture& fixture) {
  ProblemSpec spec;
  spec.name = fixture.name;
  spec.dimension = fixture.dimension;
  spec.true_p = fixture.true_p;
  spec.threshold = fixture.threshold;
  spec.provenance = "toy suite value " + std::to_string(fixture.true_p).substr(0, 6) +
                    "; " + fixture.form +
                    (fixture.calibration_seed
                         ? "; threshold calibrated on 2^22 Sobol' nodes, seed " +
                               std::to_string(*fixture.calibration_seed)
                         : "; conventional threshold");
  spec.evaluator = [raw = raw_problem(fixture.name), xi = fixture.threshold](
                       std::span<const double> u) { return raw(u) - xi; };
  return spec;
}

const ProblemFixture& fixture_named(std::string_view name) {
  for (const auto& f : problem_fixtures()) {
    if (f.name == name) return f;
  }
  throw InvalidArgument("unknown problem '" + std::string(name) + "'");
}

}  // namespace

const std::vector<ProblemFixture>& problem_fixtures() {
  static const std::vector<ProblemFixture> fixtures = {
      {"sine", 1, "sin(6 pi u)", 0.0, std::nullopt, 0, 0.50},
      {"multimodal", 2,
       "(v1^2 + 4)(v2 - 1)/20 - sin(5 v1 / 2) - 2, v uniform on [-4,7]x[-3,8]",
       kMultimodalThreshold, kCalibrationSeed, kCalibrationNodes, 0.30},
      {"four_branch", 2,
       "four-branch series system with 7/sqrt(2) offsets, v uniform on [-8,8]^2",
       kFourBranchThreshold, kCalibrationSeed, kCalibrationNodes, 0.21},
      {"ishigami", 3,
       "sin v1 + 7 sin^2 v2 + 0.1 v3^4 sin v1, v uniform on [-pi,pi]^3",
       kIshigamiThreshold, kCalibrationSeed, kCalibrationNodes, 0.16},
      {"hartmann", 6, "positive 6-d Hartmann on [0,1]^6", kHartmannThreshold,
       kCalibrationSeed, kCalibrationNodes, 0.0074},
  };
  return fixtures;
}

Evaluator raw_problem(std::string_view name) {
  constexpr double pi = std::numbers::pi;
  if (name == "sine") {
    return [](std::span<const double> u) { return forms::sine(u[0]); };
  }
  if (name == "multimodal") {
    return [](std::span<const double> u) {
      return forms::multimodal(affine(u[0], -4.0, 7.0), affine(u[1], -3.0, 8.0));
    };
  }
  if (name == "four_branch") {
    return [](std::span<const double> u) {
      return forms::four_branch(affine(u[0], -8.0, 8.0), affine(u[1], -8.0, 8.0));
    };
  }
  if (name == "ishigami") {
    return [](std::span<const double> u) {
      return forms::ishigami(affine(u[0], -pi, pi), affine(u[1], -pi, pi),
                             affine(u[2], -pi, pi));
    };
  }
  if (name == "hartmann") {
    return [](std::span<const double> u) { return forms::hartmann6(u); };
  }
  throw InvalidArgument("unknown problem '" + std::string(name) + "'");
}

ProblemSpec sine_problem() { return make_problem(fixture_named("sine")); }
ProblemSpec multimodal_problem() { return make_problem(fixture_named("multimodal")); }
ProblemSpec four_branch_problem() { return make_problem(fixture_named("four_branch")); }
ProblemSpec ishigami_problem() { return make_problem(fixture_named("ishigami")); }
ProblemSpec hartmann_problem() { return make_problem(fixture_named("hartmann")); }

std::vector<ProblemSpec> toy_problems() {
  std::vector<ProblemSpec> out;
  for (const auto& f : problem_fixtures()) out.push_back(make_problem(f));
  return out;
}

std::optional<ProblemSpec> find_problem(std::string_view name) {
  for (const auto& f : problem_fixtures()) {
    if (f.name == name) return make_problem(f);
  }
  return std::nullopt;
}

OracleEstimate brute_force_pof(const ProblemSpec& problem, std::size_t N,
                               std::uint64_t seed, SequenceKind kind) {
  if (N < 2) throw InvalidArgument("brute_force_pof: N must be at least 2");
  const std::size_t reps = std::min<std::size_t>(8, N);
  const std::size_t per_rep = N / reps;
  std::vector<double> means(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const SampleMatrix nodes =
        generate_nodes({kind, derive_seed(seed, r), problem.dimension}, per_rep);
    std::size_t failures = 0;
    for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
      const Eigen::RowVectorXd u = nodes.row(i);
      if (problem.evaluator(std::span<const double>(u.data(), u.size())) >= 0.0) {
        ++failures;
      }
    }
    means[r] = static_cast<double>(failures) / static_cast<double>(per_rep);
  }
  OracleEstimate out;
  for (double m : means) out.estimate += m;
  out.estimate /= static_cast<double>(reps);
  double ss = 0.0;
  for (double m : means) ss += (m - out.estimate) * (m - out.estimate);
  out.standard_error =
      std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps));
  return out;
}

double calibrate_threshold(const Evaluator& raw, std::size_t d, double target_p,
                           std::size_t N, std::uint64_t seed) {
  if (!(target_p > 0.0 && target_p < 1.0)) {
    throw InvalidArgument("calibrate_threshold: target_p must lie in (0, 1)");
  }
  if (N < 2) throw InvalidArgument("calibrate_threshold: N must be at least 2");
  const SampleMatrix nodes =
      generate_nodes({SequenceKind::low_discrepancy, seed, d}, N);
  std::vector<double> values(N);
  for (std::size_t i = 0; i < N; ++i) {
    const Eigen::RowVectorXd u = nodes.row(static_cast<Eigen::Index>(i));
    values[i] = raw(std::span<const double>(u.data(), u.size()));
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) {
    throw InvalidArgument("calibrate_threshold: raw function is constant on the nodes");
  }
  // k-th largest value, so that exactly k of N nodes reach it.
  auto k = static_cast<std::size_t>(std::llround(target_p * static_cast<double>(N)));
  k = std::clamp<std::size_t>(k, 1, N);
  auto kth = values.begin() + static_cast<std::ptrdiff_t>(N - k);
  std::nth_element(values.begin(), kth, values.end());
  return *kth;
}

}  // namespace pofgp
