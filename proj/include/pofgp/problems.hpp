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

#ifndef POFGP_PROBLEMS_HPP_
#define POFGP_PROBLEMS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pofgp/qmc.hpp"

namespace pofgp {

/// Scalar simulation on the unit cube. Failure is evaluator(u) >= 0.
using Evaluator = std::function<double(std::span<const double>)>;

struct ProblemSpec {
  std::string name;
  std::size_t dimension = 0;
  Evaluator evaluator;
  std::optional<double> true_p;
  std::string provenance;
  double threshold = 0.0;  // xi already folded into `evaluator`
};

// Textbook forms on their native domains.
namespace forms {
double sine(double u);
double multimodal(double v1, double v2);
double four_branch(double v1, double v2);
double ishigami(double v1, double v2, double v3);
double hartmann6(std::span<const double> u);
}  // namespace forms

/// One row of the fixture manifest.
struct ProblemFixture {
  std::string name;
  std::size_t dimension;
  std::string form;
  double threshold;
  std::optional<std::uint64_t> calibration_seed;
  std::size_t calibration_nodes;
  double true_p;
};

const std::vector<ProblemFixture>& problem_fixtures();

ProblemSpec sine_problem();
ProblemSpec multimodal_problem();
ProblemSpec four_branch_problem();
ProblemSpec ishigami_problem();
ProblemSpec hartmann_problem();

/// Raw (uncalibrated) simulation of a named problem: form composed with its
/// change of variables, before the threshold shift.
Evaluator raw_problem(std::string_view name);

std::vector<ProblemSpec> toy_problems();
std::optional<ProblemSpec> find_problem(std::string_view name);

struct OracleEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

/// Mean of 1{evaluator >= 0} over N points split across min(8, N)
/// independent randomizations; the standard error is taken across them.
OracleEstimate brute_force_pof(const ProblemSpec& problem, std::size_t N,
                               std::uint64_t seed,
                               SequenceKind kind = SequenceKind::low_discrepancy);

/// xi such that a fraction target_p of N low-discrepancy nodes satisfy
/// raw(u) >= xi.
double calibrate_threshold(const Evaluator& raw, std::size_t d, double target_p,
                           std::size_t N, std::uint64_t seed);

}  // namespace pofgp

#endif  // POFGP_PROBLEMS_HPP_
