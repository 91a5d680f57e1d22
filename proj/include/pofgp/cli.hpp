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

#ifndef POFGP_CLI_HPP_
#define POFGP_CLI_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pofgp/adaptive.hpp"

namespace pofgp::cli {

enum ExitCode : int { kSuccess = 0, kRuntimeFailure = 1, kUsageError = 2 };

/// What `estimate` leaves behind: the effective configuration, one row per
/// iteration, and where the simulation came from.
struct RunReport {
  nlohmann::json config;
  nlohmann::json source;  // problem fixture or endpoint description
  std::optional<double> truth;
  std::vector<IterationRecord> rows;
  std::string stop_reason;
  std::optional<std::string> error;  // set when the run aborted
  PofEstimate final_estimate;
  PriorSpec prior;
};

std::string format_real(double value);

/// Comma-separated iteration table. Wall-clock time is left out so that
/// equal seeds give byte-identical tables.
std::string iteration_table(const std::vector<IterationRecord>& rows);

nlohmann::json to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& doc);

/// Writes convergence.csv (n, p_hat, lower, upper, gamma_hat and, when the
/// truth is known, abs_error) and width.csv (n, width) into `dir`.
void write_plotdata(const RunReport& report, const std::filesystem::path& dir);

/// Entry point behind the `pofgp` executable.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace pofgp::cli

#endif  // POFGP_CLI_HPP_
