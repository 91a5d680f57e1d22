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

#ifndef POFGP_ERRORS_HPP_
#define POFGP_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pofgp {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a kernel matrix (or a Schur complement of one) is not
/// positive definite. `suggested_jitter` is the nugget worth retrying with.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double suggested_jitter)
      : std::runtime_error(what), suggested_jitter_(suggested_jitter) {}

  double suggested_jitter() const noexcept { return suggested_jitter_; }

 private:
  double suggested_jitter_;
};

/// Rejection sampling gave up before collecting the requested draws.
class EfficiencyExhausted : public std::runtime_error {
 public:
  EfficiencyExhausted(const std::string& what, double acceptance_rate)
      : std::runtime_error(what), acceptance_rate_(acceptance_rate) {}

  double acceptance_rate() const noexcept { return acceptance_rate_; }

 private:
  double acceptance_rate_;
};

// External model failures.
class TimeoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProcessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pofgp

#endif  // POFGP_ERRORS_HPP_
