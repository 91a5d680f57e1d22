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

#ifndef POFGP_EXTSIM_HPP_
#define POFGP_EXTSIM_HPP_

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace pofgp {

enum class Transport { subprocess, http };

/// Where and how to reach an external simulation.
///
/// subprocess: `address` is a shell command. The child reads one JSON request
///   per line on stdin, {"id": <int>, "input": [<d reals>]}, and answers each
///   with one line {"id": <int>, "output": <real>} on stdout.
/// http: `address` is a URL. Each point is POSTed as {"input": [<d reals>]}
///   and a 200 response carries {"output": <real>}.
struct ModelEndpoint {
  Transport transport = Transport::subprocess;
  std::string address;
  std::size_t input_dim = 1;
  double timeout = 30.0;  // seconds per point
  std::size_t max_concurrency = 1;
  std::size_t retries = 0;
};

ModelEndpoint endpoint_from_json(const nlohmann::json& config);
nlohmann::json endpoint_to_json(const ModelEndpoint& endpoint);
ModelEndpoint load_endpoint(const std::filesystem::path& path);

/// Persistent handle on an endpoint. Subprocess workers are started on first
/// use and kept until the client is destroyed; a worker that times out or
/// breaks protocol is killed and restarted on the next call.
class ModelClient {
 public:
  explicit ModelClient(ModelEndpoint endpoint);
  ~ModelClient();
  ModelClient(const ModelClient&) = delete;
  ModelClient& operator=(const ModelClient&) = delete;

  const ModelEndpoint& endpoint() const;

  /// One request per row, up to max_concurrency in flight; the result is
  /// ordered like the rows. Blocks until every point is answered or one of
  /// them fails for good.
  std::vector<double> evaluate_batch(const Eigen::MatrixXd& points);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot convenience over a temporary ModelClient.
std::vector<double> evaluate_batch(const ModelEndpoint& endpoint,
                                   const Eigen::MatrixXd& points);

}  // namespace pofgp

#endif  // POFGP_EXTSIM_HPP_
