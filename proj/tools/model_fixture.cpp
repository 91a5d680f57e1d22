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

// Stand-in external simulator for tests. Speaks the line protocol on
// stdin/stdout, or serves POST /evaluate with --http.

#include <atomic>
#include <chrono>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "pofgp/problems.hpp"
// After Eigen: resolv.h, pulled in by httplib, defines _res.
#include "CLI11.hpp"
#include "httplib.h"
#include "json.hpp"

namespace {

struct Behaviour {
  pofgp::Evaluator evaluator;
  bool echo = false;
  int sleep_ms = 0;
  long fail_after = -1;
  bool garbage = false;
};

double respond(const Behaviour& b, const std::vector<double>& input) {
  if (b.sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(b.sleep_ms));
  if (b.echo) return input.empty() ? 0.0 : input.front();
  return b.evaluator(input);
}

int serve_stdio(const Behaviour& b) {
  long served = 0;
  for (std::string line; std::getline(std::cin, line);) {
    if (line.empty()) continue;
    if (b.fail_after >= 0 && served >= b.fail_after) return 3;
    if (b.garbage) {
      std::cout << "not json at all" << std::endl;
      continue;
    }
    const auto req = nlohmann::json::parse(line);
    const auto input = req.at("input").get<std::vector<double>>();
    nlohmann::json reply = {{"id", req.at("id")}, {"output", respond(b, input)}};
    std::cout << reply.dump() << std::endl;
    ++served;
  }
  return 0;
}

int serve_http(const Behaviour& b, int port) {
  httplib::Server server;
  std::atomic<long> served{0};
  server.Post("/evaluate", [&](const httplib::Request& req, httplib::Response& res) {
    if (b.fail_after >= 0 && served.fetch_add(1) >= b.fail_after) {
      res.status = 500;
      res.set_content("{\"error\":\"fixture failure\"}", "application/json");
      return;
    }
    if (b.garbage) {
      res.set_content("not json at all", "text/plain");
      return;
    }
    const auto body = nlohmann::json::parse(req.body);
    const auto input = body.at("input").get<std::vector<double>>();
    res.set_content(nlohmann::json({{"output", respond(b, input)}}).dump(),
                    "application/json");
  });
  if (port == 0) {
    port = server.bind_to_any_port("127.0.0.1");
  } else if (!server.bind_to_port("127.0.0.1", port)) {
    std::cerr << "cannot bind port " << port << '\n';
    return 1;
  }
  if (port < 0) {
    std::cerr << "cannot bind\n";
    return 1;
  }
  std::cout << port << std::endl;
  return server.listen_after_bind() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model fixture for the external-simulator interface", "pofgp_model_fixture"};
  std::string problem = "ishigami";
  bool http = false;
  int port = 0;
  Behaviour b;
  app.add_option("--problem", problem, "Toy problem to serve");
  app.add_flag("--http", http, "Serve HTTP instead of stdio");
  app.add_option("--port", port, "HTTP port, 0 picks a free one and prints it");
  app.add_flag("--echo", b.echo, "Reply with the first input coordinate");
  app.add_option("--sleep-ms", b.sleep_ms, "Delay before every reply");
  app.add_option("--fail-after", b.fail_after, "Fail after this many replies");
  app.add_flag("--garbage", b.garbage, "Reply with malformed payloads");
  CLI11_PARSE(app, argc, argv);

  const auto spec = pofgp::find_problem(problem);
  if (!spec) {
    std::cerr << "unknown problem " << problem << '\n';
    return 2;
  }
  b.evaluator = spec->evaluator;
  return http ? serve_http(b, port) : serve_stdio(b);
}
