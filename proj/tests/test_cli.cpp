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

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "pofgp/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome pofgp_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pofgp");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = pofgp::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pofgp_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) out.push_back(cell);
  return out;
}

nlohmann::json summary(const fs::path& dir) {
  return nlohmann::json::parse(slurp(dir / "summary.json"));
}

}  // namespace

TEST_CASE("estimate on the sine problem") {
  const fs::path dir = scratch("sine");
  const Outcome r = pofgp_cli({"estimate", "--problem", "sine", "--alpha", "0.05", "--budget",
                               "64", "--batch", "4", "--seed", "1", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const nlohmann::json s = summary(dir);
  CHECK(s["final"]["lower"].get<double>() <= 0.5);
  CHECK(s["final"]["upper"].get<double>() >= 0.5);
  CHECK(s["truth"].get<double>() == 0.5);
  CHECK(s["config"]["budget"] == 64);
  CHECK(s["config"]["init"] == 8);
  CHECK(s["source"]["name"] == "sine");
  CHECK(r.out.find("interval") != std::string::npos);
  const auto rows = lines(slurp(dir / "iterations.csv"));
  CHECK(rows.front() == "n,p_hat,gamma_hat,lower,upper,p_check,gamma_check,tries");
  CHECK(rows.size() == s["history"].size() + 1);
  CHECK(s["history"].back()["n"] == 64);
}

TEST_CASE("estimate is reproducible byte for byte") {
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  const std::vector<std::string> common = {"estimate", "--problem", "four_branch", "--seed", "3",
                                           "--nodes", "4096", "--budget", "30"};
  auto args = common;
  args.insert(args.end(), {"--out", a.string()});
  REQUIRE(pofgp_cli(args).code == 0);
  args = common;
  args.insert(args.end(), {"--out", b.string()});
  REQUIRE(pofgp_cli(args).code == 0);
  CHECK(slurp(a / "iterations.csv") == slurp(b / "iterations.csv"));
}

TEST_CASE("usage errors") {
  CHECK(pofgp_cli({"estimate", "--problem", "nope"}).code == 2);
  CHECK(pofgp_cli({"estimate"}).code == 2);
  CHECK(pofgp_cli({"estimate", "--problem", "sine", "--endpoint", "x.json"}).code == 2);
  CHECK(pofgp_cli({"estimate", "--problem", "sine", "--hyperopt", "sometimes"}).code == 2);
  CHECK(pofgp_cli({"estimate", "--problem", "sine", "--alpha", "1.5"}).code == 2);
  CHECK(pofgp_cli({"estimate", "--problem", "sine", "--budget", "3"}).code == 2);
  CHECK(pofgp_cli({"estimate", "--endpoint", "/nonexistent/endpoint.json"}).code == 2);
  CHECK(pofgp_cli({"estimate", "--problem", "sine", "--bogus"}).code == 2);
  CHECK(pofgp_cli({}).code == 2);
  CHECK(pofgp_cli({"frobnicate"}).code == 2);
  const Outcome help = pofgp_cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("estimate") != std::string::npos);
}

TEST_CASE("config file values sit between defaults and flags") {
  const fs::path dir = scratch("config");
  fs::create_directories(dir);
  const fs::path cfg = dir / "run.toml";
  std::ofstream(cfg) << "budget = 16\nseed = 9\nnodes = 2048\nhyperopt = \"never\"\n";
  REQUIRE(pofgp_cli({"estimate", "--config", cfg.string(), "--problem", "sine", "--seed", "4",
                     "--out", (dir / "out").string()})
              .code == 0);
  const nlohmann::json s = summary(dir / "out");
  CHECK(s["config"]["budget"] == 16);
  CHECK(s["config"]["nodes"] == 2048);
  CHECK(s["config"]["seed"] == 4);
  CHECK(s["config"]["hyperopt"] == "never");
  CHECK(s["config"]["alpha"] == 0.05);
}

TEST_CASE("output directory from the environment") {
  const fs::path dir = scratch("env");
  setenv("POFGP_OUT_DIR", dir.string().c_str(), 1);
  const Outcome r = pofgp_cli({"estimate", "--problem", "sine", "--nodes", "1024", "--budget", "8"});
  unsetenv("POFGP_OUT_DIR");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(fs::exists(dir / "iterations.csv"));
}

TEST_CASE("estimate through an external endpoint") {
  const fs::path dir = scratch("endpoint");
  fs::create_directories(dir);
  const fs::path ep = dir / "endpoint.json";
  std::ofstream(ep) << nlohmann::json({{"transport", "subprocess"},
                                       {"address", POFGP_FIXTURE_PATH},
                                       {"input_dim", 3},
                                       {"max_concurrency", 2}})
                           .dump();
  const std::vector<std::string> common = {"--seed", "2", "--nodes", "2048", "--budget", "24",
                                           "--init", "12"};
  auto args = std::vector<std::string>{"estimate", "--endpoint", ep.string(), "--out",
                                       (dir / "ext").string()};
  args.insert(args.end(), common.begin(), common.end());
  REQUIRE(pofgp_cli(args).code == 0);
  args = {"estimate", "--problem", "ishigami", "--out", (dir / "local").string()};
  args.insert(args.end(), common.begin(), common.end());
  REQUIRE(pofgp_cli(args).code == 0);
  CHECK(slurp(dir / "ext" / "iterations.csv") == slurp(dir / "local" / "iterations.csv"));
  const nlohmann::json s = summary(dir / "ext");
  CHECK(s["truth"].is_null());
  CHECK(s["source"]["kind"] == "endpoint");
}

TEST_CASE("an aborted run exits 1 and keeps its partial report") {
  const fs::path dir = scratch("abort");
  fs::create_directories(dir);
  const fs::path ep = dir / "endpoint.json";
  std::ofstream(ep) << nlohmann::json({{"transport", "subprocess"},
                                       {"address", std::string(POFGP_FIXTURE_PATH) +
                                                       " --fail-after 14"},
                                       {"input_dim", 3}})
                           .dump();
  const Outcome r = pofgp_cli({"estimate", "--endpoint", ep.string(), "--nodes", "1024",
                               "--budget", "40", "--out", (dir / "out").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("aborted") != std::string::npos);
  const nlohmann::json s = summary(dir / "out");
  CHECK(s["stop_reason"] == "aborted");
  CHECK(s["error"].is_string());
  CHECK(s["history"].size() == 1);
}

TEST_CASE("benchmark table") {
  const fs::path dir = scratch("bench");
  const Outcome one = pofgp_cli({"benchmark", "--problems", "sine", "--nodes", "4096", "--out",
                                 dir.string()});
  REQUIRE(one.code == 0);
  auto rows = lines(slurp(dir / "benchmark.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(split(rows[0])[7] == "contained");
  CHECK(split(rows[1])[0] == "sine");

  const Outcome all = pofgp_cli({"benchmark", "--nodes", "4096", "--out", dir.string()});
  REQUIRE(all.code == 0);
  rows = lines(slurp(dir / "benchmark.csv"));
  REQUIRE(rows.size() == 6);
  const double truth[] = {0.5, 0.3, 0.21, 0.16, 0.0074};
  const int budget[] = {64, 128, 128, 192, 512};
  const int n0[] = {8, 10, 10, 12, 18};
  for (int i = 0; i < 5; ++i) {
    const auto cells = split(rows[static_cast<std::size_t>(i) + 1]);
    CHECK(std::stod(cells[3]) == truth[i]);
    CHECK(std::stoi(cells[8]) >= n0[i]);
    CHECK(std::stoi(cells[8]) <= budget[i]);
  }
  CHECK(pofgp_cli({"benchmark", "--problems", "sine,nope"}).code == 2);
  CHECK(pofgp_cli({"benchmark", "--seeds", "x"}).code == 2);
  CHECK(pofgp_cli({"benchmark", "--seeds", "1-5"}).code == 2);
}

TEST_CASE("baselines") {
  const fs::path dir = scratch("baselines");
  REQUIRE(pofgp_cli({"baselines", "--problem", "sine", "--nodes", "1024", "--seed", "1", "--out",
                     dir.string()})
              .code == 0);
  const auto rows = lines(slurp(dir / "baselines.csv"));
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 1; i < 3; ++i) {
    const auto cells = split(rows[i]);
    const double estimate = std::stod(cells[2]);
    const double se = std::max(std::stod(cells[3]), std::sqrt(0.25 / 1024));
    CHECK(std::abs(estimate - 0.5) <= 3.0 * se);
  }
  CHECK(pofgp_cli({"baselines", "--problem", "sine", "--nodes", "1"}).code == 2);
  CHECK(pofgp_cli({"baselines", "--problem", "nope"}).code == 2);
  CHECK(pofgp_cli({"baselines"}).code == 2);
}

TEST_CASE("quasi Monte Carlo beats crude Monte Carlo on the sine indicator") {
  std::vector<double> cmc_err, qmc_err;
  for (int seed = 1; seed <= 16; ++seed) {
    const fs::path dir = scratch("qmc_vs_cmc");
    REQUIRE(pofgp_cli({"baselines", "--problem", "sine", "--nodes", "16384", "--seed",
                       std::to_string(seed), "--out", dir.string()})
                .code == 0);
    const auto rows = lines(slurp(dir / "baselines.csv"));
    cmc_err.push_back(std::stod(split(rows[1])[5]));
    qmc_err.push_back(std::stod(split(rows[2])[5]));
  }
  std::nth_element(cmc_err.begin(), cmc_err.begin() + 8, cmc_err.end());
  std::nth_element(qmc_err.begin(), qmc_err.begin() + 8, qmc_err.end());
  CHECK(qmc_err[8] < cmc_err[8]);
}

TEST_CASE("plot data") {
  const fs::path dir = scratch("plot");
  REQUIRE(pofgp_cli({"estimate", "--problem", "multimodal", "--nodes", "2048", "--budget", "26",
                     "--out", (dir / "run").string()})
              .code == 0);
  const std::string report = (dir / "run" / "summary.json").string();
  const std::size_t iterations = summary(dir / "run")["history"].size();
  CHECK(iterations == 5);
  REQUIRE(pofgp_cli({"plotdata", "--report", report, "--out", (dir / "a").string()}).code == 0);
  REQUIRE(pofgp_cli({"plotdata", "--report", report, "--out", (dir / "b").string()}).code == 0);
  for (const char* file : {"convergence.csv", "width.csv"}) {
    const std::string a = slurp(dir / "a" / file);
    CHECK(lines(a).size() == iterations + 1);
    CHECK(a == slurp(dir / "b" / file));
  }
  CHECK(lines(slurp(dir / "a" / "convergence.csv"))[0].find("abs_error") != std::string::npos);

  nlohmann::json doc = summary(dir / "run");
  doc["truth"] = nullptr;
  std::ofstream(dir / "untruthful.json") << doc.dump();
  REQUIRE(pofgp_cli({"plotdata", "--report", (dir / "untruthful.json").string(), "--out",
                     (dir / "c").string()})
              .code == 0);
  CHECK(lines(slurp(dir / "c" / "convergence.csv"))[0].find("abs_error") == std::string::npos);

  CHECK(pofgp_cli({"plotdata", "--report", (dir / "missing.json").string()}).code == 2);
  CHECK(pofgp_cli({"plotdata"}).code == 2);
}

TEST_CASE("report round trip") {
  pofgp::cli::RunReport r;
  r.config = {{"seed", 1}};
  r.source = {{"kind", "problem"}};
  r.truth = 0.25;
  r.rows.push_back({8, 0.3, 0.2, 0.1, 0.5, 0.31, 0.25, 0, 0.01});
  r.rows.push_back({12, 0.26, 0.1, 0.16, 0.36, 0.27, 0.12, 17, 0.02});
  r.stop_reason = "budget_exhausted";
  r.final_estimate = {0.26, 0.1, 0.16, 0.36, 0.05, 12, 1024};
  const pofgp::cli::RunReport back = pofgp::cli::report_from_json(pofgp::cli::to_json(r));
  CHECK(back.truth == r.truth);
  CHECK(back.stop_reason == r.stop_reason);
  CHECK(pofgp::cli::iteration_table(back.rows) == pofgp::cli::iteration_table(r.rows));
  CHECK(back.final_estimate.N == 1024);
  CHECK(pofgp::cli::format_real(0.1) == "0.10000000000000001");
}
