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

#include "pofgp/extsim.hpp"

#include <atomic>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "httplib.h"
#include "pofgp/errors.hpp"

extern char** environ;

namespace pofgp {

namespace {

using Clock = std::chrono::steady_clock;

std::string excerpt(const std::string& s) {
  constexpr std::size_t kMax = 120;
  return s.size() <= kMax ? s : s.substr(0, kMax) + "...";
}

std::vector<double> row_values(const Eigen::MatrixXd& points, Eigen::Index i) {
  std::vector<double> v(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index j = 0; j < points.cols(); ++j) v[static_cast<std::size_t>(j)] = points(i, j);
  return v;
}

double read_output(const nlohmann::json& body, const std::string& raw) {
  const auto it = body.find("output");
  if (it == body.end() || !it->is_number()) {
    throw ProtocolError("response has no numeric \"output\": " + excerpt(raw));
  }
  return it->get<double>();
}

nlohmann::json parse_json(const std::string& raw) {
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("malformed response: " + excerpt(raw));
  }
  if (!body.is_object()) throw ProtocolError("response is not an object: " + excerpt(raw));
  return body;
}

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

// One child process speaking the line protocol.
class Worker {
 public:
  explicit Worker(const std::string& command) {
    int in[2], out[2];
    if (pipe2(in, O_CLOEXEC) != 0) throw ProcessError("pipe failed");
    if (pipe2(out, O_CLOEXEC) != 0) {
      close(in[0]);
      close(in[1]);
      throw ProcessError("pipe failed");
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out[1], STDOUT_FILENO);
    std::string shell = "/bin/sh", flag = "-c", cmd = command;
    char* argv[] = {shell.data(), flag.data(), cmd.data(), nullptr};
    const int rc = posix_spawn(&pid_, "/bin/sh", &actions, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    close(in[0]);
    close(out[1]);
    to_child_ = in[1];
    from_child_ = out[0];
    if (rc != 0) {
      close(to_child_);
      close(from_child_);
      throw ProcessError("could not start '" + command + "': " + std::strerror(rc));
    }
  }

  ~Worker() {
    close(to_child_);
    // Give the child a moment to exit on EOF before killing it.
    for (int i = 0; i < 50 && pid_ > 0; ++i) {
      if (waitpid(pid_, nullptr, WNOHANG) == pid_) pid_ = -1;
      else std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
    }
    close(from_child_);
  }

  Worker(const Worker&) = delete;
  Worker& operator=(const Worker&) = delete;

  double call(long id, const std::vector<double>& input, double timeout) {
    const std::string line =
        nlohmann::json{{"id", id}, {"input", input}}.dump() + "\n";
    std::size_t written = 0;
    while (written < line.size()) {
      const ssize_t w = write(to_child_, line.data() + written, line.size() - written);
      if (w < 0) {
        if (errno == EINTR) continue;
        throw exited("while sending a request");
      }
      written += static_cast<std::size_t>(w);
    }
    const std::string reply = read_line(timeout);
    const nlohmann::json body = parse_json(reply);
    const auto rid = body.find("id");
    if (rid == body.end() || !rid->is_number_integer() || rid->get<long>() != id) {
      throw ProtocolError("response id does not match request " + std::to_string(id) +
                          ": " + excerpt(reply));
    }
    return read_output(body, reply);
  }

 private:
  std::string read_line(double timeout) {
    const auto deadline =
        Clock::now() + std::chrono::duration_cast<Clock::duration>(
                           std::chrono::duration<double>(timeout));
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (left.count() <= 0) throw TimeoutError("no response within the timeout");
      pollfd pfd{from_child_, POLLIN, 0};
      const int ready = poll(&pfd, 1, static_cast<int>(left.count()));
      if (ready < 0 && errno == EINTR) continue;
      if (ready == 0) throw TimeoutError("no response within the timeout");
      char chunk[4096];
      const ssize_t r = read(from_child_, chunk, sizeof chunk);
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) throw exited("before answering");
      buffer_.append(chunk, static_cast<std::size_t>(r));
    }
  }

  ProcessError exited(const char* when) {
    int status = 0;
    std::string what = "model process exited " + std::string(when);
    if (pid_ > 0 && waitpid(pid_, &status, 0) == pid_) {
      pid_ = -1;
      if (WIFEXITED(status)) what += " with status " + std::to_string(WEXITSTATUS(status));
      else if (WIFSIGNALED(status)) what += " on signal " + std::to_string(WTERMSIG(status));
    }
    return ProcessError(what);
  }

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

struct Url {
  std::string origin;  // scheme://host:port
  std::string path;
};

Url split_url(const std::string& address) {
  const auto scheme = address.find("://");
  if (scheme == std::string::npos) {
    throw InvalidArgument("http endpoint address must be a URL: " + address);
  }
  const auto slash = address.find('/', scheme + 3);
  if (slash == std::string::npos) return {address, "/"};
  return {address.substr(0, slash), address.substr(slash)};
}

}  // namespace

struct ModelClient::Impl {
  ModelEndpoint endpoint;
  std::vector<std::unique_ptr<Worker>> workers;
  std::atomic<long> next_id{0};

  double call_subprocess(std::size_t slot, const std::vector<double>& input) {
    auto& worker = workers[slot];
    if (!worker) worker = std::make_unique<Worker>(endpoint.address);
    try {
      return worker->call(next_id++, input, endpoint.timeout);
    } catch (...) {
      worker.reset();  // state unknown, restart on next use
      throw;
    }
  }

  double call_http(httplib::Client& client, const std::string& path,
                   const std::vector<double>& input) {
    const auto start = Clock::now();
    const auto res =
        client.Post(path, nlohmann::json{{"input", input}}.dump(), "application/json");
    if (!res) {
      const double waited = std::chrono::duration<double>(Clock::now() - start).count();
      if (res.error() == httplib::Error::ConnectionTimeout ||
          (res.error() == httplib::Error::Read && waited >= 0.9 * endpoint.timeout)) {
        throw TimeoutError("no response within the timeout");
      }
      throw ProtocolError("request to " + endpoint.address +
                          " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw ProtocolError("HTTP status " + std::to_string(res->status) + ": " +
                          excerpt(res->body));
    }
    return read_output(parse_json(res->body), res->body);
  }

  template <typename Call>
  double with_retries(Eigen::Index row, Call&& call) {
    for (std::size_t attempt = 0;; ++attempt) {
      try {
        return call();
      } catch (const std::exception& e) {
        if (attempt >= endpoint.retries) throw;
        std::cerr << "pofgp: retrying point " << row << " (attempt " << attempt + 2
                  << "): " << e.what() << '\n';
      }
    }
  }
};

ModelClient::ModelClient(ModelEndpoint endpoint) : impl_(std::make_unique<Impl>()) {
  if (endpoint.input_dim < 1) throw InvalidArgument("endpoint input_dim must be >= 1");
  if (endpoint.max_concurrency < 1) {
    throw InvalidArgument("endpoint max_concurrency must be >= 1");
  }
  if (!(endpoint.timeout > 0.0)) throw InvalidArgument("endpoint timeout must be positive");
  if (endpoint.transport == Transport::http) split_url(endpoint.address);
  ignore_sigpipe();
  impl_->workers.resize(endpoint.max_concurrency);
  impl_->endpoint = std::move(endpoint);
}

ModelClient::~ModelClient() = default;

const ModelEndpoint& ModelClient::endpoint() const { return impl_->endpoint; }

std::vector<double> ModelClient::evaluate_batch(const Eigen::MatrixXd& points) {
  const ModelEndpoint& ep = impl_->endpoint;
  if (static_cast<std::size_t>(points.cols()) != ep.input_dim) {
    throw InvalidArgument("evaluate_batch: points have dimension " +
                          std::to_string(points.cols()) + ", endpoint expects " +
                          std::to_string(ep.input_dim));
  }
  const auto b = static_cast<std::size_t>(points.rows());
  std::vector<double> out(b);
  if (b == 0) return out;

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto work = [&](std::size_t slot) {
    std::optional<httplib::Client> client;
    Url url;
    if (ep.transport == Transport::http) {
      url = split_url(ep.address);
      client.emplace(url.origin);
      const auto secs = static_cast<time_t>(ep.timeout);
      const auto usecs = static_cast<time_t>((ep.timeout - static_cast<double>(secs)) * 1e6);
      client->set_connection_timeout(secs, usecs);
      client->set_read_timeout(secs, usecs);
      client->set_write_timeout(secs, usecs);
    }
    for (;;) {
      if (failed) return;
      const std::size_t i = next++;
      if (i >= b) return;
      const auto row = static_cast<Eigen::Index>(i);
      const std::vector<double> input = row_values(points, row);
      try {
        out[i] = impl_->with_retries(row, [&] {
          return ep.transport == Transport::http
                     ? impl_->call_http(*client, url.path, input)
                     : impl_->call_subprocess(slot, input);
        });
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
    }
  };

  const std::size_t threads = std::min(ep.max_concurrency, b);
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<double> evaluate_batch(const ModelEndpoint& endpoint,
                                   const Eigen::MatrixXd& points) {
  ModelClient client(endpoint);
  return client.evaluate_batch(points);
}

ModelEndpoint endpoint_from_json(const nlohmann::json& config) {
  if (!config.is_object()) throw InvalidArgument("endpoint config must be an object");
  ModelEndpoint ep;
  try {
    const std::string transport = config.at("transport").get<std::string>();
    if (transport == "subprocess") ep.transport = Transport::subprocess;
    else if (transport == "http") ep.transport = Transport::http;
    else throw InvalidArgument("unknown transport '" + transport + "'");
    ep.address = config.at("address").get<std::string>();
    ep.input_dim = config.at("input_dim").get<std::size_t>();
    ep.timeout = config.value("timeout", ep.timeout);
    ep.max_concurrency = config.value("max_concurrency", ep.max_concurrency);
    ep.retries = config.value("retries", ep.retries);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad endpoint config: ") + e.what());
  }
  if (ep.input_dim < 1) throw InvalidArgument("endpoint input_dim must be >= 1");
  if (ep.max_concurrency < 1) throw InvalidArgument("endpoint max_concurrency must be >= 1");
  if (!(ep.timeout > 0.0)) throw InvalidArgument("endpoint timeout must be positive");
  return ep;
}

nlohmann::json endpoint_to_json(const ModelEndpoint& ep) {
  return {{"transport", ep.transport == Transport::http ? "http" : "subprocess"},
          {"address", ep.address},
          {"input_dim", ep.input_dim},
          {"timeout", ep.timeout},
          {"max_concurrency", ep.max_concurrency},
          {"retries", ep.retries}};
}

ModelEndpoint load_endpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open endpoint config " + path.string());
  nlohmann::json config;
  try {
    config = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("endpoint config " + path.string() + " is not JSON: " + e.what());
  }
  return endpoint_from_json(config);
}

}  // namespace pofgp
