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

#include "pofgp/cli.hpp"

#include <cmath>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "pofgp/errors.hpp"
#include "pofgp/extsim.hpp"
#include "pofgp/problems.hpp"

namespace pofgp::cli {

namespace fs = std::filesystem;

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string iteration_table(const std::vector<IterationRecord>& rows) {
  std::ostringstream os;
  os << "n,p_hat,gamma_hat,lower,upper,p_check,gamma_check,tries\n";
  for (const auto& r : rows) {
    os << r.n << ',' << format_real(r.p_hat) << ',' << format_real(r.gamma_hat) << ','
       << format_real(r.lower) << ',' << format_real(r.upper) << ','
       << format_real(r.p_check) << ',' << format_real(r.gamma_check) << ',' << r.tries
       << '\n';
  }
  return os.str();
}

namespace {

std::string_view nu_name(Smoothness nu) {
  switch (nu) {
    case Smoothness::half: return "1/2";
    case Smoothness::three_halves: return "3/2";
    case Smoothness::five_halves: return "5/2";
  }
  return "?";
}

Smoothness parse_nu(const std::string& s) {
  if (s == "1/2" || s == "0.5") return Smoothness::half;
  if (s == "3/2" || s == "1.5") return Smoothness::three_halves;
  if (s == "5/2" || s == "2.5") return Smoothness::five_halves;
  throw InvalidArgument("unsupported smoothness '" + s + "' (use 1/2, 3/2 or 5/2)");
}

nlohmann::json prior_to_json(const PriorSpec& p) {
  return {{"mean", p.mean},
          {"nu", nu_name(p.kernel.nu)},
          {"lengthscale", p.kernel.lengthscale},
          {"amplitude", p.kernel.amplitude},
          {"jitter", p.jitter}};
}

PriorSpec prior_from_json(const nlohmann::json& j) {
  PriorSpec p;
  p.mean = j.value("mean", p.mean);
  p.kernel.nu = parse_nu(j.value("nu", std::string("3/2")));
  p.kernel.lengthscale = j.value("lengthscale", p.kernel.lengthscale);
  p.kernel.amplitude = j.value("amplitude", p.kernel.amplitude);
  p.jitter = j.value("jitter", p.jitter);
  return p;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Defaults for the toy suite: evaluation budgets per problem.
std::size_t default_budget(const std::string& problem) {
  static const std::map<std::string, std::size_t> budgets = {
      {"sine", 64}, {"multimodal", 128}, {"four_branch", 128},
      {"ishigami", 192}, {"hartmann", 512}};
  const auto it = budgets.find(problem);
  return it == budgets.end() ? 64 : it->second;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Options shared by every command.
struct Options {
  std::uint64_t seed = 1;
  double alpha = 0.05;
  std::size_t nodes = std::size_t{1} << 16;
  std::optional<std::size_t> init;
  std::size_t batch = 4;
  std::optional<std::size_t> budget;
  double width = 0.0;
  std::string hyperopt = "initial";
  std::string nu = "3/2";
  std::string problem;
  std::string endpoint;
  std::string out;
  // benchmark
  std::string problems;
  std::string seeds = "1";
  // plotdata
  std::string report;
};

HyperoptPolicy parse_policy(const std::string& s) {
  if (s == "initial") return HyperoptPolicy::initial_only;
  if (s == "every") return HyperoptPolicy::every_iteration;
  if (s == "never") return HyperoptPolicy::never;
  throw UsageError("--hyperopt must be initial, every or never");
}

fs::path output_dir(const Options& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("POFGP_OUT_DIR"); env && *env) return env;
  return "pofgp_out";
}

AdaptiveConfig make_config(const Options& o, std::size_t dimension,
                           const std::string& budget_key) {
  AdaptiveConfig c;
  c.alpha = o.alpha;
  c.nodes = o.nodes;
  c.n0 = o.init.value_or(2 * dimension + 6);
  c.batch = o.batch;
  c.budget = o.budget.value_or(default_budget(budget_key));
  c.target_width = o.width;
  c.seed = o.seed;
  c.hyperopt = parse_policy(o.hyperopt);
  c.prior.kernel.nu = parse_nu(o.nu);
  validate(c);
  return c;
}

nlohmann::json config_to_json(const AdaptiveConfig& c) {
  return {{"seed", c.seed},
          {"alpha", c.alpha},
          {"nodes", c.nodes},
          {"init", c.n0},
          {"batch", c.batch},
          {"budget", c.budget},
          {"width", c.target_width},
          {"hyperopt", to_string(c.hyperopt)},
          {"prior", prior_to_json(c.prior)},
          {"search",
           {{"lengthscale", {c.search.lengthscale_min, c.search.lengthscale_max}},
            {"amplitude", {c.search.amplitude_min, c.search.amplitude_max}},
            {"grid_points", c.search.grid_points}}}};
}

nlohmann::json problem_source(const ProblemSpec& p) {
  return {{"kind", "problem"},
          {"name", p.name},
          {"dimension", p.dimension},
          {"threshold", p.threshold},
          {"true_p", p.true_p ? nlohmann::json(*p.true_p) : nlohmann::json(nullptr)},
          {"provenance", p.provenance}};
}

RunReport make_report(const AdaptiveConfig& config, nlohmann::json source,
                      std::optional<double> truth, const RunResult& result) {
  RunReport r;
  r.config = config_to_json(config);
  r.source = std::move(source);
  r.truth = truth;
  r.rows = result.history;
  r.stop_reason = std::string(to_string(result.stop_reason));
  r.final_estimate = result.final_estimate;
  r.prior = result.prior;
  return r;
}

void write_report(const RunReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "iterations.csv", iteration_table(report.rows));
  write_file(dir / "summary.json", to_json(report).dump(2) + "\n");
}

int cmd_estimate(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.problem.empty() == o.endpoint.empty()) {
    throw UsageError("estimate needs exactly one of --problem or --endpoint");
  }
  std::optional<ProblemSpec> problem;
  std::optional<ModelClient> client;
  std::size_t dimension;
  nlohmann::json source;
  std::optional<double> truth;
  std::string budget_key;
  if (!o.problem.empty()) {
    problem = find_problem(o.problem);
    if (!problem) throw UsageError("unknown problem '" + o.problem + "'");
    dimension = problem->dimension;
    source = problem_source(*problem);
    truth = problem->true_p;
    budget_key = problem->name;
  } else {
    ModelEndpoint ep;
    try {
      ep = load_endpoint(o.endpoint);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    dimension = ep.input_dim;
    source = {{"kind", "endpoint"}, {"endpoint", endpoint_to_json(ep)}};
    client.emplace(ep);
  }

  AdaptiveConfig config;
  try {
    config = make_config(o, dimension, budget_key);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const BatchEvaluator evaluator =
      problem ? in_process_evaluator(*problem)
              : BatchEvaluator([&client](const Eigen::MatrixXd& x) {
                  return client->evaluate_batch(x);
                });

  const fs::path dir = output_dir(o);
  try {
    const RunResult result = run(dimension, config, evaluator);
    const RunReport report = make_report(config, source, truth, result);
    write_report(report, dir);
    const PofEstimate& f = result.final_estimate;
    out << "P_hat = " << format_real(f.p_hat) << "  interval = [" << format_real(f.lower)
        << ", " << format_real(f.upper) << "]  alpha = " << f.alpha << "  n = " << f.n
        << "  stop = " << report.stop_reason << '\n';
    if (truth) out << "truth = " << *truth << '\n';
    out << "report written to " << dir.string() << '\n';
    return kSuccess;
  } catch (const RunAborted& e) {
    RunReport report = make_report(config, source, truth, e.partial());
    report.stop_reason = "aborted";
    report.error = e.what();
    write_report(report, dir);
    err << "pofgp: run aborted: " << e.what() << " (partial report in " << dir.string()
        << ")\n";
    return kRuntimeFailure;
  }
}

int cmd_benchmark(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<ProblemSpec> problems;
  if (o.problems.empty()) {
    problems = toy_problems();
  } else {
    for (const auto& name : split_list(o.problems)) {
      auto p = find_problem(name);
      if (!p) throw UsageError("unknown problem '" + name + "'");
      problems.push_back(std::move(*p));
    }
  }
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(o.seeds)) {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size()) {
      throw UsageError("--seeds must be a comma-separated list of integers");
    }
    seeds.push_back(v);
  }
  if (seeds.empty()) throw UsageError("--seeds is empty");

  std::ostringstream table;
  table << "problem,seed,dimension,truth,p_hat,lower,upper,contained,evaluations,"
           "iterations,stop_reason,gamma_first,gamma_final\n";
  bool any_failed = false;
  for (const auto& problem : problems) {
    for (const std::uint64_t seed : seeds) {
      Options local = o;
      local.seed = seed;
      AdaptiveConfig config;
      try {
        config = make_config(local, problem.dimension, problem.name);
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
      try {
        const RunResult r = run(problem, config);
        const PofEstimate& f = r.final_estimate;
        const double truth = problem.true_p.value_or(std::nan(""));
        const bool contained = f.lower <= truth && truth <= f.upper;
        table << problem.name << ',' << seed << ',' << problem.dimension << ','
              << format_real(truth) << ',' << format_real(f.p_hat) << ','
              << format_real(f.lower) << ',' << format_real(f.upper) << ','
              << (contained ? "true" : "false") << ',' << f.n << ',' << r.history.size()
              << ',' << to_string(r.stop_reason) << ','
              << format_real(r.history.front().gamma_hat) << ','
              << format_real(r.history.back().gamma_hat) << '\n';
      } catch (const std::exception& e) {
        any_failed = true;
        err << "pofgp: " << problem.name << " seed " << seed << " failed: " << e.what()
            << '\n';
        table << problem.name << ',' << seed << ',' << problem.dimension
              << ",,,,,error,,,,,\n";
      }
    }
  }
  const fs::path dir = output_dir(o);
  fs::create_directories(dir);
  write_file(dir / "benchmark.csv", table.str());
  out << table.str();
  return any_failed ? kRuntimeFailure : kSuccess;
}

int cmd_baselines(const Options& o, std::ostream& out, std::ostream&) {
  if (o.problem.empty()) throw UsageError("baselines needs --problem");
  const auto problem = find_problem(o.problem);
  if (!problem) throw UsageError("unknown problem '" + o.problem + "'");
  const std::size_t N = o.nodes;

  std::ostringstream table;
  table << "method,N,estimate,std_error,truth,abs_error\n";
  const double truth = problem->true_p.value_or(std::nan(""));
  auto row = [&](const char* method, double estimate, double se) {
    table << method << ',' << N << ',' << format_real(estimate) << ','
          << format_real(se) << ',' << format_real(truth) << ','
          << format_real(std::abs(estimate - truth)) << '\n';
  };

  CmcResult cmc;
  try {
    const SampleMatrix nodes = generate_nodes(
        {SequenceKind::iid, derive_seed(o.seed, 0x636d63), problem->dimension}, N);
    std::vector<double> indicator(N);
    for (std::size_t i = 0; i < N; ++i) {
      const Eigen::RowVectorXd u = nodes.row(static_cast<Eigen::Index>(i));
      indicator[i] =
          problem->evaluator(std::span<const double>(u.data(), u.size())) >= 0.0 ? 1.0 : 0.0;
    }
    cmc = cmc_estimate(indicator);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  row("cmc", cmc.mean, std::sqrt(cmc.variance));
  const OracleEstimate qmc = brute_force_pof(*problem, N, derive_seed(o.seed, 0x716d63));
  row("qmc", qmc.estimate, qmc.standard_error);

  const fs::path dir = output_dir(o);
  fs::create_directories(dir);
  write_file(dir / "baselines.csv", table.str());
  out << table.str();
  return kSuccess;
}

int cmd_plotdata(const Options& o, std::ostream& out, std::ostream&) {
  if (o.report.empty()) throw UsageError("plotdata needs --report <summary.json>");
  std::ifstream in(o.report);
  if (!in) throw UsageError("cannot open report " + o.report);
  RunReport report;
  try {
    report = report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("report " + o.report + " is not a run report: " + e.what());
  }
  const fs::path dir = output_dir(o);
  write_plotdata(report, dir);
  out << "plot data for " << report.rows.size() << " iterations written to "
      << dir.string() << '\n';
  return kSuccess;
}

int cmd_calibrate(const Options& o, std::ostream& out, std::ostream&) {
  const auto problem = find_problem(o.problem);
  if (!problem) throw UsageError("unknown problem '" + o.problem + "'");
  if (!problem->true_p) throw UsageError("problem has no reference probability");
  const double xi = calibrate_threshold(raw_problem(problem->name), problem->dimension,
                                        *problem->true_p, o.nodes, o.seed);
  out << problem->name << " threshold " << format_real(xi) << '\n';
  return kSuccess;
}

}  // namespace

nlohmann::json to_json(const RunReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"n", r.n},
                    {"p_hat", r.p_hat},
                    {"gamma_hat", r.gamma_hat},
                    {"lower", r.lower},
                    {"upper", r.upper},
                    {"p_check", r.p_check},
                    {"gamma_check", r.gamma_check},
                    {"tries", r.tries},
                    {"elapsed", r.elapsed}});
  }
  const PofEstimate& f = report.final_estimate;
  return {{"config", report.config},
          {"source", report.source},
          {"truth", report.truth ? nlohmann::json(*report.truth) : nlohmann::json(nullptr)},
          {"stop_reason", report.stop_reason},
          {"error", report.error ? nlohmann::json(*report.error) : nlohmann::json(nullptr)},
          {"final",
           {{"p_hat", f.p_hat},
            {"gamma_hat", f.gamma_hat},
            {"lower", f.lower},
            {"upper", f.upper},
            {"alpha", f.alpha},
            {"n", f.n},
            {"N", f.N}}},
          {"prior", prior_to_json(report.prior)},
          {"history", rows}};
}

RunReport report_from_json(const nlohmann::json& doc) {
  RunReport r;
  r.config = doc.value("config", nlohmann::json::object());
  r.source = doc.value("source", nlohmann::json::object());
  if (doc.contains("truth") && doc["truth"].is_number()) r.truth = doc["truth"].get<double>();
  r.stop_reason = doc.at("stop_reason").get<std::string>();
  if (doc.contains("error") && doc["error"].is_string()) r.error = doc["error"].get<std::string>();
  for (const auto& row : doc.at("history")) {
    IterationRecord rec;
    rec.n = row.at("n").get<std::size_t>();
    rec.p_hat = row.at("p_hat").get<double>();
    rec.gamma_hat = row.at("gamma_hat").get<double>();
    rec.lower = row.at("lower").get<double>();
    rec.upper = row.at("upper").get<double>();
    rec.p_check = row.value("p_check", 0.0);
    rec.gamma_check = row.value("gamma_check", 0.0);
    rec.tries = row.value("tries", std::size_t{0});
    rec.elapsed = row.value("elapsed", 0.0);
    r.rows.push_back(rec);
  }
  if (const auto f = doc.find("final"); f != doc.end()) {
    r.final_estimate.p_hat = f->value("p_hat", 0.0);
    r.final_estimate.gamma_hat = f->value("gamma_hat", 0.0);
    r.final_estimate.lower = f->value("lower", 0.0);
    r.final_estimate.upper = f->value("upper", 0.0);
    r.final_estimate.alpha = f->value("alpha", 0.05);
    r.final_estimate.n = f->value("n", std::size_t{0});
    r.final_estimate.N = f->value("N", std::size_t{0});
  }
  if (doc.contains("prior")) r.prior = prior_from_json(doc["prior"]);
  return r;
}

void write_plotdata(const RunReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  std::ostringstream conv, width;
  conv << "n,p_hat,lower,upper,gamma_hat" << (report.truth ? ",abs_error" : "") << '\n';
  width << "n,width\n";
  for (const auto& r : report.rows) {
    conv << r.n << ',' << format_real(r.p_hat) << ',' << format_real(r.lower) << ','
         << format_real(r.upper) << ',' << format_real(r.gamma_hat);
    if (report.truth) conv << ',' << format_real(std::abs(r.p_hat - *report.truth));
    conv << '\n';
    width << r.n << ',' << format_real(r.upper - r.lower) << '\n';
  }
  write_file(dir / "convergence.csv", conv.str());
  write_file(dir / "width.csv", width.str());
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Probability of failure estimation with Gaussian-process credible intervals",
               "pofgp"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI/TOML file of option defaults (flags win)");

  Options o;
  app.add_option("--seed", o.seed, "Seed for every random stream");
  app.add_option("--alpha", o.alpha, "Credible interval holds with probability >= 1 - alpha");
  app.add_option("--nodes", o.nodes, "QMC nodes N (baselines: evaluation count)");
  app.add_option("--init", o.init, "Initial design size n0 (default 2d + 6)");
  app.add_option("--batch", o.batch, "Batch size b");
  app.add_option("--budget", o.budget, "Evaluation budget n_max");
  app.add_option("--width", o.width, "Stop once the interval is this narrow (<= 0 disables)");
  app.add_option("--hyperopt", o.hyperopt, "Hyperparameter policy: initial, every, never");
  app.add_option("--nu", o.nu, "Matern smoothness: 1/2, 3/2 or 5/2");
  app.add_option("--problem", o.problem, "Bundled toy problem");
  app.add_option("--endpoint", o.endpoint, "JSON endpoint description of an external model");
  app.add_option("--out", o.out, "Output directory (default $POFGP_OUT_DIR or ./pofgp_out)");

  auto* estimate = app.add_subcommand("estimate", "Run the adaptive estimator");
  auto* benchmark = app.add_subcommand("benchmark", "Run the toy suite over several seeds");
  benchmark->add_option("--problems", o.problems, "Comma-separated subset of problems");
  benchmark->add_option("--seeds", o.seeds, "Comma-separated seeds");
  auto* baselines = app.add_subcommand("baselines", "Crude and quasi-Monte Carlo baselines");
  auto* plotdata = app.add_subcommand("plotdata", "Turn a run report into plot series");
  plotdata->add_option("--report", o.report, "summary.json written by estimate");
  auto* calibrate = app.add_subcommand("calibrate", "Recompute a problem's threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "pofgp: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (*estimate) return cmd_estimate(o, out, err);
    if (*benchmark) return cmd_benchmark(o, out, err);
    if (*baselines) return cmd_baselines(o, out, err);
    if (*plotdata) return cmd_plotdata(o, out, err);
    if (*calibrate) return cmd_calibrate(o, out, err);
  } catch (const UsageError& e) {
    err << "pofgp: " << e.what() << '\n';
    return kUsageError;
  } catch (const InvalidArgument& e) {
    err << "pofgp: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "pofgp: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}

}  // namespace pofgp::cli
