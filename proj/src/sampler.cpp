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

#include "pofgp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pofgp/errors.hpp"
#include "pofgp/estimators.hpp"
#include "pofgp/qmc.hpp"

namespace pofgp {

namespace {

constexpr std::uint64_t kThresholdStream = std::uint64_t{1} << 40;
constexpr std::uint64_t kDesignTag = 0x64657369676eULL;  // "design"
constexpr double kDuplicateRadius = 1e-10;

// Candidate and threshold of try t.
void draw_candidate(std::uint64_t seed, std::size_t t,
                    Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> x,
                    double& threshold) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    x[j] = counter_uniform(seed, static_cast<std::uint64_t>(j), t);
  }
  threshold = counter_uniform(seed, kThresholdStream, t);
}

bool near_any(const Eigen::RowVectorXd& x, const Eigen::MatrixXd& points,
              Eigen::Index rows) {
  for (Eigen::Index i = 0; i < rows; ++i) {
    if ((points.row(i) - x).norm() < kDuplicateRadius) return true;
  }
  return false;
}

}  // namespace

RejectionResult rejection_sample(const Density& density, std::size_t b,
                                 std::size_t d, std::uint64_t seed,
                                 std::size_t max_tries) {
  if (b == 0) throw InvalidArgument("rejection_sample: b must be positive");
  if (d == 0) throw InvalidArgument("rejection_sample: d must be positive");

  RejectionResult result;
  result.accepted.resize(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(d));
  Eigen::RowVectorXd x(static_cast<Eigen::Index>(d));
  std::size_t accepted = 0;
  std::size_t t = 0;
  while (accepted < b) {
    if (t >= max_tries) {
      throw EfficiencyExhausted(
          "rejection_sample: " + std::to_string(accepted) + " of " +
              std::to_string(b) + " draws accepted after " + std::to_string(t) +
              " tries",
          t == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(t));
    }
    double threshold;
    draw_candidate(seed, t, x, threshold);
    if (threshold <= density(x)) {
      result.accepted.row(static_cast<Eigen::Index>(accepted)) = x;
      ++accepted;
    }
    ++t;
  }
  result.tries = t;
  result.density_evals = t;
  return result;
}

BatchProposal propose_batch(const GPModel& model, std::size_t b,
                            std::uint64_t seed, std::size_t max_tries) {
  if (b == 0) throw InvalidArgument("propose_batch: b must be positive");
  if (max_tries == 0) max_tries = b * kDefaultTriesPerPoint;

  const auto d = static_cast<Eigen::Index>(model.dimension());
  const PriorSpec& prior = model.prior();
  const double amplitude = prior.kernel.amplitude;
  const auto lower = model.L().triangularView<Eigen::Lower>();

  BatchProposal out;
  Eigen::MatrixXd accepted(static_cast<Eigen::Index>(b), d);
  Eigen::Index n_accepted = 0;

  std::size_t chunk = std::max<std::size_t>(64, 4 * b);
  std::size_t t = 0;
  while (static_cast<std::size_t>(n_accepted) < b) {
    if (t >= max_tries) {
      out.tries = t;
      out.certainty_reached = true;
      return out;
    }
    const std::size_t m = std::min(chunk, max_tries - t);
    const auto rows = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd candidates(rows, d);
    Eigen::VectorXd thresholds(rows);
    for (Eigen::Index j = 0; j < rows; ++j) {
      draw_candidate(seed, t + static_cast<std::size_t>(j), candidates.row(j),
                     thresholds[j]);
    }
    out.density_evals += m;

    // Mean is exact. Conditioning on the single most correlated observation
    // gives a variance that can only shrink with the rest of the data, so
    // it bounds ERR from above and lets most candidates be rejected without
    // the triangular solve.
    const Eigen::MatrixXd k = kernel_matrix(prior.kernel, model.X(), candidates);
    const Eigen::VectorXd mean = (k.transpose() * model.beta()).array() + prior.mean;
    std::vector<Eigen::Index> survivors;
    for (Eigen::Index j = 0; j < rows; ++j) {
      const double kmax = k.col(j).maxCoeff();
      const double var_bound =
          std::max(amplitude - kmax * kmax / (amplitude + prior.jitter), 0.0);
      const double p = vertical_p(mean[j], std::sqrt(var_bound));
      const double err_bound = std::min(p, 1.0 - p);
      if (thresholds[j] <= 2.0 * err_bound + 1e-12) survivors.push_back(j);
    }

    Eigen::VectorXd err = Eigen::VectorXd::Zero(rows);
    if (!survivors.empty()) {
      Eigen::MatrixXd ks(k.rows(), static_cast<Eigen::Index>(survivors.size()));
      for (std::size_t s = 0; s < survivors.size(); ++s) {
        ks.col(static_cast<Eigen::Index>(s)) = k.col(survivors[s]);
      }
      lower.solveInPlace(ks);
      const Eigen::RowVectorXd explained = ks.colwise().squaredNorm();
      for (std::size_t s = 0; s < survivors.size(); ++s) {
        const Eigen::Index j = survivors[s];
        const double sd =
            std::sqrt(std::max(amplitude - explained[static_cast<Eigen::Index>(s)], 0.0));
        const double p = vertical_p(mean[j], sd);
        err[j] = std::min(p, 1.0 - p);
      }
    }

    for (Eigen::Index j = 0; j < rows; ++j) {
      if (!(thresholds[j] <= 2.0 * err[j])) continue;
      const Eigen::RowVectorXd x = candidates.row(j);
      if (near_any(x, model.X(), model.X().rows()) || near_any(x, accepted, n_accepted)) {
        continue;
      }
      accepted.row(n_accepted++) = x;
      if (static_cast<std::size_t>(n_accepted) == b) {
        out.tries = t + static_cast<std::size_t>(j) + 1;
        out.points = std::move(accepted);
        return out;
      }
    }
    t += m;
    chunk = std::min<std::size_t>(chunk * 2, 16384);
  }
  return out;
}

Eigen::MatrixXd initial_design(std::size_t d, std::size_t n0, std::uint64_t seed) {
  if (n0 < 2) throw InvalidArgument("initial_design: n0 must be at least 2");
  return generate_nodes(
      {SequenceKind::low_discrepancy, derive_seed(seed, kDesignTag), d}, n0);
}

}  // namespace pofgp
