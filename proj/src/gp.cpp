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

#include "pofgp/gp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pofgp/errors.hpp"

namespace pofgp {

namespace {

double matern_correlation(Smoothness nu, double r) {
  switch (nu) {
    case Smoothness::half:
      return std::exp(-r);
    case Smoothness::three_halves: {
      const double t = std::sqrt(3.0) * r;
      return (1.0 + t) * std::exp(-t);
    }
    case Smoothness::five_halves: {
      const double t = std::sqrt(5.0) * r;
      return (1.0 + t + t * t / 3.0) * std::exp(-t);
    }
  }
  return 0.0;
}

void check_kernel(const KernelSpec& spec) {
  if (!(spec.lengthscale > 0.0) || !(spec.amplitude > 0.0)) {
    throw InvalidArgument("kernel lengthscale and amplitude must be positive");
  }
}

double suggested_jitter(const PriorSpec& prior) {
  return std::max(prior.jitter * 100.0, prior.kernel.amplitude * 1e-10);
}

// Lower Cholesky factor, or NumericalError.
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& a, const PriorSpec& prior,
                         const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  Eigen::MatrixXd l = llt.matrixL();
  bool ok = llt.info() == Eigen::Success;
  for (Eigen::Index i = 0; ok && i < l.rows(); ++i) {
    ok = std::isfinite(l(i, i)) && l(i, i) > 0.0;
  }
  if (!ok) {
    throw NumericalError(std::string(what) +
                             ": matrix is not positive definite with jitter " +
                             std::to_string(prior.jitter),
                         suggested_jitter(prior));
  }
  return l;
}

Eigen::MatrixXd::Index check_observations(const Eigen::MatrixXd& X,
                                          const Eigen::VectorXd& y,
                                          const char* what) {
  if (X.rows() == 0) throw InvalidArgument(std::string(what) + ": no observations");
  if (X.rows() != y.size()) {
    throw InvalidArgument(std::string(what) + ": X has " +
                          std::to_string(X.rows()) + " rows but y has " +
                          std::to_string(y.size()) + " entries");
  }
  return X.rows();
}

Eigen::VectorXd clipped_sqrt(const Eigen::VectorXd& variance) {
  return variance.cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

double smoothness_value(Smoothness nu) {
  switch (nu) {
    case Smoothness::half: return 0.5;
    case Smoothness::three_halves: return 1.5;
    case Smoothness::five_halves: return 2.5;
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& spec,
                   const Eigen::Ref<const Eigen::RowVectorXd>& u1,
                   const Eigen::Ref<const Eigen::RowVectorXd>& u2) {
  if (u1.size() != u2.size()) {
    throw InvalidArgument("kernel_eval: points have different dimensions");
  }
  check_kernel(spec);
  const double r = (u1 - u2).norm();
  return spec.amplitude * matern_correlation(spec.nu, r / spec.lengthscale);
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) {
    throw InvalidArgument("kernel_matrix: point sets have different dimensions");
  }
  check_kernel(spec);
  const Eigen::Index d = a.cols();
  const double inv_l = 1.0 / spec.lengthscale;
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double r2 = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) {
        const double diff = a(i, c) - b(j, c);
        r2 += diff * diff;
      }
      k(i, j) = spec.amplitude *
                matern_correlation(spec.nu, std::sqrt(r2) * inv_l);
    }
  }
  return k;
}

GPModel fit(const PriorSpec& prior, const Eigen::MatrixXd& X,
            const Eigen::VectorXd& y) {
  check_observations(X, y, "fit");
  if (prior.jitter < 0.0) throw InvalidArgument("fit: jitter must be nonnegative");

  Eigen::MatrixXd k = kernel_matrix(prior.kernel, X, X);
  k.diagonal().array() += prior.jitter;

  GPModel model;
  model.prior_ = prior;
  model.x_ = X;
  model.y_ = y;
  model.l_ = cholesky(k, prior, "fit");
  const Eigen::VectorXd delta = y.array() - prior.mean;
  model.kappa_ = model.l_.triangularView<Eigen::Lower>().solve(delta);
  model.beta_ =
      model.l_.triangularView<Eigen::Lower>().transpose().solve(model.kappa_);
  return model;
}

GPModel update(const GPModel& model, const Eigen::MatrixXd& X_new,
               const Eigen::VectorXd& y_new) {
  const auto b = check_observations(X_new, y_new, "update");
  if (static_cast<std::size_t>(X_new.cols()) != model.dimension()) {
    throw InvalidArgument("update: new points have dimension " +
                          std::to_string(X_new.cols()) + ", model has " +
                          std::to_string(model.dimension()));
  }
  const auto n = static_cast<Eigen::Index>(model.size());
  const PriorSpec& prior = model.prior();
  const auto lower = model.L().triangularView<Eigen::Lower>();

  // W = L \ K_{X, X~}; the new factor's off-diagonal block is W^T.
  const Eigen::MatrixXd w = lower.solve(kernel_matrix(prior.kernel, model.X(), X_new));
  Eigen::MatrixXd schur = kernel_matrix(prior.kernel, X_new, X_new);
  schur.diagonal().array() += prior.jitter;
  schur.noalias() -= w.transpose() * w;
  const Eigen::MatrixXd l_tilde = cholesky(schur, prior, "update (Schur complement)");
  const auto lower_tilde = l_tilde.triangularView<Eigen::Lower>();

  const Eigen::VectorXd delta_new = y_new.array() - prior.mean;
  const Eigen::VectorXd kappa_tilde =
      lower_tilde.solve(delta_new - w.transpose() * model.kappa());
  const Eigen::VectorXd beta2 = lower_tilde.transpose().solve(kappa_tilde);
  const Eigen::VectorXd beta1 =
      lower.transpose().solve(model.kappa() - w * beta2);

  GPModel out;
  out.prior_ = prior;
  out.x_.resize(n + b, X_new.cols());
  out.x_ << model.X(), X_new;
  out.y_.resize(n + b);
  out.y_ << model.y(), y_new;
  out.l_ = Eigen::MatrixXd::Zero(n + b, n + b);
  out.l_.topLeftCorner(n, n) = model.L();
  out.l_.bottomLeftCorner(b, n) = w.transpose();
  out.l_.bottomRightCorner(b, b) = l_tilde;
  out.kappa_.resize(n + b);
  out.kappa_ << model.kappa(), kappa_tilde;
  out.beta_.resize(n + b);
  out.beta_ << beta1, beta2;
  return out;
}

PredictionCache::ConstMap PredictionCache::cross_kernel() const {
  return ConstMap(cross_kernel_.data(), nodes_.rows(),
                  static_cast<Eigen::Index>(n_));
}

PredictionCache::ConstMap PredictionCache::whitened() const {
  return ConstMap(whitened_.data(), nodes_.rows(),
                  static_cast<Eigen::Index>(n_));
}

PredictionCache predict(const GPModel& model, const SampleMatrix& U) {
  if (static_cast<std::size_t>(U.cols()) != model.dimension()) {
    throw InvalidArgument("predict: nodes have dimension " +
                          std::to_string(U.cols()) + ", model has " +
                          std::to_string(model.dimension()));
  }
  const Eigen::Index big_n = U.rows();
  const auto n = static_cast<Eigen::Index>(model.size());
  const PriorSpec& prior = model.prior();

  PredictionCache cache;
  cache.nodes_ = U;
  cache.prior_ = prior;
  cache.n_ = model.size();
  cache.prior_mean_ = Eigen::VectorXd::Constant(big_n, prior.mean);
  cache.prior_variance_ = Eigen::VectorXd::Constant(big_n, prior.kernel.amplitude);

  cache.cross_kernel_.resize(static_cast<std::size_t>(big_n * n));
  Eigen::Map<Eigen::MatrixXd> kux(cache.cross_kernel_.data(), big_n, n);
  kux = kernel_matrix(prior.kernel, U, model.X());

  cache.whitened_ = cache.cross_kernel_;
  Eigen::Map<Eigen::MatrixXd> vt(cache.whitened_.data(), big_n, n);
  model.L().triangularView<Eigen::Lower>().transpose().solveInPlace<Eigen::OnTheRight>(vt);

  cache.mean_ = cache.prior_mean_ + kux * model.beta();
  cache.v_ = vt.rowwise().squaredNorm();
  cache.sd_ = clipped_sqrt(cache.prior_variance_ - cache.v_);
  return cache;
}

PredictionCache update_predictions(const GPModel& model_old,
                                   PredictionCache&& cache,
                                   const Eigen::MatrixXd& X_new,
                                   const Eigen::VectorXd& y_new,
                                   const GPModel& model_new) {
  const auto b = check_observations(X_new, y_new, "update_predictions");
  const auto n = static_cast<Eigen::Index>(model_old.size());
  if (cache.n_ != model_old.size()) {
    throw InvalidArgument("update_predictions: cache was built from " +
                          std::to_string(cache.n_) +
                          " observations but the old model has " +
                          std::to_string(model_old.size()));
  }
  if (model_new.size() != model_old.size() + static_cast<std::size_t>(b)) {
    throw InvalidArgument("update_predictions: new model size does not equal old size plus batch");
  }
  if (!(cache.prior_ == model_old.prior()) || !(model_new.prior() == model_old.prior())) {
    throw InvalidArgument("update_predictions: models and cache must share one prior");
  }
  if (static_cast<std::size_t>(cache.nodes_.cols()) != model_new.dimension() ||
      X_new.cols() != cache.nodes_.cols()) {
    throw InvalidArgument("update_predictions: node set dimension mismatch");
  }
  if (!(model_new.X().bottomRows(b) == X_new)) {
    throw InvalidArgument("update_predictions: X_new is not the tail of the new model's data");
  }

  const Eigen::Index big_n = cache.nodes_.rows();
  const PriorSpec& prior = model_new.prior();
  const Eigen::MatrixXd w_t = model_new.L().block(n, 0, b, n);  // K_{X,X~}^T L^-T
  const Eigen::MatrixXd l_tilde = model_new.L().block(n, n, b, b);

  const Eigen::MatrixXd k_new = kernel_matrix(prior.kernel, cache.nodes_, X_new);
  Eigen::MatrixXd vt_new = k_new;
  {
    PredictionCache::ConstMap vt = cache.whitened();
    vt_new.noalias() -= vt * w_t.transpose();
  }
  l_tilde.triangularView<Eigen::Lower>().transpose().solveInPlace<Eigen::OnTheRight>(vt_new);

  {
    PredictionCache::ConstMap kux = cache.cross_kernel();
    cache.mean_ = cache.prior_mean_ + kux * model_new.beta().head(n) +
                  k_new * model_new.beta().tail(b);
  }
  cache.v_ += vt_new.rowwise().squaredNorm();
  cache.sd_ = clipped_sqrt(cache.prior_variance_ - cache.v_);

  cache.cross_kernel_.insert(cache.cross_kernel_.end(), k_new.data(),
                             k_new.data() + big_n * b);
  cache.whitened_.insert(cache.whitened_.end(), vt_new.data(),
                         vt_new.data() + big_n * b);
  cache.n_ = model_new.size();
  return std::move(cache);
}

PredictionCache update_predictions(const GPModel& model_old,
                                   const PredictionCache& cache,
                                   const Eigen::MatrixXd& X_new,
                                   const Eigen::VectorXd& y_new,
                                   const GPModel& model_new) {
  PredictionCache copy = cache;
  return update_predictions(model_old, std::move(copy), X_new, y_new, model_new);
}

Posterior posterior(const GPModel& model, const Eigen::MatrixXd& points) {
  if (static_cast<std::size_t>(points.cols()) != model.dimension()) {
    throw InvalidArgument("posterior: dimension mismatch");
  }
  const PriorSpec& prior = model.prior();
  Eigen::MatrixXd k = kernel_matrix(prior.kernel, model.X(), points);
  Posterior out;
  out.mean = (k.transpose() * model.beta()).array() + prior.mean;
  model.L().triangularView<Eigen::Lower>().solveInPlace(k);
  out.sd = clipped_sqrt(
      (prior.kernel.amplitude - k.colwise().squaredNorm().array()).matrix().transpose());
  return out;
}

double log_marginal_likelihood(const GPModel& model) {
  const double n = static_cast<double>(model.size());
  const Eigen::VectorXd delta = model.y().array() - model.prior().mean;
  return -0.5 * delta.dot(model.beta()) -
         model.L().diagonal().array().log().sum() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

double log_marginal_likelihood(const PriorSpec& prior, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y) {
  return log_marginal_likelihood(fit(prior, X, y));
}

namespace {

struct LogBox {
  std::array<double, 2> lo;
  std::array<double, 2> hi;

  std::array<double, 2> clamp(std::array<double, 2> p) const {
    for (int i = 0; i < 2; ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
    return p;
  }
};

class LogLikelihoodObjective {
 public:
  LogLikelihoodObjective(const PriorSpec& base, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y)
      : base_(base), x_(X), y_(y) {}

  PriorSpec prior_at(const std::array<double, 2>& p) const {
    PriorSpec prior = base_;
    prior.kernel.lengthscale = std::exp(p[0]);
    prior.kernel.amplitude = std::exp(p[1]);
    return prior;
  }

  // Negated so that smaller is better.
  double operator()(const std::array<double, 2>& p) const {
    try {
      const double value = log_marginal_likelihood(prior_at(p), x_, y_);
      return std::isfinite(value) ? -value : kInfeasible;
    } catch (const NumericalError&) {
      return kInfeasible;
    }
  }

  static constexpr double kInfeasible = std::numeric_limits<double>::infinity();

 private:
  const PriorSpec& base_;
  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
};

// Nelder-Mead on a box, with trial points projected back into the box.
std::array<double, 2> nelder_mead(const LogLikelihoodObjective& f,
                                  std::array<double, 2> start, const LogBox& box,
                                  int iterations) {
  using P = std::array<double, 2>;
  std::array<P, 3> simplex;
  std::array<double, 3> value;
  simplex[0] = box.clamp(start);
  for (int i = 0; i < 2; ++i) {
    P p = simplex[0];
    const double step = 0.1 * (box.hi[i] - box.lo[i]);
    p[i] = (p[i] + step <= box.hi[i]) ? p[i] + step : p[i] - step;
    simplex[i + 1] = box.clamp(p);
  }
  for (int i = 0; i < 3; ++i) value[i] = f(simplex[i]);

  auto combine = [&](const P& a, const P& b, double t) {
    return box.clamp(P{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
  };

  for (int it = 0; it < iterations; ++it) {
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return value[a] < value[b]; });
    const int best = order[0], mid = order[1], worst = order[2];
    if (std::abs(value[worst] - value[best]) < 1e-10 &&
        std::abs(simplex[worst][0] - simplex[best][0]) < 1e-8 &&
        std::abs(simplex[worst][1] - simplex[best][1]) < 1e-8) {
      break;
    }
    const P centroid = {0.5 * (simplex[best][0] + simplex[mid][0]),
                        0.5 * (simplex[best][1] + simplex[mid][1])};
    const P reflected = combine(centroid, simplex[worst], -1.0);
    const double fr = f(reflected);
    if (fr < value[best]) {
      const P expanded = combine(centroid, simplex[worst], -2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        value[worst] = fe;
      } else {
        simplex[worst] = reflected;
        value[worst] = fr;
      }
      continue;
    }
    if (fr < value[mid]) {
      simplex[worst] = reflected;
      value[worst] = fr;
      continue;
    }
    const P contracted = combine(centroid, simplex[worst], 0.5);
    const double fc = f(contracted);
    if (fc < value[worst]) {
      simplex[worst] = contracted;
      value[worst] = fc;
      continue;
    }
    for (int i : {mid, worst}) {
      simplex[i] = combine(simplex[best], simplex[i], 0.5);
      value[i] = f(simplex[i]);
    }
  }
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (value[i] < value[best]) best = i;
  }
  return simplex[best];
}

}  // namespace

PriorSpec optimize_hyperparameters(const PriorSpec& prior,
                                   const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y,
                                   const HyperparameterSearch& search) {
  check_observations(X, y, "optimize_hyperparameters");
  if (X.rows() < 2) {
    throw InvalidArgument("optimize_hyperparameters: need at least 2 observations");
  }
  if (!(search.lengthscale_min > 0.0) || !(search.amplitude_min > 0.0) ||
      !(search.lengthscale_min <= search.lengthscale_max) ||
      !(search.amplitude_min <= search.amplitude_max) || search.grid_points < 1) {
    throw InvalidArgument("optimize_hyperparameters: empty search bounds");
  }

  const LogBox box{{std::log(search.lengthscale_min), std::log(search.amplitude_min)},
                   {std::log(search.lengthscale_max), std::log(search.amplitude_max)}};
  const LogLikelihoodObjective objective(prior, X, y);

  std::array<double, 2> best_point{};
  double best_value = LogLikelihoodObjective::kInfeasible;
  const int g = search.grid_points;
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const double ti = g == 1 ? 0.5 : static_cast<double>(i) / (g - 1);
      const double tj = g == 1 ? 0.5 : static_cast<double>(j) / (g - 1);
      const std::array<double, 2> p = {box.lo[0] + ti * (box.hi[0] - box.lo[0]),
                                       box.lo[1] + tj * (box.hi[1] - box.lo[1])};
      const double value = objective(p);
      if (value < best_value) {
        best_value = value;
        best_point = p;
      }
    }
  }

  PriorSpec best_prior = prior;
  double best_prior_value;
  try {
    best_prior_value = -log_marginal_likelihood(prior, X, y);
  } catch (const NumericalError&) {
    best_prior_value = LogLikelihoodObjective::kInfeasible;
  }
  if (best_value < LogLikelihoodObjective::kInfeasible) {
    const auto refined =
        nelder_mead(objective, best_point, box, search.local_iterations);
    const double refined_value = objective(refined);
    if (refined_value < best_value) {
      best_value = refined_value;
      best_point = refined;
    }
    if (best_value < best_prior_value) best_prior = objective.prior_at(best_point);
  }
  if (best_prior_value == LogLikelihoodObjective::kInfeasible &&
      best_value == LogLikelihoodObjective::kInfeasible) {
    throw NumericalError("optimize_hyperparameters: no feasible hyperparameters",
                         suggested_jitter(prior));
  }
  return best_prior;
}

}  // namespace pofgp
