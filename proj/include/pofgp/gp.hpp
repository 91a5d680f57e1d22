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

#ifndef POFGP_GP_HPP_
#define POFGP_GP_HPP_

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "pofgp/qmc.hpp"

namespace pofgp {

enum class Smoothness { half, three_halves, five_halves };

double smoothness_value(Smoothness nu);

/// Isotropic Matern covariance: amplitude * rho_nu(||u1 - u2|| / lengthscale).
struct KernelSpec {
  Smoothness nu = Smoothness::three_halves;
  double lengthscale = 0.2;
  double amplitude = 1.0;  // sigma_f^2, the prior variance

  bool operator==(const KernelSpec&) const = default;
};

struct PriorSpec {
  double mean = 0.0;  // constant prior mean m0
  KernelSpec kernel;
  double jitter = 1e-8;  // nugget s^2 added to the kernel diagonal

  bool operator==(const PriorSpec&) const = default;
};

double kernel_eval(const KernelSpec& spec,
                   const Eigen::Ref<const Eigen::RowVectorXd>& u1,
                   const Eigen::Ref<const Eigen::RowVectorXd>& u2);

/// Cross-covariance between the rows of `a` and the rows of `b`.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b);

/// Fitted GP: observations plus the cached factorization
///   L L^T = k(X, X) + s^2 I,  kappa = L \ (y - m0),  beta = L^T \ kappa.
/// Only `fit` and `update` construct one.
class GPModel {
 public:
  const PriorSpec& prior() const { return prior_; }
  const Eigen::MatrixXd& X() const { return x_; }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& L() const { return l_; }
  const Eigen::VectorXd& kappa() const { return kappa_; }
  const Eigen::VectorXd& beta() const { return beta_; }

  std::size_t size() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(x_.cols()); }

 private:
  GPModel() = default;

  friend GPModel fit(const PriorSpec&, const Eigen::MatrixXd&,
                     const Eigen::VectorXd&);
  friend GPModel update(const GPModel&, const Eigen::MatrixXd&,
                        const Eigen::VectorXd&);

  PriorSpec prior_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  Eigen::MatrixXd l_;
  Eigen::VectorXd kappa_;
  Eigen::VectorXd beta_;
};

GPModel fit(const PriorSpec& prior, const Eigen::MatrixXd& X,
            const Eigen::VectorXd& y);

/// Block-Cholesky extension of `model` with b new observations. The result
/// is numerically equivalent to fitting the concatenated data from scratch.
GPModel update(const GPModel& model, const Eigen::MatrixXd& X_new,
               const Eigen::VectorXd& y_new);

/// Posterior mean and standard deviation at a fixed node set, together with
/// the intermediates needed to fold in later observations without touching
/// the prior quantities again.
///
/// The n x N matrices K_XU and V = L \ K_XU are held transposed (N x n) in
/// contiguous buffers so that new observations append columns in place.
class PredictionCache {
 public:
  using ConstMap = Eigen::Map<const Eigen::MatrixXd>;

  const SampleMatrix& nodes() const { return nodes_; }
  std::size_t observations() const { return n_; }
  std::size_t node_count() const { return static_cast<std::size_t>(nodes_.rows()); }

  const Eigen::VectorXd& prior_mean() const { return prior_mean_; }          // m_U
  const Eigen::VectorXd& prior_variance() const { return prior_variance_; }  // Sigma_U
  const Eigen::VectorXd& explained_variance() const { return v_; }          // diag(V^T V)
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& sd() const { return sd_; }

  /// K_XU^T, N x n.
  ConstMap cross_kernel() const;
  /// V^T = K_XU^T L^-T, N x n.
  ConstMap whitened() const;

 private:
  friend PredictionCache predict(const GPModel&, const SampleMatrix&);
  friend PredictionCache update_predictions(const GPModel&, PredictionCache&&,
                                            const Eigen::MatrixXd&,
                                            const Eigen::VectorXd&,
                                            const GPModel&);

  SampleMatrix nodes_;
  PriorSpec prior_;
  std::size_t n_ = 0;
  Eigen::VectorXd prior_mean_;
  Eigen::VectorXd prior_variance_;
  std::vector<double> cross_kernel_;
  std::vector<double> whitened_;
  Eigen::VectorXd v_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd sd_;
};

PredictionCache predict(const GPModel& model, const SampleMatrix& U);

/// Folds the observations that took `model_old` to `model_new` into a cache
/// built for `model_old`. The rvalue overload reuses the cache's buffers.
PredictionCache update_predictions(const GPModel& model_old,
                                   PredictionCache&& cache,
                                   const Eigen::MatrixXd& X_new,
                                   const Eigen::VectorXd& y_new,
                                   const GPModel& model_new);

PredictionCache update_predictions(const GPModel& model_old,
                                   const PredictionCache& cache,
                                   const Eigen::MatrixXd& X_new,
                                   const Eigen::VectorXd& y_new,
                                   const GPModel& model_new);

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// Posterior mean/sd at arbitrary points without building a cache.
Posterior posterior(const GPModel& model, const Eigen::MatrixXd& points);

double log_marginal_likelihood(const GPModel& model);
double log_marginal_likelihood(const PriorSpec& prior, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y);

/// Box for (lengthscale, amplitude). Both are searched on a log scale.
struct HyperparameterSearch {
  double lengthscale_min = 0.05;
  double lengthscale_max = 0.5;
  double amplitude_min = 1e-4;
  double amplitude_max = 1e4;
  int grid_points = 12;
  int local_iterations = 200;
};

/// Maximizes the log marginal likelihood over (lengthscale, amplitude) with
/// a log-spaced grid followed by Nelder-Mead. Smoothness, mean and jitter are
/// kept from `prior`. Never returns something worse than `prior` itself.
PriorSpec optimize_hyperparameters(const PriorSpec& prior,
                                   const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y,
                                   const HyperparameterSearch& search = {});

}  // namespace pofgp

#endif  // POFGP_GP_HPP_
