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

#include "pofgp/qmc.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "pofgp/errors.hpp"

namespace pofgp {

namespace {

// Primitive polynomial degree s, packed interior coefficients a and initial
// direction numbers m_1..m_s from the Joe & Kuo (2008) new-joe-kuo-6.21201
// file, dimensions 1 through 32. Dimension 1 is van der Corput.
struct DirectionEntry {
  unsigned s;
  unsigned a;
  std::array<std::uint32_t, 7> m;
};

constexpr std::array<DirectionEntry, kMaxSobolDimension> kDirections = {{
    {0, 0, {1, 0, 0, 0, 0, 0, 0}},
    {1, 0, {1, 0, 0, 0, 0, 0, 0}},
    {2, 1, {1, 3, 0, 0, 0, 0, 0}},
    {3, 1, {1, 3, 1, 0, 0, 0, 0}},
    {3, 2, {1, 1, 1, 0, 0, 0, 0}},
    {4, 1, {1, 1, 3, 3, 0, 0, 0}},
    {4, 4, {1, 3, 5, 13, 0, 0, 0}},
    {5, 2, {1, 1, 5, 5, 17, 0, 0}},
    {5, 4, {1, 1, 5, 5, 5, 0, 0}},
    {5, 7, {1, 1, 7, 11, 19, 0, 0}},
    {5, 11, {1, 1, 5, 1, 1, 0, 0}},
    {5, 13, {1, 1, 1, 3, 11, 0, 0}},
    {5, 14, {1, 3, 5, 5, 31, 0, 0}},
    {6, 1, {1, 3, 3, 9, 7, 49, 0}},
    {6, 13, {1, 1, 1, 15, 21, 21, 0}},
    {6, 16, {1, 3, 1, 13, 27, 49, 0}},
    {6, 19, {1, 1, 1, 15, 7, 5, 0}},
    {6, 22, {1, 3, 1, 15, 13, 25, 0}},
    {6, 25, {1, 1, 5, 5, 19, 61, 0}},
    {7, 1, {1, 3, 7, 11, 23, 15, 103}},
    {7, 4, {1, 3, 7, 13, 13, 15, 69}},
    {7, 7, {1, 1, 3, 13, 7, 35, 63}},
    {7, 8, {1, 3, 5, 9, 1, 25, 53}},
    {7, 14, {1, 3, 1, 13, 9, 35, 107}},
    {7, 19, {1, 3, 1, 5, 27, 61, 31}},
    {7, 21, {1, 1, 5, 11, 19, 41, 61}},
    {7, 28, {1, 3, 5, 3, 3, 13, 69}},
    {7, 31, {1, 1, 7, 13, 1, 19, 1}},
    {7, 32, {1, 3, 7, 5, 13, 19, 59}},
    {7, 37, {1, 1, 3, 9, 25, 29, 41}},
    {7, 41, {1, 3, 5, 13, 23, 1, 55}},
    {7, 42, {1, 3, 7, 3, 13, 59, 17}},}};

constexpr int kBits = 32;

using DirectionTable =
    std::array<std::array<std::uint32_t, kBits>, kMaxSobolDimension>;

DirectionTable build_directions() {
  DirectionTable v{};
  for (std::size_t j = 0; j < kMaxSobolDimension; ++j) {
    const auto& e = kDirections[j];
    if (e.s == 0) {
      for (int k = 0; k < kBits; ++k) v[j][k] = 1u << (kBits - 1 - k);
      continue;
    }
    const int s = static_cast<int>(e.s);
    for (int k = 0; k < s && k < kBits; ++k) {
      v[j][k] = e.m[k] << (kBits - 1 - k);
    }
    for (int k = s; k < kBits; ++k) {
      std::uint32_t x = v[j][k - s] ^ (v[j][k - s] >> s);
      for (int i = 1; i < s; ++i) {
        if ((e.a >> (s - 1 - i)) & 1u) x ^= v[j][k - i];
      }
      v[j][k] = x;
    }
  }
  return v;
}

const DirectionTable& directions() {
  static const DirectionTable table = build_directions();
  return table;
}

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

// Top 53 bits of a 64-bit word mapped to the centre of its cell, so the
// result is never 0 or 1.
double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * kTwoPow53Inv;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(mix64(seed) ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t index) {
  return to_open_unit(mix64(mix64(seed ^ mix64(stream)) + index));
}

namespace detail {

std::uint32_t sobol_raw(std::size_t index, std::size_t coordinate) {
  const auto& v = directions()[coordinate];
  std::uint64_t gray = index ^ (index >> 1);
  std::uint32_t x = 0;
  for (int k = 0; gray != 0; ++k, gray >>= 1) {
    if (gray & 1u) x ^= v[k];
  }
  return x;
}

}  // namespace detail

SampleMatrix generate_nodes(const SequenceConfig& config, std::size_t first,
                            std::size_t count) {
  const std::size_t d = config.dimension;
  if (count == 0) throw InvalidArgument("generate_nodes: n must be positive");
  if (d == 0) throw InvalidArgument("generate_nodes: dimension must be positive");

  SampleMatrix out(static_cast<Eigen::Index>(count),
                   static_cast<Eigen::Index>(d));
  if (config.kind == SequenceKind::iid) {
    for (std::size_t i = 0; i < count; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        out(i, j) = counter_uniform(config.seed, j, first + i);
      }
    }
    return out;
  }

  if (d > kMaxSobolDimension) {
    throw InvalidArgument("generate_nodes: low-discrepancy dimension " +
                          std::to_string(d) + " exceeds the supported " +
                          std::to_string(kMaxSobolDimension));
  }
  if (first + count > (std::size_t{1} << kBits)) {
    throw InvalidArgument("generate_nodes: at most 2^32 low-discrepancy points");
  }
  for (std::size_t j = 0; j < d; ++j) {
    const std::uint64_t shift = mix64(derive_seed(config.seed, j));
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t raw =
          static_cast<std::uint64_t>(detail::sobol_raw(first + i, j)) << 32;
      out(i, j) = to_open_unit(raw ^ shift);
    }
  }
  return out;
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double inverse_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidArgument("inverse_normal_cdf: argument must lie in (0, 1)");
  }
  // Acklam's rational approximation (relative error 1.15e-9) followed by one
  // Halley step against erfc.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double lo = 0.02425;
  constexpr double hi = 1.0 - lo;

  double x;
  if (u < lo) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= hi) {
    const double q = u - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double e = normal_cdf(x) - u;
  const double step = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= step / (1.0 + 0.5 * x * step);
  return x;
}

Eigen::MatrixXd transform_gaussian(const SampleMatrix& nodes,
                                   const Eigen::VectorXd& mean,
                                   const Eigen::MatrixXd& factor) {
  if (factor.cols() != nodes.cols()) {
    throw InvalidArgument("transform_gaussian: factor has " +
                          std::to_string(factor.cols()) +
                          " columns but nodes have dimension " +
                          std::to_string(nodes.cols()));
  }
  if (mean.size() != factor.rows()) {
    throw InvalidArgument("transform_gaussian: mean length does not match factor rows");
  }
  Eigen::MatrixXd z = nodes.unaryExpr([](double u) { return inverse_normal_cdf(u); });
  Eigen::MatrixXd out = z * factor.transpose();
  out.rowwise() += mean.transpose();
  return out;
}

}  // namespace pofgp
