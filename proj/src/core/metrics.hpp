// Copyright 2026 The effgan-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "data.hpp"
#include "nn.hpp"

namespace effgan::metrics {

using nn::Matrix;
using nn::Vector;

struct GaussianMoments {
  Vector mean;
  Matrix covariance;
  std::size_t sample_count = 0;

  int dim() const { return static_cast<int>(mean.size()); }
};

// Sample mean and unbiased sample covariance. Needs at least two rows.
GaussianMoments fit_moments(const Matrix& samples);

// Symmetric PSD square root through an eigendecomposition; eigenvalues
// below zero are clamped. Throws InvalidArgument when `a` is not symmetric
// within 1e-10 relative to its largest entry.
Matrix psd_sqrt(const Matrix& a);

// ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}), with the trace term
// evaluated as Tr(sqrt(sqrt(S_a) S_b sqrt(S_a))). Clamped to >= 0.
double frechet_distance(const GaussianMoments& a, const GaussianMoments& b);

// Fraction of mixture modes with at least `min_count` samples inside
// radius_multiplier * sqrt(largest covariance eigenvalue) of the mode mean.
// Without an explicit min_count the threshold is ceil(0.5% of the samples).
double mode_coverage(const Matrix& samples, const data::MixtureSpec& spec, double radius_multiplier,
                     std::optional<std::size_t> min_count = std::nullopt);

// Mean pairwise Euclidean distance; 0 for a single vector.
double parameter_drift(const std::vector<nn::ParamVector>& vectors);

struct MetricsRecord {
  int round = 0;
  double fid = 0.0;
  double drift = 0.0;
  double mode_coverage = 0.0;
  std::uint64_t bytes_cumulative = 0;
  double wall_seconds = 0.0;
};

}  // namespace effgan::metrics
