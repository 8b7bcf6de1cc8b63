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

#include "metrics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "errors.hpp"

namespace effgan::metrics {

GaussianMoments fit_moments(const Matrix& samples) {
  if (samples.rows() < 2) throw InvalidArgument("fit_moments needs at least 2 samples");
  GaussianMoments m;
  m.sample_count = static_cast<std::size_t>(samples.rows());
  m.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - m.mean.transpose();
  m.covariance = (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
  // Exact symmetry, so later eigensolvers see a self-adjoint input.
  m.covariance = 0.5 * (m.covariance + m.covariance.transpose()).eval();
  return m;
}

Matrix psd_sqrt(const Matrix& a) {
  if (a.rows() != a.cols()) throw ShapeError("psd_sqrt needs a square matrix");
  if (a.size() == 0) return a;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidArgument("psd_sqrt: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (a + a.transpose()));
  Eigen::VectorXd roots = solver.eigenvalues();
  // Rounding can leave eigenvalues of a PSD input slightly negative.
  for (auto& v : roots) v = v > 0.0 ? std::sqrt(v) : 0.0;
  Matrix b = solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
  return 0.5 * (b + b.transpose());
}

double frechet_distance(const GaussianMoments& a, const GaussianMoments& b) {
  if (a.dim() != b.dim() || a.covariance.rows() != a.dim() || b.covariance.rows() != b.dim()) {
    throw ShapeError("frechet_distance: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()) + ")");
  }
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const Matrix root_a = psd_sqrt(a.covariance);
  Matrix inner = root_a * b.covariance * root_a;
  inner = 0.5 * (inner + inner.transpose()).eval();
  const double cross = psd_sqrt(inner).trace();
  const double value = mean_term + a.covariance.trace() + b.covariance.trace() - 2.0 * cross;
  return std::max(value, 0.0);
}

double mode_coverage(const Matrix& samples, const data::MixtureSpec& spec, double radius_multiplier,
                     std::optional<std::size_t> min_count) {
  spec.validate();
  if (samples.rows() == 0) throw InvalidArgument("mode_coverage needs samples");
  if (samples.cols() != spec.dim()) throw ShapeError("mode_coverage: sample width differs from mixture dimension");
  const std::size_t threshold =
      min_count.value_or(static_cast<std::size_t>(std::ceil(0.005 * static_cast<double>(samples.rows()))));
  std::size_t covered = 0;
  for (const auto& mode : spec.modes) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(mode.covariance, Eigen::EigenvaluesOnly);
    const double radius = radius_multiplier * std::sqrt(std::max(solver.eigenvalues().maxCoeff(), 0.0));
    const double radius2 = radius * radius;
    const auto hits = static_cast<std::size_t>(
        ((samples.rowwise() - mode.mean.transpose()).rowwise().squaredNorm().array() <= radius2).count());
    if (hits >= threshold) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(spec.modes.size());
}

double parameter_drift(const std::vector<nn::ParamVector>& vectors) {
  if (vectors.empty()) throw InvalidArgument("parameter_drift needs at least one vector");
  for (const auto& v : vectors) {
    if (v.size() != vectors.front().size()) throw ShapeError("parameter_drift: vector lengths differ");
  }
  if (vectors.size() == 1) return 0.0;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j, ++pairs) {
      total += (vectors[i].values - vectors[j].values).norm();
    }
  }
  return total / static_cast<double>(pairs);
}

}  // namespace effgan::metrics
