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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "data.hpp"
#include "errors.hpp"
#include "metrics.hpp"
#include "oracles.hpp"
#include "rng.hpp"

namespace effgan::metrics {
namespace {

oracle::Dense to_dense(const Matrix& m) {
  oracle::Dense d = oracle::zeros(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return d;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// A A^T + jitter for a random A: symmetric positive definite.
Matrix random_spd(int d, RngStream& rng, double jitter = 1e-3) {
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  return a * a.transpose() + jitter * Matrix::Identity(d, d);
}

GaussianMoments moments(const Vector& mean, const Matrix& cov) { return {mean, cov, 100}; }

TEST(FitMoments, TwoPointHandArithmetic) {
  Matrix s(2, 2);
  s << 0, 0, 2, 0;
  const GaussianMoments m = fit_moments(s);
  EXPECT_EQ(m.mean, (Vector(2) << 1, 0).finished());
  EXPECT_EQ(m.covariance, (Matrix(2, 2) << 2, 0, 0, 0).finished());
  EXPECT_EQ(m.sample_count, 2u);
}

TEST(FitMoments, DuplicatedDatasetSameMoments) {
  RngStream rng(1);
  Matrix s(50, 3);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.normal();
  Matrix twice(100, 3);
  twice << s, s;
  const GaussianMoments a = fit_moments(s);
  const GaussianMoments b = fit_moments(twice);
  EXPECT_TRUE(a.mean.isApprox(b.mean, 1e-12));
  // Unbiased normalization: 2N-1 against N-1 rescales the scatter.
  EXPECT_TRUE((a.covariance * (49.0 / 50.0)).isApprox(b.covariance * (99.0 / 100.0), 1e-12));
}

TEST(FitMoments, StandardNormalDraws) {
  RngStream rng(2);
  Matrix s(100000, 2);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.normal();
  const GaussianMoments m = fit_moments(s);
  EXPECT_LT(m.mean.cwiseAbs().maxCoeff(), 0.03);
  EXPECT_LT((m.covariance - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.03);
}

TEST(FitMoments, NeedsTwoRows) { EXPECT_THROW(fit_moments(Matrix(1, 2)), InvalidArgument); }

TEST(PsdSqrt, IdentityAndDiagonal) {
  EXPECT_TRUE(psd_sqrt(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3), 1e-14));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  const Matrix r = psd_sqrt(d);
  EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
}

TEST(PsdSqrt, RandomReconstruction) {
  RngStream rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_spd(5, rng);
    const Matrix b = psd_sqrt(a);
    EXPECT_LT((b - b.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((b * b - a).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(PsdSqrt, EigenvaluesMatchJacobiOracle) {
  RngStream rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_spd(4, rng);
    const auto in = oracle::jacobi_eigen(to_dense(a));
    const auto out = oracle::jacobi_eigen(to_dense(psd_sqrt(a)));
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(out.values[k], std::sqrt(in.values[k]), 1e-9);
  }
}

TEST(PsdSqrt, ClampsNegativeEigenvalues) {
  Matrix a(2, 2);
  a << 1, 0, 0, -1e-12;
  const Matrix b = psd_sqrt(a);
  EXPECT_NEAR(b(1, 1), 0.0, 1e-15);
  EXPECT_TRUE(b.allFinite());
}

TEST(PsdSqrt, AsymmetryRejected) {
  Matrix a(2, 2);
  a << 1, 0.5, 0.2, 1;
  EXPECT_THROW(psd_sqrt(a), InvalidArgument);
}

TEST(Frechet, AnalyticCases) {
  const Vector zero = Vector::Zero(2);
  const Matrix eye = Matrix::Identity(2, 2);
  EXPECT_NEAR(frechet_distance(moments(zero, eye), moments(zero, eye)), 0.0, 1e-8);
  EXPECT_NEAR(frechet_distance(moments((Vector(2) << 3, 0).finished(), eye), moments(zero, eye)), 9.0, 1e-8);
  EXPECT_NEAR(frechet_distance(moments(zero, 4.0 * eye), moments(zero, eye)), 2.0, 1e-8);
}

TEST(Frechet, SymmetricAndMatchesOracle) {
  RngStream rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 4;
    Vector ma(d), mb(d);
    for (int i = 0; i < d; ++i) {
      ma[i] = rng.normal();
      mb[i] = rng.normal();
    }
    const GaussianMoments a = moments(ma, random_spd(d, rng));
    const GaussianMoments b = moments(mb, random_spd(d, rng));
    const double ab = frechet_distance(a, b);
    EXPECT_NEAR(ab, frechet_distance(b, a), 1e-10);
    const double expected =
        oracle::frechet(to_std(ma), to_dense(a.covariance), to_std(mb), to_dense(b.covariance));
    EXPECT_NEAR(ab, expected, 1e-8 * std::max(1.0, expected));
    EXPECT_GE(ab, 0.0);
  }
}

TEST(Frechet, ZeroOnlyForEqualMoments) {
  RngStream rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Vector m(3);
    for (int i = 0; i < 3; ++i) m[i] = rng.normal();
    const Matrix c = random_spd(3, rng);
    EXPECT_NEAR(frechet_distance(moments(m, c), moments(m, c)), 0.0, 1e-8);
    Vector shifted = m;
    shifted[0] += 0.01;
    EXPECT_GT(frechet_distance(moments(m, c), moments(shifted, c)), 1e-8);
    EXPECT_GT(frechet_distance(moments(m, c), moments(m, c + 0.01 * Matrix::Identity(3, 3))), 1e-8);
  }
}

TEST(Frechet, DimensionMismatch) {
  EXPECT_THROW(frechet_distance(moments(Vector::Zero(2), Matrix::Identity(2, 2)),
                                moments(Vector::Zero(3), Matrix::Identity(3, 3))),
               InvalidArgument);
}

Matrix rows_at(const std::vector<Vector>& points, int copies) {
  Matrix m(static_cast<Eigen::Index>(points.size()) * copies, 2);
  Eigen::Index r = 0;
  for (const auto& p : points)
    for (int k = 0; k < copies; ++k) m.row(r++) = p.transpose();
  return m;
}

TEST(ModeCoverage, CountingCases) {
  const data::MixtureSpec ring = data::ring8();
  EXPECT_DOUBLE_EQ(mode_coverage(rows_at({ring.modes[3].mean}, 100), ring, 3.0), 1.0 / 8.0);
  std::vector<Vector> all;
  for (const auto& m : ring.modes) all.push_back(m.mean);
  EXPECT_DOUBLE_EQ(mode_coverage(rows_at(all, 10), ring, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(mode_coverage(rows_at({Vector::Constant(2, 40.0)}, 100), ring, 3.0), 0.0);
}

TEST(ModeCoverage, MinCountThreshold) {
  const data::MixtureSpec ring = data::ring8();
  // 1000 rows: the default threshold is 5, so a mode with 4 hits is missed.
  Matrix s = rows_at({Vector::Constant(2, 40.0)}, 1000);
  for (int i = 0; i < 4; ++i) s.row(i) = ring.modes[0].mean.transpose();
  EXPECT_DOUBLE_EQ(mode_coverage(s, ring, 3.0), 0.0);
  s.row(4) = ring.modes[0].mean.transpose();
  EXPECT_DOUBLE_EQ(mode_coverage(s, ring, 3.0), 1.0 / 8.0);
  EXPECT_DOUBLE_EQ(mode_coverage(s, ring, 3.0, std::size_t{6}), 0.0);
}

TEST(ModeCoverage, MonotoneUnderAddedSamples) {
  const data::MixtureSpec ring = data::ring8();
  RngStream rng(7);
  Matrix s(0, 2);
  double previous = 0.0;
  for (int step = 0; step < 40; ++step) {
    Matrix grown(s.rows() + 25, 2);
    grown.topRows(s.rows()) = s;
    for (Eigen::Index i = s.rows(); i < grown.rows(); ++i) {
      grown(i, 0) = 3.0 * rng.normal();
      grown(i, 1) = 3.0 * rng.normal();
    }
    s = grown;
    const double now = mode_coverage(s, ring, 3.0, std::size_t{3});
    EXPECT_GE(now, previous);
    previous = now;
  }
}

TEST(ParameterDrift, Cases) {
  const nn::ParamVector a{(Vector(2) << 0, 0).finished()};
  const nn::ParamVector b{(Vector(2) << 3, 4).finished()};
  EXPECT_EQ(parameter_drift({a}), 0.0);
  EXPECT_EQ(parameter_drift({b, b, b}), 0.0);
  EXPECT_DOUBLE_EQ(parameter_drift({a, b}), 5.0);
  EXPECT_THROW(parameter_drift({a, nn::ParamVector::zeros(3)}), InvalidArgument);
}

TEST(ParameterDrift, TranslationInvariantAndMatchesPairwiseMean) {
  RngStream rng(8);
  std::vector<nn::ParamVector> v(6, nn::ParamVector::zeros(7));
  for (auto& p : v)
    for (Eigen::Index i = 0; i < 7; ++i) p.values[i] = rng.normal();
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j, ++pairs) {
      double sq = 0.0;
      for (Eigen::Index k = 0; k < 7; ++k) sq += (v[i].values[k] - v[j].values[k]) * (v[i].values[k] - v[j].values[k]);
      sum += std::sqrt(sq);
    }
  const double drift = parameter_drift(v);
  EXPECT_NEAR(drift, sum / pairs, 1e-12);
  Vector shift(7);
  for (Eigen::Index i = 0; i < 7; ++i) shift[i] = 10.0 * rng.normal();
  for (auto& p : v) p.values += shift;
  EXPECT_NEAR(parameter_drift(v), drift, 1e-10);
}

}  // namespace
}  // namespace effgan::metrics
