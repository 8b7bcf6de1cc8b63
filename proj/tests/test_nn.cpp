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
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "errors.hpp"
#include "nn.hpp"
#include "oracles.hpp"

namespace effgan::nn {
namespace {

MlpSpec spec_of(std::vector<int> sizes, OutputActivation out = OutputActivation::kIdentity,
                HiddenActivation hidden = HiddenActivation::kLeakyRelu) {
  MlpSpec s;
  s.layer_sizes = std::move(sizes);
  s.output = out;
  s.hidden = hidden;
  return s;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
  return m;
}

// Straightforward forward pass written against the documented layout:
// per layer, row-major fan_in x fan_out weights then fan_out biases.
std::vector<std::vector<double>> naive_forward(const MlpSpec& spec, const std::vector<double>& p,
                                               const std::vector<std::vector<double>>& x) {
  std::vector<std::vector<double>> a = x;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const auto fan_in = static_cast<std::size_t>(spec.layer_sizes[l]);
    const auto fan_out = static_cast<std::size_t>(spec.layer_sizes[l + 1]);
    const bool last = l + 2 == spec.layer_sizes.size();
    std::vector<std::vector<double>> next(a.size(), std::vector<double>(fan_out));
    for (std::size_t r = 0; r < a.size(); ++r) {
      for (std::size_t j = 0; j < fan_out; ++j) {
        double z = p[offset + fan_in * fan_out + j];
        for (std::size_t i = 0; i < fan_in; ++i) z += a[r][i] * p[offset + i * fan_out + j];
        if (!last) {
          if (spec.hidden == HiddenActivation::kRelu) z = z > 0 ? z : 0.0;
          else z = z > 0 ? z : spec.leaky_slope * z;
        } else if (spec.output == OutputActivation::kTanh) {
          z = std::tanh(z);
        } else if (spec.output == OutputActivation::kSigmoid) {
          z = 1.0 / (1.0 + std::exp(-z));
        }
        next[r][j] = z;
      }
    }
    offset += fan_in * fan_out + fan_out;
    a = std::move(next);
  }
  return a;
}

TEST(InitMlp, IdenticalSeedGivesIdenticalVector) {
  const MlpSpec s = spec_of({2, 4, 1});
  EXPECT_EQ(init_mlp(s, 7), init_mlp(s, 7));
  EXPECT_FALSE(init_mlp(s, 7) == init_mlp(s, 8));
}

TEST(InitMlp, LayoutLength) {
  EXPECT_EQ(init_mlp(spec_of({2, 4, 1}), 7).size(), 17u);
  EXPECT_EQ(spec_of({2, 4, 1}).param_count(), 17u);
  EXPECT_EQ(spec_of({8, 64, 64, 2}).param_count(), 8u * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2);
}

TEST(InitMlp, BiasesAreZeroAndWeightsWithinScale) {
  const MlpSpec s = spec_of({2, 4, 1});
  const ParamVector p = init_mlp(s, 7);
  // Layer 1: 8 weights then 4 biases; layer 2: 4 weights then 1 bias.
  for (int i = 8; i < 12; ++i) EXPECT_EQ(p.values[i], 0.0);
  EXPECT_EQ(p.values[16], 0.0);
  for (int i = 0; i < 8; ++i) EXPECT_LE(std::abs(p.values[i]), 1.0 / std::sqrt(2.0));
  for (int i = 12; i < 16; ++i) EXPECT_LE(std::abs(p.values[i]), 1.0 / std::sqrt(4.0));
}

TEST(InitMlp, WeightScaleShrinksWithFanIn) {
  const MlpSpec s = spec_of({400, 3});
  const ParamVector p = init_mlp(s, 1);
  double sum_sq = 0.0;
  for (int i = 0; i < 1200; ++i) sum_sq += p.values[i] * p.values[i];
  // Uniform on [-a, a] has variance a^2 / 3 with a = 1/20.
  EXPECT_NEAR(sum_sq / 1200.0, (1.0 / 400.0) / 3.0, 0.15 * (1.0 / 400.0) / 3.0);
}

TEST(InitMlp, InvalidSpecRejected) {
  EXPECT_THROW(init_mlp(spec_of({3}), 1), InvalidArgument);
  EXPECT_THROW(init_mlp(spec_of({3, 0, 1}), 1), InvalidArgument);
  MlpSpec bad = spec_of({2, 2});
  bad.leaky_slope = 1.5;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Forward, ZeroParamsIdentityOutputGivesZeros) {
  const MlpSpec s = spec_of({3, 5, 2});
  const Matrix out = forward(s, ParamVector::zeros(s.param_count()), random_matrix(4, 3, 1));
  EXPECT_TRUE(out.isZero(0.0));
  EXPECT_EQ(out.rows(), 4);
  EXPECT_EQ(out.cols(), 2);
}

TEST(Forward, AffineSingleLayer) {
  const MlpSpec s = spec_of({1, 1});
  ParamVector p = ParamVector::zeros(2);
  p.values << 2.0, 1.0;
  Matrix x(1, 1);
  x << 3.0;
  EXPECT_EQ(forward(s, p, x)(0, 0), 7.0);
}

TEST(Forward, TanhOutputBounded) {
  const MlpSpec s = spec_of({2, 8, 3}, OutputActivation::kTanh);
  ParamVector p = init_mlp(s, 3);
  p.values *= 10.0;
  const Matrix out = forward(s, p, random_matrix(64, 2, 2));
  // Large pre-activations round to exactly +-1 in binary64.
  EXPECT_LE(out.maxCoeff(), 1.0);
  EXPECT_GE(out.minCoeff(), -1.0);
  EXPECT_GT(out.maxCoeff(), 0.9);
}

TEST(Forward, MatchesNaiveLayoutOracle) {
  for (auto out_act : {OutputActivation::kIdentity, OutputActivation::kTanh, OutputActivation::kSigmoid}) {
    for (auto hidden : {HiddenActivation::kRelu, HiddenActivation::kLeakyRelu}) {
      const MlpSpec s = spec_of({3, 5, 4, 2}, out_act, hidden);
      const ParamVector p = init_mlp(s, 11);
      const Matrix x = random_matrix(6, 3, 12);
      std::vector<double> flat(p.values.data(), p.values.data() + p.values.size());
      std::vector<std::vector<double>> rows(6, std::vector<double>(3));
      for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 3; ++c) rows[r][c] = x(r, c);
      const auto expected = naive_forward(s, flat, rows);
      const Matrix got = forward(s, p, x);
      for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 2; ++c) EXPECT_NEAR(got(r, c), expected[r][c], 1e-13);
    }
  }
}

TEST(Forward, DimensionMismatchNamesSizes) {
  const MlpSpec s = spec_of({3, 2});
  try {
    forward(s, init_mlp(s, 1), random_matrix(2, 4, 1));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('3'), std::string::npos) << msg;
    EXPECT_NE(msg.find('4'), std::string::npos) << msg;
  }
  EXPECT_THROW(forward(s, ParamVector::zeros(3), random_matrix(2, 3, 1)), ShapeError);
}

TEST(Backward, ZeroUpstreamGivesZeroGradient) {
  const MlpSpec s = spec_of({3, 4, 2});
  const ParamVector g = backward(s, init_mlp(s, 2), random_matrix(5, 3, 3), Matrix::Zero(5, 2));
  EXPECT_TRUE(g.values.isZero(0.0));
}

TEST(Backward, LinearInUpstream) {
  const MlpSpec s = spec_of({3, 4, 2}, OutputActivation::kTanh);
  const ParamVector p = init_mlp(s, 2);
  const Matrix x = random_matrix(5, 3, 3);
  const Matrix up = random_matrix(5, 2, 4);
  const ParamVector g1 = backward(s, p, x, up);
  const ParamVector g2 = backward(s, p, x, Matrix(2.0 * up));
  EXPECT_TRUE(g2.values.isApprox(2.0 * g1.values, 1e-14));
}

TEST(Backward, ShapeMismatchRejected) {
  const MlpSpec s = spec_of({3, 4, 2});
  EXPECT_THROW(backward(s, init_mlp(s, 2), random_matrix(5, 3, 3), Matrix::Zero(4, 2)), ShapeError);
  EXPECT_THROW(backward(s, init_mlp(s, 2), random_matrix(5, 3, 3), Matrix::Zero(5, 3)), ShapeError);
}

// Gradient of L = sum(upstream .* forward(params)) against central
// differences, over random specs up to [4,8,8,2] and batches up to 8.
TEST(Backward, MatchesCentralDifferences) {
  std::mt19937_64 gen(2026);
  const std::vector<std::vector<int>> shapes = {{1, 1}, {2, 3, 1}, {4, 8, 8, 2}, {3, 5, 2}, {4, 2, 6, 2}, {2, 8, 1}};
  int trial = 0;
  for (const auto& shape : shapes) {
    for (auto out_act : {OutputActivation::kIdentity, OutputActivation::kTanh, OutputActivation::kSigmoid}) {
      for (auto hidden : {HiddenActivation::kRelu, HiddenActivation::kLeakyRelu}) {
        ++trial;
        const MlpSpec s = spec_of(shape, out_act, hidden);
        ParamVector p = init_mlp(s, gen());
        // Zero biases can park a ReLU pre-activation exactly on its kink,
        // where no derivative exists; jitter every coordinate away from it.
        p.values += 0.1 * random_matrix(1, static_cast<int>(p.size()), gen()).transpose();
        const Eigen::Index batch = 1 + static_cast<Eigen::Index>(gen() % 8);
        const Matrix x = random_matrix(batch, shape.front(), gen());
        const Matrix up = random_matrix(batch, shape.back(), gen());
        const ParamVector analytic = backward(s, p, x, up);

        auto loss = [&](const std::vector<double>& flat) {
          ParamVector q = ParamVector::zeros(flat.size());
          for (std::size_t i = 0; i < flat.size(); ++i) q.values[static_cast<Eigen::Index>(i)] = flat[i];
          return forward(s, q, x).cwiseProduct(up).sum();
        };
        const std::vector<double> flat(p.values.data(), p.values.data() + p.values.size());
        const auto numeric = oracle::central_difference(loss, flat, 1e-5);
        for (std::size_t i = 0; i < numeric.size(); ++i) {
          EXPECT_LT(oracle::relative_error(analytic.values[static_cast<Eigen::Index>(i)], numeric[i]), 1e-4)
              << "trial " << trial << " coordinate " << i;
        }
      }
    }
  }
}

TEST(Backward, InputGradientMatchesCentralDifferences) {
  const MlpSpec s = spec_of({3, 6, 2}, OutputActivation::kSigmoid);
  const ParamVector p = init_mlp(s, 5);
  const Matrix x = random_matrix(4, 3, 6);
  const Matrix up = random_matrix(4, 2, 7);
  const Gradients g = backward(s, p, record_forward(s, p, x), up, true);
  ASSERT_EQ(g.input.rows(), 4);
  auto loss = [&](const std::vector<double>& flat) {
    Matrix xi(4, 3);
    for (int i = 0; i < 12; ++i) xi.data()[i] = flat[static_cast<std::size_t>(i)];
    return forward(s, p, xi).cwiseProduct(up).sum();
  };
  const std::vector<double> flat(x.data(), x.data() + x.size());
  const auto numeric = oracle::central_difference(loss, flat, 1e-5);
  for (int i = 0; i < 12; ++i) EXPECT_LT(oracle::relative_error(g.input.data()[i], numeric[static_cast<std::size_t>(i)]), 1e-4);
}

TEST(Adam, ZeroGradientZeroMomentsIsFixedPoint) {
  ParamVector p = ParamVector::zeros(3);
  p.values << 1.0, -2.0, 3.0;
  const auto [next, state] = adam_step(p, ParamVector::zeros(3), AdamState::zeros(3), AdamHyper{});
  EXPECT_EQ(next, p);
  EXPECT_EQ(state.step_count, 1u);
}

TEST(Adam, FirstScalarStepMatchesHandRecurrence) {
  // theta = 1, g = 0.5, lr = 0.001, beta1 = 0, beta2 = 0.9, eps = 1e-8:
  //   m = 0.5, v = 0.1 * 0.25 = 0.025
  //   m_hat = 0.5 / (1 - 0) = 0.5, v_hat = 0.025 / (1 - 0.9) = 0.25
  //   theta' = 1 - 0.001 * 0.5 / (sqrt(0.25) + 1e-8)
  ParamVector p = ParamVector::zeros(1);
  p.values << 1.0;
  ParamVector g = ParamVector::zeros(1);
  g.values << 0.5;
  const auto [next, state] = adam_step(p, g, AdamState::zeros(1), AdamHyper{});
  const double expected = 1.0 - 0.001 * 0.5 / (0.5 + 1e-8);
  EXPECT_NEAR(next.values[0], expected, 1e-15);
  EXPECT_NEAR(state.first_moment[0], 0.5, 1e-15);
  EXPECT_NEAR(state.second_moment[0], 0.025, 1e-15);
  EXPECT_EQ(state.step_count, 1u);
}

TEST(Adam, SecondStepMatchesHandRecurrenceWithMomentum) {
  AdamHyper h;
  h.beta1 = 0.5;
  ParamVector p = ParamVector::zeros(1);
  p.values << 1.0;
  ParamVector g1 = ParamVector::zeros(1);
  g1.values << 0.5;
  ParamVector g2 = ParamVector::zeros(1);
  g2.values << -0.25;
  auto [p1, s1] = adam_step(p, g1, AdamState::zeros(1), h);
  auto [p2, s2] = adam_step(p1, g2, s1, h);

  double theta = 1.0, m = 0.0, v = 0.0;
  const double grads[2] = {0.5, -0.25};
  for (int t = 1; t <= 2; ++t) {
    m = 0.5 * m + 0.5 * grads[t - 1];
    v = 0.9 * v + 0.1 * grads[t - 1] * grads[t - 1];
    const double m_hat = m / (1.0 - std::pow(0.5, t));
    const double v_hat = v / (1.0 - std::pow(0.9, t));
    theta -= 0.001 * m_hat / (std::sqrt(v_hat) + 1e-8);
  }
  EXPECT_NEAR(p2.values[0], theta, 1e-15);
  EXPECT_EQ(s2.step_count, 2u);
}

TEST(Adam, Deterministic) {
  const ParamVector p = init_mlp(spec_of({3, 3}), 1);
  const ParamVector g = init_mlp(spec_of({3, 3}), 2);
  const auto a = adam_step(p, g, AdamState::zeros(p.size()), AdamHyper{});
  const auto b = adam_step(p, g, AdamState::zeros(p.size()), AdamHyper{});
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Adam, NonFiniteGradientSignalsDivergence) {
  ParamVector g = ParamVector::zeros(2);
  g.values << 1.0, std::nan("");
  EXPECT_THROW(adam_step(ParamVector::zeros(2), g, AdamState::zeros(2), AdamHyper{}), DivergenceError);
  g.values << INFINITY, 0.0;
  EXPECT_THROW(adam_step(ParamVector::zeros(2), g, AdamState::zeros(2), AdamHyper{}), DivergenceError);
}

TEST(Adam, ShapeMismatchRejected) {
  EXPECT_THROW(adam_step(ParamVector::zeros(2), ParamVector::zeros(3), AdamState::zeros(2), AdamHyper{}), ShapeError);
  EXPECT_THROW(adam_step(ParamVector::zeros(2), ParamVector::zeros(2), AdamState::zeros(3), AdamHyper{}), ShapeError);
}

TEST(Adam, HyperValidation) {
  AdamHyper h;
  EXPECT_NO_THROW(h.validate());
  h.beta1 = 1.0;
  EXPECT_THROW(h.validate(), InvalidArgument);
  h = {};
  h.beta2 = -0.1;
  EXPECT_THROW(h.validate(), InvalidArgument);
  h = {};
  h.epsilon = 0.0;
  EXPECT_THROW(h.validate(), InvalidArgument);
  h = {};
  h.learning_rate = -1.0;
  EXPECT_THROW(h.validate(), InvalidArgument);
}

TEST(Activations, NamesRoundTrip) {
  for (auto a : {HiddenActivation::kRelu, HiddenActivation::kLeakyRelu}) EXPECT_EQ(parse_hidden_activation(to_string(a)), a);
  for (auto a : {OutputActivation::kIdentity, OutputActivation::kTanh, OutputActivation::kSigmoid}) {
    EXPECT_EQ(parse_output_activation(to_string(a)), a);
  }
  EXPECT_THROW(parse_output_activation("softmax"), InvalidArgument);
}

}  // namespace
}  // namespace effgan::nn
