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

// Minimal feed-forward network substrate: a flat parameter layout, forward
// and backward passes over row-major batches, and the Adam optimizer.
//
// Parameters for an MLP with layer sizes (s0, s1, ..., sL) are stored layer
// by layer; each layer contributes its s_{l-1} x s_l weight block in
// row-major order followed by its s_l biases. A layer computes
// a_l = act(a_{l-1} * W_l + b_l), with the hidden activation on every layer
// except the last, which uses the output activation.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace effgan::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class HiddenActivation { kRelu, kLeakyRelu };
enum class OutputActivation { kIdentity, kTanh, kSigmoid };

std::string to_string(HiddenActivation a);
std::string to_string(OutputActivation a);
HiddenActivation parse_hidden_activation(const std::string& name);
OutputActivation parse_output_activation(const std::string& name);

struct MlpSpec {
  std::vector<int> layer_sizes;
  HiddenActivation hidden = HiddenActivation::kLeakyRelu;
  double leaky_slope = 0.2;
  OutputActivation output = OutputActivation::kIdentity;

  // Throws InvalidArgument when fewer than two layers are given, a size is
  // not positive, or the leaky slope is outside (0, 1).
  void validate() const;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t num_affine_layers() const { return layer_sizes.size() - 1; }

  // Sum over layers of fan_in * fan_out + fan_out.
  std::size_t param_count() const;

  bool operator==(const MlpSpec&) const = default;
};

struct ParamVector {
  Vector values;

  static ParamVector zeros(std::size_t n) { return {Vector::Zero(static_cast<Eigen::Index>(n))}; }

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  bool all_finite() const { return values.allFinite(); }

  // Exact, bitwise-equal comparison.
  bool operator==(const ParamVector& other) const {
    return values.size() == other.values.size() && values == other.values;
  }
};

struct AdamHyper {
  double learning_rate = 0.001;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double epsilon = 1e-8;

  // Zero learning rate is accepted and freezes the parameters.
  void validate() const;
};

struct AdamState {
  Vector first_moment;
  Vector second_moment;
  std::uint64_t step_count = 0;

  static AdamState zeros(std::size_t n);

  bool operator==(const AdamState& other) const {
    return step_count == other.step_count && first_moment == other.first_moment &&
           second_moment == other.second_moment;
  }
};

// Parameters drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)] per
// layer; biases are zero. Same (spec, seed) gives identical output.
ParamVector init_mlp(const MlpSpec& spec, std::uint64_t seed);

// Layer activations recorded during a forward pass, reused by backward.
class ForwardTape {
 public:
  const Matrix& output() const { return activations_.back(); }
  const Matrix& input() const { return activations_.front(); }

 private:
  friend ForwardTape record_forward(const MlpSpec&, const ParamVector&, const Matrix&);
  friend struct BackwardAccess;
  std::vector<Matrix> activations_;
};

struct Gradients {
  ParamVector params;
  Matrix input;  // empty unless requested
};

ForwardTape record_forward(const MlpSpec& spec, const ParamVector& params, const Matrix& batch);

// Backpropagates upstream dLoss/dOutput through a recorded pass. When
// with_input_grad is set the gradient with respect to the batch is also
// returned.
Gradients backward(const MlpSpec& spec, const ParamVector& params, const ForwardTape& tape,
                   const Matrix& upstream, bool with_input_grad);

Matrix forward(const MlpSpec& spec, const ParamVector& params, const Matrix& batch);

// dLoss/dParams for a batch, given upstream dLoss/dOutput.
ParamVector backward(const MlpSpec& spec, const ParamVector& params, const Matrix& batch,
                     const Matrix& upstream);

// One bias-corrected Adam step. Throws DivergenceError on non-finite
// gradients; throws ShapeError when shapes disagree.
std::pair<ParamVector, AdamState> adam_step(const ParamVector& params, const ParamVector& grads,
                                            const AdamState& state, const AdamHyper& hyper);

// In-place form of adam_step used inside training loops.
void adam_update(ParamVector& params, const ParamVector& grads, AdamState& state,
                 const AdamHyper& hyper);

}  // namespace effgan::nn
