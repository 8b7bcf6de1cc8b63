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

#include "nn.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "errors.hpp"

namespace effgan::nn {

namespace {

using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const Eigen::RowVectorXd>;
using RowMap = Eigen::Map<Eigen::RowVectorXd>;

struct LayerView {
  Eigen::Index fan_in;
  Eigen::Index fan_out;
  std::size_t weight_offset;
  std::size_t bias_offset;
};

std::vector<LayerView> layout(const MlpSpec& spec) {
  std::vector<LayerView> layers;
  layers.reserve(spec.num_affine_layers());
  std::size_t offset = 0;
  for (std::size_t l = 1; l < spec.layer_sizes.size(); ++l) {
    const Eigen::Index in = spec.layer_sizes[l - 1];
    const Eigen::Index out = spec.layer_sizes[l];
    layers.push_back({in, out, offset, offset + static_cast<std::size_t>(in * out)});
    offset += static_cast<std::size_t>(in * out + out);
  }
  return layers;
}

void apply_hidden(const MlpSpec& spec, Matrix& z) {
  if (spec.hidden == HiddenActivation::kRelu) {
    z = z.cwiseMax(0.0);
  } else {
    const double slope = spec.leaky_slope;
    z = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  }
}

void apply_output(const MlpSpec& spec, Matrix& z) {
  switch (spec.output) {
    case OutputActivation::kIdentity:
      break;
    case OutputActivation::kTanh:
      z = z.array().tanh().matrix();
      break;
    case OutputActivation::kSigmoid:
      z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      break;
  }
}

// Multiplies delta in place by the activation derivative, written in terms
// of the activation value.
void hidden_derivative(const MlpSpec& spec, const Matrix& activation, Matrix& delta) {
  const double slope = spec.hidden == HiddenActivation::kRelu ? 0.0 : spec.leaky_slope;
  delta = delta.binaryExpr(activation, [slope](double d, double a) { return a > 0.0 ? d : slope * d; });
}

void output_derivative(const MlpSpec& spec, const Matrix& activation, Matrix& delta) {
  switch (spec.output) {
    case OutputActivation::kIdentity:
      break;
    case OutputActivation::kTanh:
      delta = delta.cwiseProduct((1.0 - activation.array().square()).matrix());
      break;
    case OutputActivation::kSigmoid:
      delta = delta.cwiseProduct((activation.array() * (1.0 - activation.array())).matrix());
      break;
  }
}

void check_shapes(const MlpSpec& spec, const ParamVector& params) {
  if (params.size() != spec.param_count()) {
    std::ostringstream os;
    os << "parameter vector has " << params.size() << " entries, spec layout needs "
       << spec.param_count();
    throw ShapeError(os.str());
  }
}

}  // namespace

std::string to_string(HiddenActivation a) {
  return a == HiddenActivation::kRelu ? "relu" : "leaky_relu";
}

std::string to_string(OutputActivation a) {
  switch (a) {
    case OutputActivation::kIdentity:
      return "identity";
    case OutputActivation::kTanh:
      return "tanh";
    case OutputActivation::kSigmoid:
      return "sigmoid";
  }
  return "identity";
}

HiddenActivation parse_hidden_activation(const std::string& name) {
  if (name == "relu") return HiddenActivation::kRelu;
  if (name == "leaky_relu") return HiddenActivation::kLeakyRelu;
  throw InvalidArgument("unknown hidden activation '" + name + "'");
}

OutputActivation parse_output_activation(const std::string& name) {
  if (name == "identity") return OutputActivation::kIdentity;
  if (name == "tanh") return OutputActivation::kTanh;
  if (name == "sigmoid") return OutputActivation::kSigmoid;
  throw InvalidArgument("unknown output activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw InvalidArgument("MLP needs at least 2 layer sizes");
  for (int s : layer_sizes) {
    if (s < 1) throw InvalidArgument("MLP layer sizes must be >= 1, got " + std::to_string(s));
  }
  if (hidden == HiddenActivation::kLeakyRelu && !(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    throw InvalidArgument("leaky_relu slope must lie in (0, 1)");
  }
}

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    n += static_cast<std::size_t>(layer_sizes[l - 1]) * layer_sizes[l] + layer_sizes[l];
  }
  return n;
}

void AdamHyper::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("Adam learning rate must be finite and >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("Adam beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("Adam beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("Adam epsilon must be positive");
}

AdamState AdamState::zeros(std::size_t n) {
  const auto size = static_cast<Eigen::Index>(n);
  return {Vector::Zero(size), Vector::Zero(size), 0};
}

ParamVector init_mlp(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector params = ParamVector::zeros(spec.param_count());
  std::mt19937_64 engine(seed);
  for (const auto& layer : layout(spec)) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.fan_in));
    std::uniform_real_distribution<double> dist(-scale, scale);
    const auto count = static_cast<std::size_t>(layer.fan_in * layer.fan_out);
    for (std::size_t i = 0; i < count; ++i) {
      params.values[static_cast<Eigen::Index>(layer.weight_offset + i)] = dist(engine);
    }
  }
  return params;
}

ForwardTape record_forward(const MlpSpec& spec, const ParamVector& params, const Matrix& batch) {
  check_shapes(spec, params);
  if (batch.cols() != spec.input_dim()) {
    std::ostringstream os;
    os << "batch has " << batch.cols() << " columns, network expects input dimension "
       << spec.input_dim();
    throw ShapeError(os.str());
  }
  const auto layers = layout(spec);
  ForwardTape tape;
  tape.activations_.reserve(layers.size() + 1);
  tape.activations_.push_back(batch);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    ConstMatrixMap weights(params.values.data() + layer.weight_offset, layer.fan_in, layer.fan_out);
    ConstRowMap bias(params.values.data() + layer.bias_offset, layer.fan_out);
    Matrix z = tape.activations_.back() * weights;
    z.rowwise() += bias;
    if (l + 1 < layers.size()) {
      apply_hidden(spec, z);
    } else {
      apply_output(spec, z);
    }
    tape.activations_.push_back(std::move(z));
  }
  return tape;
}

struct BackwardAccess {
  static const std::vector<Matrix>& activations(const ForwardTape& t) { return t.activations_; }
};

Gradients backward(const MlpSpec& spec, const ParamVector& params, const ForwardTape& tape,
                   const Matrix& upstream, bool with_input_grad) {
  check_shapes(spec, params);
  const auto& acts = BackwardAccess::activations(tape);
  const auto layers = layout(spec);
  if (acts.size() != layers.size() + 1) throw ShapeError("forward tape does not match network depth");
  if (upstream.rows() != tape.output().rows() || upstream.cols() != tape.output().cols()) {
    std::ostringstream os;
    os << "upstream gradient is " << upstream.rows() << "x" << upstream.cols() << ", output is "
       << tape.output().rows() << "x" << tape.output().cols();
    throw ShapeError(os.str());
  }

  Gradients grads{ParamVector::zeros(params.size()), Matrix()};
  Matrix delta = upstream;
  output_derivative(spec, acts.back(), delta);
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const Matrix& input = acts[l];
    MatrixMap grad_w(grads.params.values.data() + layer.weight_offset, layer.fan_in, layer.fan_out);
    RowMap grad_b(grads.params.values.data() + layer.bias_offset, layer.fan_out);
    grad_w.noalias() = input.transpose() * delta;
    grad_b = delta.colwise().sum();
    if (l == 0 && !with_input_grad) break;
    ConstMatrixMap weights(params.values.data() + layer.weight_offset, layer.fan_in, layer.fan_out);
    Matrix previous = delta * weights.transpose();
    if (l == 0) {
      grads.input = std::move(previous);
    } else {
      hidden_derivative(spec, input, previous);
      delta = std::move(previous);
    }
  }
  return grads;
}

Matrix forward(const MlpSpec& spec, const ParamVector& params, const Matrix& batch) {
  return record_forward(spec, params, batch).output();
}

ParamVector backward(const MlpSpec& spec, const ParamVector& params, const Matrix& batch,
                     const Matrix& upstream) {
  const ForwardTape tape = record_forward(spec, params, batch);
  return backward(spec, params, tape, upstream, false).params;
}

void adam_update(ParamVector& params, const ParamVector& grads, AdamState& state,
                 const AdamHyper& hyper) {
  if (grads.size() != params.size() || state.first_moment.size() != params.values.size() ||
      state.second_moment.size() != params.values.size()) {
    throw ShapeError("Adam: parameter, gradient and moment shapes differ");
  }
  if (!grads.all_finite()) throw DivergenceError("Adam: non-finite gradient entries");

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  state.first_moment = hyper.beta1 * state.first_moment + (1.0 - hyper.beta1) * grads.values;
  state.second_moment =
      hyper.beta2 * state.second_moment + (1.0 - hyper.beta2) * grads.values.cwiseAbs2();
  params.values.array() -= hyper.learning_rate * (state.first_moment.array() / correction1) /
                           ((state.second_moment.array() / correction2).sqrt() + hyper.epsilon);
}

std::pair<ParamVector, AdamState> adam_step(const ParamVector& params, const ParamVector& grads,
                                            const AdamState& state, const AdamHyper& hyper) {
  std::pair<ParamVector, AdamState> next{params, state};
  adam_update(next.first, grads, next.second, hyper);
  return next;
}

}  // namespace effgan::nn
