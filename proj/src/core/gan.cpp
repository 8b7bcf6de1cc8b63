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

#include "gan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace effgan::gan {

namespace {

double safe_log(double v) { return std::log(std::max(v, kLogClamp)); }

void require_finite(double loss, const char* what) {
  if (!std::isfinite(loss)) throw DivergenceError(std::string(what) + " loss is not finite");
}

}  // namespace

std::string to_string(GenLoss loss) {
  return loss == GenLoss::kSaturating ? "saturating" : "non_saturating";
}

GenLoss parse_gen_loss(const std::string& name) {
  if (name == "saturating") return GenLoss::kSaturating;
  if (name == "non_saturating") return GenLoss::kNonSaturating;
  throw InvalidArgument("unknown generator loss '" + name + "'");
}

void GanHyper::validate() const {
  if (latent_dim < 1) throw InvalidArgument("latent_dim must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (disc_steps < 1) throw InvalidArgument("disc_steps must be >= 1");
  adam.validate();
}

GanPair GanPair::create(const nn::MlpSpec& gen_spec, const nn::MlpSpec& disc_spec, std::uint64_t seed) {
  GanPair pair;
  pair.gen_spec = gen_spec;
  pair.disc_spec = disc_spec;
  pair.gen_params = nn::init_mlp(gen_spec, derive_seed(seed, StreamTag::kInit, 0));
  pair.disc_params = nn::init_mlp(disc_spec, derive_seed(seed, StreamTag::kInit, 1));
  pair.reset_optimizers();
  pair.validate();
  return pair;
}

void GanPair::reset_optimizers() {
  gen_opt = nn::AdamState::zeros(gen_params.size());
  disc_opt = nn::AdamState::zeros(disc_params.size());
}

void GanPair::validate() const {
  gen_spec.validate();
  disc_spec.validate();
  if (gen_spec.output_dim() != disc_spec.input_dim()) {
    throw InvalidArgument("generator output dimension " + std::to_string(gen_spec.output_dim()) +
                          " differs from discriminator input dimension " +
                          std::to_string(disc_spec.input_dim()));
  }
  if (disc_spec.output_dim() != 1 || disc_spec.output != nn::OutputActivation::kSigmoid) {
    throw InvalidArgument("discriminator must end in a single sigmoid unit");
  }
  if (gen_params.size() != gen_spec.param_count() || disc_params.size() != disc_spec.param_count()) {
    throw ShapeError("GAN parameter vectors do not match their specs");
  }
}

Matrix sample_noise(int latent_dim, std::size_t count, RngStream& rng) {
  Matrix z(static_cast<Eigen::Index>(count), latent_dim);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  return z;
}

double discriminator_update(GanPair& pair, const Matrix& real_batch, const GanHyper& hyper, RngStream& rng) {
  if (real_batch.rows() == 0) throw InvalidArgument("discriminator step needs a nonempty real batch");
  if (real_batch.cols() != pair.disc_spec.input_dim()) {
    throw ShapeError("real batch width " + std::to_string(real_batch.cols()) +
                     " differs from data dimension " + std::to_string(pair.disc_spec.input_dim()));
  }
  const Eigen::Index n = real_batch.rows();
  const Matrix noise = sample_noise(hyper.latent_dim, static_cast<std::size_t>(n), rng);
  const Matrix fake = nn::forward(pair.gen_spec, pair.gen_params, noise);

  // Real rows first, generated rows second; one pass through D.
  Matrix stacked(2 * n, real_batch.cols());
  stacked.topRows(n) = real_batch;
  stacked.bottomRows(n) = fake;
  const nn::ForwardTape tape = nn::record_forward(pair.disc_spec, pair.disc_params, stacked);
  const Matrix& prob = tape.output();

  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  Matrix upstream(2 * n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p_real = prob(i, 0);
    const double p_fake = prob(n + i, 0);
    loss -= inv_n * (safe_log(p_real) + safe_log(1.0 - p_fake));
    upstream(i, 0) = -inv_n / std::max(p_real, kLogClamp);
    upstream(n + i, 0) = inv_n / std::max(1.0 - p_fake, kLogClamp);
  }
  require_finite(loss, "discriminator");
  const nn::Gradients grads = nn::backward(pair.disc_spec, pair.disc_params, tape, upstream, false);
  nn::adam_update(pair.disc_params, grads.params, pair.disc_opt, hyper.adam);
  return loss;
}

double generator_update(GanPair& pair, const GanHyper& hyper, RngStream& rng, std::size_t count) {
  const Matrix noise = sample_noise(hyper.latent_dim, count, rng);
  const nn::ForwardTape gen_tape = nn::record_forward(pair.gen_spec, pair.gen_params, noise);
  const nn::ForwardTape disc_tape = nn::record_forward(pair.disc_spec, pair.disc_params, gen_tape.output());
  const Matrix& prob = disc_tape.output();

  const double inv_n = 1.0 / static_cast<double>(count);
  double loss = 0.0;
  Matrix upstream(prob.rows(), 1);
  for (Eigen::Index i = 0; i < prob.rows(); ++i) {
    const double p = prob(i, 0);
    if (hyper.gen_loss == GenLoss::kNonSaturating) {
      loss -= inv_n * safe_log(p);
      upstream(i, 0) = -inv_n / std::max(p, kLogClamp);
    } else {
      loss += inv_n * safe_log(1.0 - p);
      upstream(i, 0) = -inv_n / std::max(1.0 - p, kLogClamp);
    }
  }
  require_finite(loss, "generator");
  // Gradient flows through the frozen discriminator into the generator.
  const nn::Gradients disc_grads = nn::backward(pair.disc_spec, pair.disc_params, disc_tape, upstream, true);
  const nn::Gradients gen_grads =
      nn::backward(pair.gen_spec, pair.gen_params, gen_tape, disc_grads.input, false);
  nn::adam_update(pair.gen_params, gen_grads.params, pair.gen_opt, hyper.adam);
  return loss;
}

std::pair<GanPair, double> discriminator_step(const GanPair& pair, const Matrix& real_batch,
                                              const GanHyper& hyper, RngStream& rng) {
  std::pair<GanPair, double> out{pair, 0.0};
  out.second = discriminator_update(out.first, real_batch, hyper, rng);
  return out;
}

std::pair<GanPair, double> generator_step(const GanPair& pair, const GanHyper& hyper, RngStream& rng) {
  std::pair<GanPair, double> out{pair, 0.0};
  out.second = generator_update(out.first, hyper, rng, static_cast<std::size_t>(hyper.batch_size));
  return out;
}

GanPair train_local(const GanPair& pair, const Matrix& data, int epochs, const GanHyper& hyper,
                    RngStream& rng, LocalTrainingStats* stats) {
  if (data.rows() == 0) throw InvalidArgument("train_local needs a nonempty dataset");
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  GanPair current = pair;
  if (stats) *stats = {};
  if (epochs == 0) return current;

  const auto rows = static_cast<std::size_t>(data.rows());
  const auto batch = static_cast<std::size_t>(hyper.batch_size);
  std::vector<Eigen::Index> order(rows);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Matrix minibatch;
  double d_sum = 0.0;
  double g_sum = 0.0;
  std::size_t g_steps = 0;
  std::size_t d_steps = 0;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < rows; start += batch, ++batch_index) {
      const std::size_t len = std::min(batch, rows - start);
      minibatch.resize(static_cast<Eigen::Index>(len), data.cols());
      for (std::size_t i = 0; i < len; ++i) {
        minibatch.row(static_cast<Eigen::Index>(i)) = data.row(order[start + i]);
      }
      try {
        for (int k = 0; k < hyper.disc_steps; ++k) {
          d_sum += discriminator_update(current, minibatch, hyper, rng);
          ++d_steps;
        }
        g_sum += generator_update(current, hyper, rng, len);
        ++g_steps;
      } catch (const DivergenceError& e) {
        std::ostringstream os;
        os << "diverged at epoch " << epoch << ", batch " << batch_index << ": " << e.what();
        throw DivergenceError(os.str());
      }
    }
  }
  if (stats) {
    stats->mean_d_loss = d_sum / static_cast<double>(d_steps);
    stats->mean_g_loss = g_sum / static_cast<double>(g_steps);
    stats->generator_steps = g_steps;
  }
  return current;
}

Matrix sample_generator(const nn::MlpSpec& gen_spec, const nn::ParamVector& gen_params, std::size_t count,
                        int latent_dim, RngStream& rng) {
  if (count == 0) throw InvalidArgument("sample_generator: count must be >= 1");
  if (latent_dim != gen_spec.input_dim()) {
    throw ShapeError("latent_dim " + std::to_string(latent_dim) + " differs from generator input size " +
                     std::to_string(gen_spec.input_dim()));
  }
  return nn::forward(gen_spec, gen_params, sample_noise(latent_dim, count, rng));
}

}  // namespace effgan::gan
