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

// GAN training steps for the two-player minimax game
//
//   min_G max_D  E_x[log D(x)] + E_z[log(1 - D(G(z)))]
//
// The discriminator ascends the objective, implemented as descent on its
// negation. The generator either descends E_z[log(1 - D(G(z)))] (saturating)
// or -E_z[log D(G(z))] (non-saturating).

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>

#include "nn.hpp"
#include "rng.hpp"

namespace effgan::gan {

using nn::Matrix;

// Clamp applied to every log argument.
inline constexpr double kLogClamp = 1e-7;

enum class GenLoss { kSaturating, kNonSaturating };

std::string to_string(GenLoss loss);
GenLoss parse_gen_loss(const std::string& name);

struct GanHyper {
  int latent_dim = 8;
  int batch_size = 64;
  nn::AdamHyper adam;
  GenLoss gen_loss = GenLoss::kNonSaturating;
  int disc_steps = 1;  // discriminator steps per generator step

  void validate() const;
};

struct GanPair {
  nn::MlpSpec gen_spec;
  nn::MlpSpec disc_spec;
  nn::ParamVector gen_params;
  nn::ParamVector disc_params;
  nn::AdamState gen_opt;
  nn::AdamState disc_opt;

  // Fresh pair with both networks initialized from seeds derived from
  // `seed` and zeroed optimizer state.
  static GanPair create(const nn::MlpSpec& gen_spec, const nn::MlpSpec& disc_spec, std::uint64_t seed);

  void reset_optimizers();

  // Generator output feeds the discriminator; the discriminator emits one
  // sigmoid probability.
  void validate() const;

  int data_dim() const { return gen_spec.output_dim(); }

  bool operator==(const GanPair&) const = default;
};

// count x latent_dim standard normal draws, row-major order.
Matrix sample_noise(int latent_dim, std::size_t count, RngStream& rng);

// One discriminator Adam step on a real minibatch. Returns the updated pair
// and the negated-objective loss; generator state is untouched.
std::pair<GanPair, double> discriminator_step(const GanPair& pair, const Matrix& real_batch,
                                              const GanHyper& hyper, RngStream& rng);

// One generator Adam step on hyper.batch_size fresh noise draws.
std::pair<GanPair, double> generator_step(const GanPair& pair, const GanHyper& hyper, RngStream& rng);

// In-place variants used by the training loops. `count` is the number of
// noise draws for the generator step.
double discriminator_update(GanPair& pair, const Matrix& real_batch, const GanHyper& hyper, RngStream& rng);
double generator_update(GanPair& pair, const GanHyper& hyper, RngStream& rng, std::size_t count);

struct LocalTrainingStats {
  double mean_d_loss = 0.0;
  double mean_g_loss = 0.0;
  std::size_t generator_steps = 0;
};

// Runs `epochs` passes over `data`: each epoch shuffles the rows with `rng`
// and walks ceil(N / batch_size) minibatches (last one partial), taking
// hyper.disc_steps discriminator steps then one generator step per batch.
// Divergence is rethrown with the epoch and batch index.
GanPair train_local(const GanPair& pair, const Matrix& data, int epochs, const GanHyper& hyper,
                    RngStream& rng, LocalTrainingStats* stats = nullptr);

// Forward pass of `count` fresh noise rows through the generator.
Matrix sample_generator(const nn::MlpSpec& gen_spec, const nn::ParamVector& gen_params, std::size_t count,
                        int latent_dim, RngStream& rng);

}  // namespace effgan::gan
