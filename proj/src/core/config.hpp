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

// Experiment configuration. The on-disk form is a flat key/value text file:
//
//   # comment
//   local_epochs = 10
//   gen_hidden   = 64,64
//
// One `key = value` per line; blank lines and `#` comments are ignored.
// Values are typed by key (integer, real, boolean, enum name, or a comma
// separated integer list). Later assignments override earlier ones, which is
// how command-line flags take precedence over file values.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "federation.hpp"
#include "gan.hpp"
#include "nn.hpp"

namespace effgan::experiment {

enum class DatasetKind { kRing8, kGrid25, kIdx };
enum class Method { kFedGan, kEffGan, kLocalEnsemble, kCentral };
enum class FineTuneStart { kLast, kBest };

std::string to_string(DatasetKind d);
std::string to_string(Method m);
std::string to_string(FineTuneStart s);

struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::kRing8;
  std::string idx_images;
  std::string idx_labels;
  std::string idx_eval_images;  // optional held-out pair
  std::string idx_eval_labels;

  int num_clients = 20;
  double client_fraction = 0.5;
  int local_epochs = 1;
  int finetune_epochs = -1;  // negative: same as local_epochs
  int rounds = 60;
  int ensemble_size = 20;
  int classes_per_client = 2;
  int samples_per_client = 500;
  int samples_per_mode = 0;  // synthetic training pool; 0 picks enough to avoid reuse

  int latent_dim = 8;
  std::vector<int> gen_hidden{64, 64};
  std::vector<int> disc_hidden{64, 64};
  nn::HiddenActivation hidden_activation = nn::HiddenActivation::kLeakyRelu;
  double leaky_slope = 0.2;
  std::optional<nn::OutputActivation> gen_output;  // unset: identity for mixtures, tanh for idx
  int batch_size = 64;
  nn::AdamHyper adam;
  gan::GenLoss gen_loss = gan::GenLoss::kNonSaturating;
  int disc_steps = 1;
  fed::Aggregation aggregation = fed::Aggregation::kUniformFedAvg;

  std::uint64_t seed = 0;
  Method method = Method::kEffGan;
  int eval_every = 1;
  int eval_samples = 10000;
  int eval_real_samples = 10000;  // held-out real rows for mixtures
  FineTuneStart finetune_from = FineTuneStart::kLast;
  int local_only_epochs = 0;  // 0: same as the fine-tune epochs
  double coverage_radius = 3.0;
  int coverage_min_count = 0;  // 0: ceil(0.5% of eval_samples)
  int pca_components = -1;     // -1: identity for mixtures, 32 for idx; 0: identity
  int workers = 1;
  bool record_wall_time = false;
  std::string output_dir = "runs/latest";

  // Assigns one key (canonical name or short alias). Throws ConfigError
  // naming the key for unknown keys and unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  // Every key with its current value, in canonical order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  std::string to_text() const;

  // Re-checks the module invariants. Throws ConfigError naming the key.
  void validate() const;

  int data_dim() const;  // 2 for mixtures; needs loading for idx
  int effective_finetune_epochs() const { return finetune_epochs < 0 ? local_epochs : finetune_epochs; }
  int effective_local_only_epochs() const {
    return local_only_epochs > 0 ? local_only_epochs : effective_finetune_epochs();
  }
  nn::OutputActivation effective_gen_output() const;
  int effective_pca_components() const;

  nn::MlpSpec gen_spec(int data_dim) const;
  nn::MlpSpec disc_spec(int data_dim) const;
  gan::GanHyper gan_hyper() const;
  fed::FederationConfig federation_config() const;
};

// Canonical key for a name or alias; throws ConfigError for unknown names.
std::string canonical_key(const std::string& key);
std::vector<std::string> config_keys();

// Applies every assignment in `text` on top of `base`.
ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

}  // namespace effgan::experiment
