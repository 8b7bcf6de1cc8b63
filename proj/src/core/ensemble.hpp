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

// Ensembles of client generators. After federated training, the global pair
// is fine-tuned on M randomly chosen clients and the server samples by first
// picking a member uniformly and then drawing from that generator.
//
// On disk an ensemble is a directory holding `manifest.json` and one
// `member_NNN.bin` per member. Each blob is the raw generator parameter
// vector as consecutive IEEE-754 binary64 values in little-endian byte
// order, in the nn layout (per layer: row-major weights then biases).

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "data.hpp"
#include "gan.hpp"
#include "rng.hpp"

namespace effgan::ensemble {

using nn::Matrix;

struct Member {
  int client_id = 0;
  nn::ParamVector gen_params;

  bool operator==(const Member&) const = default;
};

struct EnsembleModel {
  nn::MlpSpec gen_spec;
  std::vector<Member> members;
  int latent_dim = 0;

  void validate() const;
  std::size_t size() const { return members.size(); }
  int data_dim() const { return gen_spec.output_dim(); }
};

// M distinct client ids drawn uniformly without replacement, in draw order.
std::vector<int> choose_clients(int num_clients, int count, RngStream& rng);

// Fine-tunes copies of `global` (fresh optimizer state) on M clients chosen
// with `rng` and keeps their generators. Per-member training streams are
// drawn from `rng` after the selection.
EnsembleModel fine_tune(const gan::GanPair& global, const std::vector<data::ClientDataset>& clients, int ensemble_size,
                        int epochs, const gan::GanHyper& hyper, RngStream& rng, int workers = 1);

// Draws count x latent noise rows first, then one member index per row (no
// draw when there is a single member), and maps each row through its member.
// With identical members the output equals sample_generator on the same
// stream.
Matrix sample_ensemble(const EnsembleModel& ensemble, std::size_t count, RngStream& rng);

// Same as sample_ensemble, also returning the chosen member per row.
Matrix sample_ensemble(const EnsembleModel& ensemble, std::size_t count, RngStream& rng,
                       std::vector<std::size_t>& chosen);

// Baseline without federation: M chosen clients each train a freshly
// initialized pair (distinct seeds) for `epochs` epochs.
EnsembleModel build_local_only_ensemble(const std::vector<data::ClientDataset>& clients, int ensemble_size, int epochs,
                                        const gan::GanHyper& hyper, const nn::MlpSpec& gen_spec,
                                        const nn::MlpSpec& disc_spec, RngStream& rng, int workers = 1);

// Writes the manifest and member blobs into `dir` (created if missing).
// Each file is written to a temporary name and renamed into place.
void save_ensemble(const EnsembleModel& ensemble, const std::filesystem::path& dir);

// Throws IoError for missing files and InvalidArgument for malformed ones.
EnsembleModel load_ensemble(const std::filesystem::path& dir);

}  // namespace effgan::ensemble
