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

// Federated averaging over GAN pairs (FedGAN): every round a fraction of the
// clients trains copies of the global generator and discriminator locally,
// and the server averages both parameter sets.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "data.hpp"
#include "gan.hpp"
#include "metrics.hpp"
#include "rng.hpp"

namespace effgan::fed {

enum class Aggregation { kUniformFedAvg, kKlWeighted };

std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& name);

struct FederationConfig {
  int num_clients = 20;
  double client_fraction = 1.0;
  int local_epochs = 1;
  int rounds = 1;
  Aggregation aggregation = Aggregation::kUniformFedAvg;
  gan::GanHyper gan_hyper;
  int eval_every = 1;
  std::uint64_t seed = 0;
  int workers = 1;  // participants trained concurrently
  bool record_wall_time = false;

  void validate() const;
  std::size_t participants_per_round() const;
};

struct RoundReport {
  int round = 0;
  std::vector<int> participant_ids;
  double mean_d_loss = 0.0;
  double mean_g_loss = 0.0;
  double drift = 0.0;  // mean pairwise distance of post-training generators
  std::uint64_t bytes_this_round = 0;
};

struct ServerState {
  gan::GanPair global_pair;
  int round = 0;
  std::vector<metrics::MetricsRecord> history;
  std::vector<RoundReport> reports;
  std::uint64_t bytes_sent = 0;

  // Best global pair by evaluation FID over all evaluated rounds.
  std::optional<gan::GanPair> best_pair;
  double best_fid = std::numeric_limits<double>::infinity();
  int best_round = 0;
};

// ceil(c * K), computed robustly against floating point noise in c * K.
std::size_t participant_count(int num_clients, double client_fraction);

// ceil(c * K) distinct ids drawn uniformly without replacement, sorted.
std::vector<int> sample_clients(int num_clients, double client_fraction, RngStream& rng);

// Coordinatewise weighted mean, accumulated in list order.
nn::ParamVector fedavg(const std::vector<nn::ParamVector>& params, const std::vector<double>& weights);

// Softmax of the negated scores, shifted by the minimum score first.
std::vector<double> kl_weights(const std::vector<double>& scores);

// KL divergence of the client's empirical label distribution from uniform
// over num_classes; empty classes contribute nothing.
double kl_score(const data::ClientDataset& client, int num_classes);

// Bytes to ship one copy of a network's parameters as 64-bit floats.
std::uint64_t param_bytes(const nn::ParamVector& params);

// Runs one communication round. kl_scores holds one score per client and is
// only read for kl_weighted aggregation. Participant streams derive from
// (seed, round, client id), so results do not depend on `workers`.
std::pair<ServerState, RoundReport> run_round(const ServerState& server, const std::vector<data::ClientDataset>& clients,
                                              const FederationConfig& config, const std::vector<double>& kl_scores);

struct EvalOutcome {
  double fid = 0.0;
  double mode_coverage = 0.0;
  std::optional<double> drift;  // unset: the round's participant drift
  // Communication charged on top of the federation, e.g. a fine-tune exchange.
  std::uint64_t extra_bytes = 0;
};

// Called after aggregation on evaluation rounds with the new global pair.
using EvalHook = std::function<EvalOutcome(const gan::GanPair& global, const ServerState& server, const RoundReport& report)>;

// Executes config.rounds rounds from `initial`. The hook runs every
// eval_every rounds and on the final round. The best-FID global pair is kept.
ServerState run_federation(const FederationConfig& config, const gan::GanPair& initial,
                           const std::vector<data::ClientDataset>& clients, const EvalHook& eval_hook);

// Trains `jobs` independent tasks on up to `workers` threads. Task i must
// only write slot i of its outputs. The first exception is rethrown.
void parallel_for(std::size_t jobs, int workers, const std::function<void(std::size_t)>& task);

}  // namespace effgan::fed
