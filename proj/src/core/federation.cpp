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

#include "federation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "errors.hpp"

namespace effgan::fed {

std::string to_string(Aggregation a) {
  return a == Aggregation::kUniformFedAvg ? "uniform_fedavg" : "kl_weighted";
}

Aggregation parse_aggregation(const std::string& name) {
  if (name == "uniform_fedavg") return Aggregation::kUniformFedAvg;
  if (name == "kl_weighted") return Aggregation::kKlWeighted;
  throw InvalidArgument("unknown aggregation '" + name + "'");
}

void FederationConfig::validate() const {
  if (num_clients < 1) throw InvalidArgument("num_clients must be >= 1");
  if (!(client_fraction > 0.0 && client_fraction <= 1.0)) {
    throw InvalidArgument("client_fraction must lie in (0, 1]");
  }
  if (local_epochs < 1) throw InvalidArgument("local_epochs must be >= 1");
  if (rounds < 1) throw InvalidArgument("rounds must be >= 1");
  if (eval_every < 1) throw InvalidArgument("eval_every must be >= 1");
  if (workers < 1) throw InvalidArgument("workers must be >= 1");
  gan_hyper.validate();
}

std::size_t FederationConfig::participants_per_round() const {
  return participant_count(num_clients, client_fraction);
}

std::size_t participant_count(int num_clients, double client_fraction) {
  const double exact = client_fraction * num_clients;
  auto count = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::clamp<std::size_t>(count, 1, static_cast<std::size_t>(std::max(num_clients, 1)));
}

std::vector<int> sample_clients(int num_clients, double client_fraction, RngStream& rng) {
  if (num_clients < 1) throw InvalidArgument("sample_clients needs at least one client");
  const std::size_t count = participant_count(num_clients, client_fraction);
  // Partial Fisher-Yates: the first `count` slots are a uniform draw.
  std::vector<int> ids(static_cast<std::size_t>(num_clients));
  std::iota(ids.begin(), ids.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.index(ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

nn::ParamVector fedavg(const std::vector<nn::ParamVector>& params, const std::vector<double>& weights) {
  if (params.empty()) throw InvalidArgument("fedavg needs at least one parameter vector");
  if (params.size() != weights.size()) throw ShapeError("fedavg: one weight per parameter vector required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("fedavg: weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("fedavg: weights must sum to 1");
  // Accumulate offsets from the first vector: identical inputs then average
  // to exactly themselves.
  const nn::ParamVector& anchor = params.front();
  nn::ParamVector out = anchor;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != anchor.size()) {
      throw ShapeError("fedavg: vector " + std::to_string(i) + " has length " + std::to_string(params[i].size()) +
                       ", expected " + std::to_string(anchor.size()));
    }
    if (i > 0) out.values += (weights[i] / total) * (params[i].values - anchor.values);
  }
  return out;
}

std::vector<double> kl_weights(const std::vector<double>& scores) {
  if (scores.empty()) return {};
  for (double s : scores) {
    if (!std::isfinite(s)) throw InvalidArgument("kl_weights: scores must be finite");
  }
  const double shift = *std::min_element(scores.begin(), scores.end());
  std::vector<double> weights(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    weights[i] = std::exp(-(scores[i] - shift));
    total += weights[i];
  }
  for (double& w : weights) w /= total;
  return weights;
}

double kl_score(const data::ClientDataset& client, int num_classes) {
  if (client.data.size() == 0) throw InvalidArgument("kl_score: client has no samples");
  if (num_classes < 1) throw InvalidArgument("kl_score: num_classes must be >= 1");
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int label : client.data.labels) {
    if (label < 0 || label >= num_classes) throw InvalidArgument("kl_score: label outside class range");
    ++counts[static_cast<std::size_t>(label)];
  }
  const double n = static_cast<double>(client.data.size());
  const double uniform = 1.0 / num_classes;
  double kl = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    kl += p * std::log(p / uniform);
  }
  return kl;
}

std::uint64_t param_bytes(const nn::ParamVector& params) {
  return static_cast<std::uint64_t>(params.size()) * sizeof(double);
}

void parallel_for(std::size_t jobs, int workers, const std::function<void(std::size_t)>& task) {
  const auto threads = std::min<std::size_t>(jobs, static_cast<std::size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::pair<ServerState, RoundReport> run_round(const ServerState& server, const std::vector<data::ClientDataset>& clients,
                                              const FederationConfig& config, const std::vector<double>& kl_scores) {
  config.validate();
  if (server.round >= config.rounds) throw InvalidArgument("run_round: all configured rounds are done");
  if (clients.size() != static_cast<std::size_t>(config.num_clients)) {
    throw InvalidArgument("run_round: expected " + std::to_string(config.num_clients) + " clients, got " +
                          std::to_string(clients.size()));
  }
  const int round = server.round + 1;
  RngStream sampler(derive_seed(config.seed, StreamTag::kClientSampling, static_cast<std::uint64_t>(round)));
  const std::vector<int> ids = sample_clients(config.num_clients, config.client_fraction, sampler);

  std::vector<gan::GanPair> trained(ids.size());
  std::vector<gan::LocalTrainingStats> stats(ids.size());
  parallel_for(ids.size(), config.workers, [&](std::size_t i) {
    const int id = ids[i];
    gan::GanPair local = server.global_pair;
    local.reset_optimizers();
    RngStream stream(derive_seed(config.seed, StreamTag::kClientTraining, static_cast<std::uint64_t>(round),
                                 static_cast<std::uint64_t>(id)));
    try {
      trained[i] = gan::train_local(local, clients[static_cast<std::size_t>(id)].data.samples,
                                    config.local_epochs, config.gan_hyper, stream, &stats[i]);
    } catch (const DivergenceError& e) {
      throw DivergenceError("round " + std::to_string(round) + ", client " + std::to_string(id) + ": " + e.what());
    }
  });

  std::vector<double> weights;
  if (config.aggregation == Aggregation::kKlWeighted) {
    if (kl_scores.size() != clients.size()) throw InvalidArgument("run_round: one KL score per client required");
    std::vector<double> scores;
    scores.reserve(ids.size());
    for (int id : ids) scores.push_back(kl_scores[static_cast<std::size_t>(id)]);
    weights = kl_weights(scores);
  } else {
    weights.assign(ids.size(), 1.0 / static_cast<double>(ids.size()));
  }
  // Renormalize so the weights sum to 1 within rounding.
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;

  std::vector<nn::ParamVector> gens;
  std::vector<nn::ParamVector> discs;
  gens.reserve(ids.size());
  discs.reserve(ids.size());
  RoundReport report;
  report.round = round;
  report.participant_ids = ids;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    gens.push_back(trained[i].gen_params);
    discs.push_back(trained[i].disc_params);
    report.mean_d_loss += stats[i].mean_d_loss / static_cast<double>(ids.size());
    report.mean_g_loss += stats[i].mean_g_loss / static_cast<double>(ids.size());
  }
  report.drift = metrics::parameter_drift(gens);

  ServerState next = server;
  next.global_pair.gen_params = fedavg(gens, weights);
  next.global_pair.disc_params = fedavg(discs, weights);
  next.global_pair.reset_optimizers();
  next.round = round;
  // Down and up for every participant.
  report.bytes_this_round = 2 * static_cast<std::uint64_t>(ids.size()) *
                            (param_bytes(server.global_pair.gen_params) + param_bytes(server.global_pair.disc_params));
  next.bytes_sent += report.bytes_this_round;
  next.reports.push_back(report);
  return {std::move(next), std::move(report)};
}

ServerState run_federation(const FederationConfig& config, const gan::GanPair& initial,
                           const std::vector<data::ClientDataset>& clients, const EvalHook& eval_hook) {
  config.validate();
  initial.validate();
  std::vector<double> scores;
  if (config.aggregation == Aggregation::kKlWeighted) {
    int num_classes = 0;
    for (const auto& c : clients) num_classes = std::max(num_classes, c.data.num_classes);
    scores.reserve(clients.size());
    for (const auto& c : clients) scores.push_back(kl_score(c, num_classes));
  }

  ServerState server;
  server.global_pair = initial;
  server.global_pair.reset_optimizers();
  const auto start = std::chrono::steady_clock::now();
  while (server.round < config.rounds) {
    auto [next, report] = run_round(server, clients, config, scores);
    server = std::move(next);
    const bool evaluate = server.round % config.eval_every == 0 || server.round == config.rounds;
    if (!evaluate || !eval_hook) continue;

    const EvalOutcome outcome = eval_hook(server.global_pair, server, report);
    metrics::MetricsRecord record;
    record.round = server.round;
    record.fid = outcome.fid;
    record.drift = outcome.drift.value_or(report.drift);
    record.mode_coverage = outcome.mode_coverage;
    record.bytes_cumulative = server.bytes_sent + outcome.extra_bytes;
    if (config.record_wall_time) {
      record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    server.history.push_back(record);
    if (outcome.fid < server.best_fid) {
      server.best_fid = outcome.fid;
      server.best_round = server.round;
      server.best_pair = server.global_pair;
    }
  }
  return server;
}

}  // namespace effgan::fed
