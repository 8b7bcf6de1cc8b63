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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "ensemble.hpp"
#include "federation.hpp"
#include "metrics.hpp"

namespace effgan::experiment {

// Column order of metrics.csv.
inline constexpr const char* kMetricsHeader = "round,fid,drift,mode_coverage,bytes_cumulative,wall_seconds";

// Everything a run needs besides the networks: client partitions, the
// held-out real set and the evaluation feature space.
struct ExperimentData {
  data::LabeledDataset train_pool;
  data::LabeledDataset eval_real;
  std::optional<data::MixtureSpec> mixture;
  data::Partition partition;
  data::FeatureMap feature_map;
};

ExperimentData prepare_data(const ExperimentConfig& config);

// Fréchet distance of generated samples against the held-out real set in
// the configured feature space, plus mode coverage for mixture data.
class Evaluator {
 public:
  Evaluator(const ExperimentConfig& config, const ExperimentData& data);

  struct Score {
    double fid = 0.0;
    double mode_coverage = 0.0;
  };

  Score score_samples(const nn::Matrix& generated) const;

  // Both use the noise stream of `round`, so a generator and an ensemble of
  // identical copies of it score identically.
  Score score_generator(const nn::MlpSpec& gen_spec, const nn::ParamVector& gen_params, int round) const;
  Score score_ensemble(const ensemble::EnsembleModel& ensemble, int round) const;

  RngStream noise_stream(int round) const;
  std::size_t sample_count() const { return sample_count_; }

 private:
  data::FeatureMap feature_map_;
  metrics::GaussianMoments real_moments_;
  std::optional<data::MixtureSpec> mixture_;
  std::size_t sample_count_;
  int latent_dim_;
  double coverage_radius_;
  std::optional<std::size_t> coverage_min_count_;
  std::uint64_t seed_;
};

struct RunResult {
  Method method = Method::kEffGan;
  std::vector<metrics::MetricsRecord> metrics;         // rows of the chosen method
  std::vector<metrics::MetricsRecord> global_metrics;  // global FedAvg model, same rounds (fedgan/effgan)
  std::vector<fed::RoundReport> reports;
  double best_fid = 0.0;
  int best_round = 0;
  std::uint64_t bytes_total = 0;
  std::uint64_t federation_bytes = 0;
  std::uint64_t finetune_bytes = 0;  // one fine-tune exchange (effgan)
  std::optional<ensemble::EnsembleModel> ensemble;
  std::vector<std::string> warnings;
};

// Runs config.method end to end. With a non-empty out_dir, writes
// metrics.csv, manifest.json, best.json, rounds.csv (federated methods),
// global_metrics.csv (effgan) and ensemble/ (effgan, local_ensemble).
RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct SweepAxis {
  std::string key;  // canonical config key
  std::string label;  // as written in the sweep
  std::vector<std::string> values;
};

// "E=1,5,10;n=1,2" -> axes. Throws ConfigError when empty or malformed.
std::vector<SweepAxis> parse_sweep(const std::string& sweep);

struct GridPoint {
  std::vector<std::string> values;
  std::string directory;
  bool ok = false;
  std::string error;
  RunResult result;
};

// Runs the cartesian product of the sweep over `base`, one subdirectory per
// point, and writes summary.csv. Failed points are recorded and skipped.
std::vector<GridPoint> run_grid(const ExperimentConfig& base, const std::string& sweep, const std::filesystem::path& out_dir,
                                int jobs = 1);

// Applies EFFGAN_OUTPUT_ROOT to relative output directories.
std::filesystem::path resolve_output_dir(const std::string& output_dir);

std::string metrics_csv(const std::vector<metrics::MetricsRecord>& rows);

}  // namespace effgan::experiment
