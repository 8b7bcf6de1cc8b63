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

#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "io.hpp"

#ifndef EFFGAN_VERSION
#define EFFGAN_VERSION "0.0.0"
#endif

namespace effgan::experiment {

namespace {

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

data::MixtureSpec mixture_for(DatasetKind kind) {
  return kind == DatasetKind::kRing8 ? data::ring8() : data::grid25();
}

metrics::MetricsRecord make_record(int round, const Evaluator::Score& score, double drift, std::uint64_t bytes) {
  metrics::MetricsRecord r;
  r.round = round;
  r.fid = score.fid;
  r.drift = drift;
  r.mode_coverage = score.mode_coverage;
  r.bytes_cumulative = bytes;
  return r;
}

std::string rounds_csv(const std::vector<fed::RoundReport>& reports) {
  std::string out = "round,participants,mean_d_loss,mean_g_loss,drift,bytes_this_round\n";
  for (const auto& r : reports) {
    std::string ids;
    for (std::size_t i = 0; i < r.participant_ids.size(); ++i) {
      if (i) ids += ' ';
      ids += std::to_string(r.participant_ids[i]);
    }
    out += std::to_string(r.round) + "," + ids + "," + fmt_real(r.mean_d_loss) + "," + fmt_real(r.mean_g_loss) + "," +
           fmt_real(r.drift) + "," + std::to_string(r.bytes_this_round) + "\n";
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string metrics_csv(const std::vector<metrics::MetricsRecord>& rows) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.round) + "," + fmt_real(r.fid) + "," + fmt_real(r.drift) + "," + fmt_real(r.mode_coverage) +
           "," + std::to_string(r.bytes_cumulative) + "," + fmt_real(r.wall_seconds) + "\n";
  }
  return out;
}

ExperimentData prepare_data(const ExperimentConfig& config) {
  config.validate();
  ExperimentData out;
  if (config.dataset == DatasetKind::kIdx) {
    out.train_pool = data::load_idx(config.idx_images, config.idx_labels);
    out.eval_real = config.idx_eval_images.empty() ? out.train_pool
                                                   : data::load_idx(config.idx_eval_images, config.idx_eval_labels);
    if (config.classes_per_client > out.train_pool.num_classes) {
      throw ConfigError("classes_per_client", "exceeds the " + std::to_string(out.train_pool.num_classes) +
                                                  " classes found in " + config.idx_labels);
    }
  } else {
    const data::MixtureSpec spec = mixture_for(config.dataset);
    const std::size_t modes = spec.modes.size();
    const auto classes = static_cast<std::size_t>(spec.num_classes());
    std::size_t per_mode = static_cast<std::size_t>(config.samples_per_mode);
    if (per_mode == 0) {
      // Enough rows that no class pool has to be reused across clients.
      const auto n = static_cast<std::size_t>(config.classes_per_client);
      per_mode = ceil_div(static_cast<std::size_t>(config.num_clients) * n, classes) *
                 ceil_div(static_cast<std::size_t>(config.samples_per_client), n);
    }
    out.train_pool = data::synth_mixture(spec, per_mode, derive_seed(config.seed, StreamTag::kData, 0));
    out.eval_real = data::synth_mixture(spec, ceil_div(static_cast<std::size_t>(config.eval_real_samples), modes),
                                        derive_seed(config.seed, StreamTag::kData, 1));
    out.mixture = spec;
  }
  out.partition = data::partition_label_skew(out.train_pool, config.num_clients, config.classes_per_client,
                                             static_cast<std::size_t>(config.samples_per_client), config.seed);
  out.feature_map = data::fit_feature_map(out.eval_real, config.effective_pca_components());
  return out;
}

Evaluator::Evaluator(const ExperimentConfig& config, const ExperimentData& data)
    : feature_map_(data.feature_map),
      real_moments_(metrics::fit_moments(data::apply_feature_map(data.feature_map, data.eval_real.samples))),
      mixture_(data.mixture),
      sample_count_(static_cast<std::size_t>(config.eval_samples)),
      latent_dim_(config.latent_dim),
      coverage_radius_(config.coverage_radius),
      seed_(config.seed) {
  if (config.coverage_min_count > 0) coverage_min_count_ = static_cast<std::size_t>(config.coverage_min_count);
}

RngStream Evaluator::noise_stream(int round) const {
  return RngStream(derive_seed(seed_, StreamTag::kEvaluation, static_cast<std::uint64_t>(round)));
}

Evaluator::Score Evaluator::score_samples(const nn::Matrix& generated) const {
  Score score;
  if (!generated.allFinite()) throw DivergenceError("generated samples are not finite");
  score.fid = metrics::frechet_distance(metrics::fit_moments(data::apply_feature_map(feature_map_, generated)),
                                        real_moments_);
  if (mixture_) score.mode_coverage = metrics::mode_coverage(generated, *mixture_, coverage_radius_, coverage_min_count_);
  return score;
}

Evaluator::Score Evaluator::score_generator(const nn::MlpSpec& gen_spec, const nn::ParamVector& gen_params,
                                            int round) const {
  RngStream noise = noise_stream(round);
  return score_samples(gan::sample_generator(gen_spec, gen_params, sample_count_, latent_dim_, noise));
}

Evaluator::Score Evaluator::score_ensemble(const ensemble::EnsembleModel& ensemble, int round) const {
  RngStream noise = noise_stream(round);
  return score_samples(ensemble::sample_ensemble(ensemble, sample_count_, noise));
}

RunResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const std::string started_at = iso_now();
  const auto clock_start = std::chrono::steady_clock::now();
  const ExperimentData prepared = prepare_data(config);
  const auto& clients = prepared.partition.clients;
  const int dim = prepared.train_pool.dim();
  const nn::MlpSpec gen_spec = config.gen_spec(dim);
  const nn::MlpSpec disc_spec = config.disc_spec(dim);
  const gan::GanHyper hyper = config.gan_hyper();
  const Evaluator evaluator(config, prepared);
  const gan::GanPair initial = gan::GanPair::create(gen_spec, disc_spec, derive_seed(config.seed, StreamTag::kInit));
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count(); };

  RunResult result;
  result.method = config.method;
  result.warnings = prepared.partition.warnings;
  const std::uint64_t gen_bytes = fed::param_bytes(initial.gen_params);
  const std::uint64_t disc_bytes = fed::param_bytes(initial.disc_params);
  const auto members = static_cast<std::uint64_t>(config.ensemble_size);

  switch (config.method) {
    case Method::kFedGan:
    case Method::kEffGan: {
      const bool ensemble_eval = config.method == Method::kEffGan;
      if (ensemble_eval) result.finetune_bytes = members * (gen_bytes + disc_bytes) + members * gen_bytes;
      std::optional<ensemble::EnsembleModel> last_ensemble;
      std::optional<ensemble::EnsembleModel> best_ensemble;
      double best_ensemble_fid = std::numeric_limits<double>::infinity();

      auto hook = [&](const gan::GanPair& global, const fed::ServerState& server,
                      const fed::RoundReport& report) -> fed::EvalOutcome {
        const auto global_score = evaluator.score_generator(global.gen_spec, global.gen_params, server.round);
        auto global_record = make_record(server.round, global_score, report.drift, server.bytes_sent);
        if (config.record_wall_time) global_record.wall_seconds = elapsed();
        result.global_metrics.push_back(global_record);
        if (!ensemble_eval) return {global_score.fid, global_score.mode_coverage, std::nullopt, 0};

        RngStream tune_rng(derive_seed(config.seed, StreamTag::kFineTune, static_cast<std::uint64_t>(server.round)));
        auto tuned = ensemble::fine_tune(global, clients, config.ensemble_size, config.effective_finetune_epochs(), hyper,
                                         tune_rng, config.workers);
        const auto score = evaluator.score_ensemble(tuned, server.round);
        std::vector<nn::ParamVector> gens;
        for (const auto& m : tuned.members) gens.push_back(m.gen_params);
        const double member_drift = metrics::parameter_drift(gens);
        if (score.fid < best_ensemble_fid) {
          best_ensemble_fid = score.fid;
          best_ensemble = tuned;
        }
        last_ensemble = std::move(tuned);
        return {score.fid, score.mode_coverage, member_drift, result.finetune_bytes};
      };

      fed::FederationConfig fc = config.federation_config();
      const fed::ServerState server = fed::run_federation(fc, initial, clients, hook);
      result.metrics = server.history;
      result.reports = server.reports;
      result.federation_bytes = server.bytes_sent;
      result.bytes_total = server.bytes_sent + result.finetune_bytes;
      if (ensemble_eval) {
        result.ensemble = config.finetune_from == FineTuneStart::kLast ? last_ensemble : best_ensemble;
      }
      break;
    }
    case Method::kCentral: {
      const data::LabeledDataset pooled = data::pool_clients(clients);
      gan::GanPair pair = initial;
      for (int round = 1; round <= config.rounds; ++round) {
        RngStream stream(derive_seed(config.seed, StreamTag::kCentral, static_cast<std::uint64_t>(round)));
        pair = gan::train_local(pair, pooled.samples, config.local_epochs, hyper, stream);
        if (round % config.eval_every != 0 && round != config.rounds) continue;
        auto record = make_record(round, evaluator.score_generator(gen_spec, pair.gen_params, round), 0.0, 0);
        if (config.record_wall_time) record.wall_seconds = elapsed();
        result.metrics.push_back(record);
      }
      break;
    }
    case Method::kLocalEnsemble: {
      RngStream rng(derive_seed(config.seed, StreamTag::kLocalOnly));
      auto local = ensemble::build_local_only_ensemble(clients, config.ensemble_size, config.effective_local_only_epochs(),
                                                       hyper, gen_spec, disc_spec, rng, config.workers);
      std::vector<nn::ParamVector> gens;
      for (const auto& m : local.members) gens.push_back(m.gen_params);
      result.bytes_total = members * gen_bytes;
      auto record = make_record(1, evaluator.score_ensemble(local, 1), metrics::parameter_drift(gens), result.bytes_total);
      if (config.record_wall_time) record.wall_seconds = elapsed();
      result.metrics.push_back(record);
      result.ensemble = std::move(local);
      break;
    }
  }

  if (result.metrics.empty()) throw Error("run produced no evaluation rows");
  auto best = std::min_element(result.metrics.begin(), result.metrics.end(),
                               [](const auto& a, const auto& b) { return a.fid < b.fid; });
  result.best_fid = best->fid;
  result.best_round = best->round;

  if (out_dir.empty()) return result;

  io::write_file_atomic(out_dir / "metrics.csv", metrics_csv(result.metrics));
  if (config.method == Method::kEffGan) io::write_file_atomic(out_dir / "global_metrics.csv", metrics_csv(result.global_metrics));
  if (!result.reports.empty()) io::write_file_atomic(out_dir / "rounds.csv", rounds_csv(result.reports));
  if (result.ensemble) ensemble::save_ensemble(*result.ensemble, out_dir / "ensemble");

  nlohmann::json best_json;
  best_json["method"] = to_string(config.method);
  best_json["best_fid"] = result.best_fid;
  best_json["best_round"] = result.best_round;
  best_json["bytes_at_best"] = best->bytes_cumulative;
  best_json["final_fid"] = result.metrics.back().fid;
  best_json["final_mode_coverage"] = result.metrics.back().mode_coverage;
  best_json["bytes_total"] = result.bytes_total;
  best_json["federation_bytes"] = result.federation_bytes;
  best_json["finetune_bytes"] = result.finetune_bytes;
  if (!result.global_metrics.empty()) {
    best_json["global_best_fid"] =
        std::min_element(result.global_metrics.begin(), result.global_metrics.end(), [](const auto& a, const auto& b) {
          return a.fid < b.fid;
        })->fid;
  }
  io::write_file_atomic(out_dir / "best.json", best_json.dump(2) + "\n");

  nlohmann::json manifest;
  nlohmann::json resolved;
  for (const auto& [key, value] : config.entries()) resolved[key] = value;
  manifest["config"] = resolved;
  manifest["code_version"] = EFFGAN_VERSION;
  manifest["started_at"] = started_at;
  manifest["finished_at"] = iso_now();
  manifest["wall_seconds"] = elapsed();
  manifest["warnings"] = result.warnings;
  manifest["partition_reused_rows"] = prepared.partition.reused_rows;
  manifest["evaluation"] = {
      {"generated_samples", evaluator.sample_count()},
      {"real_samples", prepared.eval_real.size()},
      {"feature_map", prepared.feature_map.kind == data::FeatureMap::Kind::kIdentity
                          ? std::string("identity")
                          : "pca(" + std::to_string(prepared.feature_map.projection.rows()) + ")"},
      {"mode_coverage_available", prepared.mixture.has_value()},
  };
  manifest["data"] = {{"train_pool_rows", prepared.train_pool.size()},
                      {"num_classes", prepared.train_pool.num_classes},
                      {"clients", clients.size()}};
  manifest["networks"] = {{"generator_params", gen_spec.param_count()}, {"discriminator_params", disc_spec.param_count()}};
  io::write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

std::vector<SweepAxis> parse_sweep(const std::string& sweep) {
  std::vector<SweepAxis> axes;
  std::stringstream ss(sweep);
  std::string part;
  while (std::getline(ss, part, ';')) {
    const auto first = part.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw ConfigError("", "sweep entry '" + part + "' must look like key=v1,v2");
    SweepAxis axis;
    axis.label = part.substr(first, eq - first);
    axis.label.erase(axis.label.find_last_not_of(" \t") + 1);
    axis.key = canonical_key(axis.label);
    std::stringstream vs(part.substr(eq + 1));
    std::string value;
    while (std::getline(vs, value, ',')) {
      const auto b = value.find_first_not_of(" \t");
      if (b == std::string::npos) continue;
      axis.values.push_back(value.substr(b, value.find_last_not_of(" \t") - b + 1));
    }
    if (axis.values.empty()) throw ConfigError(axis.key, "sweep axis has no values");
    for (const auto& other : axes) {
      if (other.key == axis.key) throw ConfigError(axis.key, "swept twice");
    }
    axes.push_back(std::move(axis));
  }
  if (axes.empty()) throw ConfigError("", "empty sweep");
  return axes;
}

std::vector<GridPoint> run_grid(const ExperimentConfig& base, const std::string& sweep, const std::filesystem::path& out_dir,
                                int jobs) {
  const auto axes = parse_sweep(sweep);
  std::vector<GridPoint> points(1);
  for (const auto& axis : axes) {
    std::vector<GridPoint> expanded;
    for (const auto& p : points) {
      for (const auto& v : axis.values) {
        GridPoint q = p;
        q.values.push_back(v);
        q.directory += (q.directory.empty() ? "" : "_") + axis.label + "-" + v;
        expanded.push_back(std::move(q));
      }
    }
    points = std::move(expanded);
  }

  fed::parallel_for(points.size(), jobs, [&](std::size_t i) {
    auto& point = points[i];
    try {
      ExperimentConfig cfg = base;
      for (std::size_t a = 0; a < axes.size(); ++a) cfg.set(axes[a].key, point.values[a]);
      cfg.validate();
      point.result = run_experiment(cfg, out_dir / point.directory);
      point.ok = true;
    } catch (const std::exception& e) {
      point.ok = false;
      point.error = e.what();
    }
  });

  std::string summary;
  for (const auto& axis : axes) summary += axis.label + ",";
  summary +=
      "status,best_fid,best_round,final_fid,final_mode_coverage,bytes_total,federation_bytes,finetune_bytes,"
      "global_best_fid,error\n";
  for (const auto& p : points) {
    for (const auto& v : p.values) summary += csv_field(v) + ",";
    if (!p.ok) {
      summary += "error,,,,,,,,," + csv_field(p.error) + "\n";
      continue;
    }
    const auto& r = p.result;
    std::string global_best;
    if (!r.global_metrics.empty()) {
      global_best = fmt_real(std::min_element(r.global_metrics.begin(), r.global_metrics.end(), [](const auto& a, const auto& b) {
                               return a.fid < b.fid;
                             })->fid);
    }
    summary += "ok," + fmt_real(r.best_fid) + "," + std::to_string(r.best_round) + "," + fmt_real(r.metrics.back().fid) +
               "," + fmt_real(r.metrics.back().mode_coverage) + "," + std::to_string(r.bytes_total) + "," +
               std::to_string(r.federation_bytes) + "," + std::to_string(r.finetune_bytes) + "," + global_best + ",\n";
  }
  io::write_file_atomic(out_dir / "summary.csv", summary);
  return points;
}

std::filesystem::path resolve_output_dir(const std::string& output_dir) {
  std::filesystem::path path(output_dir);
  if (path.is_relative()) {
    if (const char* root = std::getenv("EFFGAN_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
      return std::filesystem::path(root) / path;
    }
  }
  return path;
}

}  // namespace effgan::experiment
