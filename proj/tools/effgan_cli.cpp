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

// effgan: command-line front end over the C API.
//
//   effgan run    [--config FILE] [--<key> VALUE ...] [--set key=value ...] [--out DIR]
//   effgan grid   --sweep "E=1,10,50;n=1,2" [--jobs N] [config flags as for run]
//   effgan sample --ensemble DIR [--count N] [--seed S] [--output FILE] [--member-ids]
//   effgan config [config flags as for run]
//
// Exit status: 0 success, 1 configuration or usage error, 2 runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "effgan/effgan.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

int exit_code(effgan_status status) {
  if (status == EFFGAN_OK) return kExitOk;
  return status == EFFGAN_ERR_CONFIG ? kExitConfig : kExitRuntime;
}

int report(effgan_status status) {
  if (status != EFFGAN_OK) std::cerr << "effgan: error: " << effgan_last_error() << "\n";
  return exit_code(status);
}

struct ConfigDeleter {
  void operator()(effgan_config* c) const { effgan_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<effgan_config, ConfigDeleter>;

struct EnsembleDeleter {
  void operator()(effgan_ensemble* e) const { effgan_ensemble_destroy(e); }
};

// Options shared by every subcommand that builds a config.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> keyed;
  std::vector<std::string> assignments;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "key = value file applied before flags")->check(CLI::ExistingFile);
    for (size_t i = 0; i < effgan_config_key_count(); ++i) {
      const std::string key = effgan_config_key_name(i);
      app->add_option("--" + key, keyed[key], "config key " + key)->group("Config keys");
    }
    app->add_option("--set", assignments, "key=value, aliases allowed (K, c, E, E_ft, R, M, n, lr)");
  }

  // File first, then flags, so flags win.
  effgan_status build(CLI::App* app, ConfigPtr& out) const {
    effgan_config* raw = nullptr;
    effgan_status st = effgan_config_create(&raw);
    if (st != EFFGAN_OK) return st;
    out.reset(raw);
    if (!file.empty() && (st = effgan_config_load_file(raw, file.c_str())) != EFFGAN_OK) return st;
    for (const auto& [key, value] : keyed) {
      if (app->count("--" + key) == 0) continue;
      if ((st = effgan_config_set(raw, key.c_str(), value.c_str())) != EFFGAN_OK) return st;
    }
    for (const auto& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos) {
        std::cerr << "effgan: error: --set expects key=value, got '" << a << "'\n";
        return EFFGAN_ERR_CONFIG;
      }
      const std::string key = a.substr(0, eq);
      const std::string value = a.substr(eq + 1);
      if ((st = effgan_config_set(raw, key.c_str(), value.c_str())) != EFFGAN_OK) return st;
    }
    return effgan_config_validate(raw);
  }
};

std::string config_text(const effgan_config* config) {
  size_t needed = 0;
  effgan_config_to_string(config, nullptr, 0, &needed);
  std::string text(needed + 1, '\0');
  effgan_config_to_string(config, text.data(), text.size(), nullptr);
  text.resize(needed);
  return text;
}

std::string out_dir_for(const effgan_config* config, const std::string& override_dir) {
  std::string dir = override_dir;
  if (dir.empty()) {
    size_t needed = 0;
    effgan_config_get(config, "output_dir", nullptr, 0, &needed);
    dir.assign(needed + 1, '\0');
    effgan_config_get(config, "output_dir", dir.data(), dir.size(), nullptr);
    dir.resize(needed);
  }
  size_t needed = 0;
  effgan_resolve_output_dir(dir.c_str(), nullptr, 0, &needed);
  std::string resolved(needed + 1, '\0');
  effgan_resolve_output_dir(dir.c_str(), resolved.data(), resolved.size(), nullptr);
  resolved.resize(needed);
  return resolved;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated GAN lab: FedGAN, EFFGAN and baselines on small synthetic or IDX data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(effgan_version()));
  app.footer("Relative output directories are placed under $EFFGAN_OUTPUT_ROOT when it is set.");

  ConfigFlags run_flags;
  std::string run_out;
  auto* run = app.add_subcommand("run", "run one experiment");
  run_flags.attach(run);
  run->add_option("--out", run_out, "output directory (overrides output_dir)");

  ConfigFlags grid_flags;
  std::string grid_out;
  std::string sweep;
  int jobs = 1;
  auto* grid = app.add_subcommand("grid", "run a sweep over config keys");
  grid_flags.attach(grid);
  grid->add_option("--sweep", sweep, "e.g. \"E=1,10,50;n=1,2\"")->required();
  grid->add_option("--jobs", jobs, "grid points run in parallel")->check(CLI::PositiveNumber);
  grid->add_option("--out", grid_out, "output directory (overrides output_dir)");

  std::string ensemble_dir;
  std::string sample_output;
  size_t count = 1000;
  uint64_t sample_seed = 0;
  bool member_ids = false;
  auto* sample = app.add_subcommand("sample", "draw samples from a saved ensemble as CSV");
  sample->add_option("--ensemble", ensemble_dir, "directory holding manifest.json")->required();
  sample->add_option("--count", count, "number of samples")->check(CLI::PositiveNumber);
  sample->add_option("--seed", sample_seed, "noise seed");
  sample->add_option("--output", sample_output, "CSV file (default stdout)");
  sample->add_flag("--member-ids", member_ids, "append the producing client id to each row");

  ConfigFlags show_flags;
  auto* show = app.add_subcommand("config", "print the resolved config");
  show_flags.attach(show);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run->parsed()) {
    ConfigPtr config;
    if (auto st = run_flags.build(run, config); st != EFFGAN_OK) return report(st);
    const std::string dir = out_dir_for(config.get(), run_out);
    effgan_run_summary s{};
    if (auto st = effgan_run_experiment(config.get(), dir.c_str(), &s); st != EFFGAN_OK) return report(st);
    std::printf("wrote %s\nbest_fid=%.6g best_round=%d final_fid=%.6g final_mode_coverage=%.4g bytes_total=%llu\n",
                dir.c_str(), s.best_fid, static_cast<int>(s.best_round), s.final_fid, s.final_mode_coverage,
                static_cast<unsigned long long>(s.bytes_total));
    if (s.warnings > 0) std::fprintf(stderr, "effgan: %u warning(s), see manifest.json\n", s.warnings);
    return kExitOk;
  }

  if (grid->parsed()) {
    ConfigPtr config;
    if (auto st = grid_flags.build(grid, config); st != EFFGAN_OK) return report(st);
    const std::string dir = out_dir_for(config.get(), grid_out);
    size_t points = 0;
    size_t failed = 0;
    if (auto st = effgan_run_grid(config.get(), sweep.c_str(), dir.c_str(), jobs, &points, &failed); st != EFFGAN_OK) {
      return report(st);
    }
    std::printf("wrote %s/summary.csv: %zu point(s), %zu failed\n", dir.c_str(), points, failed);
    return failed == 0 ? kExitOk : kExitRuntime;
  }

  if (sample->parsed()) {
    effgan_ensemble* raw = nullptr;
    if (auto st = effgan_ensemble_load(ensemble_dir.c_str(), &raw); st != EFFGAN_OK) return report(st);
    std::unique_ptr<effgan_ensemble, EnsembleDeleter> ens(raw);
    const size_t dim = effgan_ensemble_data_dim(raw);
    std::vector<double> buffer(count * dim);
    std::vector<int32_t> ids(count);
    if (auto st = effgan_ensemble_sample(raw, count, sample_seed, buffer.data(), buffer.size(), ids.data());
        st != EFFGAN_OK) {
      return report(st);
    }
    std::ofstream file;
    if (!sample_output.empty()) {
      file.open(sample_output);
      if (!file) {
        std::cerr << "effgan: error: cannot write " << sample_output << "\n";
        return kExitRuntime;
      }
    }
    std::ostream& os = sample_output.empty() ? std::cout : file;
    for (size_t j = 0; j < dim; ++j) os << (j ? "," : "") << "x" << j;
    os << (member_ids ? ",client_id\n" : "\n");
    char num[32];
    for (size_t i = 0; i < count; ++i) {
      for (size_t j = 0; j < dim; ++j) {
        std::snprintf(num, sizeof(num), "%.17g", buffer[i * dim + j]);
        os << (j ? "," : "") << num;
      }
      if (member_ids) os << "," << ids[i];
      os << "\n";
    }
    return os.good() ? kExitOk : kExitRuntime;
  }

  ConfigPtr config;
  if (auto st = show_flags.build(show, config); st != EFFGAN_OK) return report(st);
  std::cout << config_text(config.get());
  return kExitOk;
}
