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

#include "effgan/effgan.h"

#include <algorithm>
#include <cstring>
#include <new>
#include <string>

#include "config.hpp"
#include "ensemble.hpp"
#include "errors.hpp"
#include "runner.hpp"

struct effgan_config {
  effgan::experiment::ExperimentConfig value;
};

struct effgan_ensemble {
  effgan::ensemble::EnsembleModel value;
};

namespace {

thread_local std::string g_last_error;

effgan_status fail(effgan_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Runs fn and maps the exception type onto a status code.
template <typename Fn>
effgan_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const effgan::ConfigError& e) {
    return fail(EFFGAN_ERR_CONFIG, e.what());
  } catch (const effgan::InfeasiblePartition& e) {
    return fail(EFFGAN_ERR_CONFIG, e.what());
  } catch (const effgan::IdxError& e) {
    return fail(EFFGAN_ERR_FORMAT, e.what());
  } catch (const effgan::IoError& e) {
    return fail(EFFGAN_ERR_IO, e.what());
  } catch (const effgan::DivergenceError& e) {
    return fail(EFFGAN_ERR_DIVERGED, e.what());
  } catch (const effgan::InvalidArgument& e) {
    return fail(EFFGAN_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(EFFGAN_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(EFFGAN_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(EFFGAN_ERR_RUNTIME, "unknown error");
  }
}

effgan_status copy_out(const std::string& text, char* buffer, size_t capacity, size_t* needed) {
  if (needed != nullptr) *needed = text.size();
  if (buffer == nullptr || capacity == 0) {
    if (buffer == nullptr && needed != nullptr) return EFFGAN_OK;
    return fail(EFFGAN_ERR_INVALID_ARGUMENT, "output buffer is empty");
  }
  const size_t n = std::min(text.size(), capacity - 1);
  std::memcpy(buffer, text.data(), n);
  buffer[n] = '\0';
  if (n < text.size()) return fail(EFFGAN_ERR_INVALID_ARGUMENT, "output buffer too small");
  return EFFGAN_OK;
}

effgan_status null_arg(const char* what) { return fail(EFFGAN_ERR_INVALID_ARGUMENT, std::string(what) + " is NULL"); }

}  // namespace

extern "C" {

const char* effgan_version(void) { return EFFGAN_VERSION; }

const char* effgan_last_error(void) { return g_last_error.c_str(); }

effgan_status effgan_config_create(effgan_config** out) {
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    *out = new effgan_config{};
    return EFFGAN_OK;
  });
}

void effgan_config_destroy(effgan_config* config) { delete config; }

effgan_status effgan_config_clone(const effgan_config* config, effgan_config** out) {
  if (config == nullptr) return null_arg("config");
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    *out = new effgan_config{config->value};
    return EFFGAN_OK;
  });
}

effgan_status effgan_config_load_file(effgan_config* config, const char* path) {
  if (config == nullptr) return null_arg("config");
  if (path == nullptr) return null_arg("path");
  return guarded([&] {
    config->value = effgan::experiment::load_config_file(path, config->value);
    return EFFGAN_OK;
  });
}

effgan_status effgan_config_set(effgan_config* config, const char* key, const char* value) {
  if (config == nullptr) return null_arg("config");
  if (key == nullptr || value == nullptr) return null_arg("key or value");
  return guarded([&] {
    config->value.set(key, value);
    return EFFGAN_OK;
  });
}

effgan_status effgan_config_get(const effgan_config* config, const char* key, char* buffer, size_t capacity,
                                size_t* needed) {
  if (config == nullptr) return null_arg("config");
  if (key == nullptr) return null_arg("key");
  return guarded([&] { return copy_out(config->value.get(key), buffer, capacity, needed); });
}

effgan_status effgan_config_to_string(const effgan_config* config, char* buffer, size_t capacity, size_t* needed) {
  if (config == nullptr) return null_arg("config");
  return guarded([&] { return copy_out(config->value.to_text(), buffer, capacity, needed); });
}

effgan_status effgan_config_validate(const effgan_config* config) {
  if (config == nullptr) return null_arg("config");
  return guarded([&] {
    config->value.validate();
    return EFFGAN_OK;
  });
}

size_t effgan_config_key_count(void) { return effgan::experiment::config_keys().size(); }

const char* effgan_config_key_name(size_t index) {
  static const std::vector<std::string> keys = effgan::experiment::config_keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

effgan_status effgan_run_experiment(const effgan_config* config, const char* out_dir, effgan_run_summary* summary) {
  if (config == nullptr) return null_arg("config");
  return guarded([&] {
    const auto dir =
        effgan::experiment::resolve_output_dir(out_dir != nullptr ? std::string(out_dir) : config->value.output_dir);
    const auto result = effgan::experiment::run_experiment(config->value, dir);
    if (summary != nullptr) {
      summary->best_fid = result.best_fid;
      summary->best_round = result.best_round;
      summary->final_fid = result.metrics.back().fid;
      summary->final_mode_coverage = result.metrics.back().mode_coverage;
      summary->bytes_total = result.bytes_total;
      summary->federation_bytes = result.federation_bytes;
      summary->finetune_bytes = result.finetune_bytes;
      summary->evaluations = static_cast<uint32_t>(result.metrics.size());
      summary->warnings = static_cast<uint32_t>(result.warnings.size());
    }
    return EFFGAN_OK;
  });
}

effgan_status effgan_run_grid(const effgan_config* config, const char* sweep, const char* out_dir, int jobs,
                              size_t* points, size_t* failed) {
  if (config == nullptr) return null_arg("config");
  if (sweep == nullptr) return null_arg("sweep");
  if (jobs < 1) return fail(EFFGAN_ERR_INVALID_ARGUMENT, "jobs must be >= 1");
  return guarded([&] {
    const auto dir =
        effgan::experiment::resolve_output_dir(out_dir != nullptr ? std::string(out_dir) : config->value.output_dir);
    const auto grid = effgan::experiment::run_grid(config->value, sweep, dir, jobs);
    if (points != nullptr) *points = grid.size();
    if (failed != nullptr) {
      *failed = static_cast<size_t>(std::count_if(grid.begin(), grid.end(), [](const auto& p) { return !p.ok; }));
    }
    return EFFGAN_OK;
  });
}

effgan_status effgan_resolve_output_dir(const char* dir, char* buffer, size_t capacity, size_t* needed) {
  if (dir == nullptr) return null_arg("dir");
  return guarded([&] { return copy_out(effgan::experiment::resolve_output_dir(dir).string(), buffer, capacity, needed); });
}

effgan_status effgan_ensemble_load(const char* dir, effgan_ensemble** out) {
  if (dir == nullptr) return null_arg("dir");
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    try {
      *out = new effgan_ensemble{effgan::ensemble::load_ensemble(dir)};
    } catch (const effgan::InvalidArgument& e) {
      return fail(EFFGAN_ERR_FORMAT, e.what());
    }
    return EFFGAN_OK;
  });
}

void effgan_ensemble_destroy(effgan_ensemble* ensemble) { delete ensemble; }

size_t effgan_ensemble_member_count(const effgan_ensemble* ensemble) {
  return ensemble == nullptr ? 0 : ensemble->value.size();
}

size_t effgan_ensemble_data_dim(const effgan_ensemble* ensemble) {
  return ensemble == nullptr ? 0 : static_cast<size_t>(ensemble->value.data_dim());
}

size_t effgan_ensemble_latent_dim(const effgan_ensemble* ensemble) {
  return ensemble == nullptr ? 0 : static_cast<size_t>(ensemble->value.latent_dim);
}

effgan_status effgan_ensemble_sample(const effgan_ensemble* ensemble, size_t count, uint64_t seed, double* out,
                                     size_t capacity, int32_t* member_ids) {
  if (ensemble == nullptr) return null_arg("ensemble");
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    const auto dim = static_cast<size_t>(ensemble->value.data_dim());
    if (count == 0) return fail(EFFGAN_ERR_INVALID_ARGUMENT, "count must be >= 1");
    if (capacity < count * dim) {
      return fail(EFFGAN_ERR_INVALID_ARGUMENT,
                  "output holds " + std::to_string(capacity) + " doubles, need " + std::to_string(count * dim));
    }
    effgan::RngStream rng(seed);
    std::vector<std::size_t> chosen;
    const auto samples = effgan::ensemble::sample_ensemble(ensemble->value, count, rng, chosen);
    std::memcpy(out, samples.data(), count * dim * sizeof(double));
    if (member_ids != nullptr) {
      for (size_t i = 0; i < count; ++i) member_ids[i] = ensemble->value.members[chosen[i]].client_id;
    }
    return EFFGAN_OK;
  });
}

}  // extern "C"
