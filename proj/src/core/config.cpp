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

#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "errors.hpp"
#include "io.hpp"

namespace effgan::experiment {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Shortest representation that round-trips.
  for (int precision = 1; precision <= 17; ++precision) {
    char candidate[64];
    std::snprintf(candidate, sizeof(candidate), "%.*g", precision, v);
    if (std::strtod(candidate, nullptr) == v) return candidate;
  }
  return buf;
}

template <typename Int>
Int parse_integer(const std::string& key, const std::string& value) {
  Int out{};
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw ConfigError(key, "expected an integer, got '" + value + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  if (value.empty()) throw ConfigError(key, "expected a number, got an empty value");
  char* end = nullptr;
  const double out = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size() || !std::isfinite(out)) {
    throw ConfigError(key, "expected a finite number, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_integer<int>(key, trim(item)));
  return out;
}

std::string join(const std::vector<int>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

template <typename Fn>
auto wrap_enum(const std::string& key, Fn&& parse) {
  try {
    return parse();
  } catch (const InvalidArgument& e) {
    throw ConfigError(key, e.what());
  }
}

struct KeyInfo {
  std::string name;
  std::vector<std::string> aliases;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define INT_KEY(NAME, FIELD, ...)                                                                         \
  KeyInfo {                                                                                               \
    NAME, {__VA_ARGS__}, [](ExperimentConfig& c, const std::string& k, const std::string& v) {            \
      c.FIELD = parse_integer<decltype(c.FIELD)>(k, v);                                                   \
    },                                                                                                    \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }                                 \
  }
#define REAL_KEY(NAME, FIELD, ...)                                                                        \
  KeyInfo {                                                                                               \
    NAME, {__VA_ARGS__}, [](ExperimentConfig& c, const std::string& k, const std::string& v) {            \
      c.FIELD = parse_real(k, v);                                                                         \
    },                                                                                                    \
        [](const ExperimentConfig& c) { return format_real(c.FIELD); }                                    \
  }
#define STRING_KEY(NAME, FIELD)                                                                           \
  KeyInfo {                                                                                               \
    NAME, {}, [](ExperimentConfig& c, const std::string&, const std::string& v) { c.FIELD = v; },         \
        [](const ExperimentConfig& c) { return c.FIELD; }                                                 \
  }

const std::vector<KeyInfo>& key_table() {
  static const std::vector<KeyInfo> table = {
      {"dataset", {},
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "ring8") c.dataset = DatasetKind::kRing8;
         else if (v == "grid25") c.dataset = DatasetKind::kGrid25;
         else if (v == "idx") c.dataset = DatasetKind::kIdx;
         else throw ConfigError(k, "expected ring8, grid25 or idx, got '" + v + "'");
       },
       [](const ExperimentConfig& c) { return to_string(c.dataset); }},
      STRING_KEY("idx_images", idx_images),
      STRING_KEY("idx_labels", idx_labels),
      STRING_KEY("idx_eval_images", idx_eval_images),
      STRING_KEY("idx_eval_labels", idx_eval_labels),
      {"method", {},
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "fedgan") c.method = Method::kFedGan;
         else if (v == "effgan") c.method = Method::kEffGan;
         else if (v == "local_ensemble") c.method = Method::kLocalEnsemble;
         else if (v == "central") c.method = Method::kCentral;
         else throw ConfigError(k, "expected fedgan, effgan, local_ensemble or central, got '" + v + "'");
       },
       [](const ExperimentConfig& c) { return to_string(c.method); }},
      INT_KEY("num_clients", num_clients, "K"),
      REAL_KEY("client_fraction", client_fraction, "c"),
      INT_KEY("local_epochs", local_epochs, "E"),
      INT_KEY("finetune_epochs", finetune_epochs, "E_ft"),
      INT_KEY("rounds", rounds, "R"),
      INT_KEY("ensemble_size", ensemble_size, "M"),
      INT_KEY("classes_per_client", classes_per_client, "n"),
      INT_KEY("samples_per_client", samples_per_client),
      INT_KEY("samples_per_mode", samples_per_mode),
      INT_KEY("latent_dim", latent_dim),
      {"gen_hidden", {},
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.gen_hidden = parse_int_list(k, v); },
       [](const ExperimentConfig& c) { return join(c.gen_hidden); }},
      {"disc_hidden", {},
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.disc_hidden = parse_int_list(k, v); },
       [](const ExperimentConfig& c) { return join(c.disc_hidden); }},
      {"hidden_activation", {},
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.hidden_activation = wrap_enum(k, [&] { return nn::parse_hidden_activation(v); });
       },
       [](const ExperimentConfig& c) { return nn::to_string(c.hidden_activation); }},
      REAL_KEY("leaky_slope", leaky_slope),
      {"gen_output", {},
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "auto") c.gen_output.reset();
         else c.gen_output = wrap_enum(k, [&] { return nn::parse_output_activation(v); });
       },
       [](const ExperimentConfig& c) { return c.gen_output ? nn::to_string(*c.gen_output) : std::string("auto"); }},
      INT_KEY("batch_size", batch_size),
      REAL_KEY("learning_rate", adam.learning_rate, "lr"),
      REAL_KEY("beta1", adam.beta1),
      REAL_KEY("beta2", adam.beta2),
      REAL_KEY("epsilon", adam.epsilon),
      {"gen_loss", {},
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.gen_loss = wrap_enum(k, [&] { return gan::parse_gen_loss(v); });
       },
       [](const ExperimentConfig& c) { return gan::to_string(c.gen_loss); }},
      INT_KEY("disc_steps", disc_steps),
      {"aggregation", {},
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.aggregation = wrap_enum(k, [&] { return fed::parse_aggregation(v); });
       },
       [](const ExperimentConfig& c) { return fed::to_string(c.aggregation); }},
      INT_KEY("seed", seed),
      INT_KEY("eval_every", eval_every),
      INT_KEY("eval_samples", eval_samples),
      INT_KEY("eval_real_samples", eval_real_samples),
      {"finetune_from", {},
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "last") c.finetune_from = FineTuneStart::kLast;
         else if (v == "best") c.finetune_from = FineTuneStart::kBest;
         else throw ConfigError(k, "expected last or best, got '" + v + "'");
       },
       [](const ExperimentConfig& c) { return to_string(c.finetune_from); }},
      INT_KEY("local_only_epochs", local_only_epochs),
      REAL_KEY("coverage_radius", coverage_radius),
      INT_KEY("coverage_min_count", coverage_min_count),
      INT_KEY("pca_components", pca_components),
      INT_KEY("workers", workers),
      {"record_wall_time", {},
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.record_wall_time = parse_bool(k, v); },
       [](const ExperimentConfig& c) { return std::string(c.record_wall_time ? "true" : "false"); }},
      STRING_KEY("output_dir", output_dir),
  };
  return table;
}

#undef INT_KEY
#undef REAL_KEY
#undef STRING_KEY

const KeyInfo& find_key(const std::string& key) {
  for (const auto& info : key_table()) {
    if (info.name == key) return info;
    if (std::find(info.aliases.begin(), info.aliases.end(), key) != info.aliases.end()) return info;
  }
  throw ConfigError(key, "unknown key");
}

void require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

}  // namespace

std::string to_string(DatasetKind d) {
  switch (d) {
    case DatasetKind::kRing8:
      return "ring8";
    case DatasetKind::kGrid25:
      return "grid25";
    case DatasetKind::kIdx:
      return "idx";
  }
  return "ring8";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kFedGan:
      return "fedgan";
    case Method::kEffGan:
      return "effgan";
    case Method::kLocalEnsemble:
      return "local_ensemble";
    case Method::kCentral:
      return "central";
  }
  return "effgan";
}

std::string to_string(FineTuneStart s) { return s == FineTuneStart::kLast ? "last" : "best"; }

std::string canonical_key(const std::string& key) { return find_key(key).name; }

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& info : key_table()) keys.push_back(info.name);
  return keys;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto& info = find_key(trim(key));
  info.set(*this, info.name, trim(value));
}

std::string ExperimentConfig::get(const std::string& key) const { return find_key(key).get(*this); }

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& info : key_table()) out.emplace_back(info.name, info.get(*this));
  return out;
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [key, value] : entries()) out += key + " = " + value + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  if (dataset == DatasetKind::kIdx) {
    require(!idx_images.empty(), "idx_images", "required for the idx dataset");
    require(!idx_labels.empty(), "idx_labels", "required for the idx dataset");
    require(idx_eval_images.empty() == idx_eval_labels.empty(), "idx_eval_images",
            "idx_eval_images and idx_eval_labels must be given together");
  }
  require(num_clients >= 1, "num_clients", "must be >= 1");
  require(client_fraction > 0.0 && client_fraction <= 1.0, "client_fraction", "must lie in (0, 1]");
  require(local_epochs >= 1, "local_epochs", "must be >= 1");
  require(rounds >= 1, "rounds", "must be >= 1");
  require(ensemble_size >= 1 && ensemble_size <= num_clients, "ensemble_size", "must lie in [1, num_clients]");
  require(classes_per_client >= 1, "classes_per_client", "must be >= 1");
  require(samples_per_client >= classes_per_client, "samples_per_client", "must be >= classes_per_client");
  require(samples_per_mode >= 0, "samples_per_mode", "must be >= 0");
  require(latent_dim >= 1, "latent_dim", "must be >= 1");
  require(std::all_of(gen_hidden.begin(), gen_hidden.end(), [](int s) { return s >= 1; }), "gen_hidden",
          "hidden sizes must be >= 1");
  require(std::all_of(disc_hidden.begin(), disc_hidden.end(), [](int s) { return s >= 1; }), "disc_hidden",
          "hidden sizes must be >= 1");
  require(hidden_activation != nn::HiddenActivation::kLeakyRelu || (leaky_slope > 0.0 && leaky_slope < 1.0),
          "leaky_slope", "must lie in (0, 1)");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(adam.learning_rate > 0.0, "learning_rate", "must be positive");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0, "beta1", "must lie in [0, 1)");
  require(adam.beta2 >= 0.0 && adam.beta2 < 1.0, "beta2", "must lie in [0, 1)");
  require(adam.epsilon > 0.0, "epsilon", "must be positive");
  require(disc_steps >= 1, "disc_steps", "must be >= 1");
  require(eval_every >= 1, "eval_every", "must be >= 1");
  require(eval_samples >= 2, "eval_samples", "must be >= 2");
  require(eval_real_samples >= 2, "eval_real_samples", "must be >= 2");
  require(local_only_epochs >= 0, "local_only_epochs", "must be >= 0");
  require(coverage_radius > 0.0, "coverage_radius", "must be positive");
  require(coverage_min_count >= 0, "coverage_min_count", "must be >= 0");
  require(pca_components >= -1, "pca_components", "must be -1 (auto), 0 (identity) or positive");
  require(workers >= 1, "workers", "must be >= 1");
  require(!output_dir.empty(), "output_dir", "must not be empty");
  if (dataset != DatasetKind::kIdx) {
    const int classes = dataset == DatasetKind::kRing8 ? 8 : 25;
    require(classes_per_client <= classes, "classes_per_client",
            "must not exceed the " + std::to_string(classes) + " classes of " + to_string(dataset));
  }
}

int ExperimentConfig::data_dim() const {
  if (dataset == DatasetKind::kIdx) throw InvalidArgument("idx data dimension is known only after loading");
  return 2;
}

nn::OutputActivation ExperimentConfig::effective_gen_output() const {
  if (gen_output) return *gen_output;
  return dataset == DatasetKind::kIdx ? nn::OutputActivation::kTanh : nn::OutputActivation::kIdentity;
}

int ExperimentConfig::effective_pca_components() const {
  if (pca_components >= 0) return pca_components;
  return dataset == DatasetKind::kIdx ? 32 : 0;
}

nn::MlpSpec ExperimentConfig::gen_spec(int dim) const {
  nn::MlpSpec spec;
  spec.layer_sizes.push_back(latent_dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), gen_hidden.begin(), gen_hidden.end());
  spec.layer_sizes.push_back(dim);
  spec.hidden = hidden_activation;
  spec.leaky_slope = leaky_slope;
  spec.output = effective_gen_output();
  return spec;
}

nn::MlpSpec ExperimentConfig::disc_spec(int dim) const {
  nn::MlpSpec spec;
  spec.layer_sizes.push_back(dim);
  spec.layer_sizes.insert(spec.layer_sizes.end(), disc_hidden.begin(), disc_hidden.end());
  spec.layer_sizes.push_back(1);
  spec.hidden = hidden_activation;
  spec.leaky_slope = leaky_slope;
  spec.output = nn::OutputActivation::kSigmoid;
  return spec;
}

gan::GanHyper ExperimentConfig::gan_hyper() const {
  gan::GanHyper hyper;
  hyper.latent_dim = latent_dim;
  hyper.batch_size = batch_size;
  hyper.adam = adam;
  hyper.gen_loss = gen_loss;
  hyper.disc_steps = disc_steps;
  return hyper;
}

fed::FederationConfig ExperimentConfig::federation_config() const {
  fed::FederationConfig fc;
  fc.num_clients = num_clients;
  fc.client_fraction = client_fraction;
  fc.local_epochs = local_epochs;
  fc.rounds = rounds;
  fc.aggregation = aggregation;
  fc.gan_hyper = gan_hyper();
  fc.eval_every = eval_every;
  fc.seed = seed;
  fc.workers = workers;
  fc.record_wall_time = record_wall_time;
  return fc;
}

ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    }
    base.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base) {
  return parse_config_text(io::read_file(path), std::move(base));
}

}  // namespace effgan::experiment
