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

#include "ensemble.hpp"

#include <bit>
#include <cstring>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"
#include "federation.hpp"
#include "io.hpp"

namespace effgan::ensemble {

namespace {

constexpr const char* kFormatName = "effgan-ensemble";
constexpr int kFormatVersion = 1;

void check_ensemble_size(int num_clients, int ensemble_size) {
  if (ensemble_size < 1 || ensemble_size > num_clients) {
    throw InvalidArgument("ensemble size must lie in [1, " + std::to_string(num_clients) + "], got " +
                          std::to_string(ensemble_size));
  }
}

std::string member_file(std::size_t index) {
  std::ostringstream os;
  os << "member_" << std::setw(3) << std::setfill('0') << index << ".bin";
  return os.str();
}

std::string encode_f64le(const nn::ParamVector& params) {
  std::string bytes(params.size() * 8, '\0');
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(params.values[static_cast<Eigen::Index>(i)]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  return bytes;
}

nn::ParamVector decode_f64le(const std::string& bytes, std::size_t expected, const std::string& name) {
  if (bytes.size() != expected * 8) {
    throw InvalidArgument(name + ": expected " + std::to_string(expected * 8) + " bytes, found " +
                          std::to_string(bytes.size()));
  }
  nn::ParamVector params = nn::ParamVector::zeros(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= std::uint64_t{static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)])} << (8 * b);
    }
    params.values[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(bits);
  }
  return params;
}

}  // namespace

void EnsembleModel::validate() const {
  gen_spec.validate();
  if (members.empty()) throw InvalidArgument("ensemble has no members");
  if (latent_dim != gen_spec.input_dim()) throw InvalidArgument("ensemble latent_dim differs from generator input size");
  for (const auto& m : members) {
    if (m.gen_params.size() != gen_spec.param_count()) {
      throw ShapeError("ensemble member " + std::to_string(m.client_id) + " does not match the generator layout");
    }
  }
}

std::vector<int> choose_clients(int num_clients, int count, RngStream& rng) {
  check_ensemble_size(num_clients, count);
  std::vector<int> ids(static_cast<std::size_t>(num_clients));
  std::iota(ids.begin(), ids.end(), 0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
    std::swap(ids[i], ids[i + rng.index(ids.size() - i)]);
  }
  ids.resize(static_cast<std::size_t>(count));
  return ids;
}

EnsembleModel fine_tune(const gan::GanPair& global, const std::vector<data::ClientDataset>& clients, int ensemble_size,
                        int epochs, const gan::GanHyper& hyper, RngStream& rng, int workers) {
  global.validate();
  check_ensemble_size(static_cast<int>(clients.size()), ensemble_size);
  if (epochs < 0) throw InvalidArgument("fine-tune epochs must be >= 0");
  const std::vector<int> ids = choose_clients(static_cast<int>(clients.size()), ensemble_size, rng);
  std::vector<std::uint64_t> seeds(ids.size());
  for (auto& s : seeds) s = rng.engine()();

  EnsembleModel ensemble{global.gen_spec, std::vector<Member>(ids.size()), hyper.latent_dim};
  fed::parallel_for(ids.size(), workers, [&](std::size_t i) {
    gan::GanPair local = global;
    local.reset_optimizers();
    RngStream stream(seeds[i]);
    try {
      local = gan::train_local(local, clients[static_cast<std::size_t>(ids[i])].data.samples, epochs, hyper, stream);
    } catch (const DivergenceError& e) {
      throw DivergenceError("fine-tuning client " + std::to_string(ids[i]) + ": " + e.what());
    }
    ensemble.members[i] = {ids[i], std::move(local.gen_params)};
  });
  ensemble.validate();
  return ensemble;
}

Matrix sample_ensemble(const EnsembleModel& ensemble, std::size_t count, RngStream& rng,
                       std::vector<std::size_t>& chosen) {
  ensemble.validate();
  if (count == 0) throw InvalidArgument("sample_ensemble: count must be >= 1");
  const Matrix noise = gan::sample_noise(ensemble.latent_dim, count, rng);
  chosen.assign(count, 0);
  if (ensemble.size() > 1) {
    for (auto& c : chosen) c = rng.index(ensemble.size());
  }

  Matrix out(static_cast<Eigen::Index>(count), ensemble.data_dim());
  std::vector<std::vector<Eigen::Index>> rows_of(ensemble.size());
  for (std::size_t i = 0; i < count; ++i) rows_of[chosen[i]].push_back(static_cast<Eigen::Index>(i));
  for (std::size_t m = 0; m < ensemble.size(); ++m) {
    const auto& rows = rows_of[m];
    if (rows.empty()) continue;
    Matrix batch(static_cast<Eigen::Index>(rows.size()), noise.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) batch.row(static_cast<Eigen::Index>(r)) = noise.row(rows[r]);
    const Matrix generated = nn::forward(ensemble.gen_spec, ensemble.members[m].gen_params, batch);
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(rows[r]) = generated.row(static_cast<Eigen::Index>(r));
  }
  return out;
}

Matrix sample_ensemble(const EnsembleModel& ensemble, std::size_t count, RngStream& rng) {
  std::vector<std::size_t> chosen;
  return sample_ensemble(ensemble, count, rng, chosen);
}

EnsembleModel build_local_only_ensemble(const std::vector<data::ClientDataset>& clients, int ensemble_size, int epochs,
                                        const gan::GanHyper& hyper, const nn::MlpSpec& gen_spec,
                                        const nn::MlpSpec& disc_spec, RngStream& rng, int workers) {
  check_ensemble_size(static_cast<int>(clients.size()), ensemble_size);
  if (epochs < 0) throw InvalidArgument("local training epochs must be >= 0");
  const std::vector<int> ids = choose_clients(static_cast<int>(clients.size()), ensemble_size, rng);
  std::vector<std::uint64_t> init_seeds(ids.size());
  std::vector<std::uint64_t> train_seeds(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    init_seeds[i] = rng.engine()();
    train_seeds[i] = rng.engine()();
  }

  EnsembleModel ensemble{gen_spec, std::vector<Member>(ids.size()), hyper.latent_dim};
  fed::parallel_for(ids.size(), workers, [&](std::size_t i) {
    gan::GanPair local = gan::GanPair::create(gen_spec, disc_spec, init_seeds[i]);
    RngStream stream(train_seeds[i]);
    try {
      local = gan::train_local(local, clients[static_cast<std::size_t>(ids[i])].data.samples, epochs, hyper, stream);
    } catch (const DivergenceError& e) {
      throw DivergenceError("local training of client " + std::to_string(ids[i]) + ": " + e.what());
    }
    ensemble.members[i] = {ids[i], std::move(local.gen_params)};
  });
  ensemble.validate();
  return ensemble;
}

void save_ensemble(const EnsembleModel& ensemble, const std::filesystem::path& dir) {
  ensemble.validate();
  nlohmann::json manifest;
  manifest["format"] = kFormatName;
  manifest["version"] = kFormatVersion;
  manifest["encoding"] = "float64-le";
  manifest["latent_dim"] = ensemble.latent_dim;
  manifest["member_count"] = ensemble.size();
  manifest["param_count"] = ensemble.gen_spec.param_count();
  manifest["gen_spec"] = {
      {"layer_sizes", ensemble.gen_spec.layer_sizes},
      {"hidden_activation", nn::to_string(ensemble.gen_spec.hidden)},
      {"leaky_slope", ensemble.gen_spec.leaky_slope},
      {"output_activation", nn::to_string(ensemble.gen_spec.output)},
  };
  manifest["members"] = nlohmann::json::array();
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const std::string file = member_file(i);
    io::write_file_atomic(dir / file, encode_f64le(ensemble.members[i].gen_params));
    manifest["members"].push_back({{"client_id", ensemble.members[i].client_id}, {"file", file}});
  }
  io::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

EnsembleModel load_ensemble(const std::filesystem::path& dir) {
  const std::string text = io::read_file(dir / "manifest.json");
  EnsembleModel ensemble;
  try {
    const auto manifest = nlohmann::json::parse(text);
    if (manifest.at("format").get<std::string>() != kFormatName) throw InvalidArgument("not an ensemble manifest");
    if (manifest.at("version").get<int>() != kFormatVersion) throw InvalidArgument("unsupported ensemble version");
    if (manifest.at("encoding").get<std::string>() != "float64-le") throw InvalidArgument("unsupported encoding");
    const auto& spec = manifest.at("gen_spec");
    ensemble.gen_spec.layer_sizes = spec.at("layer_sizes").get<std::vector<int>>();
    ensemble.gen_spec.hidden = nn::parse_hidden_activation(spec.at("hidden_activation").get<std::string>());
    ensemble.gen_spec.leaky_slope = spec.at("leaky_slope").get<double>();
    ensemble.gen_spec.output = nn::parse_output_activation(spec.at("output_activation").get<std::string>());
    ensemble.gen_spec.validate();
    ensemble.latent_dim = manifest.at("latent_dim").get<int>();
    const auto param_count = manifest.at("param_count").get<std::size_t>();
    if (param_count != ensemble.gen_spec.param_count()) throw InvalidArgument("param_count disagrees with gen_spec");
    const auto& members = manifest.at("members");
    if (members.size() != manifest.at("member_count").get<std::size_t>()) {
      throw InvalidArgument("member_count disagrees with the member list");
    }
    for (const auto& m : members) {
      const auto file = m.at("file").get<std::string>();
      if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
        throw InvalidArgument("member file must be a plain name: " + file);
      }
      ensemble.members.push_back({m.at("client_id").get<int>(), decode_f64le(io::read_file(dir / file), param_count, file)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("malformed ensemble manifest in " + dir.string() + ": " + e.what());
  }
  ensemble.validate();
  return ensemble;
}

}  // namespace effgan::ensemble
