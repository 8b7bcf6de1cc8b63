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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nn.hpp"

namespace effgan::data {

using nn::Matrix;
using nn::Vector;

struct LabeledDataset {
  Matrix samples;           // N x d
  std::vector<int> labels;  // N entries in [0, num_classes)
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  int dim() const { return static_cast<int>(samples.cols()); }

  // Rows of `samples` whose indices are listed, labels carried along.
  LabeledDataset subset(const std::vector<std::size_t>& rows) const;

  void validate() const;
};

struct MixtureMode {
  Vector mean;
  Matrix covariance;
  int class_label = 0;
};

struct MixtureSpec {
  std::vector<MixtureMode> modes;

  // At least one mode, consistent dimensions, symmetric PSD covariances,
  // nonnegative labels. Throws InvalidArgument.
  void validate() const;

  int num_classes() const;
  int dim() const { return static_cast<int>(modes.front().mean.size()); }
};

// Eight modes on a circle of radius 2 with covariance 0.02 I, one class per
// mode.
MixtureSpec ring8();

// 25 modes on the 5x5 grid {-4,-2,0,2,4}^2 with covariance 0.0025 I, one
// class per mode.
MixtureSpec grid25();

// Exactly samples_per_mode draws per mode, in mode order.
LabeledDataset synth_mixture(const MixtureSpec& spec, std::size_t samples_per_mode, std::uint64_t seed);

// Reads an IDX image/label file pair (magic 0x00000803 / 0x00000801).
// Pixels map to [-1, 1] by p / 127.5 - 1, images flatten row-major.
// Errors: IoError for unreadable files, IdxError with kBadMagic,
// kTruncated or kCountMismatch.
LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

struct ClientDataset {
  int client_id = 0;
  LabeledDataset data;
};

struct Partition {
  std::vector<ClientDataset> clients;
  // Set when a class pool ran out and rows were reused across clients.
  bool reused_rows = false;
  std::vector<std::string> warnings;
};

// Label-skew split: every client gets exactly `classes_per_client` distinct
// classes and `samples_per_client` rows. Classes are dealt round-robin over a
// seed-shuffled class list; within a client rows are split evenly across its
// classes with the remainder going to the first ones. Rows are drawn without
// replacement inside a client. When a class runs dry its pool is reshuffled
// and reused for later clients, which is reported in the result.
Partition partition_label_skew(const LabeledDataset& data, int num_clients, int classes_per_client,
                               std::size_t samples_per_client, std::uint64_t seed);

// Union of all client samples, in client order.
LabeledDataset pool_clients(const std::vector<ClientDataset>& clients);

struct FeatureMap {
  enum class Kind { kIdentity, kPca };
  Kind kind = Kind::kIdentity;
  Matrix projection;  // k x d, orthonormal rows (pca only)
  Vector mean;        // d (pca only)

  int output_dim(int input_dim) const {
    return kind == Kind::kIdentity ? input_dim : static_cast<int>(projection.rows());
  }
};

// components == 0 selects the identity map. For PCA, the leading
// `components` eigenvectors of the sample covariance become the projection.
// Throws InvalidArgument if components exceeds d or N, or if the covariance
// rank is below `components`.
FeatureMap fit_feature_map(const LabeledDataset& data, int components);
Matrix apply_feature_map(const FeatureMap& map, const Matrix& samples);

}  // namespace effgan::data
