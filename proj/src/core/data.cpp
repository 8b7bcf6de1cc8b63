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

#include "data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "errors.hpp"
#include "rng.hpp"

namespace effgan::data {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::uint32_t checked_header(const std::vector<std::uint8_t>& bytes, std::uint32_t magic, std::size_t dims,
                             const std::filesystem::path& path) {
  if (bytes.size() < 4) {
    throw IdxError(IdxError::Kind::kTruncated, path.string() + ": file shorter than the IDX magic");
  }
  const std::uint32_t found = read_be32(bytes, 0);
  if (found != magic) {
    std::ostringstream os;
    os << path.string() << ": IDX magic 0x" << std::hex << found << ", expected 0x" << magic;
    throw IdxError(IdxError::Kind::kBadMagic, os.str());
  }
  if (bytes.size() < 4 + 4 * dims) {
    throw IdxError(IdxError::Kind::kTruncated, path.string() + ": truncated IDX header");
  }
  return read_be32(bytes, 4);
}

// Symmetric square root of a PSD matrix via eigendecomposition.
Matrix psd_root(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& rows) const {
  LabeledDataset out;
  out.num_classes = num_classes;
  out.samples.resize(static_cast<Eigen::Index>(rows.size()), samples.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.samples.row(static_cast<Eigen::Index>(i)) = samples.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

void LabeledDataset::validate() const {
  if (static_cast<std::size_t>(samples.rows()) != labels.size()) {
    throw InvalidArgument("dataset has " + std::to_string(samples.rows()) + " samples but " +
                          std::to_string(labels.size()) + " labels");
  }
  for (int label : labels) {
    if (label < 0 || label >= num_classes) {
      throw InvalidArgument("label " + std::to_string(label) + " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

void MixtureSpec::validate() const {
  if (modes.empty()) throw InvalidArgument("mixture needs at least one mode");
  const auto d = modes.front().mean.size();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const auto& mode = modes[m];
    const std::string where = "mixture mode " + std::to_string(m);
    if (mode.mean.size() != d || mode.covariance.rows() != d || mode.covariance.cols() != d) {
      throw InvalidArgument(where + ": inconsistent dimensions");
    }
    if (mode.class_label < 0) throw InvalidArgument(where + ": negative class label");
    const double scale = std::max(1.0, mode.covariance.cwiseAbs().maxCoeff());
    if ((mode.covariance - mode.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
      throw InvalidArgument(where + ": covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(mode.covariance, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -1e-10 * scale) {
      throw InvalidArgument(where + ": covariance is not positive semidefinite");
    }
  }
}

int MixtureSpec::num_classes() const {
  int top = 0;
  for (const auto& mode : modes) top = std::max(top, mode.class_label + 1);
  return top;
}

MixtureSpec ring8() {
  MixtureSpec spec;
  for (int k = 0; k < 8; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / 8.0;
    Vector mean(2);
    mean << 2.0 * std::cos(angle), 2.0 * std::sin(angle);
    spec.modes.push_back({mean, 0.02 * Matrix::Identity(2, 2), k});
  }
  return spec;
}

MixtureSpec grid25() {
  MixtureSpec spec;
  int label = 0;
  for (int i = -2; i <= 2; ++i) {
    for (int j = -2; j <= 2; ++j) {
      Vector mean(2);
      mean << 2.0 * i, 2.0 * j;
      spec.modes.push_back({mean, 0.0025 * Matrix::Identity(2, 2), label++});
    }
  }
  return spec;
}

LabeledDataset synth_mixture(const MixtureSpec& spec, std::size_t samples_per_mode, std::uint64_t seed) {
  spec.validate();
  if (samples_per_mode < 1) throw InvalidArgument("samples_per_mode must be >= 1");
  const int d = spec.dim();
  LabeledDataset out;
  out.num_classes = spec.num_classes();
  out.samples.resize(static_cast<Eigen::Index>(spec.modes.size() * samples_per_mode), d);
  out.labels.reserve(spec.modes.size() * samples_per_mode);
  RngStream rng(seed);
  Eigen::Index row = 0;
  Eigen::RowVectorXd z(d);
  for (const auto& mode : spec.modes) {
    const Matrix root = psd_root(mode.covariance);
    for (std::size_t i = 0; i < samples_per_mode; ++i, ++row) {
      for (int j = 0; j < d; ++j) z[j] = rng.normal();
      out.samples.row(row) = mode.mean.transpose() + z * root;
      out.labels.push_back(mode.class_label);
    }
  }
  return out;
}

LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto image_bytes = read_file(images_path);
  const auto label_bytes = read_file(labels_path);

  const std::uint32_t image_count = checked_header(image_bytes, kIdxImageMagic, 3, images_path);
  const std::uint32_t rows = read_be32(image_bytes, 8);
  const std::uint32_t cols = read_be32(image_bytes, 12);
  const std::uint32_t label_count = checked_header(label_bytes, kIdxLabelMagic, 1, labels_path);

  const std::size_t dim = std::size_t{rows} * cols;
  const std::size_t image_header = 16;
  const std::size_t label_header = 8;
  if (image_bytes.size() < image_header + std::size_t{image_count} * dim) {
    throw IdxError(IdxError::Kind::kTruncated, images_path.string() + ": payload shorter than " +
                                                   std::to_string(image_count) + " images of " +
                                                   std::to_string(dim) + " bytes");
  }
  if (label_bytes.size() < label_header + label_count) {
    throw IdxError(IdxError::Kind::kTruncated,
                   labels_path.string() + ": payload shorter than " + std::to_string(label_count) + " labels");
  }
  if (image_count != label_count) {
    throw IdxError(IdxError::Kind::kCountMismatch, "IDX files disagree: " + std::to_string(image_count) +
                                                       " images vs " + std::to_string(label_count) + " labels");
  }

  LabeledDataset out;
  out.samples.resize(image_count, static_cast<Eigen::Index>(dim));
  out.labels.resize(label_count);
  for (std::size_t i = 0; i < image_count; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      out.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          image_bytes[image_header + i * dim + j] / 127.5 - 1.0;
    }
    out.labels[i] = label_bytes[label_header + i];
    out.num_classes = std::max(out.num_classes, out.labels[i] + 1);
  }
  return out;
}

Partition partition_label_skew(const LabeledDataset& data, int num_clients, int classes_per_client,
                               std::size_t samples_per_client, std::uint64_t seed) {
  data.validate();
  const int num_classes = data.num_classes;
  if (num_clients < 1) throw InvalidArgument("partition needs at least one client");
  if (classes_per_client < 1 || classes_per_client > num_classes) {
    throw InvalidArgument("classes per client must lie in [1, " + std::to_string(num_classes) + "], got " +
                          std::to_string(classes_per_client));
  }
  if (samples_per_client < static_cast<std::size_t>(classes_per_client)) {
    throw InvalidArgument("samples per client must be at least the number of classes per client");
  }

  std::vector<std::vector<std::size_t>> pools(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < data.size(); ++i) pools[static_cast<std::size_t>(data.labels[i])].push_back(i);

  RngStream rng(derive_seed(seed, StreamTag::kPartition));
  std::vector<int> class_order(static_cast<std::size_t>(num_classes));
  std::iota(class_order.begin(), class_order.end(), 0);
  std::shuffle(class_order.begin(), class_order.end(), rng.engine());

  const auto per_class = samples_per_client / static_cast<std::size_t>(classes_per_client);
  const auto remainder = samples_per_client % static_cast<std::size_t>(classes_per_client);
  auto quota = [&](int j) { return per_class + (static_cast<std::size_t>(j) < remainder ? 1 : 0); };
  auto class_of = [&](int client, int j) {
    return class_order[static_cast<std::size_t>((client * classes_per_client + j) % num_classes)];
  };

  // Feasibility: a single client can never need more rows of a class than
  // the class holds.
  std::vector<std::size_t> largest_demand(static_cast<std::size_t>(num_classes), 0);
  for (int k = 0; k < num_clients; ++k) {
    for (int j = 0; j < classes_per_client; ++j) {
      auto& demand = largest_demand[static_cast<std::size_t>(class_of(k, j))];
      demand = std::max(demand, quota(j));
    }
  }
  std::ostringstream shortfall;
  for (int c = 0; c < num_classes; ++c) {
    const auto need = largest_demand[static_cast<std::size_t>(c)];
    const auto have = pools[static_cast<std::size_t>(c)].size();
    if (need > have) {
      shortfall << " class " << c << " needs " << need << " rows per client but has " << have
                << " (short " << need - have << ");";
    }
  }
  if (!shortfall.str().empty()) throw InfeasiblePartition("infeasible label-skew partition:" + shortfall.str());

  for (auto& pool : pools) std::shuffle(pool.begin(), pool.end(), rng.engine());
  std::vector<std::size_t> cursor(pools.size(), 0);
  std::vector<bool> recycled(pools.size(), false);

  Partition out;
  out.clients.reserve(static_cast<std::size_t>(num_clients));
  for (int k = 0; k < num_clients; ++k) {
    std::vector<std::size_t> rows;
    rows.reserve(samples_per_client);
    for (int j = 0; j < classes_per_client; ++j) {
      const auto c = static_cast<std::size_t>(class_of(k, j));
      auto& pool = pools[c];
      const std::size_t first = rows.size();
      while (rows.size() - first < quota(j)) {
        if (cursor[c] == pool.size()) {
          std::shuffle(pool.begin(), pool.end(), rng.engine());
          cursor[c] = 0;
          recycled[c] = true;
        }
        const std::size_t candidate = pool[cursor[c]++];
        // A client never receives the same row twice.
        if (std::find(rows.begin() + static_cast<std::ptrdiff_t>(first), rows.end(), candidate) == rows.end()) {
          rows.push_back(candidate);
        }
      }
    }
    out.clients.push_back({k, data.subset(rows)});
  }
  for (std::size_t c = 0; c < recycled.size(); ++c) {
    if (recycled[c]) {
      out.reused_rows = true;
      out.warnings.push_back("class " + std::to_string(c) +
                             " ran out of rows; its rows were reused across clients");
    }
  }
  return out;
}

LabeledDataset pool_clients(const std::vector<ClientDataset>& clients) {
  if (clients.empty()) throw InvalidArgument("no clients to pool");
  LabeledDataset out;
  Eigen::Index total = 0;
  for (const auto& c : clients) {
    total += c.data.samples.rows();
    out.num_classes = std::max(out.num_classes, c.data.num_classes);
  }
  out.samples.resize(total, clients.front().data.samples.cols());
  Eigen::Index row = 0;
  for (const auto& c : clients) {
    out.samples.middleRows(row, c.data.samples.rows()) = c.data.samples;
    row += c.data.samples.rows();
    out.labels.insert(out.labels.end(), c.data.labels.begin(), c.data.labels.end());
  }
  return out;
}

FeatureMap fit_feature_map(const LabeledDataset& data, int components) {
  FeatureMap map;
  if (components == 0) return map;
  const auto n = data.samples.rows();
  const auto d = data.samples.cols();
  if (components < 0 || components > d || components > n) {
    throw InvalidArgument("pca components must lie in [1, min(d, N)], got " + std::to_string(components));
  }
  map.kind = FeatureMap::Kind::kPca;
  map.mean = data.samples.colwise().mean().transpose();
  const Matrix centered = data.samples.rowwise() - map.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const auto& values = solver.eigenvalues();  // ascending
  const double largest = std::max(values[d - 1], 0.0);
  if (!(values[d - components] > 1e-12 * std::max(1.0, largest))) {
    throw InvalidArgument("covariance rank is below the requested " + std::to_string(components) +
                          " pca components");
  }
  map.projection.resize(components, d);
  for (int i = 0; i < components; ++i) {
    Vector v = solver.eigenvectors().col(d - 1 - i);
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v[pivot] < 0) v = -v;
    map.projection.row(i) = v.transpose();
  }
  return map;
}

Matrix apply_feature_map(const FeatureMap& map, const Matrix& samples) {
  if (map.kind == FeatureMap::Kind::kIdentity) return samples;
  if (samples.cols() != map.projection.cols()) {
    throw ShapeError("feature map expects " + std::to_string(map.projection.cols()) + " columns, got " +
                     std::to_string(samples.cols()));
  }
  return (samples.rowwise() - map.mean.transpose()) * map.projection.transpose();
}

}  // namespace effgan::data
