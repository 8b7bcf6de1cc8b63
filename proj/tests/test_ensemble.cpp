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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "data.hpp"
#include "ensemble.hpp"
#include "errors.hpp"
#include "gan.hpp"
#include "metrics.hpp"
#include "rng.hpp"

namespace effgan::ensemble {
namespace {

namespace fs = std::filesystem;

nn::MlpSpec gen_spec() { return {{2, 8, 2}, nn::HiddenActivation::kLeakyRelu, 0.2, nn::OutputActivation::kIdentity}; }
nn::MlpSpec disc_spec() { return {{2, 8, 1}, nn::HiddenActivation::kLeakyRelu, 0.2, nn::OutputActivation::kSigmoid}; }

gan::GanHyper hyper() {
  gan::GanHyper h;
  h.latent_dim = 2;
  h.batch_size = 8;
  return h;
}

std::vector<data::ClientDataset> clients(int k) {
  return data::partition_label_skew(data::synth_mixture(data::ring8(), 100, 1), k, 1, 16, 2).clients;
}

EnsembleModel three_members() {
  EnsembleModel e{gen_spec(), {}, 2};
  for (int m = 0; m < 3; ++m) e.members.push_back({10 + m, nn::init_mlp(gen_spec(), 100 + m)});
  // Spread the members apart so their outputs are distinguishable.
  for (int m = 0; m < 3; ++m) e.members[static_cast<std::size_t>(m)].gen_params.values.tail(2).setConstant(3.0 * m);
  return e;
}

class EnsembleFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("effgan_ens_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(FineTune, ZeroEpochsKeepsGlobalGenerator) {
  const auto global = gan::GanPair::create(gen_spec(), disc_spec(), 3);
  RngStream rng(1);
  const EnsembleModel e = fine_tune(global, clients(6), 4, 0, hyper(), rng);
  ASSERT_EQ(e.size(), 4u);
  for (const auto& m : e.members) EXPECT_EQ(m.gen_params, global.gen_params);
}

TEST(FineTune, FullSizeUsesEveryClientOnce) {
  const auto global = gan::GanPair::create(gen_spec(), disc_spec(), 3);
  RngStream rng(2);
  const EnsembleModel e = fine_tune(global, clients(6), 6, 1, hyper(), rng);
  std::set<int> ids;
  for (const auto& m : e.members) ids.insert(m.client_id);
  EXPECT_EQ(ids, (std::set<int>{0, 1, 2, 3, 4, 5}));
}

TEST(FineTune, DeterministicAndBounded) {
  const auto global = gan::GanPair::create(gen_spec(), disc_spec(), 3);
  RngStream a(5), b(5);
  const auto cs = clients(6);
  EXPECT_EQ(fine_tune(global, cs, 3, 1, hyper(), a).members, fine_tune(global, cs, 3, 1, hyper(), b).members);
  RngStream c(5);
  EXPECT_THROW(fine_tune(global, cs, 7, 1, hyper(), c), InvalidArgument);
  EXPECT_THROW(fine_tune(global, cs, 0, 1, hyper(), c), InvalidArgument);
}

TEST(FineTune, MembersMatchSeparateTraining) {
  // Replays the documented stream order: selection, then one seed per member.
  const auto global = gan::GanPair::create(gen_spec(), disc_spec(), 3);
  const auto cs = clients(6);
  RngStream rng(9);
  const EnsembleModel e = fine_tune(global, cs, 2, 2, hyper(), rng);
  RngStream replay(9);
  const auto ids = choose_clients(6, 2, replay);
  const std::uint64_t first = replay.engine()();
  const std::vector<std::uint64_t> seeds = {first, replay.engine()()};
  for (std::size_t i = 0; i < 2; ++i) {
    gan::GanPair local = global;
    local.reset_optimizers();
    RngStream s(seeds[i]);
    const auto trained = gan::train_local(local, cs[static_cast<std::size_t>(ids[i])].data.samples, 2, hyper(), s);
    EXPECT_EQ(e.members[i].client_id, ids[i]);
    EXPECT_EQ(e.members[i].gen_params, trained.gen_params);
  }
}

TEST(SampleEnsemble, SingleMemberEqualsSingleGenerator) {
  EnsembleModel e{gen_spec(), {{4, nn::init_mlp(gen_spec(), 7)}}, 2};
  RngStream a(3), b(3);
  const nn::Matrix x = sample_ensemble(e, 500, a);
  const nn::Matrix y = gan::sample_generator(gen_spec(), e.members[0].gen_params, 500, 2, b);
  EXPECT_EQ(x, y);
  const auto mx = metrics::fit_moments(x);
  const auto my = metrics::fit_moments(y);
  EXPECT_LT((mx.mean - my.mean).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((mx.covariance - my.covariance).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SampleEnsemble, IdenticalMembersEqualSingleGenerator) {
  const auto p = nn::init_mlp(gen_spec(), 8);
  EnsembleModel e{gen_spec(), {{0, p}, {1, p}, {2, p}}, 2};
  RngStream a(4), b(4);
  EXPECT_EQ(sample_ensemble(e, 64, a), gan::sample_generator(gen_spec(), p, 64, 2, b));
}

TEST(SampleEnsemble, ShapeAndErrors) {
  const EnsembleModel e = three_members();
  RngStream rng(1);
  const nn::Matrix x = sample_ensemble(e, 10, rng);
  EXPECT_EQ(x.rows(), 10);
  EXPECT_EQ(x.cols(), 2);
  EXPECT_THROW(sample_ensemble(e, 0, rng), InvalidArgument);
  EnsembleModel bad = e;
  bad.members[1].gen_params = nn::ParamVector::zeros(3);
  EXPECT_THROW(sample_ensemble(bad, 5, rng), InvalidArgument);
}

TEST(SampleEnsemble, MemberFrequenciesWithinThreeSigma) {
  EnsembleModel e = three_members();
  e.members.push_back({13, nn::init_mlp(gen_spec(), 104)});
  RngStream rng(6);
  std::vector<std::size_t> chosen;
  const std::size_t n = 100000;
  sample_ensemble(e, n, rng, chosen);
  std::vector<double> counts(4, 0.0);
  for (auto c : chosen) counts[c] += 1.0;
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (double c : counts) EXPECT_LT(std::abs(c - n * 0.25), 3.0 * sigma);
}

TEST(SampleEnsemble, RowsComeFromTheirMember) {
  const EnsembleModel e = three_members();
  RngStream a(12);
  std::vector<std::size_t> chosen;
  const nn::Matrix x = sample_ensemble(e, 200, a, chosen);
  RngStream b(12);
  const nn::Matrix noise = gan::sample_noise(2, 200, b);
  for (Eigen::Index i = 0; i < 200; ++i) {
    const auto& member = e.members[chosen[static_cast<std::size_t>(i)]];
    const nn::Matrix one = nn::forward(gen_spec(), member.gen_params, noise.row(i));
    // Batched and single-row products may round differently.
    EXPECT_LT((x.row(i) - one.row(0)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SampleEnsemble, MixtureLawFirstMoments) {
  const EnsembleModel e = three_members();
  const std::size_t n = 100000;
  RngStream rng(21);
  const auto mix = metrics::fit_moments(sample_ensemble(e, n, rng));
  nn::Vector expected = nn::Vector::Zero(2);
  double member_var = 0.0;
  for (const auto& m : e.members) {
    RngStream s(1000 + static_cast<std::uint64_t>(m.client_id));
    const auto mm = metrics::fit_moments(gan::sample_generator(gen_spec(), m.gen_params, 2 * n, 2, s));
    expected += mm.mean / 3.0;
    member_var = std::max(member_var, mm.covariance.diagonal().maxCoeff());
  }
  for (int j = 0; j < 2; ++j) {
    const double sigma = std::sqrt(mix.covariance(j, j) / n + member_var / (3.0 * 2 * n));
    EXPECT_LT(std::abs(mix.mean[j] - expected[j]), 3.0 * sigma);
  }
}

TEST(SampleEnsemble, SamplingLeavesMembersUntouched) {
  const EnsembleModel e = three_members();
  const EnsembleModel copy = e;
  RngStream rng(2);
  sample_ensemble(e, 1000, rng);
  EXPECT_EQ(e.members, copy.members);
}

TEST(LocalOnly, MembersDifferAndZeroEpochsAreInits) {
  const auto cs = clients(6);
  RngStream a(3);
  const EnsembleModel e = build_local_only_ensemble(cs, 4, 0, hyper(), gen_spec(), disc_spec(), a);
  std::vector<nn::ParamVector> params;
  for (const auto& m : e.members) params.push_back(m.gen_params);
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = i + 1; j < params.size(); ++j) EXPECT_NE(params[i], params[j]);
  EXPECT_GT(metrics::parameter_drift(params), 0.0);

  // Epochs 0: each member is GanPair::create(init seed) untouched.
  RngStream replay(3);
  choose_clients(6, 4, replay);
  for (std::size_t i = 0; i < 4; ++i) {
    const std::uint64_t init_seed = replay.engine()();
    replay.engine()();
    EXPECT_EQ(e.members[i].gen_params, gan::GanPair::create(gen_spec(), disc_spec(), init_seed).gen_params);
  }
}

TEST(LocalOnly, Deterministic) {
  const auto cs = clients(6);
  RngStream a(8), b(8);
  EXPECT_EQ(build_local_only_ensemble(cs, 3, 1, hyper(), gen_spec(), disc_spec(), a).members,
            build_local_only_ensemble(cs, 3, 1, hyper(), gen_spec(), disc_spec(), b).members);
}

TEST_F(EnsembleFiles, SaveLoadRoundTrip) {
  const EnsembleModel e = three_members();
  save_ensemble(e, dir_);
  const EnsembleModel back = load_ensemble(dir_);
  EXPECT_EQ(back.gen_spec, e.gen_spec);
  EXPECT_EQ(back.latent_dim, e.latent_dim);
  EXPECT_EQ(back.members, e.members);
  EXPECT_TRUE(fs::exists(dir_ / "member_000.bin"));
  EXPECT_TRUE(fs::exists(dir_ / "member_002.bin"));
}

TEST_F(EnsembleFiles, BlobIsLittleEndianBinary64) {
  EnsembleModel e{gen_spec(), {{0, nn::ParamVector::zeros(gen_spec().param_count())}}, 2};
  e.members[0].gen_params.values[0] = 1.0;   // 0x3FF0000000000000
  e.members[0].gen_params.values[1] = -2.5;  // 0xC004000000000000
  save_ensemble(e, dir_);
  const std::string bytes = slurp(dir_ / "member_000.bin");
  ASSERT_EQ(bytes.size(), 8 * gen_spec().param_count());
  const unsigned char one[8] = {0, 0, 0, 0, 0, 0, 0xF0, 0x3F};
  const unsigned char minus[8] = {0, 0, 0, 0, 0, 0, 0x04, 0xC0};
  for (int b = 0; b < 8; ++b) {
    EXPECT_EQ(static_cast<unsigned char>(bytes[static_cast<std::size_t>(b)]), one[b]) << "byte " << b;
    EXPECT_EQ(static_cast<unsigned char>(bytes[static_cast<std::size_t>(8 + b)]), minus[b]) << "byte " << b;
  }
  for (std::size_t i = 16; i < bytes.size(); ++i) EXPECT_EQ(bytes[i], '\0');
}

TEST_F(EnsembleFiles, MalformedInputsRejected) {
  EXPECT_THROW(load_ensemble(dir_), IoError);
  save_ensemble(three_members(), dir_);

  std::string manifest = slurp(dir_ / "manifest.json");
  const auto pos = manifest.find("member_001.bin");
  ASSERT_NE(pos, std::string::npos);
  std::string evil = manifest;
  evil.replace(pos, 14, "../escape.bin");
  { std::ofstream(dir_ / "manifest.json") << evil; }
  EXPECT_THROW(load_ensemble(dir_), InvalidArgument);

  { std::ofstream(dir_ / "manifest.json") << manifest; }
  { std::ofstream(dir_ / "member_001.bin", std::ios::binary) << "short"; }
  EXPECT_THROW(load_ensemble(dir_), InvalidArgument);

  { std::ofstream(dir_ / "manifest.json") << "{not json"; }
  EXPECT_THROW(load_ensemble(dir_), InvalidArgument);
}

}  // namespace
}  // namespace effgan::ensemble
