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

// Criterion 5: ensemble size M in {2, 10, 20} with K=20, n=2, E=5. The
// federation is identical across M for a given seed; only the fine-tuned
// members differ.

#include <cmath>
#include <cstdio>
#include <map>

#include "acceptance.hpp"

using namespace acceptance;

int main() {
  ExperimentConfig base = profile();
  base.local_epochs = 5;

  const auto points = effgan::experiment::run_grid(base, "M=2,10,20;" + seed_axis(), out_dir("ensemble_size"));
  std::map<int, std::vector<double>> best;
  bool all_ok = true;
  for (const auto& p : points) {
    if (!p.ok) {
      std::printf("point %s failed: %s\n", p.directory.c_str(), p.error.c_str());
      all_ok = false;
      continue;
    }
    best[std::stoi(p.values.at(0))].push_back(p.result.best_fid);
  }
  for (int m : {2, 10, 20}) std::printf("M=%d effgan_best=[%s]\n", m, join(best[m]).c_str());

  const double f2 = median(best[2]), f10 = median(best[10]), f20 = median(best[20]);
  const bool improves = f10 < f2;
  const bool diminishing = std::abs(f20 - f10) < 0.5 * std::abs(f10 - f2);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "median best FID M=2 %.4g, M=10 %.4g, M=20 %.4g (M=10 < M=2: %s; |20-10| %.3g < 0.5*|10-2| %.3g: %s)",
                f2, f10, f20, improves ? "yes" : "no", std::abs(f20 - f10), 0.5 * std::abs(f10 - f2),
                diminishing ? "yes" : "no");
  Reporter rep;
  rep.report(5, all_ok && improves && diminishing, buf);
  return rep.exit_code();
}
