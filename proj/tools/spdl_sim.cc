//
// Copyright 2026 The SPDL Authors
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
//

// Experiment driver: one run (or a repetition series) per invocation, or the
// full comparison grid with --grid.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "spdl/error.h"
#include "spdl/experiment.h"
#include "spdl/ledger.h"
#include "spdl/netsim.h"

namespace {

struct Override {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr Override kOverrides[] = {
    {"--nodes", "nodes", "number of nodes N"},
    {"--byz-ratio", "byz_ratio", "fraction of Byzantine nodes"},
    {"--byz-strategy", "byz_strategy",
     "honest|silent|random-gaussian[:s]|sign-flip[:s]|constant[:c]|"
     "equivocate|substitute-delta[:s]"},
    {"--rounds", "rounds", "rounds T"},
    {"--gamma", "gamma", "learning rate"},
    {"--epsilon", "epsilon", "privacy budget"},
    {"--delta", "delta", "privacy delta"},
    {"--clip", "clip", "clipping norm C"},
    {"--dp-mode", "dp_mode", "whole-run|per-round"},
    {"--batch-size", "batch_size", "local batch size"},
    {"--gar", "gar", "krum|median|average"},
    {"--scheme", "scheme", "pure|dp|spdl"},
    {"--dataset", "dataset", "synthetic|idx"},
    {"--partition", "partition", "iid|by-label"},
    {"--loss", "loss", "softmax|least-squares"},
    {"--seed", "seed", "random seed"},
    {"--repetitions", "repetitions", "runs with consecutive seeds"},
    {"--idx-train-images", "idx_train_images", "IDX training images"},
    {"--idx-train-labels", "idx_train_labels", "IDX training labels"},
    {"--idx-test-images", "idx_test_images", "IDX test images"},
    {"--idx-test-labels", "idx_test_labels", "IDX test labels"},
};

std::string WithSuffix(const std::string& path, int rep, int reps) {
  if (reps == 1) return path;
  const std::filesystem::path p(path);
  return (p.parent_path() /
          (p.stem().string() + ".rep" + std::to_string(rep) +
           p.extension().string()))
      .string();
}

int RunSingle(spdl::ExperimentConfig config, const std::string& trace_path,
              const std::string& chain_path) {
  const int reps = config.repetitions;
  const std::uint64_t seed0 = config.sim.seed;
  for (int rep = 0; rep < reps; ++rep) {
    config.sim.seed = seed0 + static_cast<std::uint64_t>(rep);
    spdl::Simulation sim(config.sim, spdl::BuildSimData(config));
    std::ofstream trace;
    if (!trace_path.empty()) {
      trace.open(WithSuffix(trace_path, rep, reps));
      if (!trace) throw spdl::IoError("cannot open " + trace_path);
      sim.SetTraceSink(&trace);
    }
    const auto metrics = sim.Run();
    if (config.out.empty()) {
      std::cout << spdl::FormatCsv(metrics);
    } else {
      spdl::EmitCsv(metrics, WithSuffix(config.out, rep, reps));
    }
    if (!chain_path.empty()) {
      spdl::ExportChain(sim.chain(), WithSuffix(chain_path, rep, reps));
    }
    if (!metrics.empty()) {
      std::fprintf(stderr, "seed=%llu final_test_error=%.4f\n",
                   static_cast<unsigned long long>(config.sim.seed),
                   metrics.back().test_error);
    }
  }
  return 0;
}

int RunGrid(const spdl::ExperimentConfig& base) {
  if (base.out.empty()) {
    throw spdl::ConfigurationError("--grid needs --out DIR");
  }
  std::filesystem::create_directories(base.out);
  const int nodes[] = {4, 10, 20, 30};
  const double ratios[] = {0.0, 0.1, 0.2, 0.3};
  const std::size_t batches[] = {10, 100};
  const double epsilons[] = {0.4, 0.04, 0.02};
  const spdl::Scheme schemes[] = {spdl::Scheme::kPure, spdl::Scheme::kDp,
                                  spdl::Scheme::kSpdl};
  for (int n : nodes) {
    for (double br : ratios) {
      for (std::size_t b : batches) {
        for (double eps : epsilons) {
          for (spdl::Scheme scheme : schemes) {
            spdl::ExperimentConfig c = base;
            c.sim.num_nodes = n;
            c.sim.byz_ratio = br;
            c.sim.batch_size = b;
            c.sim.dp.epsilon = eps;
            c.sim.scheme = scheme;
            if (scheme != spdl::Scheme::kSpdl) c.sim.gar = spdl::GarKind::kAverage;
            char name[128];
            std::snprintf(name, sizeof name, "%s_n%d_br%02d_b%zu_eps%g.csv",
                          spdl::SchemeName(scheme).c_str(), n,
                          static_cast<int>(br * 100 + 0.5), b, eps);
            c.out = (std::filesystem::path(base.out) / name).string();
            c.repetitions = 1;
            try {
              RunSingle(c, "", "");
            } catch (const spdl::ConfigurationError& e) {
              std::fprintf(stderr, "skip %s: %s\n", name, e.what());
            }
          }
        }
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPDL decentralized learning simulator"};
  std::string config_path;
  std::string out;
  std::string trace_path;
  std::string chain_path;
  bool grid = false;
  app.add_option("--config", config_path, "key = value config file")
      ->check(CLI::ExistingFile);
  std::vector<std::pair<std::string, std::string>> values(
      std::size(kOverrides));
  for (std::size_t i = 0; i < std::size(kOverrides); ++i) {
    values[i].first = kOverrides[i].key;
    app.add_option(kOverrides[i].flag, values[i].second, kOverrides[i].help);
  }
  app.add_option("--out", out, "CSV output path (stdout when absent)");
  app.add_option("--trace", trace_path, "protocol trace log path");
  app.add_option("--export-chain", chain_path, "write the final ledger here");
  app.add_flag("--grid", grid, "run the comparison grid into --out DIR");
  CLI11_PARSE(app, argc, argv);

  try {
    spdl::ExperimentConfig config = config_path.empty()
                                        ? spdl::ExperimentConfig{}
                                        : spdl::LoadConfigFile(config_path);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (app.count(kOverrides[i].flag) > 0) {
        spdl::ApplyConfigKey(config, values[i].first, values[i].second);
      }
    }
    if (!out.empty()) config.out = out;
    return grid ? RunGrid(config) : RunSingle(config, trace_path, chain_path);
  } catch (const spdl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
