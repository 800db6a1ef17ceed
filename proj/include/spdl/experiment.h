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

#ifndef SPDL_EXPERIMENT_H_
#define SPDL_EXPERIMENT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spdl/learning.h"
#include "spdl/netsim.h"

namespace spdl {

struct TrainTest {
  Dataset train;
  Dataset test;
};

// K unit-variance Gaussian blobs, balanced labels. For K <= p the means are
// pairwise `separation` apart; otherwise they are random directions at radius
// separation / sqrt(2). Records are shuffled and split 80/20.
TrainTest GenerateSynthetic(std::size_t n_records, std::size_t p,
                            std::size_t K, double separation,
                            std::uint64_t seed);

// IDX image and label files: pixels scaled to [0, 1], ten classes.
Dataset LoadIdx(const std::string& images_path,
                const std::string& labels_path);
// Writes features quantized to bytes as a 1 x p image per record.
void WriteIdx(const Dataset& data, const std::string& images_path,
              const std::string& labels_path);

enum class PartitionMode { kIid, kByLabel };
PartitionMode ParsePartitionMode(const std::string& name);

// N disjoint parts whose sizes differ by at most one.
std::vector<Dataset> PartitionDataset(const Dataset& data, int N,
                                      PartitionMode mode, std::uint64_t seed);

extern const char kCsvHeader[];
std::string FormatCsv(std::span<const RoundMetrics> metrics);
void EmitCsv(std::span<const RoundMetrics> metrics, const std::string& path);

enum class DatasetKind { kSynthetic, kIdx };

struct ExperimentConfig {
  SimConfig sim;
  DatasetKind dataset = DatasetKind::kSynthetic;
  std::size_t synthetic_records = 2000;
  std::size_t synthetic_features = 20;
  std::size_t synthetic_classes = 2;
  double synthetic_separation = 4.0;
  std::string idx_train_images;
  std::string idx_train_labels;
  std::string idx_test_images;
  std::string idx_test_labels;
  PartitionMode partition = PartitionMode::kIid;
  int repetitions = 1;
  std::string out;
};

// Sets one "key = value" field. Throws ConfigurationError on unknown keys or
// unparsable values.
void ApplyConfigKey(ExperimentConfig& config, const std::string& key,
                    const std::string& value);
// Flat "key = value" lines with '#' comments.
ExperimentConfig ParseConfigText(const std::string& text);
ExperimentConfig LoadConfigFile(const std::string& path);

SimData BuildSimData(const ExperimentConfig& config);

}  // namespace spdl

#endif  // SPDL_EXPERIMENT_H_
