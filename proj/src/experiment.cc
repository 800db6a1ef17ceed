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

#include "spdl/experiment.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "spdl/encoding.h"
#include "spdl/error.h"

namespace spdl {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

void Shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.Below(i)]);
  }
}

Bytes ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  Bytes data((std::istreambuf_iterator<char>(in)),
             std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path);
  return data;
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigurationError("bad value '" + value + "' for " + key);
  }
  return out;
}

bool ParseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigurationError("bad boolean '" + value + "' for " + key);
}

std::string FormatReal(double v, int precision) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string FormatMs(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

TrainTest GenerateSynthetic(std::size_t n_records, std::size_t p,
                            std::size_t K, double separation,
                            std::uint64_t seed) {
  if (K < 2 || p < 2) throw ConfigurationError("synthetic data needs K, p >= 2");
  if (n_records < 5) throw ConfigurationError("need at least 5 records");
  if (!(separation >= 0) || !std::isfinite(separation)) {
    throw ConfigurationError("separation must be finite and nonnegative");
  }
  Rng rng(seed, StreamId(0, StreamPurpose::kDataset));
  // Pairwise mean distance equals `separation`: scaled basis vectors when
  // they fit, random unit directions otherwise.
  std::vector<std::vector<double>> means(K, std::vector<double>(p, 0.0));
  const double radius = separation / std::sqrt(2.0);
  for (std::size_t k = 0; k < K; ++k) {
    if (K <= p) {
      means[k][k] = radius;
      continue;
    }
    double norm = 0.0;
    for (double& v : means[k]) {
      v = rng.Gaussian();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : means[k]) v *= radius / norm;
  }
  std::vector<std::size_t> order(n_records);
  for (std::size_t i = 0; i < n_records; ++i) order[i] = i;
  Shuffle(order, rng);
  std::vector<double> features;
  std::vector<int> labels;
  features.reserve(n_records * p);
  for (std::size_t i : order) {
    const std::size_t k = i % K;
    labels.push_back(static_cast<int>(k));
    for (std::size_t j = 0; j < p; ++j) {
      features.push_back(means[k][j] + rng.Gaussian());
    }
  }
  const Dataset all = Dataset::Classification(p, K, std::move(features),
                                              std::move(labels));
  const std::size_t n_train = n_records * 4 / 5;
  std::vector<std::size_t> train_idx(n_train);
  std::vector<std::size_t> test_idx(n_records - n_train);
  for (std::size_t i = 0; i < n_train; ++i) train_idx[i] = i;
  for (std::size_t i = n_train; i < n_records; ++i) test_idx[i - n_train] = i;
  return {all.Subset(train_idx), all.Subset(test_idx)};
}

Dataset LoadIdx(const std::string& images_path,
                const std::string& labels_path) {
  const Bytes images = ReadFile(images_path);
  const Bytes labels = ReadFile(labels_path);

  ByteReader ir(images);
  if (ir.U32() != kIdxImagesMagic) {
    throw IngestionError(0, images_path + ": bad image magic");
  }
  const std::uint32_t count = ir.U32();
  const std::uint32_t rows = ir.U32();
  const std::uint32_t cols = ir.U32();
  const std::size_t p = static_cast<std::size_t>(rows) * cols;
  if (p == 0) throw IngestionError(8, images_path + ": empty image shape");
  if (ir.remaining() / p < count) {
    throw IngestionError(images.size(),
                         images_path + ": truncated, header promises " +
                             std::to_string(count) + " images");
  }

  ByteReader lr(labels);
  if (lr.U32() != kIdxLabelsMagic) {
    throw IngestionError(0, labels_path + ": bad label magic");
  }
  const std::uint32_t label_count = lr.U32();
  if (label_count != count) {
    throw IngestionError(4, labels_path + ": " + std::to_string(label_count) +
                                " labels for " + std::to_string(count) +
                                " images");
  }
  if (lr.remaining() < count) {
    throw IngestionError(labels.size(), labels_path + ": truncated");
  }

  std::vector<double> features(static_cast<std::size_t>(count) * p);
  for (double& v : features) v = ir.U8() / 255.0;
  std::vector<int> ys(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = lr.offset();
    ys[i] = lr.U8();
    if (ys[i] > 9) {
      throw IngestionError(at, labels_path + ": label " +
                                   std::to_string(ys[i]) + " out of range");
    }
  }
  return Dataset::Classification(p, 10, std::move(features), std::move(ys));
}

void WriteIdx(const Dataset& data, const std::string& images_path,
              const std::string& labels_path) {
  ByteWriter iw;
  iw.U32(kIdxImagesMagic);
  iw.U32(static_cast<std::uint32_t>(data.size()));
  iw.U32(1);
  iw.U32(static_cast<std::uint32_t>(data.feature_dim()));
  ByteWriter lw;
  lw.U32(kIdxLabelsMagic);
  lw.U32(static_cast<std::uint32_t>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features(i)) {
      iw.U8(static_cast<std::uint8_t>(
          std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    }
    lw.U8(static_cast<std::uint8_t>(data.label(i)));
  }
  const Bytes ib = std::move(iw).bytes();
  const Bytes lb = std::move(lw).bytes();
  WriteFile(images_path, std::string(ib.begin(), ib.end()));
  WriteFile(labels_path, std::string(lb.begin(), lb.end()));
}

PartitionMode ParsePartitionMode(const std::string& name) {
  if (name == "iid") return PartitionMode::kIid;
  if (name == "by-label") return PartitionMode::kByLabel;
  throw ConfigurationError("unknown partition mode '" + name + "'");
}

std::vector<Dataset> PartitionDataset(const Dataset& data, int N,
                                      PartitionMode mode, std::uint64_t seed) {
  if (N < 1) throw ConfigurationError("need at least one partition");
  if (static_cast<std::size_t>(N) > data.size()) {
    throw ConfigurationError("more partitions than records");
  }
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (mode == PartitionMode::kIid) {
    Rng rng(seed, StreamId(0, StreamPurpose::kPartition));
    Shuffle(order, rng);
  } else {
    std::stable_sort(order.begin(), order.end(),
                     [&data](std::size_t a, std::size_t b) {
                       return data.label(a) < data.label(b);
                     });
  }
  std::vector<Dataset> parts;
  const std::size_t n = static_cast<std::size_t>(N);
  const std::size_t base = data.size() / n;
  const std::size_t extra = data.size() % n;
  std::size_t at = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    parts.push_back(data.Subset(std::span(order).subspan(at, len)));
    at += len;
  }
  return parts;
}

const char kCsvHeader[] =
    "epoch,round,leader_id,committed,block_hash,test_error,t_lgc_ms,t_ge_ms,"
    "t_bc_ms,reputation_min";

std::string FormatCsv(std::span<const RoundMetrics> metrics) {
  std::ostringstream os;
  os << kCsvHeader << "\n";
  for (const RoundMetrics& m : metrics) {
    os << m.epoch << ',' << m.round << ','
       << (m.leader ? m.leader->Hex() : "") << ','
       << (m.committed ? "true" : "false") << ','
       << (m.block_hash ? ToHex(*m.block_hash) : "") << ','
       << FormatReal(m.test_error, 10) << ',' << FormatMs(m.t_lgc_ms) << ','
       << FormatMs(m.t_ge_ms) << ',' << FormatMs(m.t_bc_ms) << ','
       << FormatReal(m.reputation_min, 10) << "\n";
  }
  return os.str();
}

void EmitCsv(std::span<const RoundMetrics> metrics, const std::string& path) {
  WriteFile(path, FormatCsv(metrics));
}

void ApplyConfigKey(ExperimentConfig& c, const std::string& key,
                    const std::string& value) {
  SimConfig& s = c.sim;
  if (key == "nodes") {
    s.num_nodes = ParseNumber<int>(key, value);
  } else if (key == "byz_ratio") {
    s.byz_ratio = ParseNumber<double>(key, value);
  } else if (key == "byz_strategy") {
    s.byz_script.base = AdversaryStrategy::Parse(value);
  } else if (key == "rounds") {
    s.rounds = ParseNumber<std::uint64_t>(key, value);
  } else if (key == "gamma") {
    s.gamma = ParseNumber<double>(key, value);
  } else if (key == "epsilon") {
    s.dp.epsilon = ParseNumber<double>(key, value);
  } else if (key == "delta") {
    s.dp.delta = ParseNumber<double>(key, value);
  } else if (key == "clip") {
    s.dp.clip = ParseNumber<double>(key, value);
  } else if (key == "sigma") {
    s.dp.sigma = ParseNumber<double>(key, value);
  } else if (key == "dp_mode") {
    if (value == "whole-run") {
      s.dp.mode = CalibrationMode::kWholeRun;
    } else if (value == "per-round") {
      s.dp.mode = CalibrationMode::kPerRound;
    } else {
      throw ConfigurationError("unknown dp_mode '" + value + "'");
    }
  } else if (key == "batch_size") {
    s.batch_size = ParseNumber<std::size_t>(key, value);
  } else if (key == "gar") {
    s.gar = ParseGarKind(value);
  } else if (key == "scheme") {
    s.scheme = ParseScheme(value);
  } else if (key == "seed") {
    s.seed = ParseNumber<std::uint64_t>(key, value);
  } else if (key == "delta1") {
    s.delta1 = ParseNumber<std::uint64_t>(key, value);
  } else if (key == "delta2") {
    s.delta2 = ParseNumber<std::uint64_t>(key, value);
  } else if (key == "epoch_length") {
    s.epoch_length = ParseNumber<std::uint64_t>(key, value);
  } else if (key == "l2") {
    s.loss.l2 = ParseNumber<double>(key, value);
  } else if (key == "loss") {
    if (value == "softmax") {
      s.loss.kind = LossKind::kSoftmaxCrossEntropy;
    } else if (value == "least-squares") {
      s.loss.kind = LossKind::kLeastSquares;
    } else {
      throw ConfigurationError("unknown loss '" + value + "'");
    }
  } else if (key == "random_single_update") {
    s.random_single_update = ParseBool(key, value);
  } else if (key == "dataset") {
    if (value == "synthetic") {
      c.dataset = DatasetKind::kSynthetic;
      s.loss.num_classes = c.synthetic_classes;
    } else if (value == "idx") {
      c.dataset = DatasetKind::kIdx;
      s.loss.num_classes = 10;
    } else {
      throw ConfigurationError("unknown dataset '" + value + "'");
    }
  } else if (key == "synthetic_records") {
    c.synthetic_records = ParseNumber<std::size_t>(key, value);
  } else if (key == "synthetic_features") {
    c.synthetic_features = ParseNumber<std::size_t>(key, value);
  } else if (key == "synthetic_classes") {
    c.synthetic_classes = ParseNumber<std::size_t>(key, value);
    if (c.dataset == DatasetKind::kSynthetic) {
      s.loss.num_classes = c.synthetic_classes;
    }
  } else if (key == "synthetic_separation") {
    c.synthetic_separation = ParseNumber<double>(key, value);
  } else if (key == "idx_train_images") {
    c.idx_train_images = value;
  } else if (key == "idx_train_labels") {
    c.idx_train_labels = value;
  } else if (key == "idx_test_images") {
    c.idx_test_images = value;
  } else if (key == "idx_test_labels") {
    c.idx_test_labels = value;
  } else if (key == "partition") {
    c.partition = ParsePartitionMode(value);
  } else if (key == "repetitions") {
    c.repetitions = ParseNumber<int>(key, value);
    if (c.repetitions < 1) throw ConfigurationError("repetitions must be >= 1");
  } else if (key == "out") {
    c.out = value;
  } else {
    throw ConfigurationError("unknown config key '" + key + "'");
  }
}

ExperimentConfig ParseConfigText(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigurationError("line " + std::to_string(lineno) +
                               ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    try {
      ApplyConfigKey(c, key, value);
    } catch (const ConfigurationError& e) {
      throw ConfigurationError("line " + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  return c;
}

ExperimentConfig LoadConfigFile(const std::string& path) {
  const Bytes raw = ReadFile(path);
  return ParseConfigText(std::string(raw.begin(), raw.end()));
}

SimData BuildSimData(const ExperimentConfig& c) {
  SimData data;
  Dataset train;
  if (c.dataset == DatasetKind::kSynthetic) {
    TrainTest tt =
        GenerateSynthetic(c.synthetic_records, c.synthetic_features,
                          c.synthetic_classes, c.synthetic_separation,
                          c.sim.seed);
    train = std::move(tt.train);
    data.test = std::move(tt.test);
  } else {
    if (c.idx_train_images.empty() || c.idx_train_labels.empty()) {
      throw ConfigurationError("idx dataset needs training image/label paths");
    }
    train = LoadIdx(c.idx_train_images, c.idx_train_labels);
    if (!c.idx_test_images.empty()) {
      data.test = LoadIdx(c.idx_test_images, c.idx_test_labels);
    }
  }
  data.partitions =
      PartitionDataset(train, c.sim.num_nodes, c.partition, c.sim.seed);
  return data;
}

}  // namespace spdl
