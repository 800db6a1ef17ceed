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

#ifndef SPDL_TESTS_FIXTURES_H_
#define SPDL_TESTS_FIXTURES_H_

#include <cstdint>
#include <vector>

#include "spdl/crypto.h"
#include "spdl/experiment.h"
#include "spdl/netsim.h"

namespace spdl::testing {

inline SimData BlobData(int nodes, std::uint64_t seed,
                        std::size_t records = 600, std::size_t p = 5,
                        std::size_t K = 2, double separation = 4.0) {
  TrainTest tt = GenerateSynthetic(records, p, K, separation, seed);
  SimData d;
  d.partitions = PartitionDataset(tt.train, nodes, PartitionMode::kIid, seed);
  d.test = std::move(tt.test);
  return d;
}

inline SimConfig QuietConfig(int nodes, std::uint64_t rounds,
                             std::uint64_t seed = 1) {
  SimConfig c;
  c.num_nodes = nodes;
  c.rounds = rounds;
  c.seed = seed;
  c.dp.epsilon = 5.0;
  c.dp.mode = CalibrationMode::kPerRound;
  return c;
}

inline std::pair<KeyPair, NodeId> KeysFor(int i) {
  const std::uint8_t seed[2] = {static_cast<std::uint8_t>(i), 0x5a};
  return Keygen(seed);
}

inline Bytes AsBytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace spdl::testing

#endif  // SPDL_TESTS_FIXTURES_H_
