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

#ifndef SPDL_RNG_H_
#define SPDL_RNG_H_

#include <cstdint>
#include <limits>

namespace spdl {

// Purposes for per-node random streams. Each (seed, node, purpose) triple
// yields an independent generator so node steps can run in any order.
enum class StreamPurpose : std::uint64_t {
  kBatch = 1,
  kNoise = 2,
  kAdversary = 3,
  kPartition = 4,
  kDataset = 5,
  kReference = 6,
  kMonteCarlo = 7,
};

std::uint64_t StreamId(std::uint64_t node_index, StreamPurpose purpose);

// Counter-based generator: output n is SplitMix64's finalizer applied to
// key + n * golden_gamma. Gaussian draws use the Marsaglia polar method.
// Output is bit-reproducible for a given (seed, stream) on one platform.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform();
  // Unbiased integer in [0, bound). bound must be > 0.
  std::uint64_t Below(std::uint64_t bound);
  // Standard normal.
  double Gaussian();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t Mix64(std::uint64_t z);

}  // namespace spdl

#endif  // SPDL_RNG_H_
