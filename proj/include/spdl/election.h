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

#ifndef SPDL_ELECTION_H_
#define SPDL_ELECTION_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "spdl/crypto.h"
#include "spdl/encoding.h"

namespace spdl {

// What a contender broadcasts during election.
struct CandidateSubmission {
  NodeId id;
  Hash256 h{};
  Hash256 proof{};
};

// A submission whose VRF proof checked out, paired with the sender's
// reputation.
struct Candidate {
  NodeId id;
  Hash256 h{};
  Hash256 proof{};
  double reputation = 1.0;
};

// Deterministic VRF seed for one election attempt.
Bytes ElectionSeed(std::uint64_t epoch, std::uint64_t attempt,
                   const Hash256& prev_block_hash);

// Keeps submissions from registered nodes whose VRF output verifies against
// `seed`; one entry per node. `rejected` receives the number dropped.
std::vector<Candidate> AdmitCandidates(
    const KeyRegistry& registry, std::span<const std::uint8_t> seed,
    std::span<const CandidateSubmission> submissions,
    const std::function<double(const NodeId&)>& reputation_of,
    std::size_t* rejected = nullptr);

// Id of the candidate with the byte-lexicographically largest h among those
// with reputation > 0. Equal h values resolve to the lowest id. Throws
// ElectionFailed when nobody is eligible.
NodeId ElectLeader(std::span<const Candidate> candidates);

}  // namespace spdl

#endif  // SPDL_ELECTION_H_
