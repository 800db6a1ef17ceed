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

#include "spdl/election.h"

#include <set>

#include "spdl/error.h"

namespace spdl {

Bytes ElectionSeed(std::uint64_t epoch, std::uint64_t attempt,
                   const Hash256& prev_block_hash) {
  ByteWriter w;
  w.Str("spdl-election");
  w.U64(epoch);
  w.U64(attempt);
  w.Fixed(prev_block_hash);
  const Hash256 h = Sha256(w.bytes());
  return Bytes(h.begin(), h.end());
}

std::vector<Candidate> AdmitCandidates(
    const KeyRegistry& registry, std::span<const std::uint8_t> seed,
    std::span<const CandidateSubmission> submissions,
    const std::function<double(const NodeId&)>& reputation_of,
    std::size_t* rejected) {
  std::vector<Candidate> out;
  std::set<NodeId> seen;
  std::size_t dropped = 0;
  for (const auto& s : submissions) {
    auto pk = registry.PublicKeyOf(s.id);
    if (!pk || seen.contains(s.id) ||
        !registry.VrfVerify(*pk, s.h, s.proof, seed)) {
      ++dropped;
      continue;
    }
    seen.insert(s.id);
    out.push_back(Candidate{s.id, s.h, s.proof, reputation_of(s.id)});
  }
  if (rejected != nullptr) *rejected = dropped;
  return out;
}

NodeId ElectLeader(std::span<const Candidate> candidates) {
  const Candidate* best = nullptr;
  for (const auto& c : candidates) {
    if (!(c.reputation > 0.0)) continue;
    if (best == nullptr || c.h > best->h ||
        (c.h == best->h && c.id < best->id)) {
      best = &c;
    }
  }
  if (best == nullptr) throw ElectionFailed("no eligible leader candidate");
  return best->id;
}

}  // namespace spdl
