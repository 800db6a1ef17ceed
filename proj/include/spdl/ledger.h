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

#ifndef SPDL_LEDGER_H_
#define SPDL_LEDGER_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spdl/crypto.h"
#include "spdl/encoding.h"
#include "spdl/learning.h"

namespace spdl {

enum class TxKind : std::uint8_t { kRegister = 1 };

// Registration record for a node joining the permissioned network.
struct Transaction {
  TxKind kind = TxKind::kRegister;
  PublicKey pk;
  NodeId id;
  std::string address;
  std::uint64_t timestamp = 0;  // simulator ticks

  static Transaction Register(const PublicKey& pk, std::string address,
                              std::uint64_t timestamp);
  void EncodeTo(ByteWriter& w) const;
  static Transaction DecodeFrom(ByteReader& r);
  bool operator==(const Transaction&) const = default;
};

struct Block {
  std::uint64_t height = 0;
  std::uint64_t epoch = 0;
  std::uint64_t round = 0;
  Hash256 prev_hash{};
  GradientVector delta;
  NodeId proposer;
  std::vector<Transaction> txs;
  Hash256 hash{};

  // Canonical encoding of every field except `hash`.
  Bytes EncodeContent() const;
  Hash256 ComputeHash() const;
  void Seal() { hash = ComputeHash(); }

  // Content followed by the stored 32-byte hash.
  Bytes Serialize() const;
  static Block Deserialize(std::span<const std::uint8_t> bytes);

  bool operator==(const Block&) const = default;
};

Block MakeGenesis(std::span<const Transaction> initial_nodes,
                  std::size_t model_dim);

// Sealed successor of `parent`.
Block MakeBlock(const Block& parent, std::uint64_t epoch, std::uint64_t round,
                GradientVector delta, const NodeId& proposer,
                std::vector<Transaction> txs = {});

// True iff the blocks form a valid chain rooted at a genesis block: heights
// count up from 0, every link matches, every stored hash recomputes.
bool VerifyChain(std::span<const Block> blocks);

// Hash-linked list of blocks. Always valid: construction and Append enforce
// the chain invariants.
class Chain {
 public:
  explicit Chain(Block genesis);
  // Throws ChainIntegrityError unless the blocks form a valid chain.
  static Chain FromBlocks(std::vector<Block> blocks);

  // Throws ChainIntegrityError naming the failed check.
  void Append(Block block);

  const Block& tip() const { return blocks_.back(); }
  const Block& genesis() const { return blocks_.front(); }
  std::size_t size() const { return blocks_.size(); }
  const std::vector<Block>& blocks() const { return blocks_; }

  bool operator==(const Chain&) const = default;

 private:
  Chain() = default;
  std::vector<Block> blocks_;
};

bool VerifyChain(const Chain& chain);

// Export format: "SPDL", u16 version, then per block a u32 big-endian length
// and the serialized block.
inline constexpr std::uint16_t kChainFormatVersion = 1;

Bytes EncodeChainFile(std::span<const Block> blocks);
// Parses the container without checking chain invariants.
std::vector<Block> DecodeChainFile(std::span<const std::uint8_t> bytes);
// Parse plus VerifyChain; false on any decode failure or broken invariant.
bool VerifyChainFile(std::span<const std::uint8_t> bytes);

void ExportChain(const Chain& chain, const std::filesystem::path& path);
Chain ImportChain(const std::filesystem::path& path);

}  // namespace spdl

#endif  // SPDL_LEDGER_H_
