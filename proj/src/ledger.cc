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

#include "spdl/ledger.h"

#include <fstream>
#include <iterator>

#include "spdl/error.h"

namespace spdl {
namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'P', 'D', 'L'};

void CheckLink(const Block& parent, const Block& child) {
  if (child.prev_hash != parent.hash) {
    throw ChainIntegrityError("prev-hash", "block at height " +
                                               std::to_string(child.height) +
                                               " does not reference the tip");
  }
  if (child.height != parent.height + 1) {
    throw ChainIntegrityError(
        "height", "expected height " + std::to_string(parent.height + 1) +
                      ", got " + std::to_string(child.height));
  }
  if (child.hash != child.ComputeHash()) {
    throw ChainIntegrityError("self-hash", "stored hash of block " +
                                               std::to_string(child.height) +
                                               " does not recompute");
  }
}

void CheckGenesis(const Block& b) {
  if (b.height != 0 || b.prev_hash != Hash256{}) {
    throw ChainIntegrityError("genesis",
                              "first block must have height 0 and zero "
                              "prev_hash");
  }
  if (b.hash != b.ComputeHash()) {
    throw ChainIntegrityError("self-hash", "genesis hash does not recompute");
  }
}

}  // namespace

Transaction Transaction::Register(const PublicKey& pk, std::string address,
                                  std::uint64_t timestamp) {
  Transaction tx;
  tx.kind = TxKind::kRegister;
  tx.pk = pk;
  tx.id = IdFromPublicKey(pk);
  tx.address = std::move(address);
  tx.timestamp = timestamp;
  return tx;
}

void Transaction::EncodeTo(ByteWriter& w) const {
  w.U8(static_cast<std::uint8_t>(kind));
  w.Fixed(pk.bytes);
  w.Fixed(id.bytes);
  w.Str(address);
  w.U64(timestamp);
}

Transaction Transaction::DecodeFrom(ByteReader& r) {
  Transaction tx;
  const std::size_t at = r.offset();
  const std::uint8_t kind = r.U8();
  if (kind != static_cast<std::uint8_t>(TxKind::kRegister)) {
    throw IngestionError(at, "unknown transaction kind");
  }
  tx.kind = TxKind::kRegister;
  tx.pk.bytes = r.Fixed32();
  tx.id.bytes = r.Fixed32();
  tx.address = r.Str();
  tx.timestamp = r.U64();
  return tx;
}

Bytes Block::EncodeContent() const {
  ByteWriter w;
  w.U64(height);
  w.U64(epoch);
  w.U64(round);
  w.Fixed(prev_hash);
  w.Reals(delta.values);
  w.Fixed(proposer.bytes);
  w.U64(txs.size());
  for (const auto& tx : txs) tx.EncodeTo(w);
  return std::move(w).bytes();
}

Hash256 Block::ComputeHash() const { return Sha256(EncodeContent()); }

Bytes Block::Serialize() const {
  Bytes out = EncodeContent();
  out.insert(out.end(), hash.begin(), hash.end());
  return out;
}

Block Block::Deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  Block b;
  b.height = r.U64();
  b.epoch = r.U64();
  b.round = r.U64();
  b.prev_hash = r.Fixed32();
  b.delta.values = r.Reals();
  b.proposer.bytes = r.Fixed32();
  const std::size_t at = r.offset();
  const std::uint64_t ntx = r.U64();
  // Smallest encoded transaction is 1 + 32 + 32 + 8 + 8 bytes.
  if (ntx > r.remaining() / 81) {
    throw IngestionError(at, "transaction count exceeds remaining input");
  }
  b.txs.reserve(ntx);
  for (std::uint64_t i = 0; i < ntx; ++i) {
    b.txs.push_back(Transaction::DecodeFrom(r));
  }
  b.hash = r.Fixed32();
  if (!r.done()) throw IngestionError(r.offset(), "trailing bytes after block");
  return b;
}

Block MakeGenesis(std::span<const Transaction> initial_nodes,
                  std::size_t model_dim) {
  if (initial_nodes.empty()) {
    throw InvalidArgument("genesis needs at least one registered node");
  }
  Block b;
  b.delta = GradientVector(model_dim);
  b.txs.assign(initial_nodes.begin(), initial_nodes.end());
  b.Seal();
  return b;
}

Block MakeBlock(const Block& parent, std::uint64_t epoch, std::uint64_t round,
                GradientVector delta, const NodeId& proposer,
                std::vector<Transaction> txs) {
  Block b;
  b.height = parent.height + 1;
  b.epoch = epoch;
  b.round = round;
  b.prev_hash = parent.hash;
  b.delta = std::move(delta);
  b.proposer = proposer;
  b.txs = std::move(txs);
  b.Seal();
  return b;
}

bool VerifyChain(std::span<const Block> blocks) {
  if (blocks.empty()) return false;
  try {
    CheckGenesis(blocks[0]);
    for (std::size_t i = 1; i < blocks.size(); ++i) {
      CheckLink(blocks[i - 1], blocks[i]);
    }
  } catch (const ChainIntegrityError&) {
    return false;
  }
  return true;
}

bool VerifyChain(const Chain& chain) { return VerifyChain(chain.blocks()); }

Chain::Chain(Block genesis) {
  CheckGenesis(genesis);
  blocks_.push_back(std::move(genesis));
}

Chain Chain::FromBlocks(std::vector<Block> blocks) {
  if (blocks.empty()) throw ChainIntegrityError("genesis", "empty chain");
  Chain c(std::move(blocks[0]));
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    c.Append(std::move(blocks[i]));
  }
  return c;
}

void Chain::Append(Block block) {
  CheckLink(tip(), block);
  blocks_.push_back(std::move(block));
}

Bytes EncodeChainFile(std::span<const Block> blocks) {
  ByteWriter w;
  w.Fixed(kMagic);
  w.U16(kChainFormatVersion);
  for (const Block& b : blocks) {
    Bytes body = b.Serialize();
    w.U32(static_cast<std::uint32_t>(body.size()));
    w.Fixed(body);
  }
  return std::move(w).bytes();
}

std::vector<Block> DecodeChainFile(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  for (std::uint8_t m : kMagic) {
    const std::size_t at = r.offset();
    if (r.U8() != m) throw IngestionError(at, "bad chain file magic");
  }
  const std::size_t vat = r.offset();
  const std::uint16_t version = r.U16();
  if (version != kChainFormatVersion) {
    throw IngestionError(vat, "unsupported chain file version " +
                                  std::to_string(version));
  }
  std::vector<Block> blocks;
  while (!r.done()) {
    const std::size_t at = r.offset();
    const std::uint32_t len = r.U32();
    if (len > r.remaining()) {
      throw IngestionError(at, "block length exceeds remaining input");
    }
    const std::size_t start = r.offset();
    try {
      blocks.push_back(Block::Deserialize(bytes.subspan(start, len)));
    } catch (const IngestionError& e) {
      throw IngestionError(start + e.offset(), e.what());
    }
    r.Skip(len);
  }
  return blocks;
}

bool VerifyChainFile(std::span<const std::uint8_t> bytes) {
  try {
    return VerifyChain(DecodeChainFile(bytes));
  } catch (const IngestionError&) {
    return false;
  }
}

void ExportChain(const Chain& chain, const std::filesystem::path& path) {
  const Bytes data = EncodeChainFile(chain.blocks());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Chain ImportChain(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)),
             std::istreambuf_iterator<char>());
  return Chain::FromBlocks(DecodeChainFile(data));
}

}  // namespace spdl
