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

#include <filesystem>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.h"
#include "spdl/error.h"
#include "spdl/rng.h"

namespace spdl {
namespace {

std::vector<Transaction> FourNodeBootstrap() {
  std::vector<Transaction> txs;
  for (int i = 0; i < 4; ++i) {
    txs.push_back(Transaction::Register(testing::KeysFor(i).first.pk,
                                        "node-" + std::to_string(i), 0));
  }
  return txs;
}

Chain BuildChain(std::size_t blocks, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed, 1);
  Chain chain(MakeGenesis(FourNodeBootstrap(), dim));
  const NodeId proposer = testing::KeysFor(1).second;
  while (chain.size() < blocks) {
    GradientVector delta(dim);
    for (double& v : delta.values) v = rng.Gaussian();
    chain.Append(MakeBlock(chain.tip(), chain.size() / 10, chain.size() - 1,
                           delta, proposer));
  }
  return chain;
}

std::string CheckOf(const Chain& chain, const Block& b) {
  Chain copy = chain;
  try {
    copy.Append(b);
  } catch (const ChainIntegrityError& e) {
    return e.check();
  }
  return "";
}

TEST(LedgerTest, GenesisGoldenHash) {
  const Block g = MakeGenesis(FourNodeBootstrap(), 3);
  EXPECT_EQ(g.height, 0u);
  EXPECT_EQ(g.prev_hash, Hash256{});
  EXPECT_EQ(g.delta, GradientVector(3));
  EXPECT_EQ(ToHex(g.hash),
            "95212b6a7a6c8fe880d3ac7dafb49b135673b402a02f153d3e1df65ec8b57405");
  EXPECT_EQ(MakeGenesis(FourNodeBootstrap(), 3).hash, g.hash);
  auto fewer = FourNodeBootstrap();
  fewer.pop_back();
  EXPECT_NE(MakeGenesis(fewer, 3).hash, g.hash);
  EXPECT_THROW(MakeGenesis({}, 3), InvalidArgument);
}

TEST(LedgerTest, TransactionIdIsHashOfKey) {
  const auto [keys, id] = testing::KeysFor(2);
  const Transaction tx = Transaction::Register(keys.pk, "a", 5);
  EXPECT_EQ(tx.id, id);
}

TEST(LedgerTest, AppendChecks) {
  const Chain chain = BuildChain(3, 2, 1);
  const NodeId p = testing::KeysFor(0).second;
  const Block good = MakeBlock(chain.tip(), 0, 2, GradientVector(std::vector<double>{1, 2}), p);
  EXPECT_EQ(CheckOf(chain, good), "");

  Block stale = MakeBlock(chain.blocks()[1], 0, 2, GradientVector(std::vector<double>{1, 2}), p);
  stale.height = chain.tip().height + 1;
  stale.Seal();
  EXPECT_EQ(CheckOf(chain, stale), "prev-hash");

  Block skipped = good;
  skipped.height += 1;
  skipped.Seal();
  EXPECT_EQ(CheckOf(chain, skipped), "height");

  Block forged = good;
  forged.delta.values[0] = 7;
  EXPECT_EQ(CheckOf(chain, forged), "self-hash");

  Chain grown = chain;
  grown.Append(good);
  EXPECT_EQ(grown.size(), chain.size() + 1);
}

TEST(LedgerTest, VerifyChainDetectsDeltaBitFlip) {
  const Chain chain = BuildChain(50, 4, 2);
  EXPECT_TRUE(VerifyChain(chain));
  std::vector<Block> blocks = chain.blocks();
  std::uint64_t bits;
  std::memcpy(&bits, &blocks[17].delta.values[1], 8);
  bits ^= 1;
  std::memcpy(&blocks[17].delta.values[1], &bits, 8);
  EXPECT_FALSE(VerifyChain(blocks));
  EXPECT_THROW(Chain::FromBlocks(blocks), ChainIntegrityError);
}

TEST(LedgerTest, TruncateAndReappendTipThroughEncoding) {
  const Chain chain = BuildChain(20, 3, 3);
  std::vector<Block> blocks = chain.blocks();
  const Bytes tip_bytes = blocks.back().Serialize();
  blocks.pop_back();
  Chain truncated = Chain::FromBlocks(blocks);
  truncated.Append(Block::Deserialize(tip_bytes));
  EXPECT_TRUE(VerifyChain(truncated));
  EXPECT_EQ(truncated, chain);
}

TEST(LedgerTest, BlockSerializationRoundTrip) {
  const Chain chain = BuildChain(4, 3, 4);
  for (const Block& b : chain.blocks()) {
    EXPECT_EQ(Block::Deserialize(b.Serialize()), b);
  }
  Bytes extra = chain.tip().Serialize();
  extra.push_back(0);
  EXPECT_THROW(Block::Deserialize(extra), IngestionError);
}

TEST(LedgerTest, ChainFileRoundTripAndHeader) {
  const Chain chain = BuildChain(10, 3, 5);
  const Bytes file = EncodeChainFile(chain.blocks());
  ASSERT_GE(file.size(), 6u);
  EXPECT_EQ(std::string(file.begin(), file.begin() + 4), "SPDL");
  EXPECT_EQ(file[4], 0);
  EXPECT_EQ(file[5], kChainFormatVersion);
  EXPECT_EQ(DecodeChainFile(file), chain.blocks());
  EXPECT_TRUE(VerifyChainFile(file));

  const auto path = std::filesystem::temp_directory_path() / "spdl_chain.bin";
  ExportChain(chain, path);
  EXPECT_EQ(ImportChain(path), chain);
  std::filesystem::remove(path);
  EXPECT_THROW(ImportChain(path), IoError);
}

TEST(LedgerTest, ChainFileMalformedInputs) {
  const Chain chain = BuildChain(3, 2, 6);
  Bytes file = EncodeChainFile(chain.blocks());
  Bytes bad_magic = file;
  bad_magic[0] = 'X';
  EXPECT_THROW(DecodeChainFile(bad_magic), IngestionError);
  Bytes bad_version = file;
  bad_version[5] = 9;
  EXPECT_THROW(DecodeChainFile(bad_version), IngestionError);
  Bytes truncated(file.begin(), file.end() - 5);
  EXPECT_THROW(DecodeChainFile(truncated), IngestionError);
  EXPECT_FALSE(VerifyChainFile(truncated));
}

TEST(LedgerTest, EverySingleByteMutationOfNonTipBlocksIsDetected) {
  const Chain chain = BuildChain(8, 2, 7);
  const Bytes file = EncodeChainFile(chain.blocks());
  // Bytes before the tip's length prefix cover magic, version and all
  // non-tip blocks.
  const std::size_t tip_len = chain.tip().Serialize().size() + 4;
  for (std::size_t i = 0; i + tip_len < file.size(); ++i) {
    Bytes mutated = file;
    mutated[i] ^= 0x01;
    ASSERT_FALSE(VerifyChainFile(mutated)) << "offset " << i;
  }
}

}  // namespace
}  // namespace spdl
