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

#include "spdl/consensus.h"

#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.h"
#include "spdl/error.h"

namespace spdl {
namespace {

class ConsensusTest : public ::testing::Test {
 protected:
  void SetUp() override { Init(4); }

  void Init(int n) {
    keys.clear();
    ids.clear();
    registry = KeyRegistry();
    std::vector<Transaction> txs;
    for (int i = 0; i < n; ++i) {
      auto [k, id] = testing::KeysFor(i);
      keys.push_back(k);
      ids.push_back(id);
      registry.Register(k);
      txs.push_back(Transaction::Register(k.pk, "n", 0));
    }
    registry.Freeze();
    chain.emplace(MakeGenesis(txs, 1));
    grads = {GradientVector(std::vector<double>{0.0}), GradientVector(std::vector<double>{0.1}),
             GradientVector(std::vector<double>{0.2}), GradientVector(std::vector<double>{10.0})};
    grads.resize(n, GradientVector(std::vector<double>{0.05}));
  }

  RoundConfig ConfigFor(int i, int leader = 0) const {
    RoundConfig c;
    c.num_nodes = static_cast<int>(keys.size());
    c.self = ids[i];
    c.self_sk = keys[i].sk;
    c.leader = ids[leader];
    return c;
  }

  RoundState StateFor(int i, int leader = 0) const {
    const GarSpec gar{GarKind::kKrum, ByzantineCapacity(keys.size())};
    return RoundState(ConfigFor(i, leader), &registry, Aggregate(gar, grads),
                      &*chain);
  }

  Proposal Propose(int leader = 0) const {
    const GarSpec gar{GarKind::kKrum, ByzantineCapacity(keys.size())};
    return LeaderPropose(grads, gar, *chain, 0, 0, 0, ids[leader],
                         keys[leader].sk);
  }

  ConsensusMessage VoteFrom(int i, Phase phase, const Hash256& h) const {
    ConsensusMessage m;
    m.phase = phase;
    m.sender = ids[i];
    m.block_hash = h;
    SignMessage(m, keys[i].sk);
    return m;
  }

  KeyRegistry registry;
  std::vector<KeyPair> keys;
  std::vector<NodeId> ids;
  std::optional<Chain> chain;
  std::vector<GradientVector> grads;
};

TEST(QuorumTest, ThresholdArithmetic) {
  for (int f = 1; f <= 10; ++f) {
    const int n = 3 * f + 1;
    EXPECT_EQ(ByzantineCapacity(n), f);
    EXPECT_EQ(QuorumSize(n), 2 * f + 1);
    // ceil((2N + 1) / 3)
    EXPECT_EQ(QuorumSize(n), (2 * n + 1 + 2) / 3);
  }
  for (int n = 1; n <= 40; ++n) {
    EXPECT_EQ(QuorumSize(n), (2 * n + 1 + 2) / 3);
  }
}

TEST_F(ConsensusTest, LeaderProposesKrumOutputDeterministically) {
  const Proposal p = Propose();
  EXPECT_EQ(p.block.delta, GradientVector(std::vector<double>{0.0}));
  EXPECT_EQ(p.block.prev_hash, chain->tip().hash);
  EXPECT_EQ(p.block.height, 1u);
  EXPECT_EQ(p.block.proposer, ids[0]);
  EXPECT_EQ(p.pre_prepare.block_hash, p.block.hash);
  EXPECT_EQ(Propose().block.hash, p.block.hash);
  EXPECT_TRUE(VerifyMessage(registry, p.pre_prepare));
  std::vector<GradientVector> same(4, GradientVector(std::vector<double>{0.7}));
  EXPECT_EQ(LeaderPropose(same, {GarKind::kKrum, 1}, *chain, 0, 0, 0, ids[0],
                          keys[0].sk)
                .block.delta,
            GradientVector(std::vector<double>{0.7}));
}

TEST_F(ConsensusTest, FollowerValidateOutcomes) {
  const GarSpec gar{GarKind::kKrum, 1};
  const Proposal p = Propose();
  EXPECT_TRUE(FollowerValidate(p.pre_prepare, grads, gar, *chain, 1e-9,
                               registry, ids[0])
                  .accepted);

  Block sub = MakeBlock(chain->tip(), 0, 0, GradientVector(std::vector<double>{3.3}), ids[0]);
  const auto bad_delta = FollowerValidate(MakePrePrepare(sub, 0, ids[0],
                                                         keys[0].sk),
                                          grads, gar, *chain, 1e-9, registry,
                                          ids[0]);
  EXPECT_FALSE(bad_delta.accepted);
  EXPECT_EQ(bad_delta.reason, RejectReason::kDeltaMismatch);
  EXPECT_EQ(RejectReasonName(bad_delta.reason), "delta-mismatch");

  Block stale = p.block;
  stale.prev_hash[0] ^= 1;
  stale.Seal();
  const auto bad_link = FollowerValidate(
      MakePrePrepare(stale, 0, ids[0], keys[0].sk), grads, gar, *chain, 1e-9,
      registry, ids[0]);
  EXPECT_EQ(bad_link.reason, RejectReason::kBadLink);

  ConsensusMessage forged = p.pre_prepare;
  forged.sig.bytes[3] ^= 1;
  EXPECT_EQ(FollowerValidate(forged, grads, gar, *chain, 1e-9, registry,
                             ids[0])
                .reason,
            RejectReason::kBadSignature);
  // Signed by someone other than the expected leader.
  EXPECT_EQ(FollowerValidate(MakePrePrepare(p.block, 0, ids[1], keys[1].sk),
                             grads, gar, *chain, 1e-9, registry, ids[0])
                .reason,
            RejectReason::kBadSignature);
  GradientVector nan_agg(std::vector<double>{std::nan("")});
  EXPECT_FALSE(FollowerValidate(p.pre_prepare, nan_agg, *chain, 1e-9,
                                registry, ids[0])
                   .accepted);
}

TEST_F(ConsensusTest, ThreePreparesTriggerCommitTwoDoNot) {
  RoundState s = StateFor(1);
  const Proposal p = Propose();
  const RoundEvents ev = s.OnPrePrepare(p.pre_prepare);
  ASSERT_EQ(ev.outbound.size(), 1u);
  EXPECT_EQ(ev.outbound[0].phase, Phase::kPrepare);
  const Hash256 h = p.block.hash;
  EXPECT_FALSE(s.OnPrepare(VoteFrom(0, Phase::kPrepare, h)));
  EXPECT_FALSE(s.OnPrepare(VoteFrom(1, Phase::kPrepare, h)));
  const auto commit = s.OnPrepare(VoteFrom(2, Phase::kPrepare, h));
  ASSERT_TRUE(commit.has_value());
  EXPECT_EQ(commit->phase, Phase::kCommit);
  EXPECT_EQ(commit->block_hash, h);
}

TEST_F(ConsensusTest, DuplicateVotesDoNotReachQuorum) {
  Init(7);  // f = 2, quorum 5
  RoundState s = StateFor(1);
  const Proposal p = Propose();
  s.OnPrePrepare(p.pre_prepare);
  const Hash256 h = p.block.hash;
  // 2f + 1 = 5 PREPAREs of which f = 2 repeat one Byzantine sender.
  EXPECT_FALSE(s.OnPrepare(VoteFrom(0, Phase::kPrepare, h)));
  EXPECT_FALSE(s.OnPrepare(VoteFrom(1, Phase::kPrepare, h)));
  EXPECT_FALSE(s.OnPrepare(VoteFrom(6, Phase::kPrepare, h)));
  EXPECT_FALSE(s.OnPrepare(VoteFrom(6, Phase::kPrepare, h)));
  EXPECT_FALSE(s.OnPrepare(VoteFrom(6, Phase::kPrepare, h)));
  EXPECT_EQ(s.prepare_count(h), 3u);
  EXPECT_EQ(s.duplicates(), 2u);
}

TEST_F(ConsensusTest, InvalidSignaturesIgnoredAndCounted) {
  RoundState s = StateFor(1);
  const Proposal p = Propose();
  s.OnPrePrepare(p.pre_prepare);
  ConsensusMessage bad = VoteFrom(2, Phase::kPrepare, p.block.hash);
  bad.sender = ids[3];
  EXPECT_FALSE(s.OnPrepare(bad));
  EXPECT_EQ(s.invalid_signatures(), 1u);
  EXPECT_EQ(s.prepare_count(p.block.hash), 0u);
}

TEST_F(ConsensusTest, CommitQuorumDecidesAndCertificateConvinces) {
  RoundState s = StateFor(1);
  const Proposal p = Propose();
  s.OnPrePrepare(p.pre_prepare);
  const Hash256 h = p.block.hash;
  EXPECT_FALSE(s.OnCommit(VoteFrom(0, Phase::kCommit, h)));
  EXPECT_FALSE(s.OnCommit(VoteFrom(2, Phase::kCommit, h)));
  const auto decided = s.OnCommit(VoteFrom(3, Phase::kCommit, h));
  ASSERT_TRUE(decided.has_value());
  EXPECT_EQ(decided->hash, h);
  EXPECT_TRUE(s.decided());

  // A node that saw nothing decides from the certificate alone, even after
  // it has asked for a view change.
  RoundState late = StateFor(2);
  ASSERT_TRUE(late.OnTimeout(100, 8).has_value());
  bool got = false;
  for (const auto& m : s.DecisionCertificate()) {
    const RoundEvents ev = late.Receive(m);
    EXPECT_TRUE(ev.outbound.empty());
    got = got || ev.decided.has_value();
  }
  EXPECT_TRUE(got);
  EXPECT_EQ(late.decided_block()->hash, h);
}

TEST_F(ConsensusTest, ViewChangeNeedsQuorum) {
  RoundState s = StateFor(1);
  EXPECT_FALSE(s.OnTimeout(8, 8).has_value());
  const auto vc = s.OnTimeout(9, 8);
  ASSERT_TRUE(vc.has_value());
  EXPECT_EQ(vc->phase, Phase::kViewChange);
  EXPECT_FALSE(s.OnTimeout(10, 8).has_value());
  EXPECT_FALSE(s.OnViewChange(*vc));
  EXPECT_FALSE(s.OnViewChange(VoteFrom(2, Phase::kViewChange, {})));
  EXPECT_FALSE(s.abandoned());
  EXPECT_TRUE(s.OnViewChange(VoteFrom(3, Phase::kViewChange, {})));
  EXPECT_TRUE(s.abandoned());
}

TEST_F(ConsensusTest, WrongRoundOrViewIgnored) {
  RoundState s = StateFor(1);
  const Proposal p = Propose();
  s.OnPrePrepare(p.pre_prepare);
  ConsensusMessage m = VoteFrom(0, Phase::kPrepare, p.block.hash);
  m.round = 5;
  SignMessage(m, keys[0].sk);
  s.OnPrepare(m);
  m.round = 0;
  m.view = 1;
  SignMessage(m, keys[0].sk);
  s.OnPrepare(m);
  EXPECT_EQ(s.prepare_count(p.block.hash), 0u);
}

TEST_F(ConsensusTest, OnlyLeaderMayStart) {
  RoundState s = StateFor(1);
  EXPECT_THROW(s.StartAsLeader(Propose()), InvalidArgument);
  RoundState l = StateFor(0);
  const auto out = l.StartAsLeader(Propose());
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].phase, Phase::kPrePrepare);
  EXPECT_EQ(out[1].phase, Phase::kPrepare);
}

TEST_F(ConsensusTest, DecideAppliesUpdateAndPenalizesOpposers) {
  grads = {GradientVector(std::vector<double>{1.0}), GradientVector(std::vector<double>{1.0}),
           GradientVector(std::vector<double>{1.0}), GradientVector(std::vector<double>{-1.0})};
  RoundState s = StateFor(1);
  const Proposal p = Propose();
  s.OnPrePrepare(p.pre_prepare);
  for (int i : {0, 2, 3}) s.OnCommit(VoteFrom(i, Phase::kCommit, p.block.hash));
  ASSERT_TRUE(s.decided());
  const ReputationTable reps(ids);
  const DecideOutcome out =
      Decide(s, *chain, ModelParams(std::vector<double>{2.0}), 0.5, reps, ids, grads);
  EXPECT_EQ(out.chain.size(), 2u);
  EXPECT_EQ(out.model, ModelParams(std::vector<double>{1.5}));
  EXPECT_EQ(out.reputations.Get(ids[0]), 1.0);
  EXPECT_EQ(out.reputations.Get(ids[3]), 0.5);
  EXPECT_THROW(Decide(StateFor(2), *chain, ModelParams(std::vector<double>{2.0}), 0.5, reps, ids,
                      grads),
               InvalidArgument);
}

TEST(ReputationTest, HalvingAndSnap) {
  const NodeId a = testing::KeysFor(0).second;
  const NodeId b = testing::KeysFor(1).second;
  const std::vector<NodeId> ids = {a, b};
  ReputationTable t(ids);
  EXPECT_EQ(t.Get(a), 1.0);
  const double expect[] = {0.5, 0.25, 0.125, 0.0625, 0.0};
  for (double e : expect) {
    const double before = t.Get(a);
    t.Penalize(a);
    EXPECT_EQ(t.Get(a), e);
    EXPECT_LE(t.Get(a), before);
  }
  EXPECT_EQ(t.Get(b), 1.0);
  EXPECT_EQ(t.Min(), 0.0);
  t.Set(b, 3.0);
  EXPECT_EQ(t.Get(b), 1.0);
  t.Set(b, -1.0);
  EXPECT_EQ(t.Get(b), 0.0);
  EXPECT_EQ(t.Get(testing::KeysFor(9).second), 0.0);
}

TEST_F(ConsensusTest, OrthogonalGradientNotPenalized) {
  Init(4);
  grads = {GradientVector(std::vector<double>{1.0, 0.0}), GradientVector(std::vector<double>{1.0, 0.0}),
           GradientVector(std::vector<double>{1.0, 0.0}), GradientVector(std::vector<double>{0.0, 1.0})};
  std::vector<Transaction> txs;
  for (auto& k : keys) txs.push_back(Transaction::Register(k.pk, "n", 0));
  chain.emplace(MakeGenesis(txs, 2));
  RoundState s = StateFor(1);
  const Proposal p = Propose();
  s.OnPrePrepare(p.pre_prepare);
  for (int i : {0, 2, 3}) s.OnCommit(VoteFrom(i, Phase::kCommit, p.block.hash));
  const DecideOutcome out = Decide(s, *chain, ModelParams(2), 0.1,
                                   ReputationTable(ids), ids, grads);
  EXPECT_EQ(out.reputations.Get(ids[3]), 1.0);
}

}  // namespace
}  // namespace spdl
