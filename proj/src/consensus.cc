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

#include <algorithm>
#include <cmath>
#include <limits>

#include "spdl/error.h"

namespace spdl {

std::string PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kPrePrepare:
      return "PRE-PREPARE";
    case Phase::kPrepare:
      return "PREPARE";
    case Phase::kCommit:
      return "COMMIT";
    case Phase::kViewChange:
      return "VIEW-CHANGE";
  }
  return "?";
}

Bytes ConsensusMessage::EncodeContent() const {
  ByteWriter w;
  w.U8(static_cast<std::uint8_t>(phase));
  w.Fixed(sender.bytes);
  w.U64(epoch);
  w.U64(round);
  w.U64(view);
  w.U8(block.has_value() ? 1 : 0);
  if (block) w.Blob(block->Serialize());
  w.Fixed(block_hash);
  w.U8(vote);
  return std::move(w).bytes();
}

Hash256 ConsensusMessage::Digest() const {
  return Sha256(EncodeContent(), sig.bytes);
}

void SignMessage(ConsensusMessage& msg, const SecretKey& sk) {
  msg.sig = Sign(sk, msg.EncodeContent());
}

bool VerifyMessage(const KeyRegistry& registry, const ConsensusMessage& msg) {
  return registry.VerifyFrom(msg.sender, msg.EncodeContent(), msg.sig);
}

int ByzantineCapacity(int num_nodes) {
  return num_nodes < 1 ? 0 : (num_nodes - 1) / 3;
}

int QuorumSize(int num_nodes) { return (2 * num_nodes + 1 + 2) / 3; }

ReputationTable::ReputationTable(std::span<const NodeId> ids, double initial) {
  if (!(initial >= 0.0 && initial <= 1.0)) {
    throw InvalidArgument("initial reputation must lie in [0, 1]");
  }
  for (const auto& id : ids) values_[id] = initial;
}

double ReputationTable::Get(const NodeId& id) const {
  auto it = values_.find(id);
  return it == values_.end() ? 0.0 : it->second;
}

void ReputationTable::Set(const NodeId& id, double value) {
  values_[id] = std::clamp(value, 0.0, 1.0);
}

void ReputationTable::Penalize(const NodeId& id) {
  auto it = values_.find(id);
  if (it == values_.end()) return;
  const double halved = it->second / 2.0;
  it->second = halved < kSnapFloor ? 0.0 : halved;
}

double ReputationTable::Min() const {
  double m = values_.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const auto& [id, r] : values_) m = std::min(m, r);
  return m;
}

ConsensusMessage MakePrePrepare(const Block& block, std::uint64_t view,
                                const NodeId& leader,
                                const SecretKey& leader_sk) {
  ConsensusMessage msg;
  msg.phase = Phase::kPrePrepare;
  msg.sender = leader;
  msg.epoch = block.epoch;
  msg.round = block.round;
  msg.view = view;
  msg.block = block;
  msg.block_hash = block.hash;
  SignMessage(msg, leader_sk);
  return msg;
}

Proposal LeaderPropose(std::span<const GradientVector> grads,
                       const GarSpec& gar, const Chain& chain,
                       std::uint64_t epoch, std::uint64_t round,
                       std::uint64_t view, const NodeId& leader,
                       const SecretKey& leader_sk,
                       std::vector<Transaction> txs) {
  GradientVector delta = Aggregate(gar, grads);
  Block block =
      MakeBlock(chain.tip(), epoch, round, std::move(delta), leader,
                std::move(txs));
  ConsensusMessage msg = MakePrePrepare(block, view, leader, leader_sk);
  return Proposal{std::move(block), std::move(msg)};
}

std::string RejectReasonName(RejectReason reason) {
  switch (reason) {
    case RejectReason::kBadSignature:
      return "bad-sig";
    case RejectReason::kBadLink:
      return "bad-link";
    case RejectReason::kDeltaMismatch:
      return "delta-mismatch";
  }
  return "?";
}

Validation FollowerValidate(const ConsensusMessage& msg,
                            const GradientVector& local_aggregate,
                            const Chain& chain, double delta_tol,
                            const KeyRegistry& registry,
                            const NodeId& expected_leader) {
  auto reject = [](RejectReason r) { return Validation{false, r}; };
  if (msg.phase != Phase::kPrePrepare || msg.sender != expected_leader ||
      !VerifyMessage(registry, msg)) {
    return reject(RejectReason::kBadSignature);
  }
  if (!msg.block) return reject(RejectReason::kBadLink);
  const Block& b = *msg.block;
  const Block& tip = chain.tip();
  if (b.prev_hash != tip.hash || b.height != tip.height + 1 ||
      b.hash != msg.block_hash || b.hash != b.ComputeHash() ||
      b.epoch != msg.epoch || b.round != msg.round ||
      b.proposer != msg.sender) {
    return reject(RejectReason::kBadLink);
  }
  if (b.delta.dim() != local_aggregate.dim()) {
    return reject(RejectReason::kDeltaMismatch);
  }
  for (std::size_t j = 0; j < b.delta.dim(); ++j) {
    // Written so that NaN fails the check.
    if (!(std::fabs(local_aggregate.values[j] - b.delta.values[j]) <
          delta_tol)) {
      return reject(RejectReason::kDeltaMismatch);
    }
  }
  return Validation{true, RejectReason::kBadSignature};
}

Validation FollowerValidate(const ConsensusMessage& msg,
                            std::span<const GradientVector> local_grads,
                            const GarSpec& gar, const Chain& chain,
                            double delta_tol, const KeyRegistry& registry,
                            const NodeId& expected_leader) {
  return FollowerValidate(msg, Aggregate(gar, local_grads), chain, delta_tol,
                          registry, expected_leader);
}

RoundState::RoundState(RoundConfig config, const KeyRegistry* registry,
                       GradientVector local_aggregate, const Chain* chain)
    : config_(std::move(config)),
      registry_(registry),
      local_aggregate_(std::move(local_aggregate)),
      chain_(chain),
      quorum_(QuorumSize(config_.num_nodes)) {
  if (registry_ == nullptr || chain_ == nullptr) {
    throw InvalidArgument("round state needs a registry and a chain");
  }
}

ConsensusMessage RoundState::Vote(Phase phase, const Hash256& hash) const {
  ConsensusMessage m;
  m.phase = phase;
  m.sender = config_.self;
  m.epoch = config_.epoch;
  m.round = config_.round;
  m.view = config_.view;
  m.block_hash = hash;
  m.vote = kVoteAccept;
  SignMessage(m, config_.self_sk);
  return m;
}

std::vector<ConsensusMessage> RoundState::StartAsLeader(
    const Proposal& proposal) {
  if (config_.leader != config_.self) {
    throw InvalidArgument("only the leader may start a proposal");
  }
  const Hash256 h = proposal.block.hash;
  accepted_.emplace(h, proposal.pre_prepare);
  prepare_sent_ = true;
  return {proposal.pre_prepare, Vote(Phase::kPrepare, h)};
}

bool RoundState::Admissible(const ConsensusMessage& msg) {
  if (decided_) return false;
  if (msg.epoch != config_.epoch || msg.round != config_.round ||
      msg.view != config_.view) {
    return false;
  }
  // After a view change a node stops voting but still accepts a relayed
  // commit certificate for the round.
  if ((vc_sent_ || abandoned_) && msg.phase == Phase::kPrepare) return false;
  if (!VerifyMessage(*registry_, msg)) {
    ++invalid_signatures_;
    return false;
  }
  return true;
}

RoundEvents RoundState::Receive(const ConsensusMessage& msg) {
  switch (msg.phase) {
    case Phase::kPrePrepare:
      return OnPrePrepare(msg);
    case Phase::kPrepare: {
      RoundEvents ev;
      if (auto out = OnPrepare(msg)) ev.outbound.push_back(std::move(*out));
      return ev;
    }
    case Phase::kCommit: {
      RoundEvents ev;
      if (auto b = OnCommit(msg)) ev.decided = std::move(b);
      return ev;
    }
    case Phase::kViewChange: {
      RoundEvents ev;
      ev.abandoned = OnViewChange(msg);
      return ev;
    }
  }
  return {};
}

RoundEvents RoundState::OnPrePrepare(const ConsensusMessage& msg) {
  RoundEvents ev;
  if (msg.phase != Phase::kPrePrepare || !Admissible(msg)) return ev;
  if (accepted_.contains(msg.block_hash)) {
    ++duplicates_;
    return ev;
  }
  const Validation v = FollowerValidate(msg, local_aggregate_, *chain_,
                                        config_.delta_tol, *registry_,
                                        config_.leader);
  if (!v.accepted) {
    rejections_.push_back(v.reason);
    return ev;
  }
  const Hash256 h = msg.block_hash;
  accepted_.emplace(h, msg);
  if (!prepare_sent_ && !Stopped()) {
    prepare_sent_ = true;
    ev.outbound.push_back(Vote(Phase::kPrepare, h));
  }
  // Votes for this block may have arrived before the block itself.
  if (auto c = MaybeCommit(h)) ev.outbound.push_back(std::move(*c));
  if (auto b = MaybeDecide(h)) ev.decided = std::move(b);
  return ev;
}

std::optional<ConsensusMessage> RoundState::MaybeCommit(const Hash256& h) {
  if (commit_sent_ || Stopped() || !accepted_.contains(h)) return std::nullopt;
  if (prepare_count(h) < static_cast<std::size_t>(quorum_)) {
    return std::nullopt;
  }
  commit_sent_ = true;
  return Vote(Phase::kCommit, h);
}

std::optional<Block> RoundState::MaybeDecide(const Hash256& h) {
  if (decided_ || !accepted_.contains(h)) return std::nullopt;
  if (commit_count(h) < static_cast<std::size_t>(quorum_)) return std::nullopt;
  decided_ = *accepted_.at(h).block;
  abandoned_ = false;
  return decided_;
}

std::optional<ConsensusMessage> RoundState::OnPrepare(
    const ConsensusMessage& msg) {
  if (msg.phase != Phase::kPrepare || msg.vote != kVoteAccept ||
      !Admissible(msg)) {
    return std::nullopt;
  }
  if (!prepares_[msg.block_hash].insert(msg.sender).second) {
    ++duplicates_;
    return std::nullopt;
  }
  return MaybeCommit(msg.block_hash);
}

std::optional<Block> RoundState::OnCommit(const ConsensusMessage& msg) {
  if (msg.phase != Phase::kCommit || msg.vote != kVoteAccept ||
      !Admissible(msg)) {
    return std::nullopt;
  }
  if (!commits_[msg.block_hash].emplace(msg.sender, msg).second) {
    ++duplicates_;
    return std::nullopt;
  }
  return MaybeDecide(msg.block_hash);
}

std::optional<ConsensusMessage> RoundState::OnTimeout(std::uint64_t now_tick,
                                                      std::uint64_t delta2) {
  if (decided_ || abandoned_ || vc_sent_) return std::nullopt;
  if (now_tick <= config_.start_tick + delta2) return std::nullopt;
  vc_sent_ = true;
  return Vote(Phase::kViewChange, chain_->tip().hash);
}

bool RoundState::OnViewChange(const ConsensusMessage& msg) {
  if (msg.phase != Phase::kViewChange || abandoned_ || !Admissible(msg)) {
    return false;
  }
  if (!view_changes_.insert(msg.sender).second) {
    ++duplicates_;
    return false;
  }
  if (view_changes_.size() >= static_cast<std::size_t>(quorum_)) {
    abandoned_ = true;
    return true;
  }
  return false;
}

std::vector<ConsensusMessage> RoundState::DecisionCertificate() const {
  std::vector<ConsensusMessage> out;
  if (!decided_) return out;
  const Hash256 h = decided_->hash;
  out.push_back(accepted_.at(h));
  for (const auto& [id, m] : commits_.at(h)) out.push_back(m);
  return out;
}

std::size_t RoundState::prepare_count(const Hash256& h) const {
  auto it = prepares_.find(h);
  return it == prepares_.end() ? 0 : it->second.size();
}

std::size_t RoundState::commit_count(const Hash256& h) const {
  auto it = commits_.find(h);
  return it == commits_.end() ? 0 : it->second.size();
}

DecideOutcome Decide(const RoundState& state, Chain chain, ModelParams x,
                     double gamma, ReputationTable reputations,
                     std::span<const NodeId> ids,
                     std::span<const GradientVector> grads) {
  if (!state.decided()) {
    throw InvalidArgument("decide called without a commit quorum");
  }
  if (ids.size() != grads.size()) {
    throw InvalidArgument("decide: one gradient per node id expected");
  }
  const Block& block = *state.decided_block();
  chain.Append(block);
  ModelParams next = SgdUpdate(x, block.delta, gamma);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (grads[j].dim() != block.delta.dim()) continue;
    // Angle strictly above pi/2.
    if (Dot(grads[j].values, block.delta.values) < 0.0) {
      reputations.Penalize(ids[j]);
    }
  }
  return DecideOutcome{std::move(chain), std::move(next),
                       std::move(reputations)};
}

}  // namespace spdl
