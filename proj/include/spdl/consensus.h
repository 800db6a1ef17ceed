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

#ifndef SPDL_CONSENSUS_H_
#define SPDL_CONSENSUS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "spdl/crypto.h"
#include "spdl/gar.h"
#include "spdl/learning.h"
#include "spdl/ledger.h"

namespace spdl {

enum class Phase : std::uint8_t {
  kPrePrepare = 1,
  kPrepare = 2,
  kCommit = 3,
  kViewChange = 4,
};

std::string PhaseName(Phase phase);

inline constexpr std::uint8_t kVoteAccept = 1;

// Signed protocol message. `view` is the election attempt within the epoch;
// a view change bumps it. `block` is present on PRE-PREPARE only.
struct ConsensusMessage {
  Phase phase = Phase::kPrepare;
  NodeId sender;
  std::uint64_t epoch = 0;
  std::uint64_t round = 0;
  std::uint64_t view = 0;
  std::optional<Block> block;
  Hash256 block_hash{};
  std::uint8_t vote = kVoteAccept;
  Signature sig;

  // Canonical encoding of every field except `sig`.
  Bytes EncodeContent() const;
  // Hash over content and signature; used as a delivery sort key.
  Hash256 Digest() const;
};

void SignMessage(ConsensusMessage& msg, const SecretKey& sk);
bool VerifyMessage(const KeyRegistry& registry, const ConsensusMessage& msg);

// f = floor((n - 1) / 3).
int ByzantineCapacity(int num_nodes);
// ceil((2n + 1) / 3); equals 2f + 1 when n = 3f + 1.
int QuorumSize(int num_nodes);

// Reputation in [0, 1] per node. Values only ever decrease: a penalty halves
// the value and anything below kSnapFloor becomes 0.
class ReputationTable {
 public:
  static constexpr double kInitial = 1.0;
  static constexpr double kSnapFloor = 0.05;

  ReputationTable() = default;
  explicit ReputationTable(std::span<const NodeId> ids,
                           double initial = kInitial);

  // Unknown ids have reputation 0.
  double Get(const NodeId& id) const;
  void Set(const NodeId& id, double value);
  void Penalize(const NodeId& id);
  double Min() const;
  const std::map<NodeId, double>& values() const { return values_; }

  bool operator==(const ReputationTable&) const = default;

 private:
  std::map<NodeId, double> values_;
};

struct Proposal {
  Block block;
  ConsensusMessage pre_prepare;
};

// Leader side of PRE-PREPARE. grads must be ordered by node id, with the zero
// vector standing in for nodes that sent nothing. Throws InvalidArgument when
// the aggregation rule's preconditions fail.
Proposal LeaderPropose(std::span<const GradientVector> grads,
                       const GarSpec& gar, const Chain& chain,
                       std::uint64_t epoch, std::uint64_t round,
                       std::uint64_t view, const NodeId& leader,
                       const SecretKey& leader_sk,
                       std::vector<Transaction> txs = {});

// Builds and signs a PRE-PREPARE around an already-sealed block.
ConsensusMessage MakePrePrepare(const Block& block, std::uint64_t view,
                                const NodeId& leader,
                                const SecretKey& leader_sk);

enum class RejectReason { kBadSignature, kBadLink, kDeltaMismatch };

std::string RejectReasonName(RejectReason reason);

struct Validation {
  bool accepted = false;
  RejectReason reason = RejectReason::kBadSignature;
};

// Follower check of a PRE-PREPARE: the signature must be the expected
// leader's, the block must extend the local tip and carry the current epoch
// and round, and every coordinate of its delta must lie within delta_tol of
// the locally recomputed aggregate.
Validation FollowerValidate(const ConsensusMessage& msg,
                            const GradientVector& local_aggregate,
                            const Chain& chain, double delta_tol,
                            const KeyRegistry& registry,
                            const NodeId& expected_leader);
Validation FollowerValidate(const ConsensusMessage& msg,
                            std::span<const GradientVector> local_grads,
                            const GarSpec& gar, const Chain& chain,
                            double delta_tol, const KeyRegistry& registry,
                            const NodeId& expected_leader);

struct RoundConfig {
  int num_nodes = 4;
  NodeId self;
  SecretKey self_sk;
  NodeId leader;
  std::uint64_t epoch = 0;
  std::uint64_t round = 0;
  std::uint64_t view = 0;
  std::uint64_t start_tick = 0;
  double delta_tol = 1e-9;
};

// Everything a single message delivery produced.
struct RoundEvents {
  std::vector<ConsensusMessage> outbound;
  std::optional<Block> decided;
  bool abandoned = false;
};

// Per-node consensus state for one (epoch, round, view). Votes are
// deduplicated by sender per block hash. After this node sends VIEW-CHANGE it
// ignores everything except VIEW-CHANGE messages.
class RoundState {
 public:
  RoundState(RoundConfig config, const KeyRegistry* registry,
             GradientVector local_aggregate, const Chain* chain);

  // Registers the leader's own proposal as validated and returns the
  // messages it broadcasts (PRE-PREPARE and its own PREPARE).
  std::vector<ConsensusMessage> StartAsLeader(const Proposal& proposal);

  // Dispatches on phase.
  RoundEvents Receive(const ConsensusMessage& msg);

  // Returns PREPARE when the block is accepted.
  RoundEvents OnPrePrepare(const ConsensusMessage& msg);
  // Returns COMMIT once 2f+1 distinct PREPAREs back a validated block.
  std::optional<ConsensusMessage> OnPrepare(const ConsensusMessage& msg);
  // Returns the block once 2f+1 distinct COMMITs back a validated block.
  std::optional<Block> OnCommit(const ConsensusMessage& msg);
  // Signed VIEW-CHANGE once now > start + delta2 without a decision.
  std::optional<ConsensusMessage> OnTimeout(std::uint64_t now_tick,
                                            std::uint64_t delta2);
  // True (once) when 2f+1 distinct VIEW-CHANGE messages have arrived.
  bool OnViewChange(const ConsensusMessage& msg);

  // PRE-PREPARE plus the COMMIT quorum for the decided block, for forwarding
  // to peers that may still be waiting.
  std::vector<ConsensusMessage> DecisionCertificate() const;

  bool decided() const { return decided_.has_value(); }
  const std::optional<Block>& decided_block() const { return decided_; }
  bool abandoned() const { return abandoned_; }
  bool view_change_sent() const { return vc_sent_; }
  const RoundConfig& config() const { return config_; }
  std::size_t invalid_signatures() const { return invalid_signatures_; }
  std::size_t duplicates() const { return duplicates_; }
  const std::vector<RejectReason>& rejections() const { return rejections_; }
  std::size_t prepare_count(const Hash256& h) const;
  std::size_t commit_count(const Hash256& h) const;
  std::size_t view_change_count() const { return view_changes_.size(); }

 private:
  bool Admissible(const ConsensusMessage& msg);
  bool Stopped() const { return vc_sent_ || abandoned_; }
  ConsensusMessage Vote(Phase phase, const Hash256& hash) const;
  std::optional<ConsensusMessage> MaybeCommit(const Hash256& h);
  std::optional<Block> MaybeDecide(const Hash256& h);

  RoundConfig config_;
  const KeyRegistry* registry_;
  GradientVector local_aggregate_;
  const Chain* chain_;
  int quorum_;

  std::map<Hash256, ConsensusMessage> accepted_;  // validated PRE-PREPAREs
  std::map<Hash256, std::set<NodeId>> prepares_;
  std::map<Hash256, std::map<NodeId, ConsensusMessage>> commits_;
  std::set<NodeId> view_changes_;
  bool prepare_sent_ = false;
  bool commit_sent_ = false;
  bool vc_sent_ = false;
  bool abandoned_ = false;
  std::optional<Block> decided_;
  std::size_t invalid_signatures_ = 0;
  std::size_t duplicates_ = 0;
  std::vector<RejectReason> rejections_;
};

struct DecideOutcome {
  Chain chain;
  ModelParams model;
  ReputationTable reputations;
};

// DECIDE: append the block, step the model by -gamma * delta and halve the
// reputation of every node whose gradient has a negative inner product with
// delta. ids[j] owns grads[j]. Throws InvalidArgument when the state has not
// decided and ChainIntegrityError when the block does not link.
DecideOutcome Decide(const RoundState& state, Chain chain, ModelParams x,
                     double gamma, ReputationTable reputations,
                     std::span<const NodeId> ids,
                     std::span<const GradientVector> grads);

}  // namespace spdl

#endif  // SPDL_CONSENSUS_H_
