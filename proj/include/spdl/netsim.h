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

#ifndef SPDL_NETSIM_H_
#define SPDL_NETSIM_H_

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "spdl/consensus.h"
#include "spdl/crypto.h"
#include "spdl/gar.h"
#include "spdl/learning.h"
#include "spdl/ledger.h"
#include "spdl/privacy.h"
#include "spdl/rng.h"

namespace spdl {

// pure: plain broadcast-average, no noise, no consensus.
// dp:   clipped and noised gradients, broadcast-average, no consensus.
// spdl: clipped and noised gradients, leader election and PBFT consensus
//       over the aggregation rule, hash-chained ledger.
enum class Scheme { kPure, kDp, kSpdl };

std::string SchemeName(Scheme scheme);
Scheme ParseScheme(const std::string& name);

enum class AdversaryKind {
  kHonest,
  kSilent,           // sends nothing; peers substitute the zero gradient
  kRandomGaussian,   // N(0, scale^2) per coordinate
  kSignFlip,         // -scale times its own perturbed gradient
  kConstant,         // fixed vector
  kEquivocate,       // conflicting and duplicate votes, double proposals
  kSubstituteDelta,  // as leader, proposes an arbitrary delta
};

struct AdversaryStrategy {
  AdversaryKind kind = AdversaryKind::kHonest;
  double scale = 1.0;
  // kConstant: a single entry is broadcast to every coordinate.
  std::vector<double> constant;

  // "silent", "random-gaussian:2.5", "sign-flip:4", "constant:1.5",
  // "equivocate", "substitute-delta", "honest". Scale defaults to 1.
  static AdversaryStrategy Parse(const std::string& text);
  std::string Name() const;
  bool SendsGradient() const { return kind != AdversaryKind::kSilent; }
  // Builds the gradient this node broadcasts from its honest one.
  GradientVector Apply(const GradientVector& honest, Rng& rng) const;
};

// Strategy per round: `base` unless the round has an override.
struct AdversaryScript {
  AdversaryStrategy base;
  std::map<std::uint64_t, AdversaryStrategy> overrides;

  const AdversaryStrategy& At(std::uint64_t round) const;
};

struct SimConfig {
  int num_nodes = 4;
  double byz_ratio = 0.0;
  AdversaryScript byz_script;
  std::uint64_t rounds = 10;
  std::uint64_t delta1 = 2;  // election window, ticks
  std::uint64_t delta2 = 8;  // consensus timeout, ticks
  std::uint64_t lgc_ticks = 1;
  std::uint64_t ge_ticks = 1;
  std::uint64_t epoch_length = 10;
  double gamma = 0.1;
  std::size_t batch_size = 10;
  GarKind gar = GarKind::kKrum;
  Scheme scheme = Scheme::kSpdl;
  // epsilon, delta, clip and mode are read; sigma is recalibrated from gamma
  // and rounds and only kept when larger than the bound.
  DpConfig dp;
  LossSpec loss;
  std::uint64_t seed = 1;
  double delta_tol = 1e-9;
  int max_election_attempts = 8;
  // Replace aggregation by the gradient of one uniformly drawn node per round
  // (pure/dp only). Models the clean reference run of the regret analysis.
  bool random_single_update = false;

  int ByzantineCapacity() const { return spdl::ByzantineCapacity(num_nodes); }
  int ByzantineCount() const;
  // DP parameters actually used; sigma is 0 for the pure scheme.
  DpConfig ResolvedDp() const;
  // Throws ConfigurationError.
  void Validate() const;
};

struct RoundMetrics {
  std::uint64_t epoch = 0;
  std::uint64_t round = 0;
  std::optional<NodeId> leader;
  bool committed = false;
  std::optional<Hash256> block_hash;  // absent unless a block was appended
  double test_error = 0.0;
  std::uint64_t t_lgc_ticks = 0;
  std::uint64_t t_ge_ticks = 0;
  std::uint64_t t_bc_ticks = 0;
  double t_lgc_ms = 0.0;
  double t_ge_ms = 0.0;
  double t_bc_ms = 0.0;
  double round_ms = 0.0;  // wall clock from first to last stage
  double reputation_min = 1.0;

  // Diagnostics, not exported to CSV. X_t is the union of the batches every
  // node sampled this round and x_t the honest model entering the round.
  double train_loss = 0.0;         // F(x_t, X_t)
  double loss_grad_norm = 0.0;     // ||grad F(x_t, X_t)||
  double honest_grad_variance = 0.0;
  std::size_t rejected_candidates = 0;
  std::size_t invalid_signatures = 0;
};

struct SimData {
  std::vector<Dataset> partitions;  // one per node, in node-id order
  Dataset test;
};

// Per-node runtime state.
struct NodeState {
  std::size_t index = 0;
  KeyPair keys;
  NodeId id;
  bool byzantine = false;
  AdversaryScript script;
  Chain chain;
  ModelParams model;
  ReputationTable reputations;
  std::optional<NodeId> leader;
  Rng batch_rng;
  Rng noise_rng;
  Rng adversary_rng;
  // GAR input of the current round, indexed by node.
  std::vector<GradientVector> received;
};

// Delivery stages of one round. Posting a message of a stage that has
// already closed for the round is a scheduler error.
enum class Stage { kElection = 0, kGradientExchange = 1, kConsensus = 2 };

class Simulation {
 public:
  // Throws ConfigurationError on an invalid config or mismatched data.
  Simulation(SimConfig config, SimData data);

  RoundMetrics RunRound();
  // Runs the remaining rounds.
  std::vector<RoundMetrics> Run();
  bool finished() const { return next_round_ >= config_.rounds; }
  std::uint64_t next_round() const { return next_round_; }

  // Runs a pending leader election now (a no-op otherwise) so callers can see
  // who leads the next round.
  void EnsureLeader();
  std::optional<NodeId> current_leader() const;
  std::optional<std::size_t> current_leader_index() const;

  // Makes `node` Byzantine with the given script.
  void SetScript(std::size_t node, AdversaryScript script);

  std::size_t num_nodes() const { return nodes_.size(); }
  const NodeState& node(std::size_t i) const { return nodes_.at(i); }
  std::vector<std::size_t> honest_indices() const;
  // State of the first honest node; all honest nodes agree after each round.
  const ModelParams& model() const;
  const Chain& chain() const;
  const KeyRegistry& registry() const { return registry_; }
  const SimConfig& config() const { return config_; }
  double sigma() const { return dp_.sigma; }
  std::uint64_t tick() const { return tick_; }

  // One line per protocol state transition:
  // "tick=<t> node=<id8> phase=<PHASE> action=<what> block=<hash8>".
  void SetTraceSink(std::ostream* sink) { trace_ = sink; }

  // Test hook: the stage ordering check enforced on every post.
  void AssertStageOpen(std::uint64_t round, Stage stage) const;

 private:
  struct Envelope;

  std::size_t IndexOf(const NodeId& id) const;
  std::size_t FirstHonest() const;
  const AdversaryStrategy* StrategyAt(std::size_t node,
                                      std::uint64_t round) const;
  void OpenStage(std::uint64_t round, Stage stage);
  void PrepareLeader(RoundMetrics* m);
  void Trace(std::size_t node, const std::string& phase,
             const std::string& action, const Hash256* block) const;

  void LocalGradientStage(std::uint64_t t, std::vector<GradientVector>& sent,
                          RoundMetrics& m);
  void GradientExchangeStage(std::uint64_t t,
                             const std::vector<GradientVector>& sent);
  void AggregateWithoutConsensus(std::uint64_t t, RoundMetrics& m);
  void ConsensusStage(std::uint64_t t, RoundMetrics& m);
  bool RunElection(std::uint64_t t, RoundMetrics* m);
  void CheckHonestAgreement() const;

  SimConfig config_;
  SimData data_;
  DpConfig dp_;
  KeyRegistry registry_;
  std::vector<NodeState> nodes_;
  std::uint64_t next_round_ = 0;
  std::uint64_t tick_ = 0;
  std::uint64_t epoch_ = 0;
  std::uint64_t view_ = 0;
  bool needs_election_ = true;
  std::uint64_t open_round_ = 0;
  Stage open_stage_ = Stage::kElection;
  bool any_stage_opened_ = false;
  std::ostream* trace_ = nullptr;
};

std::vector<RoundMetrics> RunExperiment(const SimConfig& config, SimData data);

// Partial sums R(tau) = sum_{t < tau} [F(A_t, X_t) - F(A~_t, X_t)] over the
// per-round training losses of two runs that share data and seed.
std::vector<double> EmpiricalRegret(std::span<const RoundMetrics> with_byz,
                                    std::span<const RoundMetrics> without);

}  // namespace spdl

#endif  // SPDL_NETSIM_H_
