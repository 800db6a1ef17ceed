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

#include "spdl/netsim.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "spdl/election.h"
#include "spdl/error.h"

namespace spdl {
namespace {

using Clock = std::chrono::steady_clock;

double MillisSince(Clock::time_point start, Clock::time_point end) {
  return std::chrono::duration<double, std::milli>(end - start).count();
}

// Signed all-to-all gradient broadcast.
struct GradientMessage {
  NodeId sender;
  std::uint64_t round = 0;
  std::vector<double> values;
  Signature sig;

  Bytes EncodeContent() const {
    ByteWriter w;
    w.Str("gradient");
    w.Fixed(sender.bytes);
    w.U64(round);
    w.Reals(values);
    return std::move(w).bytes();
  }
};

Hash256 RandomHash(Rng& rng) {
  Hash256 h;
  for (std::size_t i = 0; i < h.size(); i += 8) {
    std::uint64_t v = rng();
    for (std::size_t b = 0; b < 8; ++b) {
      h[i + b] = static_cast<std::uint8_t>(v >> (8 * b));
    }
  }
  return h;
}

Bytes NodeKeySeed(std::uint64_t seed, std::size_t i) {
  ByteWriter w;
  w.Str("spdl-node-key");
  w.U64(seed);
  w.U64(i);
  return std::move(w).bytes();
}

}  // namespace

std::string SchemeName(Scheme scheme) {
  switch (scheme) {
    case Scheme::kPure:
      return "pure";
    case Scheme::kDp:
      return "dp";
    case Scheme::kSpdl:
      return "spdl";
  }
  return "?";
}

Scheme ParseScheme(const std::string& name) {
  if (name == "pure") return Scheme::kPure;
  if (name == "dp") return Scheme::kDp;
  if (name == "spdl") return Scheme::kSpdl;
  throw ConfigurationError("unknown scheme '" + name + "'");
}

AdversaryStrategy AdversaryStrategy::Parse(const std::string& text) {
  AdversaryStrategy s;
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  std::optional<double> arg;
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      arg = std::stod(text.substr(colon + 1), &used);
      if (used != text.size() - colon - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ConfigurationError("bad adversary parameter in '" + text + "'");
    }
  }
  if (name == "honest") {
    s.kind = AdversaryKind::kHonest;
  } else if (name == "silent") {
    s.kind = AdversaryKind::kSilent;
  } else if (name == "random-gaussian") {
    s.kind = AdversaryKind::kRandomGaussian;
    s.scale = arg.value_or(1.0);
  } else if (name == "sign-flip") {
    s.kind = AdversaryKind::kSignFlip;
    s.scale = arg.value_or(1.0);
  } else if (name == "constant") {
    s.kind = AdversaryKind::kConstant;
    s.constant = {arg.value_or(1.0)};
  } else if (name == "equivocate" || name == "equivocate-consensus") {
    s.kind = AdversaryKind::kEquivocate;
  } else if (name == "substitute-delta") {
    s.kind = AdversaryKind::kSubstituteDelta;
    s.scale = arg.value_or(10.0);
  } else {
    throw ConfigurationError("unknown adversary strategy '" + text + "'");
  }
  if (!std::isfinite(s.scale)) throw ConfigurationError("non-finite scale");
  return s;
}

std::string AdversaryStrategy::Name() const {
  std::ostringstream os;
  switch (kind) {
    case AdversaryKind::kHonest:
      return "honest";
    case AdversaryKind::kSilent:
      return "silent";
    case AdversaryKind::kRandomGaussian:
      os << "random-gaussian:" << scale;
      return os.str();
    case AdversaryKind::kSignFlip:
      os << "sign-flip:" << scale;
      return os.str();
    case AdversaryKind::kConstant:
      os << "constant:" << (constant.empty() ? 0.0 : constant[0]);
      return os.str();
    case AdversaryKind::kEquivocate:
      return "equivocate";
    case AdversaryKind::kSubstituteDelta:
      os << "substitute-delta:" << scale;
      return os.str();
  }
  return "?";
}

GradientVector AdversaryStrategy::Apply(const GradientVector& honest,
                                        Rng& rng) const {
  switch (kind) {
    case AdversaryKind::kRandomGaussian: {
      GradientVector g(honest.dim());
      for (double& v : g.values) v = scale * rng.Gaussian();
      return g;
    }
    case AdversaryKind::kSignFlip: {
      GradientVector g = honest;
      for (double& v : g.values) v *= -scale;
      return g;
    }
    case AdversaryKind::kConstant: {
      if (constant.size() == 1) {
        return GradientVector(std::vector<double>(honest.dim(), constant[0]));
      }
      if (constant.size() != honest.dim()) {
        throw ConfigurationError("constant adversary vector has wrong length");
      }
      return GradientVector(constant);
    }
    case AdversaryKind::kSilent:
      return GradientVector(honest.dim());
    default:
      return honest;
  }
}

const AdversaryStrategy& AdversaryScript::At(std::uint64_t round) const {
  auto it = overrides.find(round);
  return it == overrides.end() ? base : it->second;
}

int SimConfig::ByzantineCount() const {
  return static_cast<int>(std::floor(byz_ratio * num_nodes + 1e-9));
}

DpConfig SimConfig::ResolvedDp() const {
  DpConfig c = DpConfig::Calibrated(
      dp.epsilon, dp.delta, dp.clip, gamma,
      static_cast<std::int64_t>(std::max<std::uint64_t>(rounds, 1)), dp.mode);
  if (scheme == Scheme::kPure) {
    c.sigma = 0.0;
  } else {
    c.sigma = std::max(c.sigma, dp.sigma);
  }
  return c;
}

void SimConfig::Validate() const {
  const int min_nodes = scheme == Scheme::kSpdl ? 4 : 1;
  if (num_nodes < min_nodes) {
    throw ConfigurationError("scheme " + SchemeName(scheme) + " needs at least " +
                             std::to_string(min_nodes) + " nodes");
  }
  if (!(byz_ratio >= 0.0 && byz_ratio < 1.0)) {
    throw ConfigurationError("byz_ratio must lie in [0, 1)");
  }
  if (ByzantineCount() >= num_nodes) {
    throw ConfigurationError("at least one node must be honest");
  }
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ConfigurationError("gamma must be positive and finite");
  }
  if (batch_size < 1) throw ConfigurationError("batch_size must be positive");
  if (epoch_length < 1) throw ConfigurationError("epoch_length must be >= 1");
  if (!(delta_tol > 0.0)) throw ConfigurationError("delta_tol must be positive");
  if (max_election_attempts < 1) {
    throw ConfigurationError("max_election_attempts must be >= 1");
  }
  if (random_single_update && scheme == Scheme::kSpdl) {
    throw ConfigurationError(
        "random_single_update applies to the pure and dp schemes only");
  }
  if (scheme == Scheme::kSpdl && gar == GarKind::kKrum &&
      num_nodes < ByzantineCapacity() + 3) {
    throw ConfigurationError("krum needs n >= f + 3");
  }
  if (scheme != Scheme::kPure) {
    try {
      ResolvedDp();
    } catch (const InvalidArgument& e) {
      throw ConfigurationError(std::string("dp parameters: ") + e.what());
    }
  }
}

struct Simulation::Envelope {
  std::size_t to;
  ConsensusMessage msg;
  Hash256 digest;
};

Simulation::Simulation(SimConfig config, SimData data)
    : config_(std::move(config)), data_(std::move(data)) {
  config_.Validate();
  const auto n = static_cast<std::size_t>(config_.num_nodes);
  if (data_.partitions.size() != n) {
    throw ConfigurationError("expected " + std::to_string(n) +
                             " data partitions, got " +
                             std::to_string(data_.partitions.size()));
  }
  const std::size_t p = data_.partitions[0].feature_dim();
  for (const auto& part : data_.partitions) {
    if (part.size() < config_.batch_size) {
      throw ConfigurationError("a partition holds fewer records than batch_size");
    }
    if (part.feature_dim() != p) {
      throw ConfigurationError("partitions disagree on feature dimension");
    }
  }
  if (config_.loss.kind == LossKind::kSoftmaxCrossEntropy &&
      config_.loss.num_classes != data_.partitions[0].num_classes()) {
    throw ConfigurationError("loss class count does not match the data");
  }
  dp_ = config_.ResolvedDp();
  const std::size_t dim = config_.loss.ParamDim(p);

  // Keys, then node order by identity.
  std::vector<std::pair<KeyPair, NodeId>> keys;
  for (std::size_t i = 0; i < n; ++i) {
    keys.push_back(Keygen(NodeKeySeed(config_.seed, i)));
  }
  std::sort(keys.begin(), keys.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
  for (std::size_t i = 1; i < n; ++i) {
    if (keys[i].second == keys[i - 1].second) {
      throw ConfigurationError("node identity collision");
    }
  }
  std::vector<Transaction> registrations;
  std::vector<NodeId> ids;
  for (std::size_t i = 0; i < n; ++i) {
    registry_.Register(keys[i].first);
    registrations.push_back(Transaction::Register(
        keys[i].first.pk, "sim://node/" + std::to_string(i), 0));
    ids.push_back(keys[i].second);
  }
  registry_.Freeze();
  const Block genesis = MakeGenesis(registrations, dim);

  // Byzantine nodes: a seeded choice of ByzantineCount() indices.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng pick(config_.seed, StreamId(0, StreamPurpose::kAdversary));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::swap(order[i], order[i + pick.Below(n - i)]);
  }
  std::vector<bool> byz(n, false);
  for (int b = 0; b < config_.ByzantineCount(); ++b) byz[order[b]] = true;

  nodes_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes_.push_back(NodeState{
        .index = i,
        .keys = keys[i].first,
        .id = keys[i].second,
        .byzantine = byz[i],
        .script = byz[i] ? config_.byz_script : AdversaryScript{},
        .chain = Chain(genesis),
        .model = ModelParams(dim),
        .reputations = ReputationTable(ids),
        .leader = std::nullopt,
        .batch_rng = Rng(config_.seed, StreamId(i, StreamPurpose::kBatch)),
        .noise_rng = Rng(config_.seed, StreamId(i, StreamPurpose::kNoise)),
        .adversary_rng =
            Rng(config_.seed, StreamId(i, StreamPurpose::kAdversary) + 1),
        .received = {},
    });
  }
  needs_election_ = config_.scheme == Scheme::kSpdl;
}

void Simulation::SetScript(std::size_t node, AdversaryScript script) {
  NodeState& s = nodes_.at(node);
  s.byzantine = true;
  s.script = std::move(script);
  if (honest_indices().empty()) {
    throw ConfigurationError("at least one node must stay honest");
  }
}

std::vector<std::size_t> Simulation::honest_indices() const {
  std::vector<std::size_t> out;
  for (const auto& s : nodes_) {
    if (!s.byzantine) out.push_back(s.index);
  }
  return out;
}

std::size_t Simulation::FirstHonest() const {
  for (const auto& s : nodes_) {
    if (!s.byzantine) return s.index;
  }
  throw SafetyViolation("no honest node left");
}

const ModelParams& Simulation::model() const {
  return nodes_[FirstHonest()].model;
}

const Chain& Simulation::chain() const { return nodes_[FirstHonest()].chain; }

std::size_t Simulation::IndexOf(const NodeId& id) const {
  auto it = std::lower_bound(
      nodes_.begin(), nodes_.end(), id,
      [](const NodeState& s, const NodeId& x) { return s.id < x; });
  if (it == nodes_.end() || it->id != id) {
    throw InvalidArgument("unknown node id " + id.ShortHex());
  }
  return it->index;
}

const AdversaryStrategy* Simulation::StrategyAt(std::size_t node,
                                                std::uint64_t round) const {
  const NodeState& s = nodes_[node];
  if (!s.byzantine) return nullptr;
  const AdversaryStrategy& a = s.script.At(round);
  return a.kind == AdversaryKind::kHonest ? nullptr : &a;
}

std::optional<NodeId> Simulation::current_leader() const {
  return nodes_[FirstHonest()].leader;
}

std::optional<std::size_t> Simulation::current_leader_index() const {
  auto l = current_leader();
  if (!l) return std::nullopt;
  return IndexOf(*l);
}

void Simulation::AssertStageOpen(std::uint64_t round, Stage stage) const {
  if (!any_stage_opened_ || open_round_ != round || open_stage_ != stage) {
    throw SafetyViolation("message for round " + std::to_string(round) +
                          " stage " +
                          std::to_string(static_cast<int>(stage)) +
                          " posted outside its stage");
  }
}

void Simulation::OpenStage(std::uint64_t round, Stage stage) {
  if (any_stage_opened_ &&
      (round < open_round_ ||
       (round == open_round_ && stage < open_stage_))) {
    throw SafetyViolation("stage order regressed");
  }
  any_stage_opened_ = true;
  open_round_ = round;
  open_stage_ = stage;
}

void Simulation::Trace(std::size_t node, const std::string& phase,
                       const std::string& action, const Hash256* block) const {
  if (trace_ == nullptr) return;
  *trace_ << "tick=" << tick_ << " node=" << nodes_[node].id.ShortHex()
          << " phase=" << phase << " action=" << action
          << " block=" << (block ? ToHex(*block).substr(0, 8) : "-") << "\n";
}

void Simulation::EnsureLeader() { PrepareLeader(nullptr); }

void Simulation::PrepareLeader(RoundMetrics* m) {
  if (config_.scheme != Scheme::kSpdl) return;
  const std::uint64_t t = next_round_;
  if (t / config_.epoch_length > epoch_) {
    // Epoch boundary: fresh election with the attempt counter reset.
    epoch_ = t / config_.epoch_length;
    view_ = 0;
    needs_election_ = true;
  }
  if (needs_election_) RunElection(t, m);
}

bool Simulation::RunElection(std::uint64_t t, RoundMetrics* m) {
  OpenStage(t, Stage::kElection);
  const std::size_t n = nodes_.size();
  for (int attempt = 0; attempt < config_.max_election_attempts; ++attempt) {
    const Bytes seed =
        ElectionSeed(epoch_, view_, nodes_[FirstHonest()].chain.tip().hash);
    std::vector<CandidateSubmission> subs;
    for (std::size_t i = 0; i < n; ++i) {
      const AdversaryStrategy* a = StrategyAt(i, t);
      if (a && a->kind == AdversaryKind::kSilent) continue;
      const VrfOutput out = VrfEval(nodes_[i].keys.sk, seed);
      subs.push_back({nodes_[i].id, out.h, out.proof});
      if (a && a->kind == AdversaryKind::kEquivocate) {
        // Forged maximal lottery ticket; must be filtered by every verifier.
        Hash256 forged;
        forged.fill(0xFF);
        subs.push_back({nodes_[i].id, forged,
                        RandomHash(nodes_[i].adversary_rng)});
      }
    }
    tick_ += config_.delta1;
    bool failed = false;
    for (auto& node : nodes_) {
      std::size_t rejected = 0;
      auto cands = AdmitCandidates(
          registry_, seed, subs,
          [&node](const NodeId& id) { return node.reputations.Get(id); },
          &rejected);
      if (m != nullptr && !node.byzantine) m->rejected_candidates = rejected;
      try {
        node.leader = ElectLeader(cands);
      } catch (const ElectionFailed&) {
        node.leader.reset();
        if (!node.byzantine) failed = true;
      }
    }
    if (!failed) {
      needs_election_ = false;
      const auto& lead = *nodes_[FirstHonest()].leader;
      Trace(FirstHonest(), "ELECT", "leader=" + lead.ShortHex(), nullptr);
      return true;
    }
    Trace(FirstHonest(), "ELECT", "failed", nullptr);
    ++view_;
  }
  return false;
}

void Simulation::LocalGradientStage(std::uint64_t t,
                                    std::vector<GradientVector>& sent,
                                    RoundMetrics& m) {
  const std::size_t n = nodes_.size();
  const bool noisy = config_.scheme != Scheme::kPure;
  const ModelParams& reference = nodes_[FirstHonest()].model;
  std::vector<GradientVector> honest_true;
  double loss_sum = 0.0;
  GradientVector loss_grad(reference.dim());
  sent.assign(n, GradientVector());
  for (std::size_t i = 0; i < n; ++i) {
    NodeState& s = nodes_[i];
    const Dataset& data = data_.partitions[i];
    // Every node draws its batch and noise each round, so random streams
    // stay aligned across runs with different adversaries.
    const Batch batch = SampleBatch(data, config_.batch_size, s.batch_rng);
    const GradientVector g = ComputeGradient(s.model, data, batch, config_.loss);
    GradientVector shared = noisy ? ClipGradient(g, dp_.clip) : g;
    shared = Perturb(shared, dp_.sigma, s.noise_rng);
    if (const AdversaryStrategy* a = StrategyAt(i, t)) {
      shared = a->Apply(shared, s.adversary_rng);
    }
    sent[i] = std::move(shared);

    loss_sum += LossValue(reference, data, batch, config_.loss);
    const GradientVector ref_g =
        ComputeGradient(reference, data, batch, config_.loss);
    for (std::size_t j = 0; j < ref_g.dim(); ++j) {
      loss_grad.values[j] += ref_g.values[j];
    }
    if (!s.byzantine) honest_true.push_back(g);
  }
  for (double& v : loss_grad.values) v /= static_cast<double>(n);
  m.train_loss = loss_sum / static_cast<double>(n);
  m.loss_grad_norm = Norm(loss_grad.values);
  const GradientVector mean = AverageAggregate(honest_true);
  double var = 0.0;
  for (const auto& g : honest_true) var += SquaredDistance(g.values, mean.values);
  m.honest_grad_variance = var / static_cast<double>(honest_true.size());
}

void Simulation::GradientExchangeStage(std::uint64_t t,
                                       const std::vector<GradientVector>& sent) {
  OpenStage(t, Stage::kGradientExchange);
  const std::size_t n = nodes_.size();
  const std::size_t dim = nodes_[0].model.dim();
  std::vector<GradientMessage> posted;
  for (std::size_t i = 0; i < n; ++i) {
    const AdversaryStrategy* a = StrategyAt(i, t);
    if (a && !a->SendsGradient()) continue;
    AssertStageOpen(t, Stage::kGradientExchange);
    GradientMessage msg{nodes_[i].id, t, sent[i].values, {}};
    msg.sig = Sign(nodes_[i].keys.sk, msg.EncodeContent());
    posted.push_back(std::move(msg));
  }
  // Already in sender-id order because nodes are sorted by id.
  for (auto& node : nodes_) {
    node.received.assign(n, GradientVector(dim));
    for (const auto& msg : posted) {
      const std::size_t from = IndexOf(msg.sender);
      if (msg.values.size() != dim || !AllFinite(msg.values)) continue;
      if (from != node.index &&
          !registry_.VerifyFrom(msg.sender, msg.EncodeContent(), msg.sig)) {
        continue;
      }
      node.received[from].values = msg.values;
    }
  }
  tick_ += config_.ge_ticks;
}

void Simulation::AggregateWithoutConsensus(std::uint64_t t, RoundMetrics& m) {
  OpenStage(t, Stage::kConsensus);
  std::optional<std::size_t> pick;
  if (config_.random_single_update) {
    Rng rng(config_.seed, StreamId(t, StreamPurpose::kReference));
    pick = rng.Below(nodes_.size());
  }
  for (auto& node : nodes_) {
    const GradientVector delta = pick ? node.received[*pick]
                                      : AverageAggregate(node.received);
    node.model = SgdUpdate(node.model, delta, config_.gamma);
  }
  m.committed = true;
  m.reputation_min = nodes_[FirstHonest()].reputations.Min();
}

void Simulation::ConsensusStage(std::uint64_t t, RoundMetrics& m) {
  const std::uint64_t bc_tick_start = tick_;
  OpenStage(t, Stage::kConsensus);
  if (needs_election_) {
    // Every election attempt failed: nothing can be proposed this round.
    m.committed = false;
    m.t_bc_ticks = tick_ - bc_tick_start;
    m.reputation_min = nodes_[FirstHonest()].reputations.Min();
    return;
  }
  m.epoch = epoch_;
  m.leader = nodes_[FirstHonest()].leader;

  const std::size_t n = nodes_.size();
  const GarSpec gar{config_.gar, config_.ByzantineCapacity()};
  const std::uint64_t start = tick_;
  std::vector<NodeId> ids;
  for (const auto& s : nodes_) ids.push_back(s.id);

  std::vector<RoundState> states;
  states.reserve(n);
  for (auto& node : nodes_) {
    RoundConfig rc;
    rc.num_nodes = static_cast<int>(n);
    rc.self = node.id;
    rc.self_sk = node.keys.sk;
    rc.leader = node.leader.value_or(NodeId{});
    rc.epoch = epoch_;
    rc.round = t;
    rc.view = view_;
    rc.start_tick = start;
    rc.delta_tol = config_.delta_tol;
    states.emplace_back(rc, &registry_, Aggregate(gar, node.received),
                        &node.chain);
  }

  std::vector<Envelope> pending;
  auto post_to = [&](std::size_t to, const ConsensusMessage& msg) {
    AssertStageOpen(t, Stage::kConsensus);
    pending.push_back(Envelope{to, msg, msg.Digest()});
  };
  auto broadcast = [&](const ConsensusMessage& msg) {
    for (std::size_t to = 0; to < n; ++to) post_to(to, msg);
  };
  // Outgoing traffic of node `from`, filtered through its adversary strategy.
  auto emit = [&](std::size_t from, const std::vector<ConsensusMessage>& out) {
    const AdversaryStrategy* a = StrategyAt(from, t);
    NodeState& s = nodes_[from];
    for (const auto& msg : out) {
      if (a && a->kind == AdversaryKind::kSilent) continue;
      const bool own_vote = msg.sender == s.id &&
                            msg.phase != Phase::kPrePrepare;
      if (!a || a->kind != AdversaryKind::kEquivocate || !own_vote) {
        broadcast(msg);
        continue;
      }
      for (std::size_t to = 0; to < n; ++to) {
        switch (s.adversary_rng.Below(4)) {
          case 0:
            post_to(to, msg);
            break;
          case 1: {
            ConsensusMessage bogus = msg;
            bogus.block_hash = RandomHash(s.adversary_rng);
            SignMessage(bogus, s.keys.sk);
            post_to(to, bogus);
            break;
          }
          case 2:
            post_to(to, msg);
            post_to(to, msg);
            break;
          default:
            break;
        }
      }
    }
  };

  // PRE-PREPARE.
  const NodeId& leader_id = *m.leader;
  const std::size_t leader = IndexOf(leader_id);
  {
    NodeState& ls = nodes_[leader];
    RoundState& st = states[leader];
    const AdversaryStrategy* a = StrategyAt(leader, t);
    if (!a) {
      Proposal p = LeaderPropose(ls.received, gar, ls.chain, epoch_, t, view_,
                                 ls.id, ls.keys.sk);
      Trace(leader, "PRE-PREPARE", "propose", &p.block.hash);
      for (auto& msg : st.StartAsLeader(p)) broadcast(msg);
    } else if (a->kind == AdversaryKind::kSubstituteDelta) {
      GradientVector fake(ls.model.dim());
      for (double& v : fake.values) v = a->scale * ls.adversary_rng.Gaussian();
      Block b = MakeBlock(ls.chain.tip(), epoch_, t, std::move(fake), ls.id);
      Proposal p{b, MakePrePrepare(b, view_, ls.id, ls.keys.sk)};
      Trace(leader, "PRE-PREPARE", "propose-substituted", &p.block.hash);
      for (auto& msg : st.StartAsLeader(p)) broadcast(msg);
    } else if (a->kind == AdversaryKind::kEquivocate) {
      // Two valid blocks whose deltas differ far below delta_tol, each sent
      // to a random subset of peers.
      Proposal pa = LeaderPropose(ls.received, gar, ls.chain, epoch_, t, view_,
                                  ls.id, ls.keys.sk);
      GradientVector nudged = pa.block.delta;
      if (nudged.dim() > 0) nudged.values[0] += config_.delta_tol * 1e-3;
      Block bb = MakeBlock(ls.chain.tip(), epoch_, t, std::move(nudged), ls.id);
      Proposal pb{bb, MakePrePrepare(bb, view_, ls.id, ls.keys.sk)};
      Trace(leader, "PRE-PREPARE", "propose-equivocating", &pa.block.hash);
      const std::vector<ConsensusMessage> own = st.StartAsLeader(pa);
      for (std::size_t to = 0; to < n; ++to) {
        const bool first = ls.adversary_rng.Below(2) == 0;
        post_to(to, first ? pa.pre_prepare : pb.pre_prepare);
      }
      for (std::size_t k = 1; k < own.size(); ++k) emit(leader, {own[k]});
    } else {
      // Gradient-level adversaries run consensus honestly; silent sends
      // nothing.
      if (a->kind != AdversaryKind::kSilent) {
        Proposal p = LeaderPropose(ls.received, gar, ls.chain, epoch_, t,
                                   view_, ls.id, ls.keys.sk);
        Trace(leader, "PRE-PREPARE", "propose", &p.block.hash);
        for (auto& msg : st.StartAsLeader(p)) broadcast(msg);
      } else {
        Trace(leader, "PRE-PREPARE", "silent", nullptr);
      }
    }
  }
  // Early view-change votes and an impersonated vote from equivocators.
  for (std::size_t i = 0; i < n; ++i) {
    const AdversaryStrategy* a = StrategyAt(i, t);
    if (!a || a->kind != AdversaryKind::kEquivocate) continue;
    NodeState& s = nodes_[i];
    if (s.adversary_rng.Below(2) == 0) {
      ConsensusMessage vc;
      vc.phase = Phase::kViewChange;
      vc.sender = s.id;
      vc.epoch = epoch_;
      vc.round = t;
      vc.view = view_;
      vc.block_hash = s.chain.tip().hash;
      SignMessage(vc, s.keys.sk);
      broadcast(vc);
    }
    ConsensusMessage forged;
    forged.phase = Phase::kPrepare;
    forged.sender = nodes_[FirstHonest()].id;
    forged.epoch = epoch_;
    forged.round = t;
    forged.view = view_;
    forged.block_hash = RandomHash(s.adversary_rng);
    SignMessage(forged, s.keys.sk);  // wrong key: must fail verification
    broadcast(forged);
  }

  auto apply_decision = [&](std::size_t i) {
    NodeState& s = nodes_[i];
    const Block& b = *states[i].decided_block();
    if (b.prev_hash != s.chain.tip().hash || b.height != s.chain.tip().height + 1) {
      if (!s.byzantine) {
        throw SafetyViolation("honest node " + s.id.ShortHex() +
                              " decided a block that does not extend its chain");
      }
      return;
    }
    DecideOutcome out = Decide(states[i], std::move(s.chain), s.model,
                               config_.gamma, s.reputations, ids, s.received);
    s.chain = std::move(out.chain);
    s.model = std::move(out.model);
    s.reputations = std::move(out.reputations);
    Trace(i, "DECIDE", "append", &b.hash);
    emit(i, states[i].DecisionCertificate());
  };

  auto deliver_until_quiet = [&](std::uint64_t deadline) {
    while (!pending.empty() && tick_ < deadline) {
      ++tick_;
      std::vector<Envelope> batch;
      batch.swap(pending);
      std::stable_sort(batch.begin(), batch.end(),
                       [](const Envelope& x, const Envelope& y) {
                         if (x.to != y.to) return x.to < y.to;
                         if (x.msg.sender != y.msg.sender) {
                           return x.msg.sender < y.msg.sender;
                         }
                         return x.digest < y.digest;
                       });
      for (const Envelope& env : batch) {
        RoundState& st = states[env.to];
        const bool was_decided = st.decided();
        const std::size_t rejections = st.rejections().size();
        RoundEvents ev = st.Receive(env.msg);
        if (st.rejections().size() > rejections) {
          Trace(env.to, "PREPARE",
                "reject:" + RejectReasonName(st.rejections().back()),
                &env.msg.block_hash);
        }
        for (const auto& out : ev.outbound) {
          Trace(env.to, PhaseName(out.phase), "send", &out.block_hash);
        }
        emit(env.to, ev.outbound);
        if (!was_decided && ev.decided) apply_decision(env.to);
        if (ev.abandoned) Trace(env.to, "VIEW-CHANGE", "abandon", nullptr);
      }
    }
  };

  deliver_until_quiet(start + config_.delta2 + 1);
  bool any_undecided = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!states[i].decided()) any_undecided = true;
  }
  if (any_undecided) {
    // Timer expiry: everyone still waiting asks for a view change.
    tick_ = std::max(tick_, start + config_.delta2 + 1);
    pending.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (auto vc = states[i].OnTimeout(tick_, config_.delta2)) {
        Trace(i, "VIEW-CHANGE", "send", nullptr);
        emit(i, {*vc});
      }
    }
    deliver_until_quiet(tick_ + 2 * n + 4);
  }

  std::optional<Hash256> decided;
  std::size_t n_decided = 0;
  std::size_t n_honest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m.invalid_signatures += states[i].invalid_signatures();
    if (nodes_[i].byzantine) continue;
    ++n_honest;
    if (states[i].decided()) {
      ++n_decided;
      const Hash256 h = states[i].decided_block()->hash;
      if (decided && *decided != h) {
        throw SafetyViolation("honest nodes decided different blocks in round " +
                              std::to_string(t));
      }
      decided = h;
    }
  }
  if (n_decided != 0 && n_decided != n_honest) {
    throw SafetyViolation("only some honest nodes decided in round " +
                          std::to_string(t));
  }
  m.committed = n_decided == n_honest;
  if (m.committed) {
    m.block_hash = decided;
  } else {
    // Abandoned (or stuck without a view-change quorum): skip the update and
    // re-elect with the next attempt.
    ++view_;
    needs_election_ = true;
  }
  m.t_bc_ticks = tick_ - bc_tick_start;
  m.reputation_min = nodes_[FirstHonest()].reputations.Min();
}

void Simulation::CheckHonestAgreement() const {
  const NodeState& ref = nodes_[FirstHonest()];
  for (const auto& s : nodes_) {
    if (s.byzantine) continue;
    if (s.model != ref.model) {
      throw SafetyViolation("honest models diverged at node " + s.id.ShortHex());
    }
    if (config_.scheme == Scheme::kSpdl &&
        (s.chain.size() != ref.chain.size() ||
         s.chain.tip().hash != ref.chain.tip().hash ||
         s.reputations != ref.reputations)) {
      throw SafetyViolation("honest ledgers diverged at node " +
                            s.id.ShortHex());
    }
  }
}

RoundMetrics Simulation::RunRound() {
  if (finished()) throw InvalidArgument("all rounds have run");
  const std::uint64_t t = next_round_;
  RoundMetrics m;
  m.round = t;

  // The election runs first but is charged to the consensus stage.
  const auto te = Clock::now();
  const std::uint64_t tick_e = tick_;
  PrepareLeader(&m);
  const std::uint64_t election_ticks = tick_ - tick_e;
  m.epoch = epoch_;

  const auto t0 = Clock::now();
  std::vector<GradientVector> sent;
  const std::uint64_t tick0 = tick_;
  LocalGradientStage(t, sent, m);
  tick_ += config_.lgc_ticks;
  m.t_lgc_ticks = tick_ - tick0;
  const auto t1 = Clock::now();

  const std::uint64_t tick1 = tick_;
  GradientExchangeStage(t, sent);
  m.t_ge_ticks = tick_ - tick1;
  const auto t2 = Clock::now();

  if (config_.scheme == Scheme::kSpdl) {
    ConsensusStage(t, m);
    m.t_bc_ticks += election_ticks;
  } else {
    const std::uint64_t tick2 = tick_;
    AggregateWithoutConsensus(t, m);
    m.t_bc_ticks = tick_ - tick2;
  }
  const auto t3 = Clock::now();
  m.t_lgc_ms = MillisSince(t0, t1);
  m.t_ge_ms = MillisSince(t1, t2);
  m.t_bc_ms = MillisSince(t2, t3) + MillisSince(te, t0);
  m.round_ms = MillisSince(te, t3);

  CheckHonestAgreement();
  if (config_.loss.kind == LossKind::kSoftmaxCrossEntropy &&
      !data_.test.empty()) {
    m.test_error = TestError(model(), data_.test, config_.loss);
  } else {
    m.test_error = std::nan("");
  }
  ++next_round_;
  return m;
}

std::vector<RoundMetrics> Simulation::Run() {
  std::vector<RoundMetrics> out;
  while (!finished()) out.push_back(RunRound());
  return out;
}

std::vector<RoundMetrics> RunExperiment(const SimConfig& config, SimData data) {
  Simulation sim(config, std::move(data));
  return sim.Run();
}

std::vector<double> EmpiricalRegret(std::span<const RoundMetrics> with_byz,
                                    std::span<const RoundMetrics> without) {
  if (with_byz.size() != without.size()) {
    throw InvalidArgument("regret needs runs of equal length");
  }
  std::vector<double> partial;
  partial.reserve(with_byz.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < with_byz.size(); ++t) {
    if (with_byz[t].round != without[t].round) {
      throw InvalidArgument("regret runs are misaligned at position " +
                            std::to_string(t));
    }
    sum += with_byz[t].train_loss - without[t].train_loss;
    partial.push_back(sum);
  }
  return partial;
}

}  // namespace spdl
