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

#include "spdl/crypto.h"

#include <openssl/evp.h>

#include <cstring>

#include "spdl/error.h"

namespace spdl {
namespace {

constexpr std::uint8_t kProofTag[] = {'p', 'r', 'o', 'o', 'f'};

bool ConstantTimeEqual(const Hash256& a, const Hash256& b) {
  std::uint8_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc |= a[i] ^ b[i];
  return acc == 0;
}

}  // namespace

Hash256 Sha256(std::span<const std::uint8_t> data) {
  return Sha256(data, {});
}

Hash256 Sha256(std::span<const std::uint8_t> a,
               std::span<const std::uint8_t> b) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw Error("EVP_MD_CTX_new failed");
  Hash256 out;
  unsigned int len = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, a.data(), a.size()) == 1 &&
                  EVP_DigestUpdate(ctx, b.data(), b.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, out.data(), &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok || len != out.size()) throw Error("sha256 digest failed");
  return out;
}

std::pair<KeyPair, NodeId> Keygen(std::span<const std::uint8_t> seed) {
  KeyPair kp;
  kp.sk.bytes = Sha256(seed);
  kp.pk.bytes = Sha256(kp.sk.bytes);
  return {kp, IdFromPublicKey(kp.pk)};
}

NodeId IdFromPublicKey(const PublicKey& pk) { return NodeId{Sha256(pk.bytes)}; }

Signature Sign(const SecretKey& sk, std::span<const std::uint8_t> msg) {
  return Signature{Sha256(sk.bytes, msg)};
}

VrfOutput VrfEval(const SecretKey& sk, std::span<const std::uint8_t> seed) {
  VrfOutput out;
  out.h = Sha256(sk.bytes, seed);
  Bytes tagged(std::begin(kProofTag), std::end(kProofTag));
  tagged.insert(tagged.end(), sk.bytes.begin(), sk.bytes.end());
  out.proof = Sha256(tagged, seed);
  return out;
}

void KeyRegistry::Register(const KeyPair& keys) {
  if (frozen_) throw InvalidArgument("key registry is frozen");
  if (Sha256(keys.sk.bytes) != keys.pk.bytes) {
    throw InvalidArgument("public key does not match secret key");
  }
  const NodeId id = IdFromPublicKey(keys.pk);
  if (ids_.contains(id)) throw InvalidArgument("duplicate node identity");
  keys_.emplace(keys.pk, keys.sk);
  ids_.emplace(id, keys.pk);
}

std::optional<PublicKey> KeyRegistry::PublicKeyOf(const NodeId& id) const {
  auto it = ids_.find(id);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool KeyRegistry::Verify(std::span<const std::uint8_t> pk,
                         std::span<const std::uint8_t> msg,
                         std::span<const std::uint8_t> sig) const {
  if (pk.size() != 32) {
    throw InvalidArgument("public key must be 32 bytes, got " +
                          std::to_string(pk.size()));
  }
  if (sig.size() != 32) {
    throw InvalidArgument("signature must be 32 bytes, got " +
                          std::to_string(sig.size()));
  }
  PublicKey key;
  std::memcpy(key.bytes.data(), pk.data(), 32);
  Signature s;
  std::memcpy(s.bytes.data(), sig.data(), 32);
  return Verify(key, msg, s);
}

bool KeyRegistry::Verify(const PublicKey& pk, std::span<const std::uint8_t> msg,
                         const Signature& sig) const {
  auto it = keys_.find(pk);
  if (it == keys_.end()) return false;
  return ConstantTimeEqual(Sign(it->second, msg).bytes, sig.bytes);
}

bool KeyRegistry::VerifyFrom(const NodeId& signer,
                             std::span<const std::uint8_t> msg,
                             const Signature& sig) const {
  auto pk = PublicKeyOf(signer);
  return pk.has_value() && Verify(*pk, msg, sig);
}

bool KeyRegistry::VrfVerify(const PublicKey& pk, const Hash256& h,
                            const Hash256& proof,
                            std::span<const std::uint8_t> seed) const {
  auto it = keys_.find(pk);
  if (it == keys_.end()) return false;
  const VrfOutput expected = VrfEval(it->second, seed);
  return ConstantTimeEqual(expected.h, h) &&
         ConstantTimeEqual(expected.proof, proof);
}

}  // namespace spdl
