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

#ifndef SPDL_CRYPTO_H_
#define SPDL_CRYPTO_H_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "spdl/encoding.h"

namespace spdl {

// The one hash used for identities, block hashes, signatures and the VRF.
Hash256 Sha256(std::span<const std::uint8_t> data);
Hash256 Sha256(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

struct NodeId {
  Hash256 bytes{};
  auto operator<=>(const NodeId&) const = default;
  std::string Hex() const { return ToHex(bytes); }
  std::string ShortHex() const { return Hex().substr(0, 8); }
};

struct SecretKey {
  Hash256 bytes{};
  bool operator==(const SecretKey&) const = default;
};

struct PublicKey {
  Hash256 bytes{};
  auto operator<=>(const PublicKey&) const = default;
};

struct KeyPair {
  SecretKey sk;
  PublicKey pk;
};

struct Signature {
  Hash256 bytes{};
  bool operator==(const Signature&) const = default;
};

struct VrfOutput {
  Hash256 h{};
  Hash256 proof{};
};

// Keyed-hash surrogates. sk = H(seed), pk = H(sk), id = H(pk),
// sign(sk, m) = H(sk || m), vrf h = H(sk || seed),
// vrf proof = H("proof" || sk || seed).
std::pair<KeyPair, NodeId> Keygen(std::span<const std::uint8_t> seed);
NodeId IdFromPublicKey(const PublicKey& pk);
Signature Sign(const SecretKey& sk, std::span<const std::uint8_t> msg);
VrfOutput VrfEval(const SecretKey& sk, std::span<const std::uint8_t> seed);

// Verifier for the surrogate schemes. Keyed hashes are not publicly
// verifiable, so the registry keeps the secret behind each public key and
// re-derives tags. It is filled once at bootstrap and then frozen; after
// that it is read-only and safe to share between threads.
class KeyRegistry {
 public:
  void Register(const KeyPair& keys);
  void Freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  std::optional<PublicKey> PublicKeyOf(const NodeId& id) const;

  // Throws InvalidArgument when pk or sig is not 32 bytes.
  bool Verify(std::span<const std::uint8_t> pk,
              std::span<const std::uint8_t> msg,
              std::span<const std::uint8_t> sig) const;
  bool Verify(const PublicKey& pk, std::span<const std::uint8_t> msg,
              const Signature& sig) const;
  // Convenience: looks up the key registered for `signer`.
  bool VerifyFrom(const NodeId& signer, std::span<const std::uint8_t> msg,
                  const Signature& sig) const;

  bool VrfVerify(const PublicKey& pk, const Hash256& h, const Hash256& proof,
                 std::span<const std::uint8_t> seed) const;

 private:
  bool frozen_ = false;
  std::map<PublicKey, SecretKey> keys_;
  std::map<NodeId, PublicKey> ids_;
};

}  // namespace spdl

#endif  // SPDL_CRYPTO_H_
