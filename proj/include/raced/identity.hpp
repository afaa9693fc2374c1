/**
 * Copyright 2026 The RACED Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "raced/common.hpp"

namespace raced::identity {

inline constexpr unsigned kDefaultLambda = 128;

struct VerifyKey {
  static constexpr std::size_t kSize = 32;
  std::array<std::uint8_t, kSize> bytes{};

  ByteView view() const { return {bytes.data(), bytes.size()}; }
  auto operator<=>(const VerifyKey&) const = default;
};

struct SigningKey {
  static constexpr std::size_t kSize = 64;
  std::array<std::uint8_t, kSize> bytes{};

  bool operator==(const SigningKey&) const = default;
};

struct Signature {
  static constexpr std::size_t kSize = 64;
  std::array<std::uint8_t, kSize> bytes{};

  ByteView view() const { return {bytes.data(), bytes.size()}; }
  auto operator<=>(const Signature&) const = default;
};

using Seed = std::array<std::uint8_t, 32>;

/// Public half of an identity: what neighbours receive over the out-of-band
/// channel during key setup.
struct PublicIdentity {
  NodeRef node = kNoNode;
  VerifyKey vk;        ///< long-term
  VerifyKey temp_vk;   ///< pseudonymous
  Signature link_sig;  ///< Sign_sk(temp_vk)

  bool operator==(const PublicIdentity&) const = default;
};

/// Long-term and temporary keypairs of one node plus the signature linking
/// them. Immutable after generation.
struct Identity {
  NodeRef node = kNoNode;
  SigningKey sk;
  VerifyKey vk;
  SigningKey temp_sk;
  VerifyKey temp_vk;
  Signature link_sig;

  PublicIdentity public_identity() const { return {node, vk, temp_vk, link_sig}; }
  bool operator==(const Identity&) const = default;
};

struct SignatureEnvelope {
  Digest message_digest{};
  Signature signature;
  VerifyKey signer;
};

/// Derives both keypairs from `seed`. The seed carries 256 bits, so security
/// parameters above 128 are rejected.
Identity generate_identity(NodeRef node, const Seed& seed, unsigned lambda = kDefaultLambda);

/// Checks the linking signature. Wrong-length inputs raise Errc::decode.
bool verify_neighbor_identity(ByteView vk, ByteView temp_vk, ByteView link_sig);
bool verify_neighbor_identity(const PublicIdentity& id);

Signature sign_detached(const SigningKey& sk, ByteView message);
bool verify_detached(const VerifyKey& vk, ByteView message, const Signature& sig);

SignatureEnvelope sign(const SigningKey& sk, ByteView message);
bool verify(const SignatureEnvelope& envelope, ByteView message);

VerifyKey decode_verify_key(ByteView raw);
Signature decode_signature(ByteView raw);

/// Identities of every node in a simulation, indexed by NodeRef.
class Directory {
 public:
  Directory() = default;

  /// Generates `count` identities, node i seeded from `master.derive("identity", i)`.
  static Directory generate(std::size_t count, const DetRng& master,
                            unsigned lambda = kDefaultLambda);

  NodeRef add(Identity id);
  const Identity& at(NodeRef node) const;
  std::optional<NodeRef> find_long_term(const VerifyKey& vk) const;
  std::optional<NodeRef> find_temporary(const VerifyKey& vk) const;
  std::size_t size() const { return ids_.size(); }
  std::span<const Identity> all() const { return ids_; }

 private:
  struct KeyHash {
    std::size_t operator()(const VerifyKey& k) const noexcept;
  };

  std::vector<Identity> ids_;
  std::unordered_map<VerifyKey, NodeRef, KeyHash> by_vk_;
  std::unordered_map<VerifyKey, NodeRef, KeyHash> by_temp_vk_;
};

/// One line per node: `node,vk,temp_vk,link_sig` (hex).
void write_key_dump(std::ostream& out, std::span<const Identity> ids);

}  // namespace raced::identity
