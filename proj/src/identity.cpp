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
#include "raced/identity.hpp"

#include <cstring>
#include <ostream>

#include "sodium_init.hpp"

namespace raced::identity {

namespace {

static_assert(crypto_sign_PUBLICKEYBYTES == VerifyKey::kSize);
static_assert(crypto_sign_SECRETKEYBYTES == SigningKey::kSize);
static_assert(crypto_sign_BYTES == Signature::kSize);
static_assert(crypto_sign_SEEDBYTES == 32);

void keypair_from(const Seed& master, std::string_view label, SigningKey& sk, VerifyKey& vk) {
  Encoder enc;
  enc.str("raced/keygen").str(label).bytes(master);
  auto seed = sha256(enc.buffer());
  crypto_sign_seed_keypair(vk.bytes.data(), sk.bytes.data(), seed.data());
  sodium_memzero(seed.data(), seed.size());
}

}  // namespace

Identity generate_identity(NodeRef node, const Seed& seed, unsigned lambda) {
  detail::ensure_sodium();
  if (lambda == 0 || 2 * lambda > seed.size() * 8) {
    throw Error(Errc::config, "seed carries fewer than 2*lambda bits");
  }
  Identity id;
  id.node = node;
  keypair_from(seed, "long-term", id.sk, id.vk);
  keypair_from(seed, "temporary", id.temp_sk, id.temp_vk);
  id.link_sig = sign_detached(id.sk, id.temp_vk.view());
  return id;
}

VerifyKey decode_verify_key(ByteView raw) {
  if (raw.size() != VerifyKey::kSize) {
    throw Error(Errc::decode, "verification key must be 32 bytes, got " + std::to_string(raw.size()));
  }
  VerifyKey k;
  std::memcpy(k.bytes.data(), raw.data(), raw.size());
  return k;
}

Signature decode_signature(ByteView raw) {
  if (raw.size() != Signature::kSize) {
    throw Error(Errc::decode, "signature must be 64 bytes, got " + std::to_string(raw.size()));
  }
  Signature s;
  std::memcpy(s.bytes.data(), raw.data(), raw.size());
  return s;
}

Signature sign_detached(const SigningKey& sk, ByteView message) {
  detail::ensure_sodium();
  Signature sig;
  crypto_sign_detached(sig.bytes.data(), nullptr, message.data(), message.size(), sk.bytes.data());
  return sig;
}

bool verify_detached(const VerifyKey& vk, ByteView message, const Signature& sig) {
  detail::ensure_sodium();
  return crypto_sign_verify_detached(sig.bytes.data(), message.data(), message.size(),
                                     vk.bytes.data()) == 0;
}

bool verify_neighbor_identity(ByteView vk, ByteView temp_vk, ByteView link_sig) {
  auto long_term = decode_verify_key(vk);
  auto temporary = decode_verify_key(temp_vk);
  auto sig = decode_signature(link_sig);
  return verify_detached(long_term, temporary.view(), sig);
}

bool verify_neighbor_identity(const PublicIdentity& id) {
  return verify_detached(id.vk, id.temp_vk.view(), id.link_sig);
}

SignatureEnvelope sign(const SigningKey& sk, ByteView message) {
  SignatureEnvelope env;
  env.message_digest = sha256(message);
  env.signature = sign_detached(sk, message);
  // libsodium keeps the public key in the upper half of the secret key
  std::memcpy(env.signer.bytes.data(), sk.bytes.data() + 32, VerifyKey::kSize);
  return env;
}

bool verify(const SignatureEnvelope& envelope, ByteView message) {
  if (sha256(message) != envelope.message_digest) return false;
  return verify_detached(envelope.signer, message, envelope.signature);
}

std::size_t Directory::KeyHash::operator()(const VerifyKey& k) const noexcept {
  std::size_t h = 0;
  std::memcpy(&h, k.bytes.data(), sizeof(h));
  return h;
}

Directory Directory::generate(std::size_t count, const DetRng& master, unsigned lambda) {
  Directory dir;
  dir.ids_.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    dir.add(generate_identity(static_cast<NodeRef>(i), master.derive("identity", i), lambda));
  }
  return dir;
}

NodeRef Directory::add(Identity id) {
  auto ref = static_cast<NodeRef>(ids_.size());
  if (id.node != ref) {
    throw Error(Errc::invalid_argument, "identity node ref does not match directory slot");
  }
  if (by_vk_.contains(id.vk) || by_temp_vk_.contains(id.temp_vk)) {
    throw Error(Errc::duplicate, "duplicate verification key in directory");
  }
  by_vk_.emplace(id.vk, ref);
  by_temp_vk_.emplace(id.temp_vk, ref);
  ids_.push_back(std::move(id));
  return ref;
}

const Identity& Directory::at(NodeRef node) const {
  if (node >= ids_.size()) {
    throw Error(Errc::lookup, "unknown node " + std::to_string(node));
  }
  return ids_[node];
}

std::optional<NodeRef> Directory::find_long_term(const VerifyKey& vk) const {
  auto it = by_vk_.find(vk);
  if (it == by_vk_.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeRef> Directory::find_temporary(const VerifyKey& vk) const {
  auto it = by_temp_vk_.find(vk);
  if (it == by_temp_vk_.end()) return std::nullopt;
  return it->second;
}

void write_key_dump(std::ostream& out, std::span<const Identity> ids) {
  for (const auto& id : ids) {
    out << id.node << ',' << to_hex(id.vk.bytes) << ',' << to_hex(id.temp_vk.bytes) << ','
        << to_hex(id.link_sig.bytes) << '\n';
  }
}

}  // namespace raced::identity
