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
#include "raced/common.hpp"

#include <sodium.h>

#include <cstring>

#include "sodium_init.hpp"

namespace raced {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::decode: return "decode";
    case Errc::lookup: return "lookup";
    case Errc::duplicate: return "duplicate";
    case Errc::insufficient_funds: return "insufficient_funds";
    case Errc::liquidity: return "liquidity";
    case Errc::close_blocked: return "close_blocked";
    case Errc::timeout: return "timeout";
    case Errc::too_early: return "too_early";
    case Errc::terminal_state: return "terminal_state";
    case Errc::ring_empty: return "ring_empty";
    case Errc::overlay_degenerate: return "overlay_degenerate";
    case Errc::collision: return "collision";
    case Errc::parse: return "parse";
    case Errc::io: return "io";
    case Errc::config: return "config";
  }
  return "unknown";
}

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return 10 + (c - 'a');
  if (c >= 'A' && c <= 'F') return 10 + (c - 'A');
  return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    throw Error(Errc::decode, "hex string has odd length");
  }
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) {
      throw Error(Errc::decode, "invalid hex digit");
    }
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

Digest sha256(ByteView data) {
  detail::ensure_sodium();
  Digest out{};
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

Encoder& Encoder::u8(std::uint8_t v) {
  buf_.push_back(v);
  return *this;
}

Encoder& Encoder::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    buf_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  return *this;
}

Encoder& Encoder::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    buf_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  return *this;
}

Encoder& Encoder::bytes(ByteView v) {
  u32(static_cast<std::uint32_t>(v.size()));
  buf_.insert(buf_.end(), v.begin(), v.end());
  return *this;
}

Encoder& Encoder::str(std::string_view v) {
  return bytes(ByteView(reinterpret_cast<const std::uint8_t*>(v.data()), v.size()));
}

void Decoder::need(std::size_t n) const {
  if (data_.size() - pos_ < n) {
    throw Error(Errc::decode, "truncated canonical encoding");
  }
}

std::uint8_t Decoder::u8() {
  need(1);
  return data_[pos_++];
}

std::uint32_t Decoder::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

std::uint64_t Decoder::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | data_[pos_++];
  return v;
}

Bytes Decoder::bytes() {
  auto n = u32();
  need(n);
  Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
            data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return out;
}

std::string Decoder::str() {
  auto b = bytes();
  return std::string(b.begin(), b.end());
}

DetRng::DetRng(const Seed& seed) : key_(seed) { detail::ensure_sodium(); }

DetRng::DetRng(std::uint64_t seed) {
  detail::ensure_sodium();
  Encoder enc;
  enc.str("raced/rng").u64(seed);
  key_ = sha256(enc.buffer());
}

void DetRng::refill() {
  std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES> nonce{};
  for (int i = 0; i < 8; ++i) {
    nonce[4 + i] = static_cast<std::uint8_t>(block_ >> (56 - 8 * i));
  }
  crypto_stream_chacha20_ietf(pool_.data(), pool_.size(), nonce.data(), key_.data());
  ++block_;
  pool_pos_ = 0;
}

void DetRng::fill(std::span<std::uint8_t> out) {
  for (auto& b : out) {
    if (pool_pos_ == pool_.size()) refill();
    b = pool_[pool_pos_++];
  }
}

Bytes DetRng::bytes(std::size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

std::uint64_t DetRng::next_u64() {
  std::array<std::uint8_t, 8> b{};
  fill(b);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::int64_t DetRng::uniform(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw Error(Errc::invalid_argument, "uniform: empty range");
  auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());
  // rejection sampling keeps the draw unbiased
  std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
  std::uint64_t v = 0;
  do {
    v = next_u64();
  } while (v >= limit);
  return lo + static_cast<std::int64_t>(v % span);
}

double DetRng::unit() {
  return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
}

DetRng::Seed DetRng::derive(std::string_view label, std::uint64_t index) const {
  Encoder enc;
  enc.bytes(key_).str(label).u64(index);
  return sha256(enc.buffer());
}

DetRng DetRng::fork(std::string_view label, std::uint64_t index) const {
  return DetRng(derive(label, index));
}

}  // namespace raced
