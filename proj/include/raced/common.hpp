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
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace raced {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Balance units of the single simulation currency.
using Amount = std::int64_t;
/// Simulated clock instant, advanced by the harness.
using Tick = std::int64_t;
/// Index of a PCN node inside a simulation.
using NodeRef = std::uint32_t;

inline constexpr NodeRef kNoNode = 0xffffffffu;

enum class Errc {
  invalid_argument,
  decode,
  lookup,
  duplicate,
  insufficient_funds,
  liquidity,
  close_blocked,
  timeout,
  too_early,
  terminal_state,
  ring_empty,
  overlay_degenerate,
  collision,
  parse,
  io,
  config,
};

const char* errc_name(Errc code) noexcept;

/// Error raised by every module of the core library. The C API maps `code()`
/// onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

template <std::size_t N>
std::string to_hex(const std::array<std::uint8_t, N>& a) {
  return to_hex(ByteView(a.data(), a.size()));
}

/// SHA-256 digest.
using Digest = std::array<std::uint8_t, 32>;
Digest sha256(ByteView data);

/// Canonical big-endian encoding used for everything that gets signed or
/// written to the ledger.
class Encoder {
 public:
  Encoder& u8(std::uint8_t v);
  Encoder& u32(std::uint32_t v);
  Encoder& u64(std::uint64_t v);
  Encoder& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  /// Length-prefixed (u32) byte string.
  Encoder& bytes(ByteView v);
  Encoder& str(std::string_view v);
  template <std::size_t N>
  Encoder& bytes(const std::array<std::uint8_t, N>& a) {
    return bytes(ByteView(a.data(), a.size()));
  }

  const Bytes& buffer() const& { return buf_; }
  Bytes take() && { return std::move(buf_); }

 private:
  Bytes buf_;
};

class Decoder {
 public:
  explicit Decoder(ByteView data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  Bytes bytes();
  std::string str();
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const;

  ByteView data_;
  std::size_t pos_ = 0;
};

/// Deterministic ChaCha20 keystream. Every random choice in a simulation run
/// flows from one of these, so a fixed seed replays bit-for-bit on any platform.
class DetRng {
 public:
  using Seed = std::array<std::uint8_t, 32>;

  explicit DetRng(const Seed& seed);
  explicit DetRng(std::uint64_t seed);

  void fill(std::span<std::uint8_t> out);
  Bytes bytes(std::size_t n);
  std::uint64_t next_u64();
  /// Uniform integer in [lo, hi].
  std::int64_t uniform(std::int64_t lo, std::int64_t hi);
  /// Uniform double in [0, 1).
  double unit();

  /// Independent child stream, keyed by a label and an index.
  DetRng fork(std::string_view label, std::uint64_t index) const;
  Seed derive(std::string_view label, std::uint64_t index) const;

 private:
  void refill();

  Seed key_;
  std::uint64_t block_ = 0;
  std::array<std::uint8_t, 64> pool_{};
  std::size_t pool_pos_ = 64;
};

}  // namespace raced
