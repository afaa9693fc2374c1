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
#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "raced/identity.hpp"

namespace raced::identity {
namespace {

Seed seed_of(std::uint64_t v) { return DetRng(v).derive("seed", 0); }

TEST(IdentityTest, GenerationIsDeterministic) {
  auto a = generate_identity(3, seed_of(1));
  auto b = generate_identity(3, seed_of(1));
  auto c = generate_identity(3, seed_of(2));
  EXPECT_EQ(a, b);
  EXPECT_NE(a.vk, c.vk);
  EXPECT_EQ(a.node, 3u);
}

TEST(IdentityTest, TemporaryKeyNeverEqualsLongTerm) {
  std::set<VerifyKey> seen;
  for (std::uint64_t s = 0; s < 200; ++s) {
    auto id = generate_identity(0, seed_of(s));
    EXPECT_NE(id.vk, id.temp_vk);
    EXPECT_TRUE(seen.insert(id.vk).second);
    EXPECT_TRUE(seen.insert(id.temp_vk).second);
  }
}

TEST(IdentityTest, LinkSignatureVerifies) {
  auto id = generate_identity(0, seed_of(9));
  EXPECT_TRUE(verify_neighbor_identity(id.public_identity()));
  EXPECT_TRUE(verify_neighbor_identity(id.vk.view(), id.temp_vk.view(), id.link_sig.view()));

  auto forged = id.public_identity();
  forged.temp_vk.bytes[5] ^= 0x20;
  EXPECT_FALSE(verify_neighbor_identity(forged));

  auto other = generate_identity(1, seed_of(10));
  forged = id.public_identity();
  forged.vk = other.vk;
  EXPECT_FALSE(verify_neighbor_identity(forged));
}

TEST(IdentityTest, WrongLengthsAreDecodeErrors) {
  auto id = generate_identity(0, seed_of(9));
  Bytes short_key(31, 0);
  try {
    verify_neighbor_identity(short_key, id.temp_vk.view(), id.link_sig.view());
    FAIL() << "expected decode error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::decode);
  }
  Bytes long_sig(65, 0);
  EXPECT_THROW(verify_neighbor_identity(id.vk.view(), id.temp_vk.view(), long_sig), Error);
}

TEST(IdentityTest, SignVerifyRoundTrip) {
  auto id = generate_identity(0, seed_of(4));
  Bytes msg{1, 2, 3, 4};
  auto env = sign(id.sk, msg);
  EXPECT_EQ(env.signer, id.vk);
  EXPECT_TRUE(verify(env, msg));

  Bytes altered = msg;
  altered[0] = 9;
  EXPECT_FALSE(verify(env, altered));

  auto bad = env;
  bad.signature.bytes[0] ^= 1;
  EXPECT_FALSE(verify(bad, msg));

  auto wrong_digest = env;
  wrong_digest.message_digest[3] ^= 1;
  EXPECT_FALSE(verify(wrong_digest, msg));
}

TEST(IdentityTest, TemporarySignatureDoesNotVerifyUnderLongTermKey) {
  auto id = generate_identity(0, seed_of(5));
  Bytes msg{7, 7};
  auto sig = sign_detached(id.temp_sk, msg);
  EXPECT_TRUE(verify_detached(id.temp_vk, msg, sig));
  EXPECT_FALSE(verify_detached(id.vk, msg, sig));
}

TEST(IdentityTest, LambdaAboveSeedEntropyRejected) {
  try {
    generate_identity(0, seed_of(1), 129);
    FAIL() << "expected config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
  }
  EXPECT_NO_THROW(generate_identity(0, seed_of(1), 64));
}

TEST(DirectoryTest, GenerateAndLookup) {
  auto dir = Directory::generate(20, DetRng(77));
  ASSERT_EQ(dir.size(), 20u);
  for (NodeRef n = 0; n < 20; ++n) {
    const auto& id = dir.at(n);
    EXPECT_EQ(id.node, n);
    EXPECT_EQ(dir.find_long_term(id.vk), n);
    EXPECT_EQ(dir.find_temporary(id.temp_vk), n);
    EXPECT_FALSE(dir.find_long_term(id.temp_vk).has_value());
  }
  try {
    dir.at(20);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::lookup);
  }
}

TEST(DirectoryTest, RejectsDuplicatesAndWrongSlot) {
  Directory dir;
  auto a = generate_identity(0, seed_of(1));
  dir.add(a);
  auto again = a;
  again.node = 1;
  try {
    dir.add(again);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::duplicate);
  }
  auto misplaced = generate_identity(5, seed_of(2));
  EXPECT_THROW(dir.add(misplaced), Error);
}

TEST(DirectoryTest, KeyDumpHasOneLinePerNode) {
  auto dir = Directory::generate(3, DetRng(1));
  std::ostringstream out;
  write_key_dump(out, dir.all());
  std::istringstream in(out.str());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    ASSERT_EQ(f.size(), 4u);
    EXPECT_EQ(f[0], std::to_string(rows));
    EXPECT_EQ(f[1].size(), 64u);
    EXPECT_EQ(f[2].size(), 64u);
    EXPECT_EQ(f[3].size(), 128u);
    EXPECT_EQ(f[1], to_hex(dir.at(static_cast<NodeRef>(rows)).vk.bytes));
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}

TEST(CommonTest, HexRoundTripAndErrors) {
  Bytes b{0x00, 0xab, 0xff};
  EXPECT_EQ(to_hex(b), "00abff");
  EXPECT_EQ(from_hex("00ABff"), b);
  EXPECT_THROW(from_hex("abc"), Error);
  EXPECT_THROW(from_hex("zz"), Error);
}

TEST(CommonTest, Sha256KnownVector) {
  std::string abc = "abc";
  auto d = sha256(ByteView(reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()));
  EXPECT_EQ(to_hex(d), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CommonTest, EncoderDecoderRoundTrip) {
  Encoder enc;
  enc.u8(7).u32(0xdeadbeef).u64(1ull << 40).i64(-5).str("hi").bytes(Bytes{1, 2});
  auto buf = std::move(enc).take();
  Decoder dec(buf);
  EXPECT_EQ(dec.u8(), 7);
  EXPECT_EQ(dec.u32(), 0xdeadbeefu);
  EXPECT_EQ(dec.u64(), 1ull << 40);
  EXPECT_EQ(dec.i64(), -5);
  EXPECT_EQ(dec.str(), "hi");
  EXPECT_EQ(dec.bytes(), (Bytes{1, 2}));
  EXPECT_TRUE(dec.done());
  EXPECT_THROW(dec.u8(), Error);
}

TEST(CommonTest, DetRngIsReplayableAndUniformInRange) {
  DetRng a(5), b(5), c(6);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(DetRng(5).next_u64(), c.next_u64());
  DetRng r(1);
  std::vector<int> hits(6, 0);
  for (int i = 0; i < 6000; ++i) {
    auto v = r.uniform(-2, 3);
    ASSERT_GE(v, -2);
    ASSERT_LE(v, 3);
    ++hits[static_cast<std::size_t>(v + 2)];
  }
  for (auto h : hits) EXPECT_GT(h, 800);
  auto f1 = DetRng(9).fork("x", 1).next_u64();
  auto f2 = DetRng(9).fork("x", 2).next_u64();
  EXPECT_NE(f1, f2);
  EXPECT_EQ(f1, DetRng(9).fork("x", 1).next_u64());
}

}  // namespace
}  // namespace raced::identity
