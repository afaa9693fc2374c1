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

#include <atomic>
#include <sstream>
#include <thread>

#include "raced/ledger.hpp"
#include "support.hpp"

namespace raced::ledger {
namespace {

using testing::World;

Digest digest_of(const Bytes& x) { return sha256(x); }

template <class F>
Errc code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::io;
}

TEST(LedgerTest, OpenDebitsWalletsAndRecords) {
  World w(3);
  w.ledger.mint(0, 500);
  w.ledger.mint(1, 300);
  auto ch = w.ledger.pc_open(w.ids.at(0), w.ids.at(1), 400, 250);
  EXPECT_EQ(w.ledger.wallet(0), 100);
  EXPECT_EQ(w.ledger.wallet(1), 50);
  EXPECT_EQ(w.ledger.free_balance(ch, 0), 400);
  EXPECT_EQ(w.ledger.free_balance(ch, 1), 250);
  EXPECT_EQ(w.ledger.channel_between(1, 0), ch);

  auto recs = w.ledger.records_of_kind(RecordKind::channel_open);
  ASSERT_EQ(recs.size(), 1u);
  auto rec = decode_channel_record(recs[0]);
  EXPECT_EQ(rec.channel, ch);
  EXPECT_EQ(rec.vk_a, w.ids.at(0).temp_vk);
  EXPECT_EQ(rec.vk_b, w.ids.at(1).temp_vk);
  EXPECT_EQ(rec.lw_ab, 400);
  EXPECT_EQ(rec.lw_ba, 250);
}

TEST(LedgerTest, OpenRejectsBadInput) {
  World w(3);
  w.ledger.mint(0, 100);
  w.ledger.mint(1, 100);
  EXPECT_EQ(code_of([&] { w.ledger.pc_open(w.ids.at(0), w.ids.at(1), -1, 0); }),
            Errc::invalid_argument);
  EXPECT_EQ(code_of([&] { w.ledger.pc_open(w.ids.at(0), w.ids.at(0), 1, 1); }),
            Errc::invalid_argument);
  EXPECT_EQ(code_of([&] { w.ledger.pc_open(w.ids.at(0), w.ids.at(1), 101, 0); }),
            Errc::insufficient_funds);
  auto forged = w.ids.at(2);
  forged.link_sig.bytes[0] ^= 1;
  w.ledger.mint(2, 10);
  EXPECT_EQ(code_of([&] { w.ledger.pc_open(w.ids.at(0), forged, 1, 1); }),
            Errc::invalid_argument);
  w.ledger.pc_open(w.ids.at(0), w.ids.at(1), 10, 10);
  EXPECT_EQ(code_of([&] { w.ledger.pc_open(w.ids.at(1), w.ids.at(0), 10, 10); }),
            Errc::duplicate);
  EXPECT_EQ(w.ledger.wallet(0), 90);
}

TEST(LedgerTest, CloseCreditsWalletsAndIsTerminal) {
  World w(2);
  auto ch = w.open(0, 1, 70, 30);
  auto s = w.ledger.pc_close(ch);
  EXPECT_EQ(s.lw_ab, 70);
  EXPECT_EQ(s.lw_ba, 30);
  EXPECT_EQ(w.ledger.wallet(0), 70);
  EXPECT_EQ(w.ledger.wallet(1), 30);
  EXPECT_FALSE(w.ledger.channel_between(0, 1).has_value());
  EXPECT_EQ(code_of([&] { w.ledger.pc_close(ch); }), Errc::terminal_state);
  // reopening the pair is allowed once closed
  EXPECT_NO_THROW(w.ledger.pc_open(w.ids.at(0), w.ids.at(1), 70, 30));
}

TEST(LedgerTest, HtlcFulfillMovesFundsToPayee) {
  World w(2);
  auto ch = w.open(0, 1, 100, 0);
  Bytes x{1, 2, 3};
  TxId tx{};
  auto h = w.ledger.htlc_lock(ch, 0, 40, digest_of(x), 10, tx);
  EXPECT_EQ(w.ledger.free_balance(ch, 0), 60);
  EXPECT_EQ(w.ledger.channel(ch).locked_ab, 40);
  EXPECT_EQ(code_of([&] { w.ledger.pc_close(ch); }), Errc::close_blocked);
  EXPECT_EQ(w.ledger.htlc_fulfill(h, Bytes{9}), FulfillResult::wrong_preimage);
  EXPECT_EQ(w.ledger.htlc_fulfill(h, x), FulfillResult::success);
  EXPECT_EQ(w.ledger.free_balance(ch, 1), 40);
  EXPECT_EQ(w.ledger.channel(ch).locked_ab, 0);
  EXPECT_EQ(code_of([&] { w.ledger.htlc_fulfill(h, x); }), Errc::terminal_state);
  EXPECT_EQ(code_of([&] { w.ledger.htlc_refund(h); }), Errc::terminal_state);
}

TEST(LedgerTest, HtlcRefundOnlyAfterTimeout) {
  World w(2);
  auto ch = w.open(0, 1, 100, 0);
  Bytes x{4};
  TxId tx{};
  auto h = w.ledger.htlc_lock(ch, 0, 40, digest_of(x), 5, tx);
  EXPECT_EQ(code_of([&] { w.ledger.htlc_refund(h); }), Errc::too_early);
  w.ledger.advance_to(5);
  EXPECT_EQ(code_of([&] { w.ledger.htlc_fulfill(h, x); }), Errc::timeout);
  w.ledger.htlc_refund(h);
  EXPECT_EQ(w.ledger.free_balance(ch, 0), 100);
  EXPECT_EQ(w.ledger.channel(ch).pending_htlcs, 0u);
}

TEST(LedgerTest, HtlcLockValidation) {
  World w(3);
  auto ch = w.open(0, 1, 10, 0);
  TxId tx{};
  Digest d{};
  EXPECT_EQ(code_of([&] { w.ledger.htlc_lock(ch, 0, 11, d, 5, tx); }), Errc::liquidity);
  EXPECT_EQ(code_of([&] { w.ledger.htlc_lock(ch, 1, 1, d, 5, tx); }), Errc::liquidity);
  EXPECT_EQ(code_of([&] { w.ledger.htlc_lock(ch, 0, 0, d, 5, tx); }), Errc::invalid_argument);
  EXPECT_EQ(code_of([&] { w.ledger.htlc_lock(ch, 2, 1, d, 5, tx); }), Errc::invalid_argument);
  EXPECT_EQ(code_of([&] { w.ledger.htlc_lock(ch, 0, 1, d, 0, tx); }), Errc::invalid_argument);
  EXPECT_EQ(code_of([&] { w.ledger.advance_to(0); w.ledger.advance_to(3); w.ledger.advance_to(2); }),
            Errc::invalid_argument);
}

// random lock/fulfill/refund/close sequences never change the total value
TEST(LedgerTest, PropertyRandomOperationsConserveValue) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    World w(6, seed + 1);
    DetRng rng(seed);
    std::vector<ChannelId> chans;
    for (NodeRef a = 0; a < 6; ++a) {
      for (NodeRef b = a + 1; b < 6; ++b) {
        if (rng.uniform(0, 1) == 1) chans.push_back(w.open(a, b, rng.uniform(0, 200), rng.uniform(0, 200)));
      }
    }
    if (chans.empty()) continue;
    const auto total = w.ledger.total_value();
    std::vector<std::pair<HtlcId, Bytes>> live;
    for (int step = 0; step < 300; ++step) {
      auto op = rng.uniform(0, 3);
      if (op == 0) {
        auto ch = chans[static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(chans.size()) - 1))];
        auto c = w.ledger.channel(ch);
        if (c.state != ChannelState::open) continue;
        NodeRef payer = rng.uniform(0, 1) ? c.a : c.b;
        Bytes x = rng.bytes(8);
        try {
          auto h = w.ledger.htlc_lock(ch, payer, rng.uniform(1, 60), sha256(x),
                                      w.ledger.now() + rng.uniform(1, 5), TxId{});
          live.emplace_back(h, x);
        } catch (const Error& e) {
          ASSERT_EQ(e.code(), Errc::liquidity);
        }
      } else if (op == 1 && !live.empty()) {
        auto k = static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(live.size()) - 1));
        try {
          w.ledger.htlc_fulfill(live[k].first, live[k].second);
        } catch (const Error&) {
        }
      } else if (op == 2 && !live.empty()) {
        auto k = static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(live.size()) - 1));
        try {
          w.ledger.htlc_refund(live[k].first);
        } catch (const Error&) {
        }
      } else {
        w.ledger.advance_to(w.ledger.now() + 1);
      }
      ASSERT_EQ(w.ledger.total_value(), total);
      for (auto ch : chans) {
        auto c = w.ledger.channel(ch);
        ASSERT_GE(c.lw_ab, 0);
        ASSERT_GE(c.lw_ba, 0);
      }
    }
  }
}

TEST(LedgerTest, ConcurrentLocksNeverOverdraw) {
  World w(2);
  auto ch = w.open(0, 1, 1000, 1000);
  std::atomic<int> ok{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) {
        try {
          w.ledger.htlc_lock(ch, t % 2 == 0 ? 0 : 1, 7, Digest{}, 1000, TxId{});
          ++ok;
        } catch (const Error& e) {
          if (e.code() != Errc::liquidity) throw;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  auto c = w.ledger.channel(ch);
  EXPECT_GE(c.lw_ab, 0);
  EXPECT_GE(c.lw_ba, 0);
  EXPECT_EQ(c.total(), 2000);
  EXPECT_EQ(ok.load(), 2 * (1000 / 7));
}

TEST(LedgerTest, TranscriptExportAndNeighbors) {
  World w(4);
  w.open(0, 1, 5, 5);
  w.open(0, 2, 5, 5);
  auto h1 = w.ledger.transcript_hash(w.ledger.record_count());
  auto seq = w.ledger.bc_write(Bytes{0xde, 0xad});
  EXPECT_EQ(seq, 2u);
  auto h2 = w.ledger.transcript_hash(w.ledger.record_count());
  EXPECT_NE(h1, h2);
  EXPECT_EQ(w.ledger.transcript_hash(2), h1);

  std::ostringstream out;
  w.ledger.export_records(out);
  auto text = out.str();
  EXPECT_NE(text.find("0,channel_open,"), std::string::npos);
  EXPECT_NE(text.find("2,dispute,dead\n"), std::string::npos);

  auto peers = w.ledger.retrieve_neighbors(w.ids.at(0).vk);
  ASSERT_EQ(peers.size(), 2u);
  EXPECT_EQ(peers[0], w.ids.at(1).vk);
  EXPECT_EQ(peers[1], w.ids.at(2).vk);
  EXPECT_TRUE(w.ledger.retrieve_neighbors(w.ids.at(3).vk).empty());
  EXPECT_EQ(code_of([&] { w.ledger.retrieve_neighbors(w.ids.at(0).temp_vk); }), Errc::lookup);
}

TEST(LedgerTest, ReadSeesOpenChannelsOnly) {
  World w(3);
  auto c01 = w.open(0, 1, 5, 5);
  w.open(1, 2, 5, 5);
  w.ledger.pc_close(c01);
  auto n = w.ledger.read([](const ChannelTable& t) { return t.adjacent(1).size(); });
  EXPECT_EQ(n, 1u);
}

}  // namespace
}  // namespace raced::ledger
