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

#include <sstream>

#include "raced/dht.hpp"
#include "support.hpp"

namespace raced::dht {
namespace {

using testing::World;

struct RingWorld {
  World world;
  Ring ring;
  std::vector<Volunteer> volunteers;

  RingWorld(std::size_t nodes, std::size_t rhs, RingConfig cfg, Amount funds = 1'000'000,
            std::uint64_t seed = 1)
      : world(nodes, seed), ring(cfg, world.ledger, world.ids) {
    std::set<RingId> taken;
    for (NodeRef n = 0; n < rhs; ++n) {
      auto addr = testing::fresh_address(cfg, taken, n);
      taken.insert(node_id_from_address(addr, cfg));
      world.ledger.mint(n, funds);
      volunteers.push_back({n, addr});
    }
    ring.setup(volunteers);
  }

  std::vector<RingId> live() const {
    return {ring.membership().begin(), ring.membership().end()};
  }
};

RingConfig small_cfg(unsigned m = 6) {
  RingConfig c;
  c.m_bits = m;
  c.delta = 100;
  c.max_bucket = 10;
  c.channel_deposit = 1000;
  return c;
}

bool record_verifies(const Ring& ring, const MaxAmountRecord& rec) {
  auto msg = rec.message();
  return identity::verify_detached(ring.vk_of(rec.i), msg, rec.sigma_i) &&
         identity::verify_detached(ring.vk_of(rec.k), msg, rec.sigma_k);
}

TEST(DhtFunctionsTest, FingerTargetsWrapModuloSpace) {
  EXPECT_EQ(finger_targets(1, 6), (std::vector<RingId>{2, 3, 5, 9, 17, 33}));
  EXPECT_EQ(finger_targets(60, 6), (std::vector<RingId>{61, 62, 0, 4, 12, 28}));
}

// the classic ten-node m=6 ring from the Chord literature
TEST(DhtFunctionsTest, OwnerAndSuccessorOnReferenceRing) {
  std::set<RingId> ring{1, 8, 14, 21, 32, 38, 42, 48, 51, 56};
  std::vector<RingId> fingers;
  for (auto t : finger_targets(8, 6)) fingers.push_back(resolve_owner(t, ring));
  EXPECT_EQ(fingers, (std::vector<RingId>{14, 14, 14, 21, 32, 42}));
  fingers.clear();
  for (auto t : finger_targets(42, 6)) fingers.push_back(resolve_owner(t, ring));
  EXPECT_EQ(fingers, (std::vector<RingId>{48, 48, 48, 51, 1, 14}));
  EXPECT_EQ(succ_lookup(8, ring), 14u);
  EXPECT_EQ(resolve_owner(8, ring), 8u);
  EXPECT_EQ(succ_lookup(56, ring), 1u);
  EXPECT_EQ(resolve_owner(57, ring), 1u);
  EXPECT_THROW(succ_lookup(3, {}), Error);
}

TEST(DhtFunctionsTest, RemoveDuplicatesKeepsFirstOccurrence) {
  std::vector<RingId> raw{14, 14, 21, 14, 32, 21};
  EXPECT_EQ(remove_duplicates(raw), (std::vector<RingId>{14, 21, 32}));
}

TEST(DhtFunctionsTest, AttestableMaxRoundsDown) {
  EXPECT_EQ(attestable_max(999, 10), 990);
  EXPECT_EQ(attestable_max(10, 10), 10);
  EXPECT_EQ(attestable_max(9, 10), 0);
  EXPECT_EQ(attestable_max(-4, 10), 0);
}

TEST(DhtFunctionsTest, NodeIdsStayInsideTheSpace) {
  RingConfig cfg = small_cfg(6);
  for (int i = 0; i < 200; ++i) {
    auto id = node_id_from_address("10.0.0." + std::to_string(i), cfg);
    EXPECT_LT(id, 64u);
    EXPECT_EQ(id, node_id_from_address("10.0.0." + std::to_string(i), cfg));
  }
  EXPECT_THROW(node_id_from_address("", cfg), Error);
  cfg.m_bits = 64;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(RingTest, SetupBuildsOracleFingersAndSignedRecords) {
  RingWorld rw(12, 8, small_cfg(16));
  ASSERT_EQ(rw.ring.size(), 8u);
  auto live = rw.live();
  for (auto id : live) {
    const auto& rh = rw.ring.helper(id);
    EXPECT_EQ(rh.finger_raw, testing::oracle_fingers(live, id, 16));
    for (auto k : rh.finger_unique) {
      EXPECT_NE(k, id);
      const auto* rec = rw.ring.attestation(id, k);
      ASSERT_NE(rec, nullptr);
      EXPECT_TRUE(record_verifies(rw.ring, *rec));
      auto ch = rw.ring.backing_channel(id, k);
      ASSERT_TRUE(ch.has_value());
      EXPECT_LE(rec->max, rw.world.ledger.free_balance(*ch, rh.node));
      EXPECT_EQ(rec->tv, rec->tc + 100);
    }
  }
  EXPECT_TRUE(rw.ring.finger_oracle_diff().empty());
}

TEST(RingTest, SetupExcludesUnderfundedAndCollidingVolunteers) {
  World w(6);
  RingConfig cfg = small_cfg(16);
  Ring ring(cfg, w.ledger, w.ids);
  std::vector<Volunteer> v;
  for (NodeRef n = 0; n < 4; ++n) {
    w.ledger.mint(n, n == 2 ? 10 : 100'000);
    v.push_back({n, "host-" + std::to_string(n)});
  }
  v.push_back({4, "host-0"});  // same address, same id
  auto rep = ring.setup(v);
  ASSERT_EQ(rep.excluded.size(), 2u);
  EXPECT_EQ(rep.excluded[0], (std::pair<NodeRef, Errc>{4, Errc::collision}));
  EXPECT_EQ(rep.excluded[1], (std::pair<NodeRef, Errc>{2, Errc::insufficient_funds}));
  EXPECT_EQ(ring.size(), 3u);
  EXPECT_FALSE(ring.id_of(2).has_value());
  EXPECT_TRUE(ring.finger_oracle_diff().empty());

  World w2(2);
  Ring lonely(cfg, w2.ledger, w2.ids);
  std::vector<Volunteer> one{{0, "a"}};
  EXPECT_THROW(lonely.setup(one), Error);
}

TEST(RingTest, ExistingChannelIsReusedAsBacking) {
  World w(2);
  w.open(0, 1, 55, 66);
  w.ledger.mint(0, 5000);
  w.ledger.mint(1, 5000);
  Ring ring(small_cfg(16), w.ledger, w.ids);
  std::vector<Volunteer> v{{0, "x0"}, {1, "x1"}};
  ring.setup(v);
  EXPECT_EQ(w.ledger.channel_count(), 1u);
  auto a = *ring.id_of(0);
  auto b = *ring.id_of(1);
  EXPECT_EQ(ring.attestation(a, b)->max, 50);
  EXPECT_EQ(ring.attestation(b, a)->max, 60);
}

TEST(RingTest, FtLookupPicksFarthestEntryNotPassingTarget) {
  RingWorld rw(12, 10, small_cfg(16));
  auto live = rw.live();
  for (auto i : live) {
    for (auto j : live) {
      if (i == j) continue;
      auto walk = rw.ring.lookup_walk(i, j);
      EXPECT_EQ(walk, testing::oracle_walk(live, i, j, 16));
      EXPECT_EQ(walk.back(), j);
      EXPECT_TRUE(rw.ring.ft_search(walk[walk.size() - 2], j));
    }
  }
}

TEST(RingTest, DepletionTriggersImmediateResign) {
  RingWorld rw(10, 4, small_cfg(16));
  auto live = rw.live();
  auto i = live[0];
  auto k = rw.ring.helper(i).finger_unique.front();
  auto before = *rw.ring.attestation(i, k);
  auto ch = *rw.ring.backing_channel(i, k);
  auto node = rw.ring.helper(i).node;
  rw.world.ledger.advance_to(3);
  rw.world.ledger.htlc_lock(ch, node, 995, Digest{}, 50, ledger::TxId{});
  auto stats = rw.ring.refresh_attestations(3);
  EXPECT_EQ(stats.resigned_depleted, 1u);
  auto after = *rw.ring.attestation(i, k);
  EXPECT_EQ(after.max, 0);
  EXPECT_EQ(after.tc, 3);
  EXPECT_EQ(after.tv, 103);
  EXPECT_NE(after.sigma_i, before.sigma_i);
  EXPECT_TRUE(record_verifies(rw.ring, after));
}

TEST(RingTest, EpochBoundaryExtendsUnchangedRecords) {
  RingWorld rw(10, 4, small_cfg(16));
  auto i = rw.live()[1];
  auto k = rw.ring.helper(i).finger_unique.front();
  auto before = *rw.ring.attestation(i, k);
  rw.world.ledger.advance_to(100);
  auto stats = rw.ring.refresh_attestations(100);
  EXPECT_GT(stats.extended, 0u);
  auto after = *rw.ring.attestation(i, k);
  EXPECT_EQ(after.max, before.max);
  EXPECT_EQ(after.tc, before.tc);
  EXPECT_EQ(after.tv, before.tv + 100);
  EXPECT_TRUE(record_verifies(rw.ring, after));
  // a tick inside the epoch does nothing
  auto quiet = rw.ring.refresh_attestations(150);
  EXPECT_EQ(quiet.extended + quiet.replaced + quiet.resigned_depleted, 0u);
  // skipped boundaries still count
  rw.world.ledger.advance_to(420);
  auto late = rw.ring.refresh_attestations(420);
  EXPECT_GT(late.replaced, 0u);
  EXPECT_GT(rw.ring.attestation(i, k)->tv, 420);
}

TEST(RingTest, EpochBoundaryReplacesChangedMaximum) {
  RingWorld rw(10, 4, small_cfg(16));
  auto i = rw.live()[0];
  auto k = rw.ring.helper(i).finger_unique.front();
  auto ch = *rw.ring.backing_channel(i, k);
  auto node = rw.ring.helper(i).node;
  Bytes x{1};
  auto h = rw.world.ledger.htlc_lock(ch, node, 100, sha256(x), 50, ledger::TxId{});
  rw.world.ledger.htlc_fulfill(h, x);
  rw.world.ledger.advance_to(100);
  auto stats = rw.ring.refresh_attestations(100);
  EXPECT_GE(stats.replaced, 1u);
  auto rec = *rw.ring.attestation(i, k);
  EXPECT_EQ(rec.max, 900);
  EXPECT_EQ(rec.tc, 100);
}

TEST(RingTest, CosignRefusalDropsRecord) {
  RingWorld rw(10, 4, small_cfg(16));
  auto i = rw.live()[0];
  auto k = rw.ring.helper(i).finger_unique.front();
  rw.ring.set_cosign_policy([k](RingId signer, RingId, RingId) { return signer != k; });
  rw.world.ledger.advance_to(100);
  auto stats = rw.ring.refresh_attestations(100);
  EXPECT_GT(stats.dropped, 0u);
  EXPECT_EQ(rw.ring.attestation(i, k), nullptr);
}

TEST(RingTest, JoinUpdatesNewcomerNowAndOthersAtBoundary) {
  RingWorld rw(12, 6, small_cfg(16));
  std::set<RingId> taken = rw.ring.membership();
  rw.world.ledger.mint(9, 1'000'000);
  auto addr = testing::fresh_address(small_cfg(16), taken, 9);
  auto j = rw.ring.node_join({9, addr});
  auto live = rw.live();
  EXPECT_EQ(rw.ring.helper(j).finger_raw, testing::oracle_fingers(live, j, 16));
  for (auto k : rw.ring.helper(j).finger_unique) EXPECT_NE(rw.ring.attestation(j, k), nullptr);
  EXPECT_TRUE(rw.ring.repair_pending());
  rw.world.ledger.advance_to(100);
  auto stats = rw.ring.refresh_attestations(100);
  EXPECT_TRUE(stats.repaired);
  EXPECT_TRUE(rw.ring.finger_oracle_diff().empty());
  for (auto id : live) {
    for (auto k : rw.ring.helper(id).finger_unique) {
      ASSERT_NE(rw.ring.attestation(id, k), nullptr);
    }
  }
  EXPECT_THROW(rw.ring.node_join({9, addr}), Error);
}

TEST(RingTest, JoinRollsBackWhenChannelsCannotBeFunded) {
  RingWorld rw(12, 6, small_cfg(16));
  const auto channels = rw.world.ledger.channel_count();
  const auto members = rw.ring.membership();
  std::set<RingId> taken = members;
  auto addr = testing::fresh_address(small_cfg(16), taken, 10);
  try {
    rw.ring.node_join({10, addr});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_funds);
  }
  EXPECT_EQ(rw.ring.membership(), members);
  EXPECT_FALSE(rw.ring.id_of(10).has_value());
  EXPECT_EQ(rw.world.ledger.channel_count(), channels);
}

TEST(RingTest, LeaveClosesChannelsAndRepairsAtBoundary) {
  RingWorld rw(10, 6, small_cfg(16));
  auto leaving = rw.live()[2];
  auto node = rw.ring.helper(leaving).node;
  EXPECT_EQ(rw.ring.node_leave(leaving), LeaveResult::left);
  EXPECT_FALSE(rw.ring.contains(leaving));
  EXPECT_TRUE(rw.world.ledger.read([&](const ledger::ChannelTable& t) {
    return t.adjacent(node).empty();
  }));
  for (auto id : rw.live()) EXPECT_EQ(rw.ring.attestation(id, leaving), nullptr);
  rw.world.ledger.advance_to(100);
  rw.ring.refresh_attestations(100);
  EXPECT_TRUE(rw.ring.finger_oracle_diff().empty());
  EXPECT_THROW(rw.ring.node_leave(leaving), Error);
}

TEST(RingTest, LeaveWithPendingHtlcIsDeferred) {
  RingWorld rw(10, 5, small_cfg(16));
  auto leaving = rw.live()[0];
  auto k = rw.ring.helper(leaving).finger_unique.front();
  auto ch = *rw.ring.backing_channel(leaving, k);
  auto h = rw.world.ledger.htlc_lock(ch, rw.ring.helper(leaving).node, 5, Digest{}, 10,
                                     ledger::TxId{});
  EXPECT_EQ(rw.ring.node_leave(leaving), LeaveResult::deferred);
  EXPECT_TRUE(rw.ring.contains(leaving));
  EXPECT_EQ(rw.ring.deferred_leaves(), 1u);
  rw.world.ledger.advance_to(10);
  rw.world.ledger.htlc_refund(h);
  rw.ring.refresh_attestations(10);
  EXPECT_FALSE(rw.ring.contains(leaving));
  EXPECT_EQ(rw.ring.deferred_leaves(), 0u);
}

TEST(RingTest, DumpListsEveryHelper) {
  RingWorld rw(8, 3, small_cfg(6));
  std::ostringstream out;
  rw.ring.dump(out);
  std::istringstream in(out.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 2);
    EXPECT_EQ(std::count(line.begin(), line.end(), ';'), 5);
  }
  EXPECT_EQ(rows, 3u);
}

}  // namespace
}  // namespace raced::dht
