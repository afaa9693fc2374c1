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

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "raced/dht.hpp"
#include "raced/identity.hpp"
#include "raced/ledger.hpp"

namespace raced::testing {

/// Identities plus a ledger with every party registered.
struct World {
  identity::Directory ids;
  ledger::Ledger ledger;

  explicit World(std::size_t n, std::uint64_t seed = 1)
      : ids(identity::Directory::generate(n, DetRng(seed))) {
    for (const auto& id : ids.all()) ledger.register_party(id.public_identity());
  }

  ledger::ChannelId open(NodeRef a, NodeRef b, Amount ab, Amount ba) {
    ledger.mint(a, ab);
    ledger.mint(b, ba);
    return ledger.pc_open(ids.at(a), ids.at(b), ab, ba);
  }
};

/// Smallest live id >= target, else the smallest live id.
inline dht::RingId oracle_owner(const std::vector<dht::RingId>& live, dht::RingId target) {
  bool found = false;
  dht::RingId best = 0;
  dht::RingId smallest = live.front();
  for (auto x : live) {
    smallest = std::min(smallest, x);
    if (x >= target && (!found || x < best)) {
      best = x;
      found = true;
    }
  }
  return found ? best : smallest;
}

/// Finger table recomputed from scratch with 128-bit arithmetic.
inline std::vector<dht::RingId> oracle_fingers(const std::vector<dht::RingId>& live,
                                               dht::RingId id, unsigned m) {
  std::vector<dht::RingId> out;
  const unsigned __int128 space = static_cast<unsigned __int128>(1) << m;
  for (unsigned j = 1; j <= m; ++j) {
    auto t = static_cast<dht::RingId>((id + (static_cast<unsigned __int128>(1) << (j - 1))) % space);
    out.push_back(oracle_owner(live, t));
  }
  return out;
}

/// Greedy walk over oracle finger tables: always jump to the entry that gets
/// closest to `to` without passing it.
inline std::vector<dht::RingId> oracle_walk(const std::vector<dht::RingId>& live,
                                            dht::RingId from, dht::RingId to, unsigned m) {
  const unsigned __int128 space = static_cast<unsigned __int128>(1) << m;
  auto dist = [&](dht::RingId a, dht::RingId b) {
    return static_cast<dht::RingId>((static_cast<unsigned __int128>(b) + space - a) % space);
  };
  std::vector<dht::RingId> path{from};
  auto cur = from;
  for (unsigned step = 0; step < m && cur != to; ++step) {
    auto fingers = oracle_fingers(live, cur, m);
    dht::RingId best = cur;
    dht::RingId best_d = 0;
    dht::RingId first = cur;
    for (auto f : fingers) {
      if (f == cur) continue;
      if (first == cur) first = f;
      if (dist(cur, f) <= dist(cur, to) && dist(cur, f) > best_d) {
        best = f;
        best_d = dist(cur, f);
      }
    }
    cur = best != cur ? best : first;
    path.push_back(cur);
  }
  return path;
}

/// Address whose ring id is not yet taken.
inline std::string fresh_address(const dht::RingConfig& cfg, const std::set<dht::RingId>& taken,
                                 NodeRef node) {
  for (unsigned salt = 0;; ++salt) {
    auto addr = "rh-" + std::to_string(node) + "-" + std::to_string(salt);
    if (!taken.contains(dht::node_id_from_address(addr, cfg))) return addr;
  }
}

}  // namespace raced::testing
