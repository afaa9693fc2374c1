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

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "raced/common.hpp"
#include "raced/dht.hpp"
#include "raced/identity.hpp"
#include "raced/ledger.hpp"
#include "raced/routing.hpp"

namespace raced::harness {

struct Edge {
  NodeRef src = 0;
  NodeRef dst = 0;
  Amount lw_src = 0;  ///< src's balance toward dst
  Amount lw_dst = 0;  ///< dst's balance toward src

  bool operator==(const Edge&) const = default;
};

struct NetworkSpec {
  std::size_t nodes = 0;
  std::vector<Edge> edges;
  /// Rows dropped at ingestion for non-positive weights.
  std::size_t dropped_rows = 0;

  void validate() const;
  bool operator==(const NetworkSpec&) const = default;
};

NetworkSpec parse_graph(std::istream& in);
NetworkSpec load_graph(const std::string& path);
void write_graph(std::ostream& out, const NetworkSpec& spec);

struct SyntheticParams {
  std::size_t nodes = 2000;
  /// Edges each new node attaches with.
  std::size_t attach = 2;
  /// Disjoint components, each grown independently.
  std::size_t components = 1;
  std::uint64_t seed = 42;
  Amount min_balance = 100;
  Amount max_balance = 1000;

  void validate() const;
};

/// `n=2000,seed=42,m=2,k=8,min=100,max=1000`; unknown keys are a config error.
SyntheticParams parse_synthetic(std::string_view text);

/// Preferential-attachment (scale-free) graph. Balances grow with the smaller
/// endpoint degree so hub-to-hub edges can carry their traffic.
NetworkSpec generate_synthetic(const SyntheticParams& p);

std::vector<std::size_t> out_degrees(const NetworkSpec& spec);

/// Components of the directed graph with u->v whenever lw(u->v) > 0, largest
/// first, ties by smallest member. Members are sorted.
std::vector<std::vector<NodeRef>> strongly_connected_components(const NetworkSpec& spec);

enum class Mode : std::uint8_t { one_scc, k_scc };
const char* mode_name(Mode m) noexcept;
Mode parse_mode(std::string_view text);

std::vector<NodeRef> select_rhs(const NetworkSpec& spec, std::size_t rh_count, Mode mode);

struct TxSpec {
  std::size_t idx = 0;
  NodeRef sender = 0;
  NodeRef receiver = 0;
  Amount amount = 0;

  bool operator==(const TxSpec&) const = default;
};

std::vector<TxSpec> parse_transactions(std::istream& in);
std::vector<TxSpec> load_transactions(const std::string& path);
void write_transactions(std::ostream& out, const std::vector<TxSpec>& txs);

struct SimConfig {
  std::size_t rh_count = 8;
  Mode mode = Mode::one_scc;
  unsigned m_bits = 32;
  Tick delta = 100;
  Amount fee = 1;
  std::uint64_t seed = 7;
  Tick htlc_delta = 10;
  Amount max_bucket = 10;
  /// Per-side deposit of every overlay channel between RHs.
  Amount rh_deposit = 1'000'000;
  /// 0 admits every transaction at once.
  std::size_t max_in_flight = 0;
  /// Mean arrivals per tick; 0 means all transactions arrive at tick 0.
  double arrival_rate = 0.0;
  routing::TieBreak tie_break = routing::TieBreak::lowest_id;
  /// Close every channel once the last transaction finishes.
  bool settle_at_end = true;

  void validate() const;
};

struct Stat {
  double mean = 0.0;
  double stdev = 0.0;

  bool operator==(const Stat&) const = default;
};

struct MetricsReport {
  std::string mode;
  std::uint64_t seed = 0;
  std::size_t nodes = 0;
  std::size_t channels = 0;
  std::size_t rh_count = 0;
  std::size_t attempted = 0;
  std::size_t successes = 0;
  double success_ratio = 0.0;
  std::size_t no_path = 0;
  std::size_t validation_failed = 0;
  std::size_t liquidity_failed = 0;
  std::size_t timeout = 0;
  Stat path_len;
  Stat ring_len;
  std::size_t max_ring_len = 0;
  Stat pathfind_ticks;
  Stat route_ticks;
  std::size_t dispute_count = 0;
  Tick final_tick = 0;

  bool operator==(const MetricsReport&) const = default;
};

enum class ReportFormat : std::uint8_t { json, kv };

void write_report(std::ostream& out, const MetricsReport& r, ReportFormat fmt);
/// Accepts either format.
MetricsReport parse_report(std::istream& in);

struct TraceRow {
  std::string txid;
  routing::Status status = routing::Status::no_path;
  std::vector<NodeRef> path;
  Tick t_pathfind = 0;
  Tick t_route = 0;
  std::vector<std::uint64_t> disputes;
};

void write_traces(std::ostream& out, const std::vector<TraceRow>& rows);

/// Wall-clock timings; kept out of MetricsReport so reports stay replayable.
struct WallClock {
  double setup_ms = 0.0;
  double pathfind_ms = 0.0;
  double total_ms = 0.0;
};

/// One complete experiment world: identities, ledger with every channel of the
/// spec, the RH ring and a router.
class Simulation {
 public:
  Simulation(const NetworkSpec& spec, SimConfig cfg);
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const SimConfig& config() const { return cfg_; }
  const NetworkSpec& spec() const { return spec_; }
  const identity::Directory& identities() const { return ids_; }
  ledger::Ledger& ledger() { return *ledger_; }
  const ledger::Ledger& ledger() const { return *ledger_; }
  dht::Ring& ring() { return *ring_; }
  const dht::Ring& ring() const { return *ring_; }
  const routing::Router& router() const { return *router_; }
  const std::vector<NodeRef>& rh_nodes() const { return rhs_; }
  const dht::SetupReport& setup_report() const { return setup_; }
  /// Component index of every node.
  const std::vector<std::size_t>& component_of() const { return component_; }

  /// Plans on the current state without moving funds.
  bool feasible(NodeRef sender, NodeRef receiver, Amount amt, DetRng& rng) const;

  /// Drives every transaction to a terminal state. May be called once.
  MetricsReport run(const std::vector<TxSpec>& txs);

  const std::vector<TraceRow>& traces() const { return traces_; }
  const WallClock& wall_clock() const { return wall_; }

 private:
  NetworkSpec spec_;
  SimConfig cfg_;
  identity::Directory ids_;
  std::unique_ptr<ledger::Ledger> ledger_;
  std::unique_ptr<dht::Ring> ring_;
  std::unique_ptr<routing::Router> router_;
  std::vector<NodeRef> rhs_;
  std::vector<std::size_t> component_;
  dht::SetupReport setup_;
  std::vector<TraceRow> traces_;
  WallClock wall_;
  bool ran_ = false;
};

struct TxGenParams {
  std::size_t count = 5000;
  Amount min_amount = 1;
  Amount max_amount = 50;
  std::uint64_t seed = 11;
  /// Draws per accepted transaction before giving up.
  std::size_t max_tries_factor = 50;
};

/// Transactions that are feasible on the untouched simulation state. In k-SCC
/// mode sender and receiver always sit in different components.
std::vector<TxSpec> generate_transactions(const Simulation& sim, const TxGenParams& p);

}  // namespace raced::harness
