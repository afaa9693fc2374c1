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
#include <chrono>
#include <cmath>
#include <numeric>

#include "raced/harness.hpp"

namespace raced::harness {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double acc = 0.0;
  for (auto x : xs) acc += (x - s.mean) * (x - s.mean);
  s.stdev = std::sqrt(acc / static_cast<double>(xs.size()));
  return s;
}

}  // namespace

void SimConfig::validate() const {
  if (rh_count < 2) throw Error(Errc::config, "rh_count must be >= 2");
  if (rh_deposit < 0) throw Error(Errc::config, "rh deposit must be >= 0");
  if (arrival_rate < 0.0) throw Error(Errc::config, "arrival rate must be >= 0");
  dht::RingConfig{m_bits, delta, max_bucket, rh_deposit}.validate();
  routing::RoutingConfig{fee, htlc_delta, tie_break}.validate();
}

Simulation::Simulation(const NetworkSpec& spec, SimConfig cfg) : spec_(spec), cfg_(cfg) {
  const auto t0 = Clock::now();
  cfg_.validate();
  spec_.validate();
  DetRng master(cfg_.seed);
  ids_ = identity::Directory::generate(spec_.nodes, master.fork("identity", 0));
  ledger_ = std::make_unique<ledger::Ledger>(0);
  for (const auto& id : ids_.all()) ledger_->register_party(id.public_identity());
  for (const auto& e : spec_.edges) {
    ledger_->mint(e.src, e.lw_src);
    ledger_->mint(e.dst, e.lw_dst);
    ledger_->pc_open(ids_.at(e.src), ids_.at(e.dst), e.lw_src, e.lw_dst);
  }

  auto comps = strongly_connected_components(spec_);
  component_.assign(spec_.nodes, 0);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (auto n : comps[c]) component_[n] = c;
  }

  rhs_ = select_rhs(spec_, cfg_.rh_count, cfg_.mode);
  std::vector<dht::Volunteer> volunteers;
  for (auto n : rhs_) {
    ledger_->mint(n, cfg_.rh_deposit * static_cast<Amount>(cfg_.rh_count - 1));
    volunteers.push_back({n, "rh-" + std::to_string(n)});
  }
  ring_ = std::make_unique<dht::Ring>(
      dht::RingConfig{cfg_.m_bits, cfg_.delta, cfg_.max_bucket, cfg_.rh_deposit}, *ledger_, ids_);
  setup_ = ring_->setup(volunteers);
  router_ = std::make_unique<routing::Router>(
      routing::RoutingConfig{cfg_.fee, cfg_.htlc_delta, cfg_.tie_break}, *ledger_, ids_, *ring_);
  wall_.setup_ms = ms_since(t0);
}

Simulation::~Simulation() = default;

bool Simulation::feasible(NodeRef sender, NodeRef receiver, Amount amt, DetRng& rng) const {
  return router_->plan(sender, receiver, amt, rng).status == routing::Status::success;
}

MetricsReport Simulation::run(const std::vector<TxSpec>& txs) {
  if (ran_) throw Error(Errc::terminal_state, "simulation already ran");
  ran_ = true;
  const auto t0 = Clock::now();
  const DetRng base = DetRng(cfg_.seed).fork("run", 0);

  std::vector<Tick> arrival(txs.size(), ledger_->now());
  if (cfg_.arrival_rate > 0.0) {
    DetRng arr = base.fork("arrivals", 0);
    double t = 0.0;
    for (auto& a : arrival) {
      t += -std::log(1.0 - arr.unit()) / cfg_.arrival_rate;
      a = ledger_->now() + static_cast<Tick>(t);
    }
  }

  struct Waiting {
    std::size_t i;
    routing::Plan plan;
    std::vector<std::uint64_t> disputes;
    Tick start;
  };
  struct Live {
    std::size_t i;
    std::unique_ptr<routing::Payment> payment;
    std::vector<std::uint64_t> disputes;
  };
  std::vector<std::optional<routing::TransactionOutcome>> outcomes(txs.size());
  std::vector<Waiting> waiting;
  std::vector<Live> live;
  std::size_t next = 0;
  std::size_t in_flight = 0;
  double pathfind_ms = 0.0;

  for (Tick now = ledger_->now();; ++now) {
    ledger_->advance_to(now);
    ring_->refresh_attestations(now);

    while (next < txs.size() && arrival[next] <= now &&
           (cfg_.max_in_flight == 0 || in_flight < cfg_.max_in_flight)) {
      const auto& tx = txs[next];
      DetRng rng = base.fork("tx", next);
      const auto p0 = Clock::now();
      auto res = router_->plan(tx.sender, tx.receiver, tx.amount, rng);
      pathfind_ms += ms_since(p0);
      if (res.status != routing::Status::success) {
        routing::TransactionOutcome out;
        out.status = res.status;
        out.t_pathfind = res.pathfind_ticks;
        out.disputes = res.disputes;
        outcomes[next] = std::move(out);
      } else {
        waiting.push_back({next, std::move(*res.plan), std::move(res.disputes),
                           now + res.pathfind_ticks});
        ++in_flight;
      }
      ++next;
    }

    for (auto& w : waiting) {
      if (w.start > now) continue;
      DetRng rng = base.fork("preimage", w.i);
      live.push_back({w.i, std::make_unique<routing::Payment>(*ledger_, router_->config(), w.plan, rng),
                      std::move(w.disputes)});
      w.start = -1;
    }
    std::erase_if(waiting, [](const Waiting& w) { return w.start < 0; });

    for (auto& l : live) {
      if (!l.payment->step()) continue;
      auto out = l.payment->outcome();
      out.disputes.insert(out.disputes.begin(), l.disputes.begin(), l.disputes.end());
      outcomes[l.i] = std::move(out);
      --in_flight;
    }
    std::erase_if(live, [](const Live& l) { return l.payment->done(); });

    if (next == txs.size() && waiting.empty() && live.empty()) break;
  }

  if (cfg_.settle_at_end) {
    for (ledger::ChannelId id = 0; id < ledger_->channel_count(); ++id) {
      if (ledger_->channel(id).state == ledger::ChannelState::open) ledger_->pc_close(id);
    }
  }

  MetricsReport r;
  r.mode = mode_name(cfg_.mode);
  r.seed = cfg_.seed;
  r.nodes = spec_.nodes;
  r.channels = spec_.edges.size();
  r.rh_count = ring_->size();
  r.attempted = txs.size();
  std::vector<double> path_len, ring_len, pf, rt;
  traces_.clear();
  for (const auto& o : outcomes) {
    switch (o->status) {
      case routing::Status::success:
        ++r.successes;
        path_len.push_back(static_cast<double>(o->path_len));
        ring_len.push_back(static_cast<double>(o->ring_len));
        r.max_ring_len = std::max(r.max_ring_len, o->ring_len);
        pf.push_back(static_cast<double>(o->t_pathfind));
        rt.push_back(static_cast<double>(o->t_route));
        break;
      case routing::Status::no_path: ++r.no_path; break;
      case routing::Status::validation_failed: ++r.validation_failed; break;
      case routing::Status::liquidity_failed: ++r.liquidity_failed; break;
      case routing::Status::timeout: ++r.timeout; break;
    }
    traces_.push_back({to_hex(o->txid), o->status, o->path, o->t_pathfind, o->t_route, o->disputes});
  }
  r.success_ratio = r.attempted == 0 ? 0.0
                                     : static_cast<double>(r.successes) / static_cast<double>(r.attempted);
  r.path_len = stat_of(path_len);
  r.ring_len = stat_of(ring_len);
  r.pathfind_ticks = stat_of(pf);
  r.route_ticks = stat_of(rt);
  r.dispute_count = ledger_->records_of_kind(ledger::RecordKind::dispute).size();
  r.final_tick = ledger_->now();
  wall_.pathfind_ms = pathfind_ms;
  wall_.total_ms = ms_since(t0);
  return r;
}

std::vector<TxSpec> generate_transactions(const Simulation& sim, const TxGenParams& p) {
  if (p.min_amount < 1 || p.max_amount < p.min_amount) {
    throw Error(Errc::config, "amount range must satisfy 1 <= min <= max");
  }
  const auto n = sim.spec().nodes;
  if (n < 2) throw Error(Errc::config, "need at least two nodes for transactions");
  DetRng rng = DetRng(p.seed).fork("transactions", 0);
  const auto& comp = sim.component_of();
  const bool split = sim.config().mode == Mode::k_scc;
  std::vector<TxSpec> out;
  const std::size_t budget = std::max<std::size_t>(1, p.count) * p.max_tries_factor;
  for (std::size_t tries = 0; out.size() < p.count; ++tries) {
    if (tries >= budget) {
      throw Error(Errc::config, "found only " + std::to_string(out.size()) +
                                    " feasible transactions");
    }
    auto s = static_cast<NodeRef>(rng.uniform(0, static_cast<std::int64_t>(n) - 1));
    auto d = static_cast<NodeRef>(rng.uniform(0, static_cast<std::int64_t>(n) - 1));
    auto amt = rng.uniform(p.min_amount, p.max_amount);
    if (s == d || (split && comp[s] == comp[d])) continue;
    DetRng probe = rng.fork("probe", tries);
    if (!sim.feasible(s, d, amt, probe)) continue;
    out.push_back({out.size(), s, d, amt});
  }
  return out;
}

}  // namespace raced::harness
