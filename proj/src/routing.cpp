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
#include "raced/routing.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <map>

namespace raced::routing {

namespace {

constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
constexpr Amount kUnbounded = std::numeric_limits<Amount>::max();

Amount threshold(Amount amt, Amount fee, std::size_t downstream, std::size_t r) {
  return amt + fee * static_cast<Amount>(downstream + r - 1);
}

// dist[u]: fewest feasible hops from u to the target set
std::vector<std::size_t> reverse_layers(const ledger::ChannelTable& table,
                                        const std::set<NodeRef>& targets, Amount amt, Amount fee,
                                        std::size_t downstream) {
  std::vector<std::size_t> dist(table.node_bound(), kUnreached);
  std::vector<NodeRef> frontier;
  for (auto t : targets) {
    if (t < dist.size()) {
      dist[t] = 0;
      frontier.push_back(t);
    }
  }
  for (std::size_t r = 1; !frontier.empty(); ++r) {
    const auto thr = threshold(amt, fee, downstream, r);
    std::vector<NodeRef> next;
    for (auto v : frontier) {
      for (const auto& adj : table.adjacent(v)) {
        auto u = adj.peer;
        if (dist[u] != kUnreached) continue;
        if (table.channel(adj.channel).free_from(u) >= thr) {
          dist[u] = r;
          next.push_back(u);
        }
      }
    }
    frontier = std::move(next);
  }
  return dist;
}

NodeRef pick(const std::vector<NodeRef>& options, TieBreak tie, DetRng* rng) {
  if (tie == TieBreak::seeded_random && rng != nullptr && options.size() > 1) {
    auto i = rng->uniform(0, static_cast<std::int64_t>(options.size()) - 1);
    return options[static_cast<std::size_t>(i)];
  }
  return *std::min_element(options.begin(), options.end());
}

Encoder& put_tuple(Encoder& enc, const QTuple& q) {
  enc.u64(q.i).u64(q.next).i64(q.max).bytes(q.sigma_i.bytes).bytes(q.sigma_next.bytes);
  return enc.i64(q.tc).i64(q.tv);
}

template <std::size_t N>
void get_fixed(Decoder& dec, std::array<std::uint8_t, N>& out) {
  auto raw = dec.bytes();
  if (raw.size() != N) throw Error(Errc::decode, "fixed-width field has wrong length");
  std::memcpy(out.data(), raw.data(), N);
}

void expect_tag(Decoder& dec, std::string_view tag) {
  if (dec.str() != tag) throw Error(Errc::decode, "unexpected message tag");
}

}  // namespace

void RoutingConfig::validate() const {
  if (fee < 0) throw Error(Errc::config, "fee must be >= 0");
  if (htlc_delta < 1) throw Error(Errc::config, "htlc delta must be >= 1");
}

const char* status_name(Status s) noexcept {
  switch (s) {
    case Status::success: return "success";
    case Status::no_path: return "no_path";
    case Status::validation_failed: return "validation_failed";
    case Status::liquidity_failed: return "liquidity_failed";
    case Status::timeout: return "timeout";
  }
  return "unknown";
}

Bytes PathRequest::signed_message() const {
  Encoder enc;
  enc.str("path-amount").bytes(txid).i64(amt);
  return std::move(enc).take();
}

PathRequest make_request(const identity::Identity& sender, const TxId& txid, Amount amt) {
  PathRequest req;
  req.txid = txid;
  req.amt = amt;
  req.vk_sender = sender.temp_vk;
  req.sigma_amt = identity::sign_detached(sender.temp_sk, req.signed_message());
  return req;
}

bool verify_request(const PathRequest& req) {
  return identity::verify_detached(req.vk_sender, req.signed_message(), req.sigma_amt);
}

QTuple tuple_from(const dht::MaxAmountRecord& rec) {
  return {rec.i, rec.k, rec.max, rec.sigma_i, rec.sigma_k, rec.tc, rec.tv};
}

Bytes encode_request(const PathRequest& req) {
  Encoder enc;
  enc.str("path-request").bytes(req.txid).i64(req.amt).bytes(req.sigma_amt.bytes);
  enc.bytes(req.vk_sender.bytes);
  return std::move(enc).take();
}

Bytes encode_stack(const CandidateStack& stack) {
  Encoder enc;
  enc.str("path-stack").u32(static_cast<std::uint32_t>(stack.size()));
  for (const auto& c : stack) {
    enc.bytes(c.txid).bytes(c.pathid).u64(c.start).u64(c.end_rh);
    enc.u32(static_cast<std::uint32_t>(c.hops.size()));
    for (const auto& q : c.hops) put_tuple(enc, q);
  }
  return std::move(enc).take();
}

CandidateStack decode_stack(ByteView raw) {
  Decoder dec(raw);
  expect_tag(dec, "path-stack");
  CandidateStack out(dec.u32());
  for (auto& c : out) {
    get_fixed(dec, c.txid);
    get_fixed(dec, c.pathid);
    c.start = dec.u64();
    c.end_rh = dec.u64();
    c.hops.resize(dec.u32());
    for (auto& q : c.hops) {
      q.i = dec.u64();
      q.next = dec.u64();
      q.max = dec.i64();
      get_fixed(dec, q.sigma_i.bytes);
      get_fixed(dec, q.sigma_next.bytes);
      q.tc = dec.i64();
      q.tv = dec.i64();
    }
  }
  if (!dec.done()) throw Error(Errc::decode, "trailing bytes after path stack");
  return out;
}

Bytes encode_end_rh_list(const std::vector<RingId>& list) {
  Encoder enc;
  enc.str("end-rh-list").u32(static_cast<std::uint32_t>(list.size()));
  for (auto id : list) enc.u64(id);
  return std::move(enc).take();
}

std::optional<std::vector<NodeRef>> find_path_to_rh(const ledger::ChannelTable& table,
                                                    NodeRef from,
                                                    const std::set<NodeRef>& targets, Amount amt,
                                                    Amount fee, std::size_t downstream,
                                                    TieBreak tie, DetRng* rng) {
  if (amt <= 0) throw Error(Errc::invalid_argument, "amount must be positive");
  if (targets.contains(from)) return std::vector<NodeRef>{from};
  auto dist = reverse_layers(table, targets, amt, fee, downstream);
  if (from >= dist.size() || dist[from] == kUnreached) return std::nullopt;

  // widest bottleneck among the shortest paths, filled layer by layer
  std::vector<Amount> best(dist.size(), 0);
  std::vector<std::vector<NodeRef>> by_layer(dist[from] + 1);
  for (NodeRef u = 0; u < dist.size(); ++u) {
    if (dist[u] <= dist[from]) by_layer[dist[u]].push_back(u);
  }
  for (auto u : by_layer[0]) best[u] = kUnbounded;
  for (std::size_t r = 1; r <= dist[from]; ++r) {
    const auto thr = threshold(amt, fee, downstream, r);
    for (auto u : by_layer[r]) {
      for (const auto& adj : table.adjacent(u)) {
        if (dist[adj.peer] != r - 1) continue;
        auto lw = table.channel(adj.channel).free_from(u);
        if (lw >= thr) best[u] = std::max(best[u], std::min(lw, best[adj.peer]));
      }
    }
  }

  const Amount bottleneck = best[from];
  std::vector<NodeRef> path{from};
  for (auto u = from; dist[u] > 0;) {
    const auto thr = threshold(amt, fee, downstream, dist[u]);
    std::vector<NodeRef> options;
    for (const auto& adj : table.adjacent(u)) {
      if (dist[adj.peer] != dist[u] - 1 || best[adj.peer] < bottleneck) continue;
      auto lw = table.channel(adj.channel).free_from(u);
      if (lw >= thr && lw >= bottleneck) options.push_back(adj.peer);
    }
    u = pick(options, tie, rng);
    path.push_back(u);
  }
  return path;
}

std::vector<std::size_t> hop_counts_to(const ledger::ChannelTable& table, NodeRef to, Amount amt,
                                       Amount fee) {
  return reverse_layers(table, {to}, amt, fee, 0);
}

std::optional<CandidateStack> find_path(const dht::Ring& ring, const PathRequest& req,
                                        RingId near, DetRng& rng) {
  if (!verify_request(req)) return std::nullopt;
  const auto& rh = ring.helper(near);
  std::set<RingId> verified{near};
  CandidateStack out;
  auto fresh = [&](RingId end) {
    PathCandidate c;
    c.txid = req.txid;
    rng.fill(c.pathid);
    c.start = near;
    c.end_rh = end;
    return c;
  };

  for (auto k : rh.finger_unique) {
    const auto* rec = ring.attestation(near, k);
    if (rec == nullptr || req.amt > rec->max) continue;
    auto c = fresh(k);
    c.hops.push_back(tuple_from(*rec));
    out.push_back(std::move(c));
  }

  const std::set<RingId> fingers(rh.finger_unique.begin(), rh.finger_unique.end());
  for (auto p : ring.membership()) {
    if (p == near || fingers.contains(p)) continue;
    std::vector<QTuple> hops;
    auto cur = near;
    bool ok = true;
    for (unsigned step = 0; step < ring.config().m_bits && cur != p; ++step) {
      auto nxt = ring.ft_lookup(cur, p);
      const auto* rec = ring.attestation(cur, nxt);
      if (rec == nullptr || !ring.contains(nxt) || req.amt > rec->max) {
        ok = false;
        break;
      }
      if (verified.insert(nxt).second && !verify_request(req)) return std::nullopt;
      hops.push_back(tuple_from(*rec));
      cur = nxt;
    }
    if (!ok || cur != p) continue;
    auto c = fresh(p);
    c.hops = std::move(hops);
    out.push_back(std::move(c));
  }
  return out;
}

Bytes dispute_payload(DisputeReason reason, const identity::VerifyKey& vk_sender, const TxId& txid,
                      const PathId& pathid, std::uint32_t index, const QTuple* tuple) {
  Encoder enc;
  enc.str("path-dispute").u8(static_cast<std::uint8_t>(reason)).bytes(vk_sender.bytes);
  enc.bytes(txid).bytes(pathid).u32(index).u8(tuple != nullptr ? 1 : 0);
  if (tuple != nullptr) put_tuple(enc, *tuple);
  return std::move(enc).take();
}

ValidationReport validate_paths(const CandidateStack& stack, const PathRequest& req, RingId near,
                                Tick now, const dht::Ring& ring, ledger::Ledger& ledger) {
  ValidationReport rep;
  std::map<PathId, std::size_t> seen;
  for (const auto& c : stack) ++seen[c.pathid];
  std::set<PathId> reported;

  for (const auto& c : stack) {
    if (seen[c.pathid] > 1) {
      if (reported.insert(c.pathid).second) {
        rep.disputes.push_back(ledger.bc_write(dispute_payload(
            DisputeReason::duplicate_pathid, req.vk_sender, req.txid, c.pathid, 0, nullptr)));
      }
      ++rep.rejected;
      continue;
    }
    auto dispute = [&](DisputeReason why, std::size_t t) {
      const QTuple* q = t < c.hops.size() ? &c.hops[t] : nullptr;
      rep.disputes.push_back(ledger.bc_write(dispute_payload(
          why, req.vk_sender, req.txid, c.pathid, static_cast<std::uint32_t>(t), q)));
      ++rep.rejected;
    };
    if (c.txid != req.txid || c.start != near || c.hops.empty() ||
        c.hops.back().next != c.end_rh) {
      dispute(DisputeReason::chain, 0);
      continue;
    }
    bool ok = true;
    for (std::size_t t = 0; t < c.hops.size() && ok; ++t) {
      const auto& q = c.hops[t];
      const auto expected = t == 0 ? near : c.hops[t - 1].next;
      if (q.i != expected) {
        dispute(DisputeReason::chain, t);
        ok = false;
        break;
      }
      if (req.amt > q.max) {
        dispute(DisputeReason::capacity, t);
        ok = false;
        break;
      }
      auto vk_i = ring.find_vk(q.i);
      auto vk_next = ring.find_vk(q.next);
      auto msg = q.message();
      if (!vk_i || !vk_next || !identity::verify_detached(*vk_i, msg, q.sigma_i) ||
          !identity::verify_detached(*vk_next, msg, q.sigma_next)) {
        dispute(DisputeReason::signature, t);
        ok = false;
        break;
      }
      if (now >= q.tv) {
        ++rep.expired;
        ++rep.rejected;
        ok = false;
      }
    }
    if (ok) rep.accepted.push_back(c);
  }
  return rep;
}

std::optional<RingId> select_end_rh(const dht::Ring& ring, const std::vector<std::size_t>& hops,
                                    const std::vector<RingId>& offered, TieBreak tie,
                                    DetRng* rng) {
  std::size_t best = kUnreached;
  std::vector<RingId> ties;
  for (auto id : offered) {
    if (!ring.contains(id)) continue;
    auto node = ring.helper(id).node;
    auto h = node < hops.size() ? hops[node] : kUnreached;
    if (h == kUnreached) continue;
    if (h < best) {
      best = h;
      ties.clear();
    }
    if (h == best && std::find(ties.begin(), ties.end(), id) == ties.end()) ties.push_back(id);
  }
  if (ties.empty()) return std::nullopt;
  if (tie == TieBreak::seeded_random && rng != nullptr && ties.size() > 1) {
    std::sort(ties.begin(), ties.end());
    return ties[static_cast<std::size_t>(rng->uniform(0, static_cast<std::int64_t>(ties.size()) - 1))];
  }
  return *std::min_element(ties.begin(), ties.end());
}

std::optional<PathCandidate> choose_path(const std::vector<PathCandidate>& accepted,
                                         RingId end_rh) {
  const PathCandidate* best = nullptr;
  for (const auto& c : accepted) {
    if (c.end_rh != end_rh) continue;
    if (best == nullptr || c.hops.size() < best->hops.size()) best = &c;
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

Router::Router(RoutingConfig cfg, ledger::Ledger& ledger, const identity::Directory& ids,
               const dht::Ring& ring)
    : cfg_(cfg), ledger_(&ledger), ids_(&ids), ring_(&ring) {
  cfg_.validate();
}

PlanResult Router::plan(NodeRef sender, NodeRef receiver, Amount amt, DetRng& rng,
                        const StackTamper& tamper) const {
  PlanResult res;
  if (sender == receiver || sender >= ids_->size() || receiver >= ids_->size() || amt <= 0 ||
      ring_->size() == 0) {
    return res;
  }
  const auto tie = cfg_.tie_break;
  const auto fee = cfg_.fee;
  auto helpers = ring_->helper_nodes();
  const std::set<NodeRef> rh_nodes(helpers.begin(), helpers.end());

  auto discovery = ledger_->read([&](const ledger::ChannelTable& t) {
    return find_path_to_rh(t, sender, rh_nodes, amt, fee, 0, tie, &rng);
  });
  if (!discovery) return res;
  const NodeRef near_node = discovery->back();
  const RingId near = *ring_->id_of(near_node);

  TxId txid;
  rng.fill(txid);
  auto req = make_request(ids_->at(sender), txid, amt);
  auto stack = find_path(*ring_, req, near, rng);
  if (!stack) {
    res.status = Status::validation_failed;
    return res;
  }
  if (tamper) tamper(*stack);
  std::size_t walk = 0;
  for (const auto& c : *stack) walk = std::max(walk, c.hops.size());
  res.pathfind_ticks = static_cast<Tick>(2 * (discovery->size() - 1) + 2 * walk + 2);

  auto rep = validate_paths(*stack, req, near, ledger_->now(), *ring_, *ledger_);
  res.disputes = rep.disputes;

  std::vector<RingId> offered{near};
  for (const auto& c : rep.accepted) {
    if (std::find(offered.begin(), offered.end(), c.end_rh) == offered.end()) {
      offered.push_back(c.end_rh);
    }
  }
  auto hops = ledger_->read([&](const ledger::ChannelTable& t) {
    return hop_counts_to(t, receiver, amt, fee);
  });
  auto end = select_end_rh(*ring_, hops, offered, tie, &rng);
  if (!end) return res;

  PathCandidate ring_leg;
  if (*end != near) {
    auto chosen = choose_path(rep.accepted, *end);
    if (!chosen) {
      res.status = Status::validation_failed;
      return res;
    }
    ring_leg = std::move(*chosen);
  }
  const NodeRef end_node = ring_->helper(*end).node;
  auto recv_leg = ledger_->read([&](const ledger::ChannelTable& t) {
    return find_path_to_rh(t, end_node, {receiver}, amt, fee, 0, tie, &rng);
  });
  if (!recv_leg) return res;
  const std::size_t ring_len = ring_leg.hops.size();
  const std::size_t recv_len = recv_leg->size() - 1;
  auto send_leg = ledger_->read([&](const ledger::ChannelTable& t) {
    return find_path_to_rh(t, sender, {near_node}, amt, fee, ring_len + recv_len, tie, &rng);
  });
  if (!send_leg) return res;

  Plan plan;
  plan.txid = txid;
  plan.sender = sender;
  plan.receiver = receiver;
  plan.amt = amt;
  plan.near = near;
  plan.end = *end;
  plan.path = *send_leg;
  for (const auto& q : ring_leg.hops) plan.path.push_back(ring_->helper(q.next).node);
  plan.path.insert(plan.path.end(), recv_leg->begin() + 1, recv_leg->end());
  plan.sender_len = send_leg->size() - 1;
  plan.ring_len = ring_len;
  plan.receiver_len = recv_len;
  plan.pathfind_ticks = res.pathfind_ticks;
  res.status = Status::success;
  res.plan = std::move(plan);
  return res;
}

Payment::Payment(ledger::Ledger& ledger, const RoutingConfig& cfg, const Plan& plan, DetRng& rng,
                 Fault fault)
    : ledger_(&ledger), cfg_(cfg), plan_(plan), fault_(fault) {
  if (plan_.path.size() < 2) throw Error(Errc::invalid_argument, "payment path needs two nodes");
  preimage_ = rng.bytes(16);
  digest_ = sha256(preimage_);
  started_ = ledger.now();
  finished_ = started_;
}

Amount Payment::hop_amount(std::size_t t) const {
  const auto hops = plan_.path.size() - 1;
  return plan_.amt + cfg_.fee * static_cast<Amount>(hops - 1 - t);
}

void Payment::fail(Status s) {
  status_ = s;
  phase_ = Phase::unwinding;
}

void Payment::step_lock() {
  const auto hops = plan_.path.size() - 1;
  const auto t = next_;
  const NodeRef payer = plan_.path[t];
  if (fault_.kind == FaultKind::abandon && fault_.hop == t) {
    fail(Status::timeout);
    return;
  }
  auto ch = ledger_->channel_between(payer, plan_.path[t + 1]);
  if (!ch) {
    fail(Status::liquidity_failed);
    return;
  }
  auto digest = digest_;
  if (fault_.kind == FaultKind::wrong_preimage && fault_.hop < hops - 1 && t >= fault_.hop) {
    digest[0] ^= 0x01;
  }
  const Tick timeout = started_ + static_cast<Tick>(2 * hops) +
                       static_cast<Tick>(hops - t) * cfg_.htlc_delta;
  if (fault_.kind == FaultKind::deplete && fault_.hop == t) {
    auto free = ledger_->free_balance(*ch, payer);
    if (free > 0) {
      Digest other = sha256(digest_);
      stray_.push_back(ledger_->htlc_lock(*ch, payer, free, other, ledger_->now() + cfg_.htlc_delta,
                                          plan_.txid));
    }
  }
  try {
    locks_.push_back(ledger_->htlc_lock(*ch, payer, hop_amount(t), digest, timeout, plan_.txid));
  } catch (const Error& e) {
    if (e.code() != Errc::liquidity && e.code() != Errc::terminal_state) throw;
    fail(Status::liquidity_failed);
    return;
  }
  if (++next_ == hops) phase_ = Phase::revealing;
}

void Payment::step_reveal() {
  const auto hops = plan_.path.size() - 1;
  const auto idx = next_ - 1;
  auto incoming = ledger_->htlc(locks_[idx]);
  if (idx == hops - 1 && incoming.digest != digest_) {
    // receiver refuses to reveal X for a digest it never issued
    fail(Status::timeout);
    return;
  }
  Bytes x = preimage_;
  if (fault_.kind == FaultKind::wrong_preimage && fault_.hop == hops - 1 && idx == hops - 1) {
    x[0] ^= 0x01;
  }
  try {
    if (ledger_->htlc_fulfill(locks_[idx], x) == ledger::FulfillResult::wrong_preimage) {
      fail(Status::timeout);
      return;
    }
  } catch (const Error& e) {
    if (e.code() != Errc::timeout) throw;
    Encoder enc;
    enc.str("late-reveal").bytes(plan_.txid).u32(static_cast<std::uint32_t>(idx));
    disputes_.push_back(ledger_->bc_write(std::move(enc).take()));
    fail(Status::timeout);
    return;
  }
  if (--next_ == 0) {
    phase_ = Phase::done;
    finished_ = ledger_->now();
  }
}

void Payment::step_unwind() {
  bool pending = false;
  const auto now = ledger_->now();
  auto sweep = [&](const std::vector<ledger::HtlcId>& ids) {
    for (auto id : ids) {
      auto h = ledger_->htlc(id);
      if (h.state != ledger::HtlcState::pending) continue;
      if (now >= h.timeout) {
        ledger_->htlc_refund(id);
      } else {
        pending = true;
      }
    }
  };
  sweep(locks_);
  sweep(stray_);
  if (!pending) {
    phase_ = Phase::done;
    finished_ = now;
  }
}

bool Payment::step() {
  switch (phase_) {
    case Phase::locking: step_lock(); break;
    case Phase::revealing: step_reveal(); break;
    case Phase::unwinding: step_unwind(); break;
    case Phase::done: break;
  }
  return done();
}

TransactionOutcome Payment::outcome() const {
  TransactionOutcome out;
  out.txid = plan_.txid;
  out.status = status_;
  out.path = plan_.path;
  out.path_len = plan_.path.size() - 1;
  out.ring_len = plan_.ring_len;
  out.t_pathfind = plan_.pathfind_ticks;
  out.t_route = finished_ - started_;
  out.disputes = disputes_;
  return out;
}

TransactionOutcome route_payment(ledger::Ledger& ledger, const RoutingConfig& cfg,
                                 const Plan& plan, DetRng& rng, Fault fault) {
  Payment p(ledger, cfg, plan, rng, fault);
  while (!p.step()) ledger.advance_to(ledger.now() + 1);
  return p.outcome();
}

}  // namespace raced::routing
