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
#include "raced/raced.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "raced/harness.hpp"

struct raced_network {
  raced::harness::NetworkSpec spec;
};

struct raced_txset {
  std::vector<raced::harness::TxSpec> txs;
};

struct raced_sim {
  std::unique_ptr<raced::harness::Simulation> sim;
  std::optional<raced::harness::MetricsReport> report;
};

namespace {

thread_local std::string g_last_error;

raced_status to_status(raced::Errc code) {
  using raced::Errc;
  switch (code) {
    case Errc::invalid_argument: return RACED_ERR_INVALID_ARGUMENT;
    case Errc::decode: return RACED_ERR_DECODE;
    case Errc::lookup: return RACED_ERR_LOOKUP;
    case Errc::duplicate:
    case Errc::collision: return RACED_ERR_DUPLICATE;
    case Errc::insufficient_funds:
    case Errc::liquidity: return RACED_ERR_FUNDS;
    case Errc::close_blocked:
    case Errc::timeout:
    case Errc::too_early:
    case Errc::terminal_state:
    case Errc::ring_empty:
    case Errc::overlay_degenerate: return RACED_ERR_STATE;
    case Errc::parse: return RACED_ERR_PARSE;
    case Errc::io: return RACED_ERR_IO;
    case Errc::config: return RACED_ERR_CONFIG;
  }
  return RACED_ERR_INTERNAL;
}

template <class F>
raced_status guard(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return RACED_OK;
  } catch (const raced::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RACED_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RACED_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw raced::Error(raced::Errc::invalid_argument, what);
}

template <class F>
void with_output(const char* path, F&& fn) {
  require(path != nullptr, "null path");
  if (std::strcmp(path, "-") == 0) {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw raced::Error(raced::Errc::io, std::string("cannot write ") + path);
  fn(out);
  out.flush();
  if (!out) throw raced::Error(raced::Errc::io, std::string("failed writing ") + path);
}

raced::harness::SyntheticParams from_c(const raced_synthetic_params& p) {
  raced::harness::SyntheticParams s;
  s.nodes = p.nodes;
  s.attach = p.attach;
  s.components = p.components;
  s.seed = p.seed;
  s.min_balance = p.min_balance;
  s.max_balance = p.max_balance;
  return s;
}

void fill_summary(const raced::harness::MetricsReport& r, raced_summary* s) {
  s->attempted = r.attempted;
  s->successes = r.successes;
  s->success_ratio = r.success_ratio;
  s->no_path = r.no_path;
  s->validation_failed = r.validation_failed;
  s->liquidity_failed = r.liquidity_failed;
  s->timeout = r.timeout;
  s->mean_path_len = r.path_len.mean;
  s->stdev_path_len = r.path_len.stdev;
  s->mean_ring_len = r.ring_len.mean;
  s->max_ring_len = r.max_ring_len;
  s->mean_pathfind_ticks = r.pathfind_ticks.mean;
  s->mean_route_ticks = r.route_ticks.mean;
  s->dispute_count = r.dispute_count;
  s->rh_count = r.rh_count;
}

const raced::harness::MetricsReport& report_of(const raced_sim* sim) {
  require(sim != nullptr, "null simulation");
  if (!sim->report) throw raced::Error(raced::Errc::terminal_state, "simulation has not run");
  return *sim->report;
}

}  // namespace

extern "C" {

const char* raced_version(void) { return "0.1.0"; }

const char* raced_status_name(raced_status status) {
  switch (status) {
    case RACED_OK: return "ok";
    case RACED_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case RACED_ERR_DECODE: return "decode";
    case RACED_ERR_LOOKUP: return "lookup";
    case RACED_ERR_DUPLICATE: return "duplicate";
    case RACED_ERR_FUNDS: return "funds";
    case RACED_ERR_STATE: return "state";
    case RACED_ERR_PARSE: return "parse";
    case RACED_ERR_IO: return "io";
    case RACED_ERR_CONFIG: return "config";
    case RACED_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* raced_last_error(void) { return g_last_error.c_str(); }

void raced_string_free(char* s) { std::free(s); }

void raced_synthetic_params_init(raced_synthetic_params* p) {
  if (p == nullptr) return;
  raced::harness::SyntheticParams d;
  p->nodes = d.nodes;
  p->attach = d.attach;
  p->components = d.components;
  p->seed = d.seed;
  p->min_balance = d.min_balance;
  p->max_balance = d.max_balance;
}

raced_status raced_synthetic_params_parse(const char* text, raced_synthetic_params* p) {
  return guard([&] {
    require(text != nullptr && p != nullptr, "null argument");
    auto s = raced::harness::parse_synthetic(text);
    p->nodes = s.nodes;
    p->attach = s.attach;
    p->components = s.components;
    p->seed = s.seed;
    p->min_balance = s.min_balance;
    p->max_balance = s.max_balance;
  });
}

raced_status raced_network_generate(const raced_synthetic_params* p, raced_network** out) {
  return guard([&] {
    require(p != nullptr && out != nullptr, "null argument");
    *out = new raced_network{raced::harness::generate_synthetic(from_c(*p))};
  });
}

raced_status raced_network_load(const char* path, raced_network** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new raced_network{raced::harness::load_graph(path)};
  });
}

raced_status raced_network_write(const raced_network* net, const char* path) {
  return guard([&] {
    require(net != nullptr, "null network");
    with_output(path, [&](std::ostream& o) { raced::harness::write_graph(o, net->spec); });
  });
}

raced_status raced_network_info(const raced_network* net, uint64_t* nodes, uint64_t* channels,
                                uint64_t* dropped_rows) {
  return guard([&] {
    require(net != nullptr, "null network");
    if (nodes) *nodes = net->spec.nodes;
    if (channels) *channels = net->spec.edges.size();
    if (dropped_rows) *dropped_rows = net->spec.dropped_rows;
  });
}

void raced_network_free(raced_network* net) { delete net; }

void raced_sim_config_init(raced_sim_config* cfg) {
  if (cfg == nullptr) return;
  raced::harness::SimConfig d;
  cfg->rh_count = static_cast<uint32_t>(d.rh_count);
  cfg->mode = RACED_MODE_1SCC;
  cfg->m_bits = d.m_bits;
  cfg->delta = d.delta;
  cfg->fee = d.fee;
  cfg->seed = d.seed;
  cfg->htlc_delta = d.htlc_delta;
  cfg->max_bucket = d.max_bucket;
  cfg->rh_deposit = d.rh_deposit;
  cfg->max_in_flight = d.max_in_flight;
  cfg->arrival_rate = d.arrival_rate;
  cfg->random_tie_break = 0;
  cfg->settle_at_end = d.settle_at_end ? 1 : 0;
}

raced_status raced_sim_create(const raced_network* net, const raced_sim_config* cfg,
                              raced_sim** out) {
  return guard([&] {
    require(net != nullptr && cfg != nullptr && out != nullptr, "null argument");
    require(cfg->mode == RACED_MODE_1SCC || cfg->mode == RACED_MODE_KSCC, "unknown mode");
    raced::harness::SimConfig c;
    c.rh_count = cfg->rh_count;
    c.mode = cfg->mode == RACED_MODE_KSCC ? raced::harness::Mode::k_scc
                                          : raced::harness::Mode::one_scc;
    c.m_bits = cfg->m_bits;
    c.delta = cfg->delta;
    c.fee = cfg->fee;
    c.seed = cfg->seed;
    c.htlc_delta = cfg->htlc_delta;
    c.max_bucket = cfg->max_bucket;
    c.rh_deposit = cfg->rh_deposit;
    c.max_in_flight = cfg->max_in_flight;
    c.arrival_rate = cfg->arrival_rate;
    c.tie_break = cfg->random_tie_break ? raced::routing::TieBreak::seeded_random
                                        : raced::routing::TieBreak::lowest_id;
    c.settle_at_end = cfg->settle_at_end != 0;
    auto sim = std::make_unique<raced_sim>();
    sim->sim = std::make_unique<raced::harness::Simulation>(net->spec, c);
    *out = sim.release();
  });
}

void raced_sim_free(raced_sim* sim) { delete sim; }

raced_status raced_txset_load(const char* path, raced_txset** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = new raced_txset{raced::harness::load_transactions(path)};
  });
}

raced_status raced_txset_generate(const raced_sim* sim, uint64_t count, int64_t min_amount,
                                  int64_t max_amount, uint64_t seed, raced_txset** out) {
  return guard([&] {
    require(sim != nullptr && out != nullptr, "null argument");
    raced::harness::TxGenParams p;
    p.count = count;
    p.min_amount = min_amount;
    p.max_amount = max_amount;
    p.seed = seed;
    *out = new raced_txset{raced::harness::generate_transactions(*sim->sim, p)};
  });
}

raced_status raced_txset_write(const raced_txset* txs, const char* path) {
  return guard([&] {
    require(txs != nullptr, "null transaction set");
    with_output(path, [&](std::ostream& o) { raced::harness::write_transactions(o, txs->txs); });
  });
}

uint64_t raced_txset_size(const raced_txset* txs) { return txs == nullptr ? 0 : txs->txs.size(); }

void raced_txset_free(raced_txset* txs) { delete txs; }

raced_status raced_sim_run(raced_sim* sim, const raced_txset* txs, raced_summary* summary) {
  return guard([&] {
    require(sim != nullptr && txs != nullptr, "null argument");
    sim->report = sim->sim->run(txs->txs);
    if (summary != nullptr) fill_summary(*sim->report, summary);
  });
}

raced_status raced_sim_write_report(const raced_sim* sim, const char* path, int32_t format) {
  return guard([&] {
    const auto& r = report_of(sim);
    require(format == RACED_REPORT_JSON || format == RACED_REPORT_KV, "unknown report format");
    auto fmt = format == RACED_REPORT_KV ? raced::harness::ReportFormat::kv
                                         : raced::harness::ReportFormat::json;
    with_output(path, [&](std::ostream& o) { raced::harness::write_report(o, r, fmt); });
  });
}

raced_status raced_sim_write_traces(const raced_sim* sim, const char* path) {
  return guard([&] {
    report_of(sim);
    with_output(path, [&](std::ostream& o) { raced::harness::write_traces(o, sim->sim->traces()); });
  });
}

raced_status raced_sim_write_ledger(const raced_sim* sim, const char* path) {
  return guard([&] {
    require(sim != nullptr, "null simulation");
    with_output(path, [&](std::ostream& o) { sim->sim->ledger().export_records(o); });
  });
}

raced_status raced_sim_write_keys(const raced_sim* sim, const char* path) {
  return guard([&] {
    require(sim != nullptr, "null simulation");
    with_output(path, [&](std::ostream& o) {
      raced::identity::write_key_dump(o, sim->sim->identities().all());
    });
  });
}

raced_status raced_sim_write_ring(const raced_sim* sim, const char* path) {
  return guard([&] {
    require(sim != nullptr, "null simulation");
    with_output(path, [&](std::ostream& o) { sim->sim->ring().dump(o); });
  });
}

raced_status raced_sim_finger_diff(const raced_sim* sim, char** text, uint64_t* mismatches) {
  return guard([&] {
    require(sim != nullptr && text != nullptr, "null argument");
    auto diff = sim->sim->ring().finger_oracle_diff();
    std::string joined;
    for (const auto& line : diff) joined += line + "\n";
    auto* buf = static_cast<char*>(std::malloc(joined.size() + 1));
    if (buf == nullptr) throw std::bad_alloc();
    std::memcpy(buf, joined.c_str(), joined.size() + 1);
    *text = buf;
    if (mismatches) *mismatches = diff.size();
  });
}

raced_status raced_sim_transcript_hash(const raced_sim* sim, char out_hex[65]) {
  return guard([&] {
    require(sim != nullptr && out_hex != nullptr, "null argument");
    const auto& l = sim->sim->ledger();
    auto hex = raced::to_hex(l.transcript_hash(l.record_count()));
    std::memcpy(out_hex, hex.c_str(), 65);
  });
}

raced_status raced_sim_wall_clock(const raced_sim* sim, double* setup_ms, double* pathfind_ms,
                                  double* total_ms) {
  return guard([&] {
    require(sim != nullptr, "null simulation");
    const auto& w = sim->sim->wall_clock();
    if (setup_ms) *setup_ms = w.setup_ms;
    if (pathfind_ms) *pathfind_ms = w.pathfind_ms;
    if (total_ms) *total_ms = w.total_ms;
  });
}

raced_status raced_report_read(const char* path, raced_summary* out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "null argument");
    std::ifstream in(path);
    if (!in) throw raced::Error(raced::Errc::io, std::string("cannot open ") + path);
    fill_summary(raced::harness::parse_report(in), out);
  });
}

}  // extern "C"
