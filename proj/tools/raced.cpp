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
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "raced/raced.h"

namespace {

struct Failure {
  raced_status status;
};

void check(raced_status s) {
  if (s != RACED_OK) throw Failure{s};
}

struct Source {
  std::string graph;
  std::string synthetic;
};

raced_network* open_network(const Source& src) {
  raced_network* net = nullptr;
  if (!src.graph.empty()) {
    check(raced_network_load(src.graph.c_str(), &net));
  } else {
    raced_synthetic_params p;
    raced_synthetic_params_init(&p);
    if (!src.synthetic.empty()) check(raced_synthetic_params_parse(src.synthetic.c_str(), &p));
    check(raced_network_generate(&p, &net));
  }
  return net;
}

void add_source(CLI::App* cmd, Source& src) {
  auto* g = cmd->add_option("--graph", src.graph, "channel CSV: src,dst,lw_src_to_dst,lw_dst_to_src");
  auto* s = cmd->add_option("--synthetic", src.synthetic, "scale-free graph, e.g. n=2000,seed=42,m=2,k=1");
  g->excludes(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"raced: payment channel network routing simulator"};
  app.require_subcommand(1);

  Source src;
  raced_sim_config cfg;
  raced_sim_config_init(&cfg);
  std::string mode = "1scc";
  std::string txs_path, out = "-", format = "json", traces, ledger, keys, ring, write_txs;
  uint64_t tx_count = 5000, tx_seed = 11;
  int64_t tx_min = 1, tx_max = 50;
  bool random_ties = false, timings = false;

  auto* sim = app.add_subcommand("sim", "run a routing experiment");
  add_source(sim, src);
  sim->add_option("--txs", txs_path, "transaction CSV: idx,sender_id,receiver_id,amount");
  sim->add_option("--tx-count", tx_count, "generated transactions when --txs is absent");
  sim->add_option("--tx-min", tx_min, "smallest generated amount");
  sim->add_option("--tx-max", tx_max, "largest generated amount");
  sim->add_option("--tx-seed", tx_seed, "seed of the transaction generator");
  sim->add_option("--rh-count", cfg.rh_count, "routing helpers");
  sim->add_option("--mode", mode, "1scc or kscc")->check(CLI::IsMember({"1scc", "kscc"}));
  sim->add_option("--m-bits", cfg.m_bits, "identifier bits");
  sim->add_option("--delta", cfg.delta, "epoch length in ticks");
  sim->add_option("--fee", cfg.fee, "fee per intermediary");
  sim->add_option("--seed", cfg.seed, "simulation seed");
  sim->add_option("--htlc-delta", cfg.htlc_delta, "timeout step between HTLCs");
  sim->add_option("--max-bucket", cfg.max_bucket, "attested maxima are multiples of this");
  sim->add_option("--rh-deposit", cfg.rh_deposit, "per-side deposit of overlay channels");
  sim->add_option("--max-in-flight", cfg.max_in_flight, "concurrency limit, 0 for all");
  sim->add_option("--arrival-rate", cfg.arrival_rate, "Poisson arrivals per tick, 0 for all at once");
  sim->add_flag("--random-ties", random_ties, "seeded random tie-breaks");
  sim->add_option("--out", out, "report path, - for stdout");
  sim->add_option("--format", format, "json or kv")->check(CLI::IsMember({"json", "kv"}));
  sim->add_option("--traces", traces, "per-transaction trace CSV");
  sim->add_option("--ledger", ledger, "ledger record dump");
  sim->add_option("--keys", keys, "public key dump");
  sim->add_option("--ring", ring, "ring dump");
  sim->add_option("--write-txs", write_txs, "save the transaction set");
  sim->add_flag("--timings", timings, "print wall-clock timings to stderr");

  auto* dht = app.add_subcommand("dht-check", "dump the ring and diff fingers against a linear scan");
  add_source(dht, src);
  dht->add_option("--rh-count", cfg.rh_count, "routing helpers");
  dht->add_option("--mode", mode, "1scc or kscc")->check(CLI::IsMember({"1scc", "kscc"}));
  dht->add_option("--m-bits", cfg.m_bits, "identifier bits");
  dht->add_option("--seed", cfg.seed, "simulation seed");
  dht->add_option("--out", out, "ring dump path, - for stdout");

  auto* gen = app.add_subcommand("gen", "write a synthetic graph as CSV");
  gen->add_option("--synthetic", src.synthetic, "n=2000,seed=42,m=2,k=1");
  gen->add_option("--out", out, "graph path, - for stdout");

  CLI11_PARSE(app, argc, argv);
  cfg.mode = mode == "kscc" ? RACED_MODE_KSCC : RACED_MODE_1SCC;
  cfg.random_tie_break = random_ties ? 1 : 0;

  raced_network* net = nullptr;
  raced_sim* s = nullptr;
  raced_txset* txs = nullptr;
  int code = 0;
  try {
    net = open_network(src);
    if (*gen) {
      check(raced_network_write(net, out.c_str()));
    } else if (*dht) {
      check(raced_sim_create(net, &cfg, &s));
      check(raced_sim_write_ring(s, out.c_str()));
      char* diff = nullptr;
      uint64_t mismatches = 0;
      check(raced_sim_finger_diff(s, &diff, &mismatches));
      std::fprintf(stderr, "finger mismatches: %llu\n", static_cast<unsigned long long>(mismatches));
      std::fputs(diff, stderr);
      raced_string_free(diff);
      code = mismatches == 0 ? 0 : 1;
    } else {
      check(raced_sim_create(net, &cfg, &s));
      if (!txs_path.empty()) {
        check(raced_txset_load(txs_path.c_str(), &txs));
      } else {
        check(raced_txset_generate(s, tx_count, tx_min, tx_max, tx_seed, &txs));
      }
      if (!write_txs.empty()) check(raced_txset_write(txs, write_txs.c_str()));
      check(raced_sim_run(s, txs, nullptr));
      check(raced_sim_write_report(s, out.c_str(), format == "kv" ? RACED_REPORT_KV : RACED_REPORT_JSON));
      if (!traces.empty()) check(raced_sim_write_traces(s, traces.c_str()));
      if (!ledger.empty()) check(raced_sim_write_ledger(s, ledger.c_str()));
      if (!keys.empty()) check(raced_sim_write_keys(s, keys.c_str()));
      if (!ring.empty()) check(raced_sim_write_ring(s, ring.c_str()));
      if (timings) {
        double setup = 0, pathfind = 0, total = 0;
        check(raced_sim_wall_clock(s, &setup, &pathfind, &total));
        std::fprintf(stderr, "setup_ms=%.3f pathfind_ms=%.3f run_ms=%.3f\n", setup, pathfind, total);
      }
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s: %s\n", raced_status_name(f.status), raced_last_error());
    code = 2;
  }
  raced_txset_free(txs);
  raced_sim_free(s);
  raced_network_free(net);
  return code;
}
