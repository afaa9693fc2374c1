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
#ifndef RACED_RACED_H_
#define RACED_RACED_H_

#include <stdint.h>

#if defined(_WIN32)
#define RACED_API __declspec(dllexport)
#else
#define RACED_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum raced_status {
  RACED_OK = 0,
  RACED_ERR_INVALID_ARGUMENT = 1,
  RACED_ERR_DECODE = 2,
  RACED_ERR_LOOKUP = 3,
  RACED_ERR_DUPLICATE = 4,
  RACED_ERR_FUNDS = 5,
  RACED_ERR_STATE = 6,
  RACED_ERR_PARSE = 7,
  RACED_ERR_IO = 8,
  RACED_ERR_CONFIG = 9,
  RACED_ERR_INTERNAL = 10
} raced_status;

enum { RACED_MODE_1SCC = 0, RACED_MODE_KSCC = 1 };
enum { RACED_REPORT_JSON = 0, RACED_REPORT_KV = 1 };

typedef struct raced_network raced_network;
typedef struct raced_txset raced_txset;
typedef struct raced_sim raced_sim;

typedef struct raced_synthetic_params {
  uint64_t nodes;
  uint64_t attach;
  uint64_t components;
  uint64_t seed;
  int64_t min_balance;
  int64_t max_balance;
} raced_synthetic_params;

typedef struct raced_sim_config {
  uint32_t rh_count;
  int32_t mode;
  uint32_t m_bits;
  int64_t delta;
  int64_t fee;
  uint64_t seed;
  int64_t htlc_delta;
  int64_t max_bucket;
  int64_t rh_deposit;
  uint64_t max_in_flight; /* 0: unlimited */
  double arrival_rate;    /* 0: all at tick 0 */
  int32_t random_tie_break;
  int32_t settle_at_end;
} raced_sim_config;

typedef struct raced_summary {
  uint64_t attempted;
  uint64_t successes;
  double success_ratio;
  uint64_t no_path;
  uint64_t validation_failed;
  uint64_t liquidity_failed;
  uint64_t timeout;
  double mean_path_len;
  double stdev_path_len;
  double mean_ring_len;
  uint64_t max_ring_len;
  double mean_pathfind_ticks;
  double mean_route_ticks;
  uint64_t dispute_count;
  uint64_t rh_count;
} raced_summary;

RACED_API const char* raced_version(void);
RACED_API const char* raced_status_name(raced_status status);
/* Message of the last failed call on this thread; empty when none. */
RACED_API const char* raced_last_error(void);
RACED_API void raced_string_free(char* s);

RACED_API void raced_synthetic_params_init(raced_synthetic_params* p);
RACED_API raced_status raced_synthetic_params_parse(const char* text, raced_synthetic_params* p);
RACED_API raced_status raced_network_generate(const raced_synthetic_params* p, raced_network** out);
RACED_API raced_status raced_network_load(const char* path, raced_network** out);
RACED_API raced_status raced_network_write(const raced_network* net, const char* path);
RACED_API raced_status raced_network_info(const raced_network* net, uint64_t* nodes,
                                          uint64_t* channels, uint64_t* dropped_rows);
RACED_API void raced_network_free(raced_network* net);

RACED_API void raced_sim_config_init(raced_sim_config* cfg);
RACED_API raced_status raced_sim_create(const raced_network* net, const raced_sim_config* cfg,
                                        raced_sim** out);
RACED_API void raced_sim_free(raced_sim* sim);

RACED_API raced_status raced_txset_load(const char* path, raced_txset** out);
/* Transactions feasible on the untouched state of `sim`. */
RACED_API raced_status raced_txset_generate(const raced_sim* sim, uint64_t count,
                                            int64_t min_amount, int64_t max_amount,
                                            uint64_t seed, raced_txset** out);
RACED_API raced_status raced_txset_write(const raced_txset* txs, const char* path);
RACED_API uint64_t raced_txset_size(const raced_txset* txs);
RACED_API void raced_txset_free(raced_txset* txs);

/* `summary` may be NULL. A simulation runs once. */
RACED_API raced_status raced_sim_run(raced_sim* sim, const raced_txset* txs,
                                     raced_summary* summary);

/* Output paths accept "-" for stdout. */
RACED_API raced_status raced_sim_write_report(const raced_sim* sim, const char* path,
                                              int32_t format);
RACED_API raced_status raced_sim_write_traces(const raced_sim* sim, const char* path);
RACED_API raced_status raced_sim_write_ledger(const raced_sim* sim, const char* path);
RACED_API raced_status raced_sim_write_keys(const raced_sim* sim, const char* path);
RACED_API raced_status raced_sim_write_ring(const raced_sim* sim, const char* path);
/* Newline-separated `node_id,j,expected,actual`; free with raced_string_free. */
RACED_API raced_status raced_sim_finger_diff(const raced_sim* sim, char** text,
                                             uint64_t* mismatches);
/* 64 hex chars plus NUL. */
RACED_API raced_status raced_sim_transcript_hash(const raced_sim* sim, char out_hex[65]);
RACED_API raced_status raced_sim_wall_clock(const raced_sim* sim, double* setup_ms,
                                            double* pathfind_ms, double* total_ms);

RACED_API raced_status raced_report_read(const char* path, raced_summary* out);

#ifdef __cplusplus
}
#endif

#endif  // RACED_RACED_H_
