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
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "raced/harness.hpp"

namespace raced::harness {

namespace {

using nlohmann::ordered_json;

ordered_json to_json(const MetricsReport& r) {
  ordered_json j;
  j["mode"] = r.mode;
  j["seed"] = r.seed;
  j["nodes"] = r.nodes;
  j["channels"] = r.channels;
  j["rh_count"] = r.rh_count;
  j["attempted"] = r.attempted;
  j["successes"] = r.successes;
  j["success_ratio"] = r.success_ratio;
  j["fail_no_path"] = r.no_path;
  j["fail_validation"] = r.validation_failed;
  j["fail_liquidity"] = r.liquidity_failed;
  j["fail_timeout"] = r.timeout;
  j["mean_path_len"] = r.path_len.mean;
  j["stdev_path_len"] = r.path_len.stdev;
  j["mean_ring_len"] = r.ring_len.mean;
  j["stdev_ring_len"] = r.ring_len.stdev;
  j["max_ring_len"] = r.max_ring_len;
  j["mean_pathfind_ticks"] = r.pathfind_ticks.mean;
  j["stdev_pathfind_ticks"] = r.pathfind_ticks.stdev;
  j["mean_route_ticks"] = r.route_ticks.mean;
  j["stdev_route_ticks"] = r.route_ticks.stdev;
  j["dispute_count"] = r.dispute_count;
  j["final_tick"] = r.final_tick;
  return j;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <class T>
T take(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw Error(Errc::parse, "report is missing key '" + key + "'");
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      return it->second;
    } else if constexpr (std::is_floating_point_v<T>) {
      return std::stod(it->second);
    } else if constexpr (std::is_signed_v<T>) {
      return static_cast<T>(std::stoll(it->second));
    } else {
      return static_cast<T>(std::stoull(it->second));
    }
  } catch (const std::logic_error&) {
    throw Error(Errc::parse, "bad value for '" + key + "'");
  }
}

MetricsReport from_map(const std::map<std::string, std::string>& kv) {
  MetricsReport r;
  r.mode = take<std::string>(kv, "mode");
  r.seed = take<std::uint64_t>(kv, "seed");
  r.nodes = take<std::size_t>(kv, "nodes");
  r.channels = take<std::size_t>(kv, "channels");
  r.rh_count = take<std::size_t>(kv, "rh_count");
  r.attempted = take<std::size_t>(kv, "attempted");
  r.successes = take<std::size_t>(kv, "successes");
  r.success_ratio = take<double>(kv, "success_ratio");
  r.no_path = take<std::size_t>(kv, "fail_no_path");
  r.validation_failed = take<std::size_t>(kv, "fail_validation");
  r.liquidity_failed = take<std::size_t>(kv, "fail_liquidity");
  r.timeout = take<std::size_t>(kv, "fail_timeout");
  r.path_len = {take<double>(kv, "mean_path_len"), take<double>(kv, "stdev_path_len")};
  r.ring_len = {take<double>(kv, "mean_ring_len"), take<double>(kv, "stdev_ring_len")};
  r.max_ring_len = take<std::size_t>(kv, "max_ring_len");
  r.pathfind_ticks = {take<double>(kv, "mean_pathfind_ticks"), take<double>(kv, "stdev_pathfind_ticks")};
  r.route_ticks = {take<double>(kv, "mean_route_ticks"), take<double>(kv, "stdev_route_ticks")};
  r.dispute_count = take<std::size_t>(kv, "dispute_count");
  r.final_tick = take<Tick>(kv, "final_tick");
  return r;
}

}  // namespace

void write_report(std::ostream& out, const MetricsReport& r, ReportFormat fmt) {
  auto j = to_json(r);
  if (fmt == ReportFormat::json) {
    out << j.dump(2) << '\n';
  } else {
    for (const auto& [key, val] : j.items()) {
      out << key << '=';
      if (val.is_string()) {
        out << val.get<std::string>();
      } else if (val.is_number_float()) {
        out << fmt_double(val.get<double>());
      } else {
        out << val.dump();
      }
      out << '\n';
    }
  }
  if (!out) throw Error(Errc::io, "failed writing report");
}

MetricsReport parse_report(std::istream& in) {
  std::stringstream buf;
  buf << in.rdbuf();
  auto text = buf.str();
  auto first = text.find_first_not_of(" \t\r\n");
  std::map<std::string, std::string> kv;
  if (first != std::string::npos && text[first] == '{') {
    ordered_json j;
    try {
      j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse, e.what());
    }
    for (const auto& [key, val] : j.items()) {
      if (val.is_string()) {
        kv[key] = val.get<std::string>();
      } else if (val.is_number_float()) {
        kv[key] = fmt_double(val.get<double>());
      } else {
        kv[key] = val.dump();
      }
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) throw Error(Errc::parse, "expected key=value: " + line);
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  return from_map(kv);
}

void write_traces(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "txid,status,path,t_pathfind_ticks,t_route_ticks,disputes\n";
  for (const auto& row : rows) {
    out << row.txid << ',' << routing::status_name(row.status) << ',';
    for (std::size_t i = 0; i < row.path.size(); ++i) out << (i ? "-" : "") << row.path[i];
    out << ',' << row.t_pathfind << ',' << row.t_route << ',';
    for (std::size_t i = 0; i < row.disputes.size(); ++i) out << (i ? ";" : "") << row.disputes[i];
    out << '\n';
  }
}

}  // namespace raced::harness
