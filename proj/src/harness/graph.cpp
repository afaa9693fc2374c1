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
#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "raced/harness.hpp"

namespace raced::harness {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <class T>
T number(std::string_view field, std::size_t line, const char* what) {
  field = trim(field);
  T v{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw Error(Errc::parse, "line " + std::to_string(line) + ": bad " + what + " '" +
                                 std::string(field) + "'");
  }
  return v;
}

bool is_header(std::string_view line) {
  line = trim(line);
  return !line.empty() && !(line.front() >= '0' && line.front() <= '9') && line.front() != '-';
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path);
  return in;
}

}  // namespace

void NetworkSpec::validate() const {
  std::set<std::pair<NodeRef, NodeRef>> pairs;
  for (const auto& e : edges) {
    if (e.src == e.dst) throw Error(Errc::invalid_argument, "self-loop on node " + std::to_string(e.src));
    if (e.src >= nodes || e.dst >= nodes) throw Error(Errc::invalid_argument, "edge endpoint out of range");
    if (e.lw_src < 0 || e.lw_dst < 0) throw Error(Errc::invalid_argument, "negative balance");
    auto key = std::minmax(e.src, e.dst);
    if (!pairs.insert(key).second) {
      throw Error(Errc::duplicate, "duplicate channel " + std::to_string(key.first) + "-" +
                                       std::to_string(key.second));
    }
  }
}

NetworkSpec parse_graph(std::istream& in) {
  NetworkSpec spec;
  std::set<std::pair<NodeRef, NodeRef>> pairs;
  std::string raw;
  std::size_t line = 0;
  NodeRef max_id = 0;
  bool any = false;
  while (std::getline(in, raw)) {
    ++line;
    auto text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    if (line == 1 && is_header(text)) continue;
    auto f = split(text, ',');
    if (f.size() != 4) {
      throw Error(Errc::parse, "line " + std::to_string(line) + ": expected 4 fields, got " +
                                   std::to_string(f.size()));
    }
    Edge e;
    e.src = number<NodeRef>(f[0], line, "src");
    e.dst = number<NodeRef>(f[1], line, "dst");
    e.lw_src = number<Amount>(f[2], line, "lw_src_to_dst");
    e.lw_dst = number<Amount>(f[3], line, "lw_dst_to_src");
    if (e.src == e.dst) {
      throw Error(Errc::parse, "line " + std::to_string(line) + ": self-loop");
    }
    max_id = std::max({max_id, e.src, e.dst});
    any = true;
    if (e.lw_src <= 0 || e.lw_dst <= 0) {
      ++spec.dropped_rows;
      continue;
    }
    if (!pairs.insert(std::minmax(e.src, e.dst)).second) {
      throw Error(Errc::duplicate, "line " + std::to_string(line) + ": duplicate channel " +
                                       std::to_string(e.src) + "-" + std::to_string(e.dst));
    }
    spec.edges.push_back(e);
  }
  spec.nodes = any ? static_cast<std::size_t>(max_id) + 1 : 0;
  return spec;
}

NetworkSpec load_graph(const std::string& path) {
  auto in = open_in(path);
  return parse_graph(in);
}

void write_graph(std::ostream& out, const NetworkSpec& spec) {
  out << "src,dst,lw_src_to_dst,lw_dst_to_src\n";
  for (const auto& e : spec.edges) {
    out << e.src << ',' << e.dst << ',' << e.lw_src << ',' << e.lw_dst << '\n';
  }
}

void SyntheticParams::validate() const {
  if (nodes < 2) throw Error(Errc::config, "synthetic graph needs at least 2 nodes");
  if (attach < 1) throw Error(Errc::config, "attach must be >= 1");
  if (components < 1 || nodes / components < 2) {
    throw Error(Errc::config, "every component needs at least 2 nodes");
  }
  if (min_balance < 1 || max_balance < min_balance) {
    throw Error(Errc::config, "balance range must satisfy 1 <= min <= max");
  }
}

SyntheticParams parse_synthetic(std::string_view text) {
  SyntheticParams p;
  for (auto item : split(text, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::config, "expected key=value in '" + std::string(item) + "'");
    auto key = item.substr(0, eq);
    auto val = item.substr(eq + 1);
    auto num = [&] { return number<std::uint64_t>(val, 0, "synthetic parameter"); };
    if (key == "n") {
      p.nodes = num();
    } else if (key == "seed") {
      p.seed = num();
    } else if (key == "m") {
      p.attach = num();
    } else if (key == "k") {
      p.components = num();
    } else if (key == "min") {
      p.min_balance = static_cast<Amount>(num());
    } else if (key == "max") {
      p.max_balance = static_cast<Amount>(num());
    } else {
      throw Error(Errc::config, "unknown synthetic parameter '" + std::string(key) + "'");
    }
  }
  p.validate();
  return p;
}

NetworkSpec generate_synthetic(const SyntheticParams& p) {
  p.validate();
  DetRng rng = DetRng(p.seed).fork("synthetic", 0);
  NetworkSpec spec;
  spec.nodes = p.nodes;
  std::vector<std::pair<NodeRef, NodeRef>> links;
  std::set<std::pair<NodeRef, NodeRef>> seen;
  auto link = [&](NodeRef a, NodeRef b) {
    if (seen.insert(std::minmax(a, b)).second) links.emplace_back(a, b);
  };

  const std::size_t base = p.nodes / p.components;
  std::size_t extra = p.nodes % p.components;
  NodeRef offset = 0;
  for (std::size_t c = 0; c < p.components; ++c) {
    const auto size = static_cast<NodeRef>(base + (extra > 0 ? 1 : 0));
    if (extra > 0) --extra;
    const auto core = static_cast<NodeRef>(std::min<std::size_t>(p.attach + 1, size));
    std::vector<NodeRef> ends;
    for (NodeRef a = 0; a < core; ++a) {
      for (NodeRef b = a + 1; b < core; ++b) {
        link(offset + a, offset + b);
        ends.push_back(offset + a);
        ends.push_back(offset + b);
      }
    }
    for (NodeRef v = core; v < size; ++v) {
      const auto want = std::min<std::size_t>(p.attach, v);
      std::set<NodeRef> targets;
      while (targets.size() < want) {
        auto pick = ends[static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(ends.size()) - 1))];
        targets.insert(pick);
      }
      for (auto t : targets) {
        link(offset + v, t);
        ends.push_back(offset + v);
        ends.push_back(t);
      }
    }
    offset += size;
  }

  std::vector<std::size_t> degree(p.nodes, 0);
  for (auto [a, b] : links) {
    ++degree[a];
    ++degree[b];
  }
  for (auto [a, b] : links) {
    const auto scale = static_cast<Amount>(std::min(degree[a], degree[b]));
    Edge e{a, b, rng.uniform(p.min_balance, p.max_balance) * scale,
           rng.uniform(p.min_balance, p.max_balance) * scale};
    spec.edges.push_back(e);
  }
  return spec;
}

std::vector<std::size_t> out_degrees(const NetworkSpec& spec) {
  std::vector<std::size_t> deg(spec.nodes, 0);
  for (const auto& e : spec.edges) {
    if (e.lw_src > 0) ++deg[e.src];
    if (e.lw_dst > 0) ++deg[e.dst];
  }
  return deg;
}

std::vector<std::vector<NodeRef>> strongly_connected_components(const NetworkSpec& spec) {
  const std::size_t n = spec.nodes;
  std::vector<std::vector<NodeRef>> out_adj(n);
  for (const auto& e : spec.edges) {
    if (e.lw_src > 0) out_adj[e.src].push_back(e.dst);
    if (e.lw_dst > 0) out_adj[e.dst].push_back(e.src);
  }

  // iterative Tarjan
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnset), low(n, 0), cursor(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<NodeRef> stack, call;
  std::vector<std::vector<NodeRef>> comps;
  std::size_t counter = 0;
  for (NodeRef root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.push_back(root);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto v = call.back();
      if (cursor[v] < out_adj[v].size()) {
        auto w = out_adj[v][cursor[v]++];
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back(w);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      call.pop_back();
      if (!call.empty()) low[call.back()] = std::min(low[call.back()], low[v]);
      if (low[v] == index[v]) {
        std::vector<NodeRef> comp;
        NodeRef w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
      }
    }
  }
  std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.front() < b.front();
  });
  return comps;
}

const char* mode_name(Mode m) noexcept { return m == Mode::one_scc ? "1scc" : "kscc"; }

Mode parse_mode(std::string_view text) {
  if (text == "1scc" || text == "one_scc") return Mode::one_scc;
  if (text == "kscc" || text == "k_scc") return Mode::k_scc;
  throw Error(Errc::config, "unknown mode '" + std::string(text) + "'");
}

std::vector<NodeRef> select_rhs(const NetworkSpec& spec, std::size_t rh_count, Mode mode) {
  if (rh_count < 2) throw Error(Errc::config, "rh_count must be >= 2");
  auto deg = out_degrees(spec);
  auto comps = strongly_connected_components(spec);
  auto by_degree = [&deg](NodeRef a, NodeRef b) {
    if (deg[a] != deg[b]) return deg[a] > deg[b];
    return a < b;
  };
  std::vector<NodeRef> out;
  if (mode == Mode::one_scc) {
    if (comps.empty() || comps.front().size() < rh_count) {
      throw Error(Errc::config, "largest SCC is smaller than rh_count");
    }
    auto members = comps.front();
    std::sort(members.begin(), members.end(), by_degree);
    out.assign(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(rh_count));
  } else {
    if (comps.size() < rh_count) {
      throw Error(Errc::config, "graph has " + std::to_string(comps.size()) +
                                    " SCCs, fewer than rh_count");
    }
    for (std::size_t c = 0; c < rh_count; ++c) {
      out.push_back(*std::min_element(comps[c].begin(), comps[c].end(), by_degree));
    }
  }
  return out;
}

std::vector<TxSpec> parse_transactions(std::istream& in) {
  std::vector<TxSpec> txs;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    if (line == 1 && is_header(text)) continue;
    auto f = split(text, ',');
    if (f.size() != 4) {
      throw Error(Errc::parse, "line " + std::to_string(line) + ": expected 4 fields, got " +
                                   std::to_string(f.size()));
    }
    TxSpec tx;
    tx.idx = number<std::size_t>(f[0], line, "idx");
    tx.sender = number<NodeRef>(f[1], line, "sender_id");
    tx.receiver = number<NodeRef>(f[2], line, "receiver_id");
    tx.amount = number<Amount>(f[3], line, "amount");
    if (tx.amount <= 0) throw Error(Errc::parse, "line " + std::to_string(line) + ": amount must be positive");
    txs.push_back(tx);
  }
  return txs;
}

std::vector<TxSpec> load_transactions(const std::string& path) {
  auto in = open_in(path);
  return parse_transactions(in);
}

void write_transactions(std::ostream& out, const std::vector<TxSpec>& txs) {
  out << "idx,sender_id,receiver_id,amount\n";
  for (const auto& t : txs) {
    out << t.idx << ',' << t.sender << ',' << t.receiver << ',' << t.amount << '\n';
  }
}

}  // namespace raced::harness
