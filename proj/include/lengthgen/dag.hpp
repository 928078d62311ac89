#pragma once

// DAG-structured reasoning: s(v) / t(v) neighbourhoods, topological
// evaluation, one-step frontier semantics and the round-trip check for a
// sequence encoding.

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lengthgen/core.hpp"

namespace lengthgen {

/// Causal function over the ordered input values of a vertex.
using CausalFn = std::function<Token(const TokenTuple&)>;

class ReasoningDag {
 public:
  /// Pure input vertex, valued at construction.
  std::size_t add_input(Token value) {
    nodes_.push_back(Node{std::move(value), true, true, {}, {}});
    return nodes_.size() - 1;
  }

  /// Causal vertex computed from `inputs` in the given order.
  std::size_t add_causal(std::vector<std::size_t> inputs) {
    const std::size_t v = nodes_.size();
    for (auto u : inputs) check(u);
    nodes_.push_back(Node{{}, false, true, inputs, {}});
    for (auto u : inputs) nodes_[u].out.push_back(v);
    arity_ = std::max(arity_, inputs.size());
    return v;
  }

  /// Raw edge; may introduce a cycle, which topo_order reports.
  void add_edge(std::size_t from, std::size_t to) {
    check(from);
    check(to);
    nodes_[to].in.push_back(from);
    nodes_[to].valued = false;
    nodes_[from].out.push_back(to);
    arity_ = std::max(arity_, nodes_[to].in.size());
  }

  std::size_t size() const { return nodes_.size(); }
  bool alive(std::size_t v) const { return check(v), nodes_[v].alive; }
  bool valued(std::size_t v) const { return check(v), nodes_[v].valued; }
  bool pure(std::size_t v) const { return check(v), nodes_[v].in.empty(); }
  const Token& value(std::size_t v) const { return check(v), nodes_[v].value; }
  const std::vector<std::size_t>& s(std::size_t v) const { return check(v), nodes_[v].in; }
  const std::vector<std::size_t>& t(std::size_t v) const { return check(v), nodes_[v].out; }
  std::size_t max_arity() const { return arity_; }

  void set_value(std::size_t v, Token value) {
    check(v);
    nodes_[v].value = std::move(value);
    nodes_[v].valued = true;
  }

  /// Removes `v` and its incident edges; the index stays reserved.
  void retire(std::size_t v) {
    check(v);
    for (auto w : nodes_[v].out) {
      auto& in = nodes_[w].in;
      in.erase(std::remove(in.begin(), in.end(), v), in.end());
    }
    for (auto u : nodes_[v].in) {
      auto& out = nodes_[u].out;
      out.erase(std::remove(out.begin(), out.end(), v), out.end());
    }
    nodes_[v].in.clear();
    nodes_[v].out.clear();
    nodes_[v].alive = false;
  }

  std::vector<std::size_t> live_vertices() const {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
      if (nodes_[v].alive) out.push_back(v);
    }
    return out;
  }

  /// Live vertices without out-neighbours.
  std::vector<std::size_t> sinks() const {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
      if (nodes_[v].alive && nodes_[v].out.empty()) out.push_back(v);
    }
    return out;
  }

  std::string to_dot() const {
    std::ostringstream os;
    os << "digraph G {\n";
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
      if (!nodes_[v].alive) continue;
      os << "  v" << v << " [label=\"" << v << ": "
         << (nodes_[v].valued ? nodes_[v].value : "?") << "\"];\n";
      for (auto w : nodes_[v].out) os << "  v" << v << " -> v" << w << ";\n";
    }
    os << "}\n";
    return os.str();
  }

 private:
  struct Node {
    Token value;
    bool valued = false;
    bool alive = true;
    std::vector<std::size_t> in;
    std::vector<std::size_t> out;
  };

  std::size_t check(std::size_t v) const {
    if (v >= nodes_.size()) {
      throw std::out_of_range("vertex " + std::to_string(v) + " not in graph");
    }
    return v;
  }

  std::vector<Node> nodes_;
  std::size_t arity_ = 0;
};

/// (s o t)(v): every vertex that feeds some vertex v feeds. Includes v
/// itself whenever v has an out-neighbour.
inline std::set<std::size_t> co_inputs(const ReasoningDag& g, std::size_t v) {
  std::set<std::size_t> out;
  for (auto w : g.t(v)) {
    for (auto u : g.s(w)) out.insert(u);
  }
  return out;
}

/// Kahn's algorithm over live vertices, lowest index first among ready ones.
inline std::vector<std::size_t> topo_order(const ReasoningDag& g) {
  std::vector<std::size_t> indeg(g.size(), 0);
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  std::size_t live = 0;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (!g.alive(v)) continue;
    ++live;
    indeg[v] = g.s(v).size();
    if (indeg[v] == 0) ready.push(v);
  }
  std::vector<std::size_t> order;
  order.reserve(live);
  while (!ready.empty()) {
    const auto v = ready.top();
    ready.pop();
    order.push_back(v);
    for (auto w : g.t(v)) {
      if (--indeg[w] == 0) ready.push(w);
    }
  }
  if (order.size() != live) throw StructureError("graph has a cycle");
  return order;
}

inline TokenTuple input_values(const ReasoningDag& g, std::size_t v) {
  TokenTuple x;
  for (auto u : g.s(v)) x.push_back(g.value(u));
  return x;
}

inline Token apply_causal(const CausalFn& f, const ReasoningDag& g, std::size_t v) {
  try {
    return f(input_values(g, v));
  } catch (const DomainError& e) {
    throw DomainError("vertex " + std::to_string(v) + ": " + e.what());
  }
}

/// Values every unvalued vertex in the given (or default) topological order.
inline ReasoningDag evaluate(ReasoningDag g, const CausalFn& f,
                             const std::vector<std::size_t>* order = nullptr) {
  const auto topo = order ? *order : topo_order(g);
  for (auto v : topo) {
    if (!g.valued(v)) g.set_value(v, apply_causal(f, g, v));
  }
  return g;
}

struct Frontier {
  std::vector<std::size_t> W;  // valued by this step
  std::vector<std::size_t> U;  // retired after it
};

/// Next frontier without mutating the graph.
inline Frontier frontier(const ReasoningDag& g) {
  Frontier fr;
  std::vector<char> in_w(g.size(), 0);
  for (auto v : g.live_vertices()) {
    if (g.valued(v)) continue;
    const auto& in = g.s(v);
    if (std::all_of(in.begin(), in.end(), [&](std::size_t u) { return g.valued(u); })) {
      fr.W.push_back(v);
      in_w[v] = 1;
    }
  }
  std::set<std::size_t> cand;
  for (auto w : fr.W) cand.insert(g.s(w).begin(), g.s(w).end());
  for (auto u : cand) {
    const auto& out = g.t(u);
    if (std::all_of(out.begin(), out.end(), [&](std::size_t w) { return in_w[w] != 0; })) {
      fr.U.push_back(u);
    }
  }
  return fr;
}

/// One reasoning step: value W simultaneously, then retire U.
inline std::pair<ReasoningDag, Frontier> step(ReasoningDag g, const CausalFn& f) {
  const Frontier fr = frontier(g);
  if (fr.W.empty()) throw AlreadySolvedError("no unvalued vertex left");
  std::vector<Token> vals;
  vals.reserve(fr.W.size());
  for (auto w : fr.W) vals.push_back(apply_causal(f, g, w));
  for (std::size_t k = 0; k < fr.W.size(); ++k) g.set_value(fr.W[k], vals[k]);
  for (auto u : fr.U) g.retire(u);
  return {std::move(g), fr};
}

inline bool solved(const ReasoningDag& g) {
  for (auto v : g.live_vertices()) {
    if (!g.valued(v)) return false;
  }
  return true;
}

/// Canonical string of the (unfolded) graph: each sink rendered as a nested
/// term, sinks sorted. Equal forms mean isomorphic graphs up to sharing.
inline std::string canonical_form(const ReasoningDag& g) {
  std::map<std::size_t, std::string> memo;
  std::function<const std::string&(std::size_t)> term = [&](std::size_t v) -> const std::string& {
    if (auto it = memo.find(v); it != memo.end()) return it->second;
    std::string s = g.valued(v) ? g.value(v) : "?";
    if (!g.s(v).empty()) {
      s += "(";
      for (std::size_t k = 0; k < g.s(v).size(); ++k) {
        if (k) s += ",";
        s += term(g.s(v)[k]);
      }
      s += ")";
    }
    return memo.emplace(v, std::move(s)).first->second;
  };
  std::vector<std::string> roots;
  for (auto v : g.sinks()) roots.push_back(term(v));
  std::sort(roots.begin(), roots.end());
  std::string out;
  for (const auto& r : roots) out += r + ";";
  return out;
}

struct WellDefinedReport {
  std::size_t probes = 0;
  std::vector<std::size_t> failures;  // probe indices
  bool ok() const { return failures.empty(); }
};

/// Checks decode(encode(G)) against G for each probe.
template <class Encoded>
WellDefinedReport is_well_defined(const std::function<Encoded(const ReasoningDag&)>& encode,
                                  const std::function<ReasoningDag(const Encoded&)>& decode,
                                  const std::vector<ReasoningDag>& probes) {
  WellDefinedReport r;
  r.probes = probes.size();
  for (std::size_t i = 0; i < probes.size(); ++i) {
    bool same = false;
    try {
      same = canonical_form(decode(encode(probes[i]))) == canonical_form(probes[i]);
    } catch (const Error&) {
      same = false;
    }
    if (!same) r.failures.push_back(i);
  }
  return r;
}

/// Random DAG: `inputs` pure vertices valued from `alphabet`, then `causal`
/// vertices each reading `arity` distinct earlier vertices.
inline ReasoningDag random_dag(std::size_t inputs, std::size_t causal, std::size_t arity,
                               const std::vector<Token>& alphabet, Rng& rng) {
  if (inputs < arity) throw std::invalid_argument("random_dag: too few inputs");
  ReasoningDag g;
  std::uniform_int_distribution<std::size_t> sym(0, alphabet.size() - 1);
  for (std::size_t i = 0; i < inputs; ++i) g.add_input(alphabet[sym(rng)]);
  for (std::size_t c = 0; c < causal; ++c) {
    const std::size_t n = g.size();
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(arity);
    g.add_causal(pool);
  }
  return g;
}

}  // namespace lengthgen
