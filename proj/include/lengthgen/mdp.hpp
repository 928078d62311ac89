#pragma once

// Markov dynamic processes: y_{n+1} = f(y_n, x_n), rolled out left to right.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lengthgen/core.hpp"
#include "lengthgen/interpolator.hpp"

namespace lengthgen {

/// Total (or partial) table f: Y x X -> Y. X elements are token tuples so
/// that an operator-operand pair like (*, 4) is one input.
class CausalTable {
 public:
  CausalTable() = default;
  CausalTable(std::vector<Token> ys, std::vector<TokenTuple> xs)
      : ys_(std::move(ys)), xs_(std::move(xs)) {}

  void set(const Token& y, const TokenTuple& x, Token out) {
    table_[key(y, x)] = std::move(out);
  }

  bool contains(const Token& y, const TokenTuple& x) const {
    return table_.count(key(y, x)) > 0;
  }

  const Token& operator()(const Token& y, const TokenTuple& x) const {
    auto it = table_.find(key(y, x));
    if (it == table_.end()) {
      throw DomainError("no table entry for (" + y + ", " + point_string(x) + ")");
    }
    return it->second;
  }

  /// Flattened input (y, x...) used as the interpolator's point.
  static TokenTuple key(const Token& y, const TokenTuple& x) {
    TokenTuple k;
    k.reserve(x.size() + 1);
    k.push_back(y);
    k.insert(k.end(), x.begin(), x.end());
    return k;
  }

  const std::vector<Token>& y_domain() const { return ys_; }
  const std::vector<TokenTuple>& x_domain() const { return xs_; }
  const std::map<TokenTuple, Token>& entries() const { return table_; }

  /// Every (y, x) pair as a training set.
  LabeledDataset<TokenTuple, Token> dataset() const {
    LabeledDataset<TokenTuple, Token> d;
    for (const auto& [k, v] : table_) d.add(k, v);
    return d;
  }

  /// Uniformly random total table over the declared domains.
  static CausalTable random(std::vector<Token> ys, std::vector<TokenTuple> xs, Rng& rng) {
    CausalTable t(ys, xs);
    std::uniform_int_distribution<std::size_t> pick(0, ys.size() - 1);
    for (const auto& y : ys) {
      for (const auto& x : xs) t.set(y, x, ys[pick(rng)]);
    }
    return t;
  }

 private:
  std::vector<Token> ys_;
  std::vector<TokenTuple> xs_;
  std::map<TokenTuple, Token> table_;
};

struct Trajectory {
  Token y0 = "0";
  std::vector<TokenTuple> xs;
  std::vector<Token> ys;
};

/// Any callable (y, x) -> y. Models are wrapped with `as_step`.
using StepFn = std::function<Token(const Token&, const TokenTuple&)>;

template <class Metric>
StepFn as_step(const InterpolatingModel<TokenTuple, Token, Metric>& m) {
  return [&m](const Token& y, const TokenTuple& x) {
    return m.predict(CausalTable::key(y, x));
  };
}

inline StepFn as_step(const CausalTable& t) {
  return [&t](const Token& y, const TokenTuple& x) { return t(y, x); };
}

inline Trajectory rollout(const StepFn& f, Token y0, std::vector<TokenTuple> xs) {
  Trajectory tr{std::move(y0), std::move(xs), {}};
  tr.ys.reserve(tr.xs.size());
  Token y = tr.y0;
  for (const auto& x : tr.xs) {
    y = f(y, x);
    tr.ys.push_back(y);
  }
  return tr;
}

/// Expression form: xs[0] holds the first operand, which seeds y and is
/// reported as ys[0]. Used for chains like 3, (*, 4), (+, 2).
inline Trajectory rollout_expression(const StepFn& f, std::vector<TokenTuple> xs) {
  if (xs.empty()) return Trajectory{};
  if (xs.front().size() != 1) {
    throw FormatError("expression rollout expects a single leading operand");
  }
  Trajectory tr{xs.front().front(), std::move(xs), {}};
  tr.ys.push_back(tr.y0);
  for (std::size_t n = 1; n < tr.xs.size(); ++n) tr.ys.push_back(f(tr.ys.back(), tr.xs[n]));
  return tr;
}

struct EquivalenceReport {
  bool all_equal = true;
  std::size_t probes = 0;
  /// Per probe, index of the first differing output, if any.
  std::vector<std::optional<std::size_t>> first_divergence;
};

inline EquivalenceReport check_recursive_equivalence(const StepFn& f_true,
                                                     const StepFn& f_hat,
                                                     const std::vector<Trajectory>& probes) {
  EquivalenceReport r;
  r.probes = probes.size();
  for (const auto& p : probes) {
    // Both processes run on their own outputs; the first mismatch is where
    // the learned chain leaves the true one.
    Token a = p.y0, b = p.y0;
    std::optional<std::size_t> diverged;
    for (std::size_t n = 0; n < p.xs.size(); ++n) {
      a = f_true(a, p.xs[n]);
      b = f_hat(b, p.xs[n]);
      if (a != b) {
        diverged = n;
        break;
      }
    }
    if (diverged) r.all_equal = false;
    r.first_divergence.push_back(diverged);
  }
  return r;
}

}  // namespace lengthgen
