#pragma once

// Shared task interface. A symbolic task supplies the three CoT sub-steps
// as oracles (which positions to reason on, the causal function on one
// group, and the writeback), plus sampling, stop rules and grading.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "lengthgen/core.hpp"

namespace lengthgen {

struct CotStep {
  Seq input;
  Seq output;   // as written back, before compaction
  Seq next;     // the following input
};

struct Episode {
  std::string task;
  Seq instance;
  std::vector<CotStep> steps;
  Seq answer;
};

/// One train or test range: a length or digit bound, or an annulus.
///
/// `bound` means: L in [3, bound) for F7, operands in [0, 10^bound) for the
/// additions, operands in [0, bound) for multiplication. `lo`/`hi` are the
/// annulus radii for arctan.
struct SampleRange {
  std::string label;
  std::size_t bound = 0;
  double lo = 0.0;
  double hi = 0.0;
  /// Additions only: draw the digit count uniformly first instead of the
  /// value, so short operands are not vanishingly rare.
  bool length_uniform = false;
};

using Group = std::vector<std::size_t>;

class SymbolicTask {
 public:
  virtual ~SymbolicTask() = default;

  virtual std::string id() const = 0;

  // ---- sub-step 1: what to compute next ----
  virtual Mask oracle_mask(const Seq& s) const = 0;
  /// Task-declared grouping of marked positions.
  virtual std::vector<Group> groups(const Seq& s, const Mask& m) const = 0;
  /// Window alphabet: tokens collapsed to their structural role.
  virtual Token role(const Token& t) const { return t; }
  /// R for finite-R tasks; nullopt when R is unbounded.
  virtual std::optional<std::size_t> declared_R() const = 0;

  // ---- sub-step 2: the causal function on one group ----
  virtual TokenTuple causal_input(const Seq& s, const Group& g) const = 0;
  virtual Token causal(const TokenTuple& x) const = 0;

  // ---- sub-step 3: writeback ----
  virtual Seq writeback(const Seq& s, const std::vector<Group>& gs,
                        const std::vector<Token>& outs) const = 0;
  virtual Seq compact(const Seq& written) const { return written; }

  // ---- episodes ----
  virtual bool finished(const Seq& s) const = 0;
  virtual std::size_t budget(const Seq& instance) const = 0;
  virtual std::string answer_text(const Seq& s) const { return s.text(); }
  /// Independently computed final answer.
  virtual std::string oracle_answer(const Seq& instance) const = 0;

  // ---- sampling ----
  virtual Seq sample(const SampleRange& r, Rng& rng) const = 0;
  /// Instances at one scale level (R measurement).
  virtual Seq sample_level(std::size_t level, Rng& rng) const = 0;
  virtual Seq parse_instance(const std::string& text) const = 0;

  /// One oracle step; returns the written-back and the compacted sequence.
  std::pair<Seq, Seq> oracle_step(const Seq& s) const {
    const auto gs = groups(s, oracle_mask(s));
    std::vector<Token> outs;
    outs.reserve(gs.size());
    for (const auto& g : gs) outs.push_back(causal(causal_input(s, g)));
    Seq written = writeback(s, gs, outs);
    Seq next = compact(written);
    return {std::move(written), std::move(next)};
  }

  Episode episode(const Seq& instance) const {
    Episode ep{id(), instance, {}, instance};
    Seq s = instance;
    const std::size_t cap = budget(instance);
    while (!finished(s)) {
      if (ep.steps.size() >= cap) {
        throw Error(id() + ": oracle episode exceeded its budget on " + instance.text());
      }
      auto [written, next] = oracle_step(s);
      if (next == s) break;
      ep.steps.push_back(CotStep{s, written, next});
      s = std::move(next);
    }
    ep.answer = s;
    return ep;
  }
};

// ---------------------------------------------------------------------------
// Shared helpers

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_digit(const Token& t) { return t.size() == 1 && is_digit(t[0]); }

/// Maximal runs of marked positions.
inline std::vector<Group> marked_spans(const Mask& m) {
  std::vector<Group> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    if (out.empty() || out.back().back() + 1 != i) out.emplace_back();
    out.back().push_back(i);
  }
  return out;
}

/// All marked positions as a single group.
inline std::vector<Group> single_group(const Mask& m) {
  Group g;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) g.push_back(i);
  }
  if (g.empty()) return {};
  return {g};
}

inline TokenTuple tokens_at(const Seq& s, const Group& g) {
  TokenTuple out;
  out.reserve(g.size());
  for (auto i : g) out.push_back(i < s.size() ? s[i] : kBoundary);
  return out;
}

/// Decimal string without leading zeros, uniform value in [0, 10^digits).
inline std::string random_decimal(std::size_t digits, Rng& rng) {
  std::uniform_int_distribution<int> d(0, 9);
  std::string s;
  for (std::size_t i = 0; i < digits; ++i) s.push_back(static_cast<char>('0' + d(rng)));
  const auto nz = s.find_first_not_of('0');
  return nz == std::string::npos ? "0" : s.substr(nz);
}

/// Exactly `digits` digits (0 counts as one digit).
inline std::string random_decimal_exact(std::size_t digits, Rng& rng) {
  if (digits <= 1) return random_decimal(1, rng);
  std::uniform_int_distribution<int> lead(1, 9), d(0, 9);
  std::string s(1, static_cast<char>('0' + lead(rng)));
  for (std::size_t i = 1; i < digits; ++i) s.push_back(static_cast<char>('0' + d(rng)));
  return s;
}

/// Operand for an addition range: uniform value, or uniform digit count.
inline std::string random_operand(const SampleRange& r, Rng& rng) {
  if (!r.length_uniform) return random_decimal(r.bound, rng);
  std::uniform_int_distribution<std::size_t> len(1, r.bound);
  return random_decimal_exact(len(rng), rng);
}

/// Schoolbook decimal addition on strings; independent of any task format.
inline std::string decimal_add(const std::string& a, const std::string& b) {
  std::string out;
  int carry = 0;
  for (std::size_t i = 0; i < std::max(a.size(), b.size()) || carry; ++i) {
    int s = carry;
    if (i < a.size()) s += a[a.size() - 1 - i] - '0';
    if (i < b.size()) s += b[b.size() - 1 - i] - '0';
    out.push_back(static_cast<char>('0' + s % 10));
    carry = s / 10;
  }
  std::reverse(out.begin(), out.end());
  const auto nz = out.find_first_not_of('0');
  return nz == std::string::npos ? "0" : out.substr(nz);
}

// ---------------------------------------------------------------------------
// JSONL export: {task, instance_id, step_index, input, output}

inline nlohmann::json step_record(const std::string& task, std::size_t instance_id,
                                  std::size_t step_index, const CotStep& st) {
  return {{"task", task},
          {"instance_id", instance_id},
          {"step_index", step_index},
          {"input", st.input.text()},
          {"output", st.output.text()}};
}

inline void write_jsonl(std::ostream& os, const Episode& ep, std::size_t instance_id) {
  for (std::size_t k = 0; k < ep.steps.size(); ++k) {
    os << step_record(ep.task, instance_id, k, ep.steps[k]).dump() << '\n';
  }
}

}  // namespace lengthgen
