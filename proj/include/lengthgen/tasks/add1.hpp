#pragma once

// 1-line addition "A+B=<marker><settled digits>". The marker is '?' for an
// incoming carry of 0 and 'c' for 1. Each step consumes one digit column
// from the right: A_k, B_k and the marker are the step's inputs.

#include <string>
#include <vector>

#include "lengthgen/tasks/common.hpp"

namespace lengthgen {

struct Add1State {
  std::string a, b, result;
  std::size_t plus = 0, eq = 0;

  static Add1State parse(const std::string& text) {
    Add1State st;
    st.plus = text.find('+');
    st.eq = text.find('=');
    if (st.plus == std::string::npos || st.eq == std::string::npos || st.eq < st.plus) {
      throw FormatError("1-line addition needs \"A+B=...\": " + text);
    }
    st.a = text.substr(0, st.plus);
    st.b = text.substr(st.plus + 1, st.eq - st.plus - 1);
    st.result = text.substr(st.eq + 1);
    auto digits = [](const std::string& s) {
      return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return is_digit(c); });
    };
    if (!digits(st.a) || !digits(st.b) || st.result.empty()) {
      throw FormatError("malformed 1-line addition: " + text);
    }
    const bool marked = st.result[0] == '?' || st.result[0] == 'c';
    const std::string settled = marked ? st.result.substr(1) : st.result;
    if (!(marked && settled.empty()) && !digits(settled)) {
      throw FormatError("malformed result in 1-line addition: " + text);
    }
    return st;
  }

  bool pending() const { return result[0] == '?' || result[0] == 'c'; }
  std::size_t settled() const { return result.size() - 1; }
  std::size_t marker_pos() const { return eq + 1; }
  /// Position of the k-th digit from the right of an operand, if any.
  static std::optional<std::size_t> digit_pos(std::size_t start, std::size_t len,
                                              std::size_t k) {
    if (k >= len) return std::nullopt;
    return start + len - 1 - k;
  }
};

class Add1Task : public SymbolicTask {
 public:
  std::string id() const override { return "add1"; }

  Mask oracle_mask(const Seq& s) const override {
    const auto st = Add1State::parse(s.text());
    Mask m(s.size(), false);
    if (!st.pending()) return m;
    const std::size_t k = st.settled();
    if (auto p = Add1State::digit_pos(0, st.a.size(), k)) m[*p] = true;
    if (auto p = Add1State::digit_pos(st.plus + 1, st.b.size(), k)) m[*p] = true;
    m[st.marker_pos()] = true;
    return m;
  }

  std::vector<Group> groups(const Seq&, const Mask& m) const override {
    return single_group(m);
  }

  Token role(const Token& t) const override {
    if (is_digit(t)) return "d";
    if (t == "c") return "?";
    return t;
  }

  std::optional<std::size_t> declared_R() const override { return std::nullopt; }

  /// (A digits, B digits, result-region tokens) among the group, each joined,
  /// with the boundary sentinel for an empty region.
  TokenTuple causal_input(const Seq& s, const Group& g) const override {
    const std::string text = s.text();
    const auto plus = text.find('+'), eq = text.find('=');
    if (plus == std::string::npos || eq == std::string::npos) {
      throw FormatError("malformed 1-line addition: " + text);
    }
    std::string parts[3];
    for (auto i : g) {
      if (i >= text.size()) continue;
      const int region = i < plus ? 0 : (i > plus && i < eq) ? 1 : i > eq ? 2 : -1;
      if (region >= 0) parts[region] += text[i];
    }
    TokenTuple x;
    for (auto& p : parts) x.push_back(p.empty() ? kBoundary : p);
    return x;
  }

  /// (a, b, marker) -> new marker followed by the column digit.
  Token causal(const TokenTuple& x) const override {
    auto digit = [&](const Token& t) {
      if (t == kBoundary) return 0;
      if (!is_digit(t)) throw DomainError("not a digit: " + t);
      return t[0] - '0';
    };
    if (x.size() != 3 || (x[2] != "?" && x[2] != "c")) {
      throw DomainError("1-line addition input " + join(x, " ") + " outside domain");
    }
    const int sum = digit(x[0]) + digit(x[1]) + (x[2] == "c" ? 1 : 0);
    return std::string(1, sum >= 10 ? 'c' : '?') + static_cast<char>('0' + sum % 10);
  }

  /// Replaces the marker with the step output; on the last column the
  /// marker becomes the leading digit (or disappears).
  Seq writeback(const Seq& s, const std::vector<Group>& gs,
                const std::vector<Token>& outs) const override {
    if (gs.empty()) return s;
    auto st = Add1State::parse(s.text());
    if (!st.pending()) throw FormatError("no pending marker: " + s.text());
    const Token& out = outs.front();
    if (out.size() != 2 || (out[0] != '?' && out[0] != 'c') || !is_digit(out[1])) {
      throw FormatError("bad 1-line addition step output: " + out);
    }
    const bool last = std::max(st.a.size(), st.b.size()) <= st.settled() + 1;
    std::string head = out;
    if (last) head = std::string(out[0] == 'c' ? "1" : "") + out[1];
    std::string text = s.text();
    text.replace(st.marker_pos(), 1, head);
    return Seq::line(text);
  }

  bool finished(const Seq& s) const override {
    try {
      return !Add1State::parse(s.text()).pending();
    } catch (const FormatError&) {
      return false;
    }
  }

  std::size_t budget(const Seq& instance) const override {
    const auto st = Add1State::parse(instance.text());
    return std::max(st.a.size(), st.b.size());
  }

  std::string answer_text(const Seq& s) const override {
    const std::string t = s.text();
    const auto eq = t.find('=');
    return eq == std::string::npos ? t : t.substr(eq + 1);
  }

  std::string oracle_answer(const Seq& instance) const override {
    const auto st = Add1State::parse(instance.text());
    return decimal_add(st.a, st.b);
  }

  static Seq make(const std::string& a, const std::string& b) {
    return Seq::line(a + "+" + b + "=?");
  }

  Seq sample(const SampleRange& r, Rng& rng) const override {
    auto a = random_operand(r, rng);
    return make(a, random_operand(r, rng));
  }
  Seq sample_level(std::size_t digits, Rng& rng) const override {
    auto a = random_decimal_exact(digits, rng);
    return make(a, random_decimal_exact(digits, rng));
  }
  Seq parse_instance(const std::string& text) const override {
    const std::string t = text.find('=') == std::string::npos ? text + "=?" : text;
    Add1State::parse(t);
    return Seq::line(t);
  }
};

}  // namespace lengthgen
