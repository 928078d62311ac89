#pragma once

// 1-line multiplication in two stages. Stage 1 rewrites "a*b=?" into b
// copies of a, one per step ("a*b=a+a+?"), dropping the '?' with the last
// copy. Stage 2 folds the two leftmost summands per step.

#include <string>
#include <vector>

#include "lengthgen/tasks/common.hpp"

namespace lengthgen {

struct Mul1State {
  std::string a, b, rhs;
  std::size_t eq = 0;

  static Mul1State parse(const std::string& text) {
    Mul1State st;
    const auto star = text.find('*');
    st.eq = text.find('=');
    if (star == std::string::npos || st.eq == std::string::npos || st.eq < star) {
      throw FormatError("1-line multiplication needs \"a*b=...\": " + text);
    }
    st.a = text.substr(0, star);
    st.b = text.substr(star + 1, st.eq - star - 1);
    st.rhs = text.substr(st.eq + 1);
    auto digits = [](const std::string& s) {
      return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return is_digit(c); });
    };
    if (!digits(st.a) || !digits(st.b) || st.rhs.empty()) {
      throw FormatError("malformed 1-line multiplication: " + text);
    }
    for (const auto& term : st.summands()) {
      if (term != "?" && !digits(term)) {
        throw FormatError("malformed summand in 1-line multiplication: " + text);
      }
    }
    return st;
  }

  std::vector<std::string> summands() const {
    std::vector<std::string> out(1);
    for (char c : rhs) {
      if (c == '+') out.emplace_back();
      else out.back().push_back(c);
    }
    return out;
  }

  bool expanding() const { return rhs.back() == '?'; }
  bool done() const { return rhs.find('+') == std::string::npos && !expanding(); }
};

class Mul1Task : public SymbolicTask {
 public:
  std::string id() const override { return "mul1"; }

  /// Stage 1 reads the whole statement (b and every copy so far); stage 2
  /// reads the two leftmost summands and the '+' between them.
  Mask oracle_mask(const Seq& s) const override {
    const auto st = Mul1State::parse(s.text());
    Mask m(s.size(), false);
    if (st.done()) return m;
    if (st.expanding()) {
      std::fill(m.begin(), m.end(), true);
      return m;
    }
    const auto terms = st.summands();
    const std::size_t lo = st.eq + 1;
    const std::size_t hi = lo + terms[0].size() + 1 + terms[1].size();
    for (std::size_t i = lo; i < hi; ++i) m[i] = true;
    return m;
  }

  std::vector<Group> groups(const Seq&, const Mask& m) const override {
    return single_group(m);
  }

  Token role(const Token& t) const override { return is_digit(t) ? "d" : t; }

  std::optional<std::size_t> declared_R() const override { return std::nullopt; }

  TokenTuple causal_input(const Seq& s, const Group& g) const override {
    return tokens_at(s, g);
  }

  Token causal(const TokenTuple& x) const override {
    std::string text;
    for (const auto& t : x) {
      if (t == kBoundary) throw DomainError("boundary inside a multiplication group");
      text += t;
    }
    if (text.find('*') != std::string::npos) {
      Mul1State st;
      try {
        st = Mul1State::parse(text);
      } catch (const FormatError&) {
        throw DomainError("multiplication input " + text + " outside domain");
      }
      if (!st.expanding()) throw DomainError("nothing to expand in " + text);
      const std::size_t copies = st.summands().size() - 1;
      const std::size_t b = std::stoul(st.b);
      if (b == 0) return "0";
      if (copies >= b) throw DomainError("too many copies in " + text);
      return copies + 1 < b ? st.a + "+?" : st.a;
    }
    const auto plus = text.find('+');
    if (plus == std::string::npos || plus == 0 || plus + 1 == text.size()) {
      throw DomainError("multiplication input " + text + " outside domain");
    }
    const std::string l = text.substr(0, plus), r = text.substr(plus + 1);
    for (char c : l + r) {
      if (!is_digit(c)) throw DomainError("multiplication input " + text + " outside domain");
    }
    return decimal_add(l, r);
  }

  /// A group ending in '?' rewrites the '?'; otherwise the group's span is
  /// replaced by the step output.
  Seq writeback(const Seq& s, const std::vector<Group>& gs,
                const std::vector<Token>& outs) const override {
    std::string text = s.text();
    for (std::size_t k = gs.size(); k-- > 0;) {
      const Group& g = gs[k];
      if (g.empty() || g.back() >= text.size()) throw FormatError("bad multiplication group");
      if (text[g.back()] == '?') {
        text.replace(g.back(), 1, outs[k]);
      } else {
        text.replace(g.front(), g.back() - g.front() + 1, outs[k]);
      }
    }
    return Seq::line(text);
  }

  bool finished(const Seq& s) const override {
    try {
      return Mul1State::parse(s.text()).done();
    } catch (const FormatError&) {
      return false;
    }
  }

  /// b expansion steps plus b - 1 folds, with one step of slack either side.
  std::size_t budget(const Seq& instance) const override {
    return 2 * std::stoul(Mul1State::parse(instance.text()).b) + 1;
  }

  std::string answer_text(const Seq& s) const override {
    const std::string t = s.text();
    const auto eq = t.find('=');
    return eq == std::string::npos ? t : t.substr(eq + 1);
  }

  std::string oracle_answer(const Seq& instance) const override {
    const auto st = Mul1State::parse(instance.text());
    return std::to_string(std::stoull(st.a) * std::stoull(st.b));
  }

  static Seq make(std::size_t a, std::size_t b) {
    return Seq::line(std::to_string(a) + "*" + std::to_string(b) + "=?");
  }

  Seq sample(const SampleRange& r, Rng& rng) const override {
    std::uniform_int_distribution<std::size_t> v(0, r.bound - 1);
    const auto a = v(rng);
    return make(a, v(rng));
  }
  /// Level n fixes the multiplier b = n.
  Seq sample_level(std::size_t level, Rng& rng) const override {
    std::uniform_int_distribution<std::size_t> v(1, 9);
    return make(v(rng), level);
  }
  Seq parse_instance(const std::string& text) const override {
    const std::string t = text.find('=') == std::string::npos ? text + "=?" : text;
    Mul1State::parse(t);
    return Seq::line(t);
  }
};

}  // namespace lengthgen
