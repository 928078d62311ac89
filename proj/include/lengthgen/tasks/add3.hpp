#pragma once

// 3-line addition on a column grid: A over B over the partial result, all
// right-aligned, one column wider than the longer operand so the final
// carry has room. The result line starts as a lone '?' in the last column.
//
// A step reads the marker column and its left neighbour and writes the
// column digit plus whatever the neighbour's result cell becomes: the next
// marker, or the leading '1' / a blank once the operands are exhausted.

#include <string>
#include <vector>

#include "lengthgen/tasks/common.hpp"

namespace lengthgen {

class Add3Task : public SymbolicTask {
 public:
  std::string id() const override { return "add3"; }

  static Seq make(const std::string& a, const std::string& b) {
    const std::size_t w = std::max(a.size(), b.size()) + 1;
    const std::vector<std::string> lines{std::string(w - a.size(), ' ') + a,
                                         std::string(w - b.size(), ' ') + b,
                                         std::string(w - 1, ' ') + "?"};
    return Seq::grid(lines);
  }

  static std::optional<std::size_t> marker_column(const Seq& s) {
    check(s);
    for (std::size_t c = 0; c < s.size(); ++c) {
      const char r = s[c][2];
      if (r == '?' || r == 'c') return c;
    }
    return std::nullopt;
  }

  Mask oracle_mask(const Seq& s) const override {
    Mask m(s.size(), false);
    const auto c = marker_column(s);
    if (!c) return m;
    if (*c == 0) throw FormatError("marker in the carry column");
    m[*c - 1] = m[*c] = true;
    return m;
  }

  std::vector<Group> groups(const Seq&, const Mask& m) const override {
    return marked_spans(m);
  }

  Token role(const Token& t) const override {
    Token r = t;
    for (char& ch : r) {
      if (is_digit(ch)) ch = 'd';
      else if (ch == 'c') ch = '?';
    }
    return r;
  }

  std::optional<std::size_t> declared_R() const override { return 1; }

  /// The group's columns flattened into single characters, top to bottom.
  TokenTuple causal_input(const Seq& s, const Group& g) const override {
    TokenTuple x;
    for (const auto& col : tokens_at(s, g)) {
      if (col == kBoundary) {
        x.push_back(kBoundary);
        continue;
      }
      for (char ch : col) x.emplace_back(1, ch);
    }
    return x;
  }

  /// (left column, marker column) -> (left result cell, column digit).
  Token causal(const TokenTuple& x) const override {
    auto bad = [&] {
      return DomainError("3-line addition input " + join(x, "|") + " outside domain");
    };
    if (x.size() != 6) throw bad();
    std::string left, col;
    for (std::size_t i = 0; i < 6; ++i) {
      if (x[i].size() != 1) throw bad();
      (i < 3 ? left : col) += x[i];
    }
    if ((col[2] != '?' && col[2] != 'c') || left[2] != ' ') throw bad();
    auto digit = [&](char ch) {
      if (ch == ' ') return 0;
      if (!is_digit(ch)) throw bad();
      return ch - '0';
    };
    const int sum = digit(col[0]) + digit(col[1]) + (col[2] == 'c' ? 1 : 0);
    const bool more = is_digit(left[0]) || is_digit(left[1]);
    if (!more && (left[0] != ' ' || left[1] != ' ')) throw bad();
    const char carry_cell = more ? (sum >= 10 ? 'c' : '?') : (sum >= 10 ? '1' : ' ');
    return std::string{carry_cell, static_cast<char>('0' + sum % 10)};
  }

  Seq writeback(const Seq& s, const std::vector<Group>& gs,
                const std::vector<Token>& outs) const override {
    auto lines = s.lines();
    check(s);
    for (std::size_t k = 0; k < gs.size(); ++k) {
      const Group& g = gs[k];
      if (g.size() != 2 || outs[k].size() != 2 || g[1] >= s.size()) {
        throw FormatError("3-line addition writeback needs a two-column group");
      }
      lines[2][g[0]] = outs[k][0];
      lines[2][g[1]] = outs[k][1];
    }
    return Seq::grid(lines);
  }

  bool finished(const Seq& s) const override {
    try {
      return !marker_column(s).has_value();
    } catch (const FormatError&) {
      return false;
    }
  }

  std::size_t budget(const Seq& instance) const override { return instance.size() - 1; }

  /// The result line without its padding.
  std::string answer_text(const Seq& s) const override {
    const std::string r = s.lines().back();
    const auto lo = r.find_first_not_of(' ');
    if (lo == std::string::npos) return "";
    return r.substr(lo, r.find_last_not_of(' ') - lo + 1);
  }

  std::string oracle_answer(const Seq& instance) const override {
    auto trim = [](const std::string& x) { return x.substr(x.find_first_not_of(' ')); };
    const auto lines = instance.lines();
    return decimal_add(trim(lines[0]), trim(lines[1]));
  }

  Seq sample(const SampleRange& r, Rng& rng) const override {
    auto a = random_operand(r, rng);
    return make(a, random_operand(r, rng));
  }
  Seq sample_level(std::size_t digits, Rng& rng) const override {
    auto a = random_decimal_exact(digits, rng);
    return make(a, random_decimal_exact(digits, rng));
  }
  /// Accepts "A+B".
  Seq parse_instance(const std::string& text) const override {
    const auto plus = text.find('+');
    if (plus == std::string::npos) throw FormatError("3-line addition needs \"A+B\"");
    return make(text.substr(0, plus), text.substr(plus + 1));
  }

 private:
  static void check(const Seq& s) {
    if (s.kind() != SeqKind::kGrid || s.rows() != 3) {
      throw FormatError("3-line addition needs a 3-row grid");
    }
  }
};

}  // namespace lengthgen
