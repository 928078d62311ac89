#pragma once

// One-dimensional ko. s_i is captured when both neighbours exist and differ
// from it; a captured element is a ko when a neighbour is captured too.
// Every captured non-ko element flips at once, until nothing changes.

#include <string>
#include <vector>

#include "lengthgen/tasks/common.hpp"

namespace lengthgen {

inline std::vector<bool> ko_captured(const std::string& s) {
  std::vector<bool> cap(s.size(), false);
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    cap[i] = s[i] != s[i - 1] && s[i] != s[i + 1];
  }
  return cap;
}

inline Mask ko_flip_mask(const std::string& s) {
  const auto cap = ko_captured(s);
  Mask m(s.size(), false);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool ko = cap[i] && ((i > 0 && cap[i - 1]) || (i + 1 < s.size() && cap[i + 1]));
    m[i] = cap[i] && !ko;
  }
  return m;
}

class KoTask : public SymbolicTask {
 public:
  std::string id() const override { return "ko"; }

  Mask oracle_mask(const Seq& s) const override {
    check(s);
    return ko_flip_mask(s.text());
  }

  std::vector<Group> groups(const Seq&, const Mask& m) const override {
    std::vector<Group> out;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i]) out.push_back({i});
    }
    return out;
  }

  std::optional<std::size_t> declared_R() const override { return 1; }

  TokenTuple causal_input(const Seq& s, const Group& g) const override {
    return tokens_at(s, g);
  }

  Token causal(const TokenTuple& x) const override {
    if (x.size() == 1 && x[0] == "0") return "1";
    if (x.size() == 1 && x[0] == "1") return "0";
    throw DomainError("ko input " + join(x, " ") + " outside domain");
  }

  Seq writeback(const Seq& s, const std::vector<Group>& gs,
                const std::vector<Token>& outs) const override {
    std::string t = s.text();
    for (std::size_t k = 0; k < gs.size(); ++k) {
      if (gs[k].size() != 1 || outs[k].size() != 1) throw FormatError("bad ko group");
      t[gs[k].front()] = outs[k][0];
    }
    return Seq::line(t);
  }

  bool finished(const Seq& s) const override {
    const Mask m = ko_flip_mask(s.text());
    return std::find(m.begin(), m.end(), true) == m.end();
  }

  std::size_t budget(const Seq& instance) const override { return instance.size(); }

  std::string oracle_answer(const Seq& instance) const override {
    std::string s = instance.text();
    for (;;) {
      const Mask m = ko_flip_mask(s);
      std::string next = s;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (m[i]) next[i] = s[i] == '0' ? '1' : '0';
      }
      if (next == s) return s;
      s = std::move(next);
    }
  }

  Seq sample(const SampleRange& r, Rng& rng) const override {
    std::uniform_int_distribution<std::size_t> len(1, r.bound);
    return sample_level(len(rng), rng);
  }
  Seq sample_level(std::size_t n, Rng& rng) const override {
    std::bernoulli_distribution bit(0.5);
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(bit(rng) ? '1' : '0');
    return Seq::line(s);
  }
  Seq parse_instance(const std::string& text) const override {
    Seq s = Seq::line(text);
    check(s);
    return s;
  }

 private:
  static void check(const Seq& s) {
    for (const auto& t : s.tokens()) {
      if (t != "0" && t != "1") throw FormatError("ko sequences are binary");
    }
  }
};

}  // namespace lengthgen
