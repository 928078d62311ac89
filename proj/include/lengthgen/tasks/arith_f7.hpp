#pragma once

// Arithmetic in F_7. Expressions use the minimal parentheses implied by
// precedence and left associativity, e.g. "(0+4-(2-3*6))*(4+0)". A step
// evaluates every operator whose operands are both digits; the result is
// written centred over the reduced span and the spaces are then dropped.

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lengthgen/dag.hpp"
#include "lengthgen/tasks/common.hpp"

namespace lengthgen {

inline int f7_inverse(int a) {
  // 7 is prime, so a^5 is the inverse of any nonzero a.
  int r = 1;
  for (int i = 0; i < 5; ++i) r = r * a % 7;
  return r;
}

inline int f7_apply(int a, char op, int b) {
  switch (op) {
    case '+': return (a + b) % 7;
    case '-': return ((a - b) % 7 + 7) % 7;
    case '*': return a * b % 7;
    case '/':
      if (b == 0) throw DomainError("division by zero in F7");
      return a * f7_inverse(b) % 7;
    default: throw DomainError(std::string("unknown operator '") + op + "'");
  }
}

inline bool is_f7_op(char c) { return c == '+' || c == '-' || c == '*' || c == '/'; }
inline int f7_precedence(char op) { return op == '+' || op == '-' ? 1 : 2; }

/// Expression tree with source spans. Leaves hold a digit in `value`.
struct F7Expr {
  struct Node {
    char op = 0;  // 0 for leaves
    int value = 0;
    int left = -1, right = -1;
    std::size_t lo = 0, hi = 0;  // inclusive span, wrapping parens included
    bool paren = false;
  };
  std::vector<Node> nodes;
  int root = -1;

  bool leaf(int i) const { return nodes[i].op == 0; }

  int eval(int i) const {
    const Node& n = nodes[i];
    if (!n.op) return n.value;
    return f7_apply(eval(n.left), n.op, eval(n.right));
  }
  int eval() const { return eval(root); }

  bool has_zero_division(int i) const {
    const Node& n = nodes[i];
    if (!n.op) return false;
    if (has_zero_division(n.left) || has_zero_division(n.right)) return true;
    return n.op == '/' && eval(n.right) == 0;
  }

  /// Operators whose two operands are digits.
  std::vector<int> ready() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const Node& n = nodes[i];
      if (n.op && leaf(n.left) && leaf(n.right)) out.push_back(static_cast<int>(i));
    }
    return out;
  }

  std::string render(int i) const {
    const Node& n = nodes[i];
    if (!n.op) return std::string(1, static_cast<char>('0' + n.value));
    auto side = [&](int c, bool right) {
      std::string s = render(c);
      const Node& k = nodes[c];
      const bool wrap = k.op && (f7_precedence(k.op) < f7_precedence(n.op) ||
                                 (right && f7_precedence(k.op) == f7_precedence(n.op)));
      return wrap ? "(" + s + ")" : s;
    };
    return side(n.left, false) + n.op + side(n.right, true);
  }
  std::string render() const { return render(root); }
};

/// Recursive-descent parser; rejects redundant parentheses.
class F7Parser {
 public:
  explicit F7Parser(std::string_view text) : s_(text) {}

  F7Expr parse() {
    if (s_.empty()) throw FormatError("empty F7 expression");
    e_.root = expr();
    if (pos_ != s_.size()) fail("trailing input");
    return std::move(e_);
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw FormatError("F7 parse error at " + std::to_string(pos_) + " in \"" +
                      std::string(s_) + "\": " + why);
  }

  int binary(int lhs, char op, int rhs) {
    F7Expr::Node n;
    n.op = op;
    n.left = lhs;
    n.right = rhs;
    n.lo = e_.nodes[lhs].lo;
    n.hi = e_.nodes[rhs].hi;
    e_.nodes.push_back(n);
    return static_cast<int>(e_.nodes.size() - 1);
  }

  int expr() {
    int lhs = term();
    while (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
      const char op = s_[pos_++];
      lhs = binary(lhs, op, term());
    }
    return lhs;
  }

  int term() {
    int lhs = factor();
    while (pos_ < s_.size() && (s_[pos_] == '*' || s_[pos_] == '/')) {
      const char op = s_[pos_++];
      lhs = binary(lhs, op, factor());
    }
    return lhs;
  }

  int factor() {
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c >= '0' && c <= '6') {
      F7Expr::Node n;
      n.value = c - '0';
      n.lo = n.hi = pos_++;
      e_.nodes.push_back(n);
      return static_cast<int>(e_.nodes.size() - 1);
    }
    if (c == '(') {
      const std::size_t open = pos_++;
      const int inner = expr();
      if (pos_ >= s_.size() || s_[pos_] != ')') fail("expected ')'");
      auto& n = e_.nodes[inner];
      if (!n.op || n.paren) fail("redundant parentheses");
      n.paren = true;
      n.lo = open;
      n.hi = pos_++;
      return inner;
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  F7Expr e_;
};

inline F7Expr parse_f7(std::string_view text) { return F7Parser(text).parse(); }

/// Causal function on (a, op, b) or ((, a, op, b, )), boundary-padded.
inline Token f7_causal(const TokenTuple& x) {
  TokenTuple core;
  for (const auto& t : x) {
    if (t != kBoundary) core.push_back(t);
  }
  if (core.size() == 5 && core[0] == "(" && core[4] == ")") {
    core = {core[1], core[2], core[3]};
  }
  auto digit = [](const Token& t) { return t.size() == 1 && t[0] >= '0' && t[0] <= '6'; };
  if (core.size() != 3 || !digit(core[0]) || !digit(core[2]) || core[1].size() != 1 ||
      !is_f7_op(core[1][0])) {
    throw DomainError("F7 causal input " + join(x, " ") + " is not a ready operation");
  }
  return std::string(1, static_cast<char>('0' + f7_apply(core[0][0] - '0', core[1][0],
                                                          core[2][0] - '0')));
}

// ---------------------------------------------------------------------------
// DAG view: digits and operators are input vertices; each operation is a
// causal vertex reading (left, op, right).

inline ReasoningDag f7_to_dag(const F7Expr& e) {
  ReasoningDag g;
  std::function<std::size_t(int)> build = [&](int i) -> std::size_t {
    const auto& n = e.nodes[i];
    if (!n.op) return g.add_input(std::string(1, static_cast<char>('0' + n.value)));
    const auto l = build(n.left);
    const auto o = g.add_input(std::string(1, n.op));
    const auto r = build(n.right);
    return g.add_causal({l, o, r});
  };
  build(e.root);
  return g;
}

/// Inverse of f7_to_dag for a single-sink expression DAG.
inline F7Expr dag_to_f7(const ReasoningDag& g) {
  const auto sinks = g.sinks();
  if (sinks.size() != 1) throw FormatError("expression DAG needs exactly one sink");
  F7Expr e;
  std::function<int(std::size_t)> build = [&](std::size_t v) -> int {
    F7Expr::Node n;
    if (g.s(v).empty()) {
      const Token& t = g.value(v);
      if (!(t.size() == 1 && t[0] >= '0' && t[0] <= '6')) {
        throw FormatError("expression leaf is not an F7 digit");
      }
      n.value = t[0] - '0';
    } else {
      const auto& in = g.s(v);
      if (in.size() != 3) throw FormatError("operation vertex needs three inputs");
      n.op = g.value(in[1])[0];
      n.left = build(in[0]);
      n.right = build(in[2]);
    }
    e.nodes.push_back(n);
    return static_cast<int>(e.nodes.size() - 1);
  };
  e.root = build(sinks.front());
  return e;
}

inline CausalFn f7_dag_causal() {
  return [](const TokenTuple& x) { return f7_causal(x); };
}

// ---------------------------------------------------------------------------

class ArithF7Task : public SymbolicTask {
 public:
  static constexpr std::size_t kArity = 5;

  std::string id() const override { return "arith_f7"; }

  Mask oracle_mask(const Seq& s) const override {
    Mask m(s.size(), false);
    if (s.size() <= 1) return m;
    const F7Expr e = parse_f7(s.text());
    for (int i : e.ready()) {
      for (std::size_t p = e.nodes[i].lo; p <= e.nodes[i].hi; ++p) m[p] = true;
    }
    return m;
  }

  std::vector<Group> groups(const Seq&, const Mask& m) const override {
    return marked_spans(m);
  }

  Token role(const Token& t) const override {
    if (t.size() != 1) return t;
    const char c = t[0];
    if (is_digit(c)) return "d";
    if (c == '+' || c == '-') return "a";
    if (c == '*' || c == '/') return "m";
    return t;
  }

  std::optional<std::size_t> declared_R() const override { return 4; }

  TokenTuple causal_input(const Seq& s, const Group& g) const override {
    TokenTuple x = tokens_at(s, g);
    while (x.size() < kArity) x.push_back(kBoundary);
    return x;
  }

  Token causal(const TokenTuple& x) const override { return f7_causal(x); }

  Seq writeback(const Seq& s, const std::vector<Group>& gs,
                const std::vector<Token>& outs) const override {
    std::string out = s.text();
    for (std::size_t k = 0; k < gs.size(); ++k) {
      const Group& g = gs[k];
      if (g.empty()) continue;
      const std::size_t lo = g.front(), hi = g.back();
      if (hi >= out.size()) throw FormatError("group outside sequence");
      for (std::size_t p = lo; p <= hi; ++p) out[p] = ' ';
      if (outs[k].size() != 1) throw FormatError("F7 result must be one token");
      out[lo + (hi - lo) / 2] = outs[k][0];
    }
    return Seq::line(out);
  }

  Seq compact(const Seq& written) const override {
    std::string t = written.text();
    t.erase(std::remove(t.begin(), t.end(), ' '), t.end());
    return Seq::line(t);
  }

  bool finished(const Seq& s) const override { return s.size() <= 1; }
  std::size_t budget(const Seq& instance) const override { return instance.size(); }

  std::string oracle_answer(const Seq& instance) const override {
    return std::string(1, static_cast<char>('0' + parse_f7(instance.text()).eval()));
  }

  Seq sample(const SampleRange& r, Rng& rng) const override {
    return Seq::line(sample_expression(r.bound, rng).render());
  }
  Seq sample_level(std::size_t level, Rng& rng) const override {
    return Seq::line(sample_expression(level, rng).render());
  }
  Seq parse_instance(const std::string& text) const override {
    parse_f7(text);
    return Seq::line(text);
  }

  /// Uniformly random operator tree with a random operator count, rejected
  /// until the rendered length lies in [3, L) and no division by zero occurs.
  static F7Expr sample_expression(std::size_t L, Rng& rng) {
    if (L < 4) throw std::invalid_argument("F7 length bound must be at least 4");
    const std::size_t max_ops = std::max<std::size_t>(1, (L - 2) / 2);
    std::uniform_int_distribution<std::size_t> ops(1, max_ops);
    for (;;) {
      const std::size_t n = ops(rng);
      for (int attempt = 0; attempt < 64; ++attempt) {
        F7Expr e;
        e.root = build_uniform(e, n, rng);
        const std::string text = e.render();
        if (text.size() < 3 || text.size() >= L) continue;
        if (e.has_zero_division(e.root)) continue;
        return parse_f7(text);  // re-parse so spans are filled in
      }
    }
  }

 private:
  static double catalan(std::size_t n) {
    static std::vector<double> c{1.0};
    while (c.size() <= n) {
      const std::size_t k = c.size();
      double s = 0.0;
      for (std::size_t i = 0; i < k; ++i) s += c[i] * c[k - 1 - i];
      c.push_back(s);
    }
    return c[n];
  }

  // Left subtree size k is drawn with probability C_k C_{n-1-k} / C_n, which
  // makes every tree shape with n operators equally likely.
  static int build_uniform(F7Expr& e, std::size_t n, Rng& rng) {
    static constexpr std::array<char, 4> kOps{'+', '-', '*', '/'};
    F7Expr::Node node;
    if (n == 0) {
      node.value = static_cast<int>(std::uniform_int_distribution<int>(0, 6)(rng));
      e.nodes.push_back(node);
      return static_cast<int>(e.nodes.size() - 1);
    }
    std::uniform_real_distribution<double> u(0.0, catalan(n));
    double x = u(rng);
    std::size_t k = 0;
    for (; k + 1 < n; ++k) {
      x -= catalan(k) * catalan(n - 1 - k);
      if (x < 0) break;
    }
    node.op = kOps[std::uniform_int_distribution<std::size_t>(0, 3)(rng)];
    node.left = build_uniform(e, k, rng);
    node.right = build_uniform(e, n - 1 - k, rng);
    e.nodes.push_back(node);
    return static_cast<int>(e.nodes.size() - 1);
  }
};

}  // namespace lengthgen
