#include <gtest/gtest.h>

#include <random>

#include "lengthgen/dag.hpp"
#include "lengthgen/mdp.hpp"
#include "lengthgen/tasks/arith_f7.hpp"

using namespace lengthgen;

namespace {

// Mod-7 arithmetic with the inverse found by search.
int mod7(int op_a, char op, int b) {
  switch (op) {
    case '+': return (op_a + b) % 7;
    case '-': return ((op_a - b) % 7 + 7) % 7;
    case '*': return op_a * b % 7;
    default:
      for (int inv = 1; inv < 7; ++inv) {
        if (b * inv % 7 == 1) return op_a * inv % 7;
      }
      throw std::logic_error("no inverse");
  }
}

StepFn f7_step() {
  return [](const Token& y, const TokenTuple& x) {
    return std::to_string(mod7(std::stoi(y), x[0][0], std::stoi(x[1])));
  };
}

StepFn int_step() {
  return [](const Token& y, const TokenTuple& x) {
    const long a = std::stol(y), b = std::stol(x[1]);
    return std::to_string(x[0] == "*" ? a * b : a + b);
  };
}

std::vector<TokenTuple> small_xs() { return {{"a"}, {"b"}, {"c"}}; }
std::vector<Token> small_ys() { return {"0", "1", "2", "3"}; }

std::vector<TokenTuple> random_inputs(std::size_t n, Rng& rng) {
  const auto xs = small_xs();
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  std::vector<TokenTuple> out(n);
  for (auto& x : out) x = xs[pick(rng)];
  return out;
}

int int_causal(const TokenTuple& x) {
  const int a = std::stoi(x[0]), b = std::stoi(x[2]);
  return x[1] == "+" ? a + b : a * b;
}

// 2 + 3 * 4 with operators as input vertices.
ReasoningDag two_plus_three_times_four() {
  ReasoningDag g;
  const auto two = g.add_input("2"), plus = g.add_input("+"), three = g.add_input("3");
  const auto times = g.add_input("*"), four = g.add_input("4");
  const auto prod = g.add_causal({three, times, four});
  g.add_causal({two, plus, prod});
  return g;
}

}  // namespace

TEST(Mdp, F7ChainMatchesModularOracle) {
  const auto tr = rollout_expression(f7_step(), {{"0"}, {"+", "4"}, {"*", "2"}, {"-", "3"}, {"/", "6"}});
  std::vector<Token> want{"0"};
  int acc = 0;
  const std::vector<std::pair<char, int>> ops{{'+', 4}, {'*', 2}, {'-', 3}, {'/', 6}};
  for (auto [op, v] : ops) want.push_back(std::to_string(acc = mod7(acc, op, v)));
  EXPECT_EQ(tr.ys, want);
  EXPECT_EQ(tr.ys, (std::vector<Token>{"0", "4", "1", "5", "2"}));
}

TEST(Mdp, IntegerChain) {
  const auto tr = rollout_expression(int_step(), {{"3"}, {"*", "4"}, {"+", "2"}});
  EXPECT_EQ(tr.ys, (std::vector<Token>{"3", "12", "14"}));
}

TEST(Mdp, RolloutPrefixProperty) {
  Rng rng(3);
  const auto f = CausalTable::random(small_ys(), small_xs(), rng);
  const auto xs = random_inputs(40, rng);
  const auto full = rollout(as_step(f), "0", xs);
  for (std::size_t k = 0; k <= xs.size(); ++k) {
    const auto part = rollout(as_step(f), "0", {xs.begin(), xs.begin() + k});
    EXPECT_TRUE(std::equal(part.ys.begin(), part.ys.end(), full.ys.begin()));
  }
}

TEST(Mdp, TableRejectsOutOfDomainQueries) {
  Rng rng(1);
  const auto f = CausalTable::random(small_ys(), small_xs(), rng);
  EXPECT_THROW(f("9", {"a"}), DomainError);
}

TEST(Mdp, FullCoverageFitReproducesEveryRollout) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto f = CausalTable::random(small_ys(), small_xs(), rng);
    const auto f_hat = fit(f.dataset(), DiscreteMetric{}, 8.0);
    std::vector<Trajectory> probes;
    for (int i = 0; i < 5; ++i) probes.push_back({"0", random_inputs(200, rng), {}});
    const auto rep = check_recursive_equivalence(as_step(f), as_step(f_hat), probes);
    EXPECT_TRUE(rep.all_equal) << "seed " << seed;
  }
}

TEST(Mdp, AdversarialPairCausesDivergenceAtItsStep) {
  Rng rng(11);
  const auto f = CausalTable::random(small_ys(), small_xs(), rng);
  const auto xs = random_inputs(50, rng);
  const auto truth = rollout(as_step(f), "0", xs);
  // Corrupt the pair used at step 10.
  const std::size_t k = 10;
  const Token y_prev = truth.ys[k - 1];
  const TokenTuple key = CausalTable::key(y_prev, xs[k]);
  LabeledDataset<TokenTuple, Token> held;
  for (const auto& [x, y] : f.dataset().pairs) {
    if (x != key) held.add(x, y);
  }
  const Token wrong = truth.ys[k] == "0" ? "1" : "0";
  const auto f_hat = fit_adversarial(held, AdversarialSpec<TokenTuple, Token>{{{key, wrong}}},
                                     DiscreteMetric{}, 8.0);
  // The first use of the corrupted pair is where the chains part.
  std::size_t first_use = 0;
  while (CausalTable::key(first_use ? truth.ys[first_use - 1] : Token("0"), xs[first_use]) != key) {
    ++first_use;
  }
  const auto rep = check_recursive_equivalence(as_step(f), as_step(f_hat), {{"0", xs, {}}});
  EXPECT_FALSE(rep.all_equal);
  ASSERT_TRUE(rep.first_divergence[0].has_value());
  EXPECT_EQ(*rep.first_divergence[0], first_use);
}

TEST(Dag, EvaluateTwoPlusThreeTimesFour) {
  const auto g = evaluate(two_plus_three_times_four(),
                          [](const TokenTuple& x) { return std::to_string(int_causal(x)); });
  EXPECT_EQ(g.value(g.sinks().front()), "14");
}

TEST(Dag, CoInputsAndNeighbourhoods) {
  const auto g = two_plus_three_times_four();
  EXPECT_EQ(g.s(5), (std::vector<std::size_t>{2, 3, 4}));
  EXPECT_EQ(g.t(2), (std::vector<std::size_t>{5}));
  EXPECT_EQ(co_inputs(g, 2), (std::set<std::size_t>{2, 3, 4}));
  EXPECT_TRUE(co_inputs(g, 6).empty());
  EXPECT_EQ(g.max_arity(), 3u);
}

TEST(Dag, TopologicalOrderRespectsEdges) {
  const auto g = two_plus_three_times_four();
  const auto order = topo_order(g);
  std::vector<std::size_t> pos(g.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  for (std::size_t v = 0; v < g.size(); ++v) {
    for (auto w : g.t(v)) EXPECT_LT(pos[v], pos[w]);
  }
}

TEST(Dag, CycleIsReported) {
  ReasoningDag g;
  const auto a = g.add_input("1");
  const auto b = g.add_causal({a});
  const auto c = g.add_causal({b});
  g.add_edge(c, b);
  EXPECT_THROW(topo_order(g), StructureError);
}

TEST(Dag, StepwiseSolutionEqualsEvaluation) {
  auto f = [](const TokenTuple& x) { return std::to_string(int_causal(x)); };
  ReasoningDag g = two_plus_three_times_four();
  const auto frontier0 = frontier(g);
  EXPECT_EQ(frontier0.W, (std::vector<std::size_t>{5}));
  EXPECT_EQ(frontier0.U, (std::vector<std::size_t>{2, 3, 4}));
  while (!solved(g)) g = step(std::move(g), f).first;
  EXPECT_EQ(g.value(g.sinks().front()), "14");
  EXPECT_THROW(step(g, f), AlreadySolvedError);
}

TEST(Dag, F7ExampleExpression) {
  const auto e = parse_f7("(0+4-(2-3*6))*(4+0)");
  EXPECT_EQ(e.eval(), 3);
  const auto g = evaluate(f7_to_dag(e), f7_dag_causal());
  EXPECT_EQ(g.value(g.sinks().front()), "3");
}

TEST(Dag, F7EncodingIsWellDefined) {
  ArithF7Task task;
  std::vector<ReasoningDag> probes;
  for (std::uint64_t i = 0; i < 50; ++i) {
    Rng rng(i);
    probes.push_back(f7_to_dag(parse_f7(task.sample_level(30, rng).text())));
  }
  const auto rep = is_well_defined<F7Expr>(
      [](const ReasoningDag& g) { return dag_to_f7(g); },
      [](const F7Expr& e) { return f7_to_dag(e); }, probes);
  EXPECT_TRUE(rep.ok());
}

TEST(Dag, RandomDagStepwiseMatchesEvaluate) {
  Rng rng(5);
  const std::vector<Token> alpha{"0", "1", "2"};
  auto f = [](const TokenTuple& x) {
    int s = 0;
    for (const auto& t : x) s = s * 3 + std::stoi(t);
    return std::to_string(s % 3);
  };
  for (int trial = 0; trial < 5; ++trial) {
    ReasoningDag g = random_dag(10, 30, 2, alpha, rng);
    const auto sinks = g.sinks();
    const ReasoningDag full = evaluate(g, f);
    while (!solved(g)) g = step(std::move(g), f).first;
    // Sinks feed nothing, so stepping never retires them.
    for (auto v : sinks) {
      ASSERT_TRUE(g.alive(v));
      EXPECT_EQ(g.value(v), full.value(v));
    }
  }
}
