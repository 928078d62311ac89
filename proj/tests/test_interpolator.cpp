#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "lengthgen/interpolator.hpp"

using namespace lengthgen;

namespace {

LabeledDataset<RealPoint, double> parabola() {
  LabeledDataset<RealPoint, double> d;
  d.add({0.0}, 0.0);
  d.add({1.0}, 1.0);
  d.add({2.0}, 4.0);
  return d;
}

// Direct substitution into sum_i (eps/d_i)^p y_i / sum_i (eps/d_i)^p.
double kernel_oracle(const LabeledDataset<RealPoint, double>& d, double eps, double p, double x) {
  double num = 0, den = 0;
  for (const auto& [xi, yi] : d.pairs) {
    const double w = std::pow(eps / std::abs(x - xi[0]), p);
    num += w * yi;
    den += w;
  }
  return num / den;
}

}  // namespace

TEST(Metrics, DiscreteCountsDifferingPositions) {
  DiscreteMetric m;
  EXPECT_EQ(m(TokenTuple{"a", "b", "c"}, TokenTuple{"a", "x", "c"}), 1.0);
  EXPECT_EQ(m(TokenTuple{"a"}, TokenTuple{"a", "b"}), 1.0);
  EXPECT_EQ(m(TokenTuple{"a", "b"}, TokenTuple{"a", "b"}), 0.0);
  EXPECT_EQ(m.infimum(), 1.0);
}

TEST(Metrics, EuclideanMatchesPythagoras) {
  EuclideanMetric m;
  EXPECT_DOUBLE_EQ(m(RealPoint{0, 0}, RealPoint{3, 4}), 5.0);
}

TEST(Metrics, HexfloatRoundTripIsExact) {
  for (double v : {0.1, -2.5e-300, 1.0 / 3.0, 12345.678}) {
    EXPECT_EQ(parse_hexfloat(hexfloat(v)), v);
  }
}

TEST(Metrics, RelevanceWeightsIrrelevantPositionsLightly) {
  // Label depends only on position 1.
  std::vector<TokenTuple> xs{{"a", "0", "a"}, {"b", "0", "b"}, {"a", "1", "b"}, {"b", "1", "a"}};
  std::vector<Token> ys{"x", "x", "y", "y"};
  auto m = RelevanceMetric::learn<Token>(xs, ys, std::nullopt, [](const Token& y) { return y; });
  EXPECT_EQ(m(TokenTuple{"a", "0", "a"}, TokenTuple{"a", "1", "a"}), 1.0);
  EXPECT_LT(m(TokenTuple{"a", "0", "a"}, TokenTuple{"b", "0", "a"}), 1.0);
  EXPECT_GT(m(TokenTuple{"a", "0", "a"}, TokenTuple{"b", "0", "a"}), 0.0);
}

TEST(Metrics, RelevanceTiersFavourContextNearThePivot) {
  // Pivot 2; the label is the conjunction of positions 1 and 4.
  std::vector<TokenTuple> xs;
  std::vector<Token> ys;
  for (const char* a : {"0", "1"}) {
    for (const char* b : {"0", "1"}) {
      xs.push_back({"z", a, "p", "z", b});
      ys.push_back(std::string(a) == "1" && std::string(b) == "1" ? "1" : "0");
    }
  }
  auto m = RelevanceMetric::learn<Token>(xs, ys, 2, [](const Token& y) { return y; });
  EXPECT_EQ(m.relevant().at("p"), (std::vector<std::size_t>{1, 2, 4}));
  const TokenTuple q{"z", "0", "p", "z", "0"};
  const double near = m(q, TokenTuple{"z", "1", "p", "z", "0"});
  const double far = m(q, TokenTuple{"z", "0", "p", "z", "1"});
  const double light = m(q, TokenTuple{"y", "0", "p", "y", "0"});
  // Offset 1 outweighs offset 2, which outweighs all unpicked positions.
  EXPECT_EQ(far, 1.0);
  EXPECT_EQ(near, 2.0);
  EXPECT_LT(light, 1.0);
  EXPECT_GT(m(q, TokenTuple{"z", "0", "q", "z", "0"}), near + far + light);
}

TEST(Interpolator, KernelValueMatchesDirectSubstitution) {
  const auto d = parabola();
  for (double p : {1.0, 2.0, 8.0}) {
    const auto m = fit(d, EuclideanMetric{}, p);
    EXPECT_DOUBLE_EQ(m.epsilon(), 1.0);
    EXPECT_NEAR(m.predict({1.5}), kernel_oracle(d, 1.0, p, 1.5), 1e-12) << "p=" << p;
    EXPECT_NEAR(m.predict({-0.7}), kernel_oracle(d, 1.0, p, -0.7), 1e-12) << "p=" << p;
  }
  // p = 1 at x = 1.5: weights 2/3, 2, 2.
  EXPECT_NEAR(fit(d, EuclideanMetric{}, 1.0).predict({1.5}), 10.0 / (14.0 / 3.0), 1e-12);
}

TEST(Interpolator, ExactOnTrainingPoints) {
  const auto m = fit(parabola(), EuclideanMetric{});
  EXPECT_EQ(m.predict({0.0}), 0.0);
  EXPECT_EQ(m.predict({1.0}), 1.0);
  EXPECT_EQ(m.predict({2.0}), 4.0);
}

TEST(Interpolator, RandomCategoricalDatasetsAreInterpolated) {
  Rng rng(7);
  const std::vector<Token> alpha{"a", "b", "c"};
  std::uniform_int_distribution<int> pick(0, 2), len(1, 4), size(1, 30);
  for (int trial = 0; trial < 50; ++trial) {
    LabeledDataset<TokenTuple, Token> d;
    std::set<TokenTuple> seen;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
      TokenTuple x(len(rng));
      for (auto& t : x) t = alpha[pick(rng)];
      if (seen.insert(x).second) d.add(x, alpha[pick(rng)]);
    }
    const auto m = fit(d, DiscreteMetric{}, 4.0);
    for (const auto& [x, y] : d.pairs) EXPECT_EQ(m.predict(x), y);
  }
}

TEST(Interpolator, CategoricalPicksHeaviestLabel) {
  LabeledDataset<TokenTuple, Token> d;
  d.add({"a", "a"}, "L");
  d.add({"b", "b"}, "R");
  d.add({"a", "c"}, "L");
  const auto m = fit(d, DiscreteMetric{}, 1.0);
  // Distances 1, 2, 2: masses L = 1 + 1/2, R = 1/2.
  EXPECT_EQ(m.predict({"a", "b"}), "L");
}

TEST(Interpolator, DuplicatesAreMergedAndConflictsRejected) {
  LabeledDataset<TokenTuple, Token> d;
  d.add({"a"}, "1");
  d.add({"a"}, "1");
  EXPECT_EQ(fit(d, DiscreteMetric{}).size(), 1u);
  d.add({"a"}, "2");
  EXPECT_THROW(fit(d, DiscreteMetric{}), ContradictionError);
  EXPECT_THROW(fit(LabeledDataset<TokenTuple, Token>{}, DiscreteMetric{}), std::invalid_argument);
}

TEST(Interpolator, StrictModeRefusesUnseenInputs) {
  LabeledDataset<TokenTuple, Token> d;
  d.add({"a"}, "1");
  d.add({"b"}, "2");
  const auto m = fit(d, DiscreteMetric{});
  EXPECT_EQ(m.predict({"a"}, UnseenPolicy::kStrict), "1");
  EXPECT_THROW(m.predict({"z"}, UnseenPolicy::kStrict), UnseenInputError);
  EXPECT_NO_THROW(m.predict({"z"}, UnseenPolicy::kKernel));
}

TEST(Interpolator, AdversarialPointsAreReproduced) {
  LabeledDataset<TokenTuple, Token> d;
  d.add({"a"}, "1");
  AdversarialSpec<TokenTuple, Token> spec{{{{"b"}, "9"}}};
  const auto m = fit_adversarial(d, spec, DiscreteMetric{});
  EXPECT_EQ(m.predict({"b"}), "9");
  AdversarialSpec<TokenTuple, Token> clash{{{{"a"}, "9"}}};
  EXPECT_THROW(fit_adversarial(d, clash, DiscreteMetric{}), ContradictionError);
}

TEST(Interpolator, SaveLoadRoundTripIsBitExact) {
  const auto m = fit(parabola(), EuclideanMetric{}, 3.0);
  std::stringstream ss;
  m.save(ss);
  const auto back = InterpolatingModel<RealPoint, double, EuclideanMetric>::load(ss);
  for (double x : {-3.0, 0.25, 1.5, 7.0}) EXPECT_EQ(back.predict({x}), m.predict({x}));
  EXPECT_EQ(back.epsilon(), m.epsilon());
}

TEST(Interpolator, RelevanceModelRoundTrip) {
  std::vector<TokenTuple> xs{{"1", "0"}, {"0", "0"}, {"1", "1"}};
  std::vector<Token> ys{"x", "y", "x"};
  auto metric = RelevanceMetric::learn<Token>(xs, ys, std::nullopt, [](const Token& y) { return y; });
  LabeledDataset<TokenTuple, Token> d;
  for (std::size_t i = 0; i < xs.size(); ++i) d.add(xs[i], ys[i]);
  const auto m = fit(d, metric, 8.0);
  std::stringstream ss;
  m.save(ss);
  const auto back = InterpolatingModel<TokenTuple, Token, RelevanceMetric>::load(ss);
  EXPECT_EQ(back.predict({"0", "1"}), m.predict({"0", "1"}));
  EXPECT_EQ(back.size(), 3u);
}

TEST(Interpolator, LoadRejectsGarbage) {
  std::stringstream ss("not a model\n");
  EXPECT_THROW((InterpolatingModel<RealPoint, double, EuclideanMetric>::load(ss)), FormatError);
}

TEST(Interpolator, MemoReturnsFirstComputation) {
  PredictionMemo<TokenTuple, Token> memo;
  int calls = 0;
  auto f = [&] {
    ++calls;
    return Token("v");
  };
  EXPECT_EQ(memo.get({"a"}, f), "v");
  EXPECT_EQ(memo.get({"a"}, f), "v");
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(memo.size(), 1u);
}
