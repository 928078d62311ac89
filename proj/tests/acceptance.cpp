// Acceptance run: one line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "lengthgen/dag.hpp"
#include "lengthgen/harness.hpp"
#include "lengthgen/mdp.hpp"

using namespace lengthgen;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string accuracies(const AccuracyReport& rep) {
  std::string out;
  for (const auto& r : rep.ranges) {
    if (!out.empty()) out += " ";
    out += r.range.label + "=" + fmt(r.accuracy());
  }
  return out;
}

SampleRange bound(std::size_t b) { return {std::to_string(b), b}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Every ready F7 operation, bare and parenthesized, minus division by zero.
std::size_t f7_domain_size() {
  std::size_t n = 0;
  for (int a = 0; a < 7; ++a) {
    for (char op : std::string("+-*/")) {
      for (int b = 0; b < 7; ++b) n += op == '/' && b == 0 ? 0 : 2;
    }
  }
  return n;
}

Outcome f7_generalization() {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = default_config("arith_f7");
  cfg.tests = {bound(30), bound(40), bound(50), bound(60), bound(100)};
  const auto task = make_task(cfg.task);
  const auto models = train_models(*task, cfg);
  AccuracyReport rep;
  rep.config = cfg;
  bool ok = models.f_hat.size() == f7_domain_size();
  for (std::size_t k = 0; k < cfg.tests.size(); ++k) {
    rep.ranges.push_back(evaluate_range(*task, models, cfg.tests[k], cfg.test_instances, cfg.seed,
                                        k, false, cfg.threads));
    ok = ok && rep.ranges.back().accuracy() == 1.0;
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 120.0, accuracies(rep) + " causal_points=" + std::to_string(models.f_hat.size()) +
                                  "/" + std::to_string(f7_domain_size()) + " time=" + fmt(secs) + "s"};
}

Outcome add3_generalization() {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = default_config("add3");
  cfg.tests = {bound(7), bound(9), bound(20), bound(21)};
  const auto rep = run_experiment(cfg);
  bool ok = true;
  for (const auto& r : rep.ranges) ok = ok && r.accuracy() == 1.0;
  const double secs = seconds_since(t0);
  return {ok && secs < 120.0, accuracies(rep) + " time=" + fmt(secs) + "s"};
}

Outcome add1_failure() {
  auto cfg = default_config("add1");
  cfg.tests = {bound(5), bound(7), bound(9), bound(20)};
  const auto rep = run_experiment(cfg);
  const auto& r = rep.ranges;
  const bool ok = r[0].accuracy() == 1.0 && r[1].accuracy() < 1.0 && r[2].accuracy() < 1.0 &&
                  r[3].accuracy() < 0.9;
  return {ok, accuracies(rep) + " window=" + std::to_string(rep.model_info["window_before"].get<std::size_t>()) +
                  "+1+" + std::to_string(rep.model_info["window_after"].get<std::size_t>())};
}

Outcome mul1_failure() {
  auto cfg = default_config("mul1");
  cfg.tests = {bound(5), bound(10)};
  const auto rep = run_experiment(cfg);
  const bool ok = rep.ranges[0].accuracy() == 1.0 && rep.ranges[1].accuracy() < 1.0;
  return {ok, accuracies(rep)};
}

Outcome arctan_decay() {
  auto cfg = default_config("arctan");
  const auto rep = run_experiment(cfg);
  const auto& r = rep.ranges;  // train annulus, then Test 1..5
  bool ok = r.size() == 6 && cfg.train_instances == 10000;
  for (std::size_t k = 2; k < r.size(); ++k) ok = ok && r[k].accuracy() <= r[k - 1].accuracy();
  ok = ok && r.back().accuracy() <= r.front().accuracy() - 0.15;
  return {ok, accuracies(rep)};
}

Outcome r_measurements() {
  const auto f7 = estimate_R(*make_task("arith_f7"), {10, 20, 40, 60, 100}, 40, 11);
  const auto add3 = estimate_R(*make_task("add3"), {2, 5, 10, 15, 20}, 20, 11);
  const auto add1 = estimate_R(*make_task("add1"), {2, 4, 6, 8, 10, 12}, 10, 11);
  const auto mul1 = estimate_R(*make_task("mul1"), {2, 3, 4, 5, 6, 7, 8, 9}, 10, 11);
  auto seq = [](const RMeasurement& m) {
    std::string s;
    for (const auto& [lvl, r] : m.per_level) s += (s.empty() ? "" : ",") + std::to_string(r);
    return s;
  };
  const bool ok = f7.overall_max == 4 && !f7.diverging && add3.overall_max == 1 &&
                  !add3.diverging && add1.diverging && mul1.diverging;
  return {ok, "f7=" + std::to_string(f7.overall_max) + " add3=" + std::to_string(add3.overall_max) +
                  " add1=[" + seq(add1) + "] mul1=[" + seq(mul1) + "]"};
}

TokenTuple random_tuple(std::size_t len, const std::vector<Token>& alpha, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, alpha.size() - 1);
  TokenTuple t(len);
  for (auto& x : t) x = alpha[pick(rng)];
  return t;
}

Outcome lemma1() {
  const std::vector<Token> alpha{"a", "b", "c", "d"};
  std::size_t exact = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    Rng rng(derive_seed(77, 0, i));
    bool all = true;
    if (i % 2 == 0) {
      LabeledDataset<TokenTuple, Token> d;
      std::set<TokenTuple> seen;
      std::uniform_int_distribution<std::size_t> n(1, 60), len(1, 5);
      for (std::size_t k = n(rng); k > 0; --k) {
        auto x = random_tuple(len(rng), alpha, rng);
        if (seen.insert(x).second) d.add(x, random_tuple(1, alpha, rng)[0]);
      }
      const auto m = fit(d, DiscreteMetric{}, 1.0 + static_cast<double>(i % 7));
      for (const auto& [x, y] : d.pairs) all = all && m.predict(x) == y;
    } else {
      LabeledDataset<RealPoint, double> d;
      std::uniform_real_distribution<double> u(-5, 5);
      std::uniform_int_distribution<std::size_t> n(1, 60);
      for (std::size_t k = n(rng); k > 0; --k) d.add({u(rng), u(rng)}, u(rng));
      const auto m = fit(d, EuclideanMetric{}, 1.0 + static_cast<double>(i % 9));
      for (const auto& [x, y] : d.pairs) all = all && m.predict(x) == y;
    }
    exact += all;
  }

  // Adversarial: the full domain minus m error points, which get wrong labels.
  std::vector<TokenTuple> domain;
  for (const auto& a : alpha) {
    for (const auto& b : alpha) {
      for (const auto& c : alpha) domain.push_back({a, b, c});
    }
  }
  auto oracle = [&](const TokenTuple& x) {
    int s = 0;
    for (const auto& t : x) s += t[0] - 'a';
    return alpha[s % 4];
  };
  std::string counts;
  bool adv_ok = true;
  for (std::size_t m : {1u, 5u, 20u}) {
    Rng rng(derive_seed(78, m, 0));
    auto order = domain;
    std::shuffle(order.begin(), order.end(), rng);
    LabeledDataset<TokenTuple, Token> d;
    AdversarialSpec<TokenTuple, Token> spec;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const Token y = oracle(order[k]);
      if (k < m) {
        spec.err_points.push_back({order[k], y == "a" ? "b" : "a"});
      } else {
        d.add(order[k], y);
      }
    }
    const auto f_hat = fit_adversarial(d, spec, DiscreteMetric{}, 8.0);
    std::size_t disagreements = 0;
    for (const auto& x : domain) disagreements += f_hat.predict(x) != oracle(x);
    adv_ok = adv_ok && disagreements == m;
    counts += (counts.empty() ? "" : ",") + std::to_string(disagreements);
  }
  return {exact == 1000 && adv_ok,
          "exact=" + std::to_string(exact) + "/1000 disagreements(m=1,5,20)=" + counts};
}

Outcome recursion() {
  const std::vector<Token> ys{"0", "1", "2", "3"};
  const std::vector<TokenTuple> xs{{"a"}, {"b"}, {"c"}};
  std::size_t mdp_equal = 0, dag_equal = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng(derive_seed(90, 0, i));
    const auto f = CausalTable::random(ys, xs, rng);
    const auto f_hat = fit(f.dataset(), DiscreteMetric{}, 8.0);
    std::vector<Trajectory> probes;
    std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
    for (int p = 0; p < 5; ++p) {
      Trajectory t;
      for (int n = 0; n < 200; ++n) t.xs.push_back(xs[pick(rng)]);
      probes.push_back(t);
    }
    mdp_equal += check_recursive_equivalence(as_step(f), as_step(f_hat), probes).all_equal;

    // DAG: causal vertices of arity 2 over the output alphabet.
    LabeledDataset<TokenTuple, Token> gd;
    std::uniform_int_distribution<std::size_t> out(0, ys.size() - 1);
    for (const auto& a : ys) {
      for (const auto& b : ys) gd.add({a, b}, ys[out(rng)]);
    }
    const auto g_hat = fit(gd, DiscreteMetric{}, 8.0);
    std::map<TokenTuple, Token> g_true(gd.pairs.begin(), gd.pairs.end());
    const ReasoningDag dag = random_dag(20, 80, 2, ys, rng);
    const auto truth = evaluate(dag, [&](const TokenTuple& x) { return g_true.at(x); });
    ReasoningDag stepped = dag;
    while (!solved(stepped)) {
      stepped = step(std::move(stepped), [&](const TokenTuple& x) { return g_hat.predict(x); }).first;
    }
    bool same = canonical_form(truth) ==
                canonical_form(evaluate(dag, [&](const TokenTuple& x) { return g_hat.predict(x); }));
    for (auto v : dag.sinks()) same = same && stepped.value(v) == truth.value(v);
    dag_equal += same;
  }

  // Negative case: hold out one pair a probe uses and fit a wrong value there.
  Rng rng(derive_seed(91, 0, 0));
  const auto f = CausalTable::random(ys, xs, rng);
  Trajectory probe;
  for (int n = 0; n < 200; ++n) probe.xs.push_back(xs[n % 3]);
  const auto truth = rollout(as_step(f), "0", probe.xs);
  const TokenTuple key = CausalTable::key(truth.ys[49], probe.xs[50]);
  LabeledDataset<TokenTuple, Token> held;
  for (const auto& [x, y] : f.dataset().pairs) {
    if (x != key) held.add(x, y);
  }
  const Token right = f(key[0], {key[1]});
  const auto f_bad = fit_adversarial(
      held, AdversarialSpec<TokenTuple, Token>{{{key, right == "0" ? "1" : "0"}}}, DiscreteMetric{}, 8.0);
  const auto rep = check_recursive_equivalence(as_step(f), as_step(f_bad), {probe});
  const bool diverged = !rep.all_equal && rep.first_divergence[0] && *rep.first_divergence[0] <= 50;
  return {mdp_equal == 100 && dag_equal == 100 && diverged,
          "mdp=" + std::to_string(mdp_equal) + "/100 dag=" + std::to_string(dag_equal) +
              "/100 divergence_at=" +
              (rep.first_divergence[0] ? std::to_string(*rep.first_divergence[0]) : "none")};
}

// Ko fixpoint computed from the rule text, independent of the task code.
std::string ko_fixpoint(std::string s) {
  for (;;) {
    const std::size_t n = s.size();
    std::vector<int> cap(n, 0);
    for (std::size_t i = 1; i + 1 < n; ++i) cap[i] = s[i] != s[i - 1] && s[i] != s[i + 1];
    std::string next = s;
    for (std::size_t i = 0; i < n; ++i) {
      const bool protected_ko = (i > 0 && cap[i - 1]) || (i + 1 < n && cap[i + 1]);
      if (cap[i] && !protected_ko) next[i] = s[i] == '0' ? '1' : '0';
    }
    if (next == s) return s;
    s = next;
  }
}

std::vector<std::string> bitstrings(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t bits = 0; bits < (1u << n); ++bits) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s.push_back((bits >> i) & 1 ? '1' : '0');
    out.push_back(s);
  }
  return out;
}

Outcome ko() {
  KoTask task;
  const std::vector<Seq> pair{Seq::line("11010"), Seq::line("11011")};
  bool ambiguous = false;
  try {
    fit_window_predictor(task, WindowShape::of_width(4), pair);
  } catch (const AmbiguityError& e) {
    ambiguous = join(e.window) == "1101";
  }

  // Train on every state reached from strings up to length 8.
  std::vector<Seq> corpus;
  LabeledDataset<TokenTuple, Token> causal;
  std::set<TokenTuple> seen;
  for (std::size_t n = 1; n <= 8; ++n) {
    for (const auto& s : bitstrings(n)) {
      const auto ep = task.episode(Seq::line(s));
      for (const auto& st : ep.steps) {
        corpus.push_back(st.input);
        for (const auto& g : task.groups(st.input, task.oracle_mask(st.input))) {
          auto x = task.causal_input(st.input, g);
          if (seen.insert(x).second) causal.add(x, task.causal(x));
        }
      }
      corpus.push_back(ep.answer);
    }
  }
  bool clean = true;
  WindowModel wm;
  try {
    fit_window_predictor(task, WindowShape::of_width(5), pair);
    wm = fit_window_predictor(task, WindowShape::of_width(5), corpus);
  } catch (const AmbiguityError&) {
    clean = false;
  }
  std::size_t checked = 0, matched = 0;
  if (clean) {
    const auto f_hat = fit_causal(causal, 32.0);
    const auto plugins = learned_plugins(task, wm, f_hat, UnseenPolicy::kStrict);
    for (std::size_t n = 1; n <= 16; ++n) {
      for (const auto& s : bitstrings(n)) {
        const Seq inst = Seq::line(s);
        const auto tr = solve(task, inst, plugins, StopRule::for_instance(task, inst));
        ++checked;
        matched += tr.status == SolveStatus::kAnswered && tr.final_state.text() == ko_fixpoint(s);
      }
    }
  }
  return {ambiguous && clean && checked > 0 && matched == checked,
          std::string("width4_ambiguous=") + (ambiguous ? "yes" : "no") +
              " width5_clean=" + (clean ? "yes" : "no") + " matched=" + std::to_string(matched) +
              "/" + std::to_string(checked)};
}

Outcome formats() {
  std::size_t ok = 0, total = 0;
  auto check = [&](const std::vector<std::string>& got, const std::vector<std::string>& want) {
    ++total;
    ok += got == want;
  };
  auto io = [](const Episode& ep, const std::function<std::string(const Seq&)>& show) {
    std::vector<std::string> out;
    for (const auto& st : ep.steps) {
      out.push_back(show(st.input));
      out.push_back(show(st.output));
    }
    return out;
  };
  auto text = [](const Seq& s) { return s.text(); };

  ArithF7Task f7;
  check(io(f7.episode(f7.parse_instance("(0+4-(2-3*6))*(4+0)")), text),
        {"(0+4-(2-3*6))*(4+0)", "( 4 -(2- 4 ))*  4  ", "(4-(2-4))*4", "(4-  5  )*4", "(4-5)*4",
         "  6  *4", "6*4", " 3 "});

  Add1Task add1;
  check(io(add1.episode(add1.parse_instance("285+9805")), text),
        {"285+9805=?", "285+9805=c0", "285+9805=c0", "285+9805=?90", "285+9805=?90",
         "285+9805=c090", "285+9805=c090", "285+9805=10090"});

  Mul1Task mul1;
  check(io(mul1.episode(mul1.parse_instance("1*3")), text),
        {"1*3=?", "1*3=1+?", "1*3=1+?", "1*3=1+1+?", "1*3=1+1+?", "1*3=1+1+1", "1*3=1+1+1",
         "1*3=2+1", "1*3=2+1", "1*3=3"});

  // 3-line: operand rows stay fixed, so only the result row is compared.
  Add3Task add3;
  const auto ep = add3.episode(add3.parse_instance("89283+3360"));
  std::vector<std::string> rows;
  for (const auto& st : ep.steps) {
    rows.push_back(st.input.text());
    rows.push_back(add3.answer_text(st.output));
  }
  check(rows, {" 89283\n  3360\n     ?", "?3", " 89283\n  3360\n    ?3", "c43",
               " 89283\n  3360\n   c43", "?643", " 89283\n  3360\n  ?643", "c2643",
               " 89283\n  3360\n c2643", "92643"});
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " tables exact"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"F7 length generalization", f7_generalization},
      {"3-line addition generalization", add3_generalization},
      {"1-line addition failure", add1_failure},
      {"1-line multiplication failure", mul1_failure},
      {"arctan decay trend", arctan_decay},
      {"R measurements", r_measurements},
      {"interpolation and adversarial fits", lemma1},
      {"recursive equivalence", recursion},
      {"ko windows", ko},
      {"format fidelity", formats},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %-36s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
