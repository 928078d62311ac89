#pragma once

// Recursive CoT solving: mask -> groups -> causal outputs -> writeback,
// repeated until the task's stop rule fires. The mask and causal maps are
// pluggable so the same loop runs with learned models or with oracles.

#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lengthgen/interpolator.hpp"
#include "lengthgen/tasks/common.hpp"
#include "lengthgen/window.hpp"

namespace lengthgen {

enum class SolveStatus { kAnswered, kBudgetExhausted, kUnseenWindow, kDomainMiss };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kAnswered: return "answered";
    case SolveStatus::kBudgetExhausted: return "budget_exhausted";
    case SolveStatus::kUnseenWindow: return "unseen_window";
    case SolveStatus::kDomainMiss: return "domain_miss";
  }
  return "?";
}

struct StopRule {
  std::size_t max_steps = 0;
  static StopRule for_instance(const SymbolicTask& task, const Seq& instance) {
    return {task.budget(instance)};
  }
};

struct SolveStep {
  Seq input;
  Mask mask;
  std::vector<Group> groups;
  std::vector<TokenTuple> inputs;
  std::vector<Token> outputs;
  Seq written;
  Seq next;
  std::size_t unseen_windows = 0;
  std::size_t unseen_inputs = 0;
};

struct SolveTrace {
  std::vector<SolveStep> steps;
  SolveStatus status = SolveStatus::kAnswered;
  Seq final_state;
  std::string detail;  // message of the terminal failure, if any

  std::size_t unseen_windows() const {
    std::size_t n = 0;
    for (const auto& s : steps) n += s.unseen_windows;
    return n;
  }
  std::size_t unseen_inputs() const {
    std::size_t n = 0;
    for (const auto& s : steps) n += s.unseen_inputs;
    return n;
  }
};

/// Sub-step 1 and 2 providers. Each reports how many of its queries fell
/// outside the training data through the counter argument.
struct SolverPlugins {
  std::function<Mask(const Seq&, std::size_t& unseen)> mask;
  std::function<Token(const TokenTuple&, std::size_t& unseen)> causal;
};

using CausalModel = InterpolatingModel<TokenTuple, Token, RelevanceMetric>;

inline SolverPlugins oracle_plugins(const SymbolicTask& task) {
  return {[&task](const Seq& s, std::size_t&) { return task.oracle_mask(s); },
          [&task](const TokenTuple& x, std::size_t&) { return task.causal(x); }};
}

inline SolverPlugins learned_plugins(const SymbolicTask& task, const WindowModel& g_hat,
                                     const CausalModel& f_hat,
                                     UnseenPolicy policy = UnseenPolicy::kKernel) {
  using Memo = PredictionMemo<TokenTuple, Token>;
  auto window_memo = std::make_shared<Memo>();
  auto causal_memo = std::make_shared<Memo>();
  return {[&task, &g_hat, policy, window_memo](const Seq& s, std::size_t& unseen) {
            return predict_mask(g_hat, task, s, policy, &unseen, window_memo.get());
          },
          [&f_hat, policy, causal_memo](const TokenTuple& x, std::size_t& unseen) {
            if (const Token* hit = f_hat.lookup(x)) return *hit;
            ++unseen;
            if (policy == UnseenPolicy::kStrict) return f_hat.predict(x, policy);
            return causal_memo->get(x, [&] { return f_hat.predict(x); });
          }};
}

inline SolveTrace solve(const SymbolicTask& task, const Seq& instance, const SolverPlugins& p,
                        const StopRule& rule) {
  SolveTrace tr;
  Seq s = instance;
  auto stop = [&](SolveStatus st, std::string why = {}) {
    tr.status = st;
    tr.detail = std::move(why);
    tr.final_state = s;
    return tr;
  };
  for (;;) {
    if (task.finished(s)) return stop(SolveStatus::kAnswered);
    if (tr.steps.size() >= rule.max_steps) return stop(SolveStatus::kBudgetExhausted);
    SolveStep st;
    st.input = s;
    try {
      st.mask = p.mask(s, st.unseen_windows);
    } catch (const UnseenInputError& e) {
      return stop(SolveStatus::kUnseenWindow, e.what());
    }
    try {
      st.groups = task.groups(s, st.mask);
      for (const auto& g : st.groups) {
        st.inputs.push_back(task.causal_input(s, g));
        st.outputs.push_back(p.causal(st.inputs.back(), st.unseen_inputs));
      }
      st.written = task.writeback(s, st.groups, st.outputs);
      st.next = task.compact(st.written);
    } catch (const UnseenInputError& e) {
      return stop(SolveStatus::kDomainMiss, e.what());
    } catch (const Error& e) {
      // DomainError from an oracle, or FormatError from writing back a
      // prediction that left the task's state space.
      return stop(SolveStatus::kDomainMiss, e.what());
    }
    // Output identical to input: the chain has stopped moving.
    if (st.next == s) return stop(SolveStatus::kAnswered);
    s = st.next;
    tr.steps.push_back(std::move(st));
  }
}

struct Grade {
  bool correct = false;
  std::string predicted;
  std::string expected;
};

inline Grade grade(const SymbolicTask& task, const Seq& instance, const SolveTrace& tr) {
  Grade g;
  g.expected = task.oracle_answer(instance);
  g.predicted = task.answer_text(tr.final_state);
  g.correct = tr.status == SolveStatus::kAnswered && g.predicted == g.expected;
  return g;
}

inline void write_trace(std::ostream& os, const SolveTrace& tr) {
  for (std::size_t k = 0; k < tr.steps.size(); ++k) {
    const auto& st = tr.steps[k];
    os << json{{"step", k},
               {"input", st.input.text()},
               {"mask", mask_string(st.mask)},
               {"groups", st.groups},
               {"inputs", st.inputs},
               {"outputs", st.outputs},
               {"output", st.written.text()},
               {"unseen_windows", st.unseen_windows},
               {"unseen_inputs", st.unseen_inputs}}
              .dump()
       << '\n';
  }
  os << json{{"status", to_string(tr.status)},
             {"final", tr.final_state.text()},
             {"detail", tr.detail}}
            .dump()
     << '\n';
}

}  // namespace lengthgen
