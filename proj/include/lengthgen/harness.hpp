#pragma once

// Train/test protocol: sample a training corpus, fit the window predictor
// and the causal model, then solve fresh instances from each test range.

#include <atomic>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "lengthgen/interpolator.hpp"
#include "lengthgen/solver.hpp"
#include "lengthgen/tasks/registry.hpp"
#include "lengthgen/window.hpp"

namespace lengthgen {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr std::string_view kReportSchema = "lengthgen-report 1";
inline constexpr std::string_view kDatasetHeader = "# lengthgen-dataset 1";

enum class WindowPolicy { kDeclared, kTrainCap };

struct ExperimentConfig {
  std::string task = "arith_f7";
  SampleRange train;
  std::vector<SampleRange> tests;
  std::size_t train_instances = 0;
  std::size_t test_instances = 200;
  std::uint64_t seed = 1;
  bool strict = false;
  WindowPolicy window_policy = WindowPolicy::kDeclared;
  double window_exponent = 32.0;
  double causal_exponent = 32.0;
  std::size_t threads = 1;

  json to_json() const {
    auto range = [](const SampleRange& r) {
      return json{{"label", r.label}, {"bound", r.bound}, {"lo", hexfloat(r.lo)},
                  {"hi", hexfloat(r.hi)}, {"length_uniform", r.length_uniform}};
    };
    json t = json::array();
    for (const auto& r : tests) t.push_back(range(r));
    return {{"task", task},
            {"train", range(train)},
            {"tests", t},
            {"train_instances", train_instances},
            {"test_instances", test_instances},
            {"seed", seed},
            {"strict", strict},
            {"window_policy", window_policy == WindowPolicy::kDeclared ? "declared" : "train"},
            {"window_exponent", hexfloat(window_exponent)},
            {"causal_exponent", hexfloat(causal_exponent)}};
  }
};

inline std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

/// Thread count does not enter the hash: it never changes results.
inline std::string config_hash(const ExperimentConfig& c) { return fnv1a_hex(c.to_json().dump()); }

// ---------------------------------------------------------------------------
// Presets: the train range first, then five test ranges.

inline std::vector<SampleRange> table_ranges(const std::string& task) {
  std::vector<SampleRange> out;
  auto named = [&](std::size_t i) { return i == 0 ? std::string("train") : "test" + std::to_string(i); };
  if (task == "arctan") {
    const double ks[] = {2, 3, 4, 5, 6, 10};
    for (std::size_t i = 0; i < 6; ++i) {
      SampleRange r{named(i)};
      r.lo = 1.0 / ks[i];
      r.hi = ks[i];
      out.push_back(r);
    }
  } else if (task == "arith_f7") {
    const std::size_t ls[] = {20, 30, 40, 50, 60, 100};
    for (std::size_t i = 0; i < 6; ++i) out.push_back({named(i), ls[i]});
  } else if (task == "add1" || task == "add3") {
    const std::size_t ds[] = {6, 7, 8, 9, 10, 21};
    for (std::size_t i = 0; i < 6; ++i) out.push_back({named(i), ds[i]});
  } else if (task == "mul1") {
    for (std::size_t i = 0; i < 6; ++i) out.push_back({named(i), 5 + i});
  } else if (task == "ko") {
    const std::size_t ls[] = {10, 16, 24, 32, 48, 64};
    for (std::size_t i = 0; i < 6; ++i) out.push_back({named(i), ls[i]});
  } else {
    throw std::invalid_argument("unknown task '" + task + "'");
  }
  return out;
}

/// `paper` restores 1000 test instances per range; desk scale uses 200.
inline ExperimentConfig default_config(const std::string& task, const std::string& preset = "desk") {
  if (preset != "desk" && preset != "paper") {
    throw std::invalid_argument("unknown preset '" + preset + "'");
  }
  ExperimentConfig c;
  c.task = task == "f7" ? "arith_f7" : task;
  const auto ranges = table_ranges(c.task);
  c.train = ranges.front();
  c.tests = ranges;
  c.test_instances = preset == "paper" ? 1000 : 200;
  if (c.task == "arith_f7") c.train_instances = 20000;
  if (c.task == "add1" || c.task == "add3") {
    c.train_instances = c.task == "add3" ? 60000 : 20000;
    c.train.length_uniform = true;
  }
  if (c.task == "add1" || c.task == "mul1") c.window_policy = WindowPolicy::kTrainCap;
  if (c.task == "mul1") c.train_instances = 2000;
  if (c.task == "ko") c.train_instances = 5000;
  if (c.task == "arctan") {
    c.train_instances = 10000;
    c.causal_exponent = 8.0;
  }
  return c;
}

inline std::vector<std::size_t> parse_size_list(const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoul(item));
  }
  return out;
}

/// Flat key=value settings; unknown keys are an error.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  auto flag = [&] {
    if (value == "1" || value == "true") return true;
    if (value == "0" || value == "false") return false;
    throw std::invalid_argument("bad boolean for " + key + ": " + value);
  };
  if (key == "task") {
    c = default_config(value);
  } else if (key == "seed") {
    c.seed = std::stoull(value);
  } else if (key == "train_instances") {
    c.train_instances = std::stoul(value);
  } else if (key == "test_instances" || key == "n") {
    c.test_instances = std::stoul(value);
  } else if (key == "strict") {
    c.strict = flag();
  } else if (key == "threads") {
    c.threads = std::max<std::size_t>(1, std::stoul(value));
  } else if (key == "window_policy") {
    if (value != "declared" && value != "train") throw std::invalid_argument("window_policy: " + value);
    c.window_policy = value == "declared" ? WindowPolicy::kDeclared : WindowPolicy::kTrainCap;
  } else if (key == "window_exponent") {
    c.window_exponent = std::stod(value);
  } else if (key == "causal_exponent" || key == "kernel_exponent") {
    c.causal_exponent = std::stod(value);
  } else if (key == "train_bound") {
    c.train.bound = std::stoul(value);
  } else if (key == "train_length_uniform") {
    c.train.length_uniform = flag();
  } else if (key == "test_bounds") {
    c.tests.clear();
    std::size_t i = 1;
    for (auto b : parse_size_list(value)) c.tests.push_back({"test" + std::to_string(i++), b});
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

/// Reads "key = value" lines; '#' starts a comment.
inline void apply_config_stream(ExperimentConfig& c, std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    auto trim = [](std::string s) {
      const auto lo = s.find_first_not_of(" \t\r");
      if (lo == std::string::npos) return std::string();
      return s.substr(lo, s.find_last_not_of(" \t\r") - lo + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    }
    apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

// ---------------------------------------------------------------------------
// Training

struct TrainingCorpus {
  std::vector<Episode> episodes;
  std::vector<Seq> states;  // distinct step inputs and final states
  LabeledDataset<TokenTuple, Token> causal;
  std::size_t max_R = 0;
};

inline TrainingCorpus build_corpus(const SymbolicTask& task, const SampleRange& range,
                                   std::size_t n, std::uint64_t seed) {
  TrainingCorpus c;
  std::unordered_set<std::string> seen_states;
  std::unordered_set<TokenTuple, PointHash> seen_inputs;
  auto add_state = [&](const Seq& s) {
    if (seen_states.insert(s.text()).second) c.states.push_back(s);
  };
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, 0, i));
    Episode ep = task.episode(task.sample(range, rng));
    for (const auto& st : ep.steps) {
      add_state(st.input);
      for (const auto& g : task.groups(st.input, task.oracle_mask(st.input))) {
        TokenTuple x = task.causal_input(st.input, g);
        if (seen_inputs.insert(x).second) c.causal.add(x, task.causal(x));
      }
    }
    add_state(ep.answer);
    c.max_R = std::max(c.max_R, episode_R(task, ep));
    c.episodes.push_back(std::move(ep));
  }
  return c;
}

struct TrainedModels {
  WindowModel g_hat;
  CausalModel f_hat;
  std::size_t train_R = 0;
};

inline WindowShape choose_shape(const SymbolicTask& task, WindowPolicy policy, std::size_t train_R) {
  if (policy == WindowPolicy::kDeclared) {
    const auto R = task.declared_R();
    if (!R) throw std::invalid_argument(task.id() + " has no finite R; use window_policy=train");
    return WindowShape::for_R(*R);
  }
  return WindowShape::for_R(std::max<std::size_t>(train_R, 1));
}

inline CausalModel fit_causal(const LabeledDataset<TokenTuple, Token>& d, double exponent) {
  std::vector<TokenTuple> xs;
  std::vector<Token> ys;
  for (const auto& [x, y] : d.pairs) {
    xs.push_back(x);
    ys.push_back(y);
  }
  auto metric = RelevanceMetric::learn<Token>(xs, ys, std::nullopt,
                                              [](const Token& y) { return y; });
  return fit(d, std::move(metric), exponent);
}

inline TrainedModels train_models(const SymbolicTask& task, const ExperimentConfig& cfg) {
  const TrainingCorpus corpus = build_corpus(task, cfg.train, cfg.train_instances, cfg.seed);
  if (corpus.causal.pairs.empty()) throw std::invalid_argument("training corpus has no steps");
  TrainedModels m;
  m.train_R = corpus.max_R;
  try {
    m.g_hat = fit_window_predictor(task, choose_shape(task, cfg.window_policy, corpus.max_R),
                                   corpus.states, cfg.window_exponent);
  } catch (const AmbiguityError& e) {
    throw AmbiguityError(e.window, e.first_label, e.second_label,
                         std::string(e.what()) + " [config " + config_hash(cfg) + "]");
  }
  m.f_hat = fit_causal(corpus.causal, cfg.causal_exponent);
  return m;
}

inline constexpr std::string_view kModelsHeader = "lengthgen-models 1";

/// Window and causal models in one stream, preceded by the task and the
/// training-measured R.
inline void save_models(std::ostream& os, const TrainedModels& m) {
  os << kModelsHeader << '\n'
     << json{{"task", m.g_hat.task}, {"train_R", m.train_R}}.dump() << '\n';
  m.g_hat.save(os);
  m.f_hat.save(os);
}

inline TrainedModels load_models(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kModelsHeader) {
    throw FormatError("models file: missing or unknown header");
  }
  if (!std::getline(is, line)) throw FormatError("models file: missing metadata");
  const json meta = json::parse(line);
  TrainedModels m;
  m.train_R = meta.at("train_R").get<std::size_t>();
  m.g_hat = WindowModel::load(is);
  m.f_hat = CausalModel::load(is);
  if (m.g_hat.task != meta.at("task").get<std::string>()) {
    throw FormatError("models file: task mismatch");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Evaluation

struct FailureCounts {
  std::size_t wrong_answer = 0;
  std::size_t budget_exhausted = 0;
  std::size_t unseen_window = 0;
  std::size_t domain_miss = 0;
  std::size_t total() const { return wrong_answer + budget_exhausted + unseen_window + domain_miss; }
};

struct RangeResult {
  SampleRange range;
  std::size_t n = 0;
  std::size_t correct = 0;
  FailureCounts failures;
  double mean_steps = 0.0;
  std::size_t unseen_window_events = 0;
  std::size_t unseen_input_events = 0;
  double accuracy() const { return n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0; }
};

struct AccuracyReport {
  ExperimentConfig config;
  std::vector<RangeResult> ranges;
  json model_info;

  json to_json() const {
    json rs = json::array();
    for (const auto& r : ranges) {
      rs.push_back({{"label", r.range.label},
                    {"bound", r.range.bound},
                    {"lo", r.range.lo},
                    {"hi", r.range.hi},
                    {"n", r.n},
                    {"correct", r.correct},
                    {"accuracy", r.accuracy()},
                    {"mean_steps", r.mean_steps},
                    {"failures",
                     {{"wrong_answer", r.failures.wrong_answer},
                      {"budget_exhausted", r.failures.budget_exhausted},
                      {"unseen_window", r.failures.unseen_window},
                      {"domain_miss", r.failures.domain_miss}}},
                    {"unseen_window_events", r.unseen_window_events},
                    {"unseen_input_events", r.unseen_input_events}});
    }
    return {{"schema", kReportSchema},
            {"version", kVersion},
            {"task", config.task},
            {"seed", config.seed},
            {"config_hash", config_hash(config)},
            {"config", config.to_json()},
            {"model", model_info},
            {"ranges", rs}};
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "task,range,bound,lo,hi,n,correct,accuracy,wrong_answer,budget_exhausted,"
          "unseen_window,domain_miss,mean_steps\n";
    for (const auto& r : ranges) {
      os << config.task << ',' << r.range.label << ',' << r.range.bound << ',' << r.range.lo
         << ',' << r.range.hi << ',' << r.n << ',' << r.correct << ',' << r.accuracy() << ','
         << r.failures.wrong_answer << ',' << r.failures.budget_exhausted << ','
         << r.failures.unseen_window << ',' << r.failures.domain_miss << ',' << r.mean_steps
         << '\n';
    }
    return os.str();
  }
};

/// Runs `fn(i)` for i in [0, n) on `threads` workers. Results must be
/// written by index so the order of completion never matters.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mu;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct InstanceOutcome {
  bool correct = false;
  SolveStatus status = SolveStatus::kAnswered;
  std::size_t steps = 0;
  std::size_t unseen_windows = 0;
  std::size_t unseen_inputs = 0;
};

inline RangeResult evaluate_range(const SymbolicTask& task, const TrainedModels& m,
                                  const SampleRange& range, std::size_t n, std::uint64_t seed,
                                  std::size_t range_index, bool strict, std::size_t threads) {
  const auto plugins = learned_plugins(task, m.g_hat, m.f_hat,
                                       strict ? UnseenPolicy::kStrict : UnseenPolicy::kKernel);
  std::vector<InstanceOutcome> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, range_index + 1, i));
    const Seq inst = task.sample(range, rng);
    const SolveTrace tr = solve(task, inst, plugins, StopRule::for_instance(task, inst));
    out[i] = {grade(task, inst, tr).correct, tr.status, tr.steps.size(), tr.unseen_windows(),
              tr.unseen_inputs()};
  });
  RangeResult r;
  r.range = range;
  r.n = n;
  std::size_t steps = 0;
  for (const auto& o : out) {
    steps += o.steps;
    r.unseen_window_events += o.unseen_windows;
    r.unseen_input_events += o.unseen_inputs;
    if (o.correct) {
      ++r.correct;
      continue;
    }
    switch (o.status) {
      case SolveStatus::kAnswered: ++r.failures.wrong_answer; break;
      case SolveStatus::kBudgetExhausted: ++r.failures.budget_exhausted; break;
      case SolveStatus::kUnseenWindow: ++r.failures.unseen_window; break;
      case SolveStatus::kDomainMiss: ++r.failures.domain_miss; break;
    }
  }
  r.mean_steps = n ? static_cast<double>(steps) / static_cast<double>(n) : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// arctan: one real-valued step, Euclidean interpolation on (a, b).

using ArctanModel = InterpolatingModel<RealPoint, double, EuclideanMetric>;

inline ArctanModel train_arctan(const ExperimentConfig& cfg) {
  LabeledDataset<RealPoint, double> d;
  for (std::size_t i = 0; i < cfg.train_instances; ++i) {
    Rng rng(derive_seed(cfg.seed, 0, i));
    auto s = arctan_sample(cfg.train, rng);
    d.add(s.x, s.target);
  }
  return fit(d, EuclideanMetric{}, cfg.causal_exponent);
}

inline RangeResult evaluate_arctan(const ArctanModel& m, const SampleRange& range, std::size_t n,
                                   std::uint64_t seed, std::size_t range_index, std::size_t threads) {
  std::vector<char> ok(n, 0);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, range_index + 1, i));
    const auto s = arctan_sample(range, rng);
    ok[i] = arctan_correct(m.predict(s.x), s.target);
  });
  RangeResult r;
  r.range = range;
  r.n = n;
  for (char c : ok) c ? ++r.correct : ++r.failures.wrong_answer;
  r.mean_steps = 1.0;
  return r;
}

inline AccuracyReport run_experiment(const ExperimentConfig& cfg) {
  AccuracyReport rep;
  rep.config = cfg;
  if (cfg.task == "arctan") {
    const auto m = train_arctan(cfg);
    rep.model_info = {{"points", m.size()}, {"epsilon", m.epsilon()}, {"exponent", m.exponent()}};
    for (std::size_t k = 0; k < cfg.tests.size(); ++k) {
      rep.ranges.push_back(evaluate_arctan(m, cfg.tests[k], cfg.test_instances, cfg.seed, k, cfg.threads));
    }
    return rep;
  }
  const auto task = make_task(cfg.task);
  const TrainedModels m = train_models(*task, cfg);
  rep.model_info = {{"window_before", m.g_hat.shape.before},
                    {"window_after", m.g_hat.shape.after},
                    {"train_R", m.train_R},
                    {"window_points", m.g_hat.model.size()},
                    {"off_center_disagreements", m.g_hat.off_center_disagreements},
                    {"causal_points", m.f_hat.size()}};
  for (std::size_t k = 0; k < cfg.tests.size(); ++k) {
    rep.ranges.push_back(evaluate_range(*task, m, cfg.tests[k], cfg.test_instances, cfg.seed, k,
                                        cfg.strict, cfg.threads));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Dataset export

inline void export_dataset(const SymbolicTask& task, const SampleRange& range, std::size_t n,
                           std::uint64_t seed, std::ostream& os) {
  os << kDatasetHeader << " task=" << task.id() << " episodes=" << n << " seed=" << seed << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, 0, i));
    write_jsonl(os, task.episode(task.sample(range, rng)), i);
  }
}

struct StepRecord {
  std::string task;
  std::size_t instance_id = 0;
  std::size_t step_index = 0;
  std::string input;
  std::string output;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

inline std::vector<StepRecord> parse_dataset(std::istream& is) {
  std::vector<StepRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const json j = json::parse(line);
    out.push_back({j.at("task").get<std::string>(), j.at("instance_id").get<std::size_t>(),
                   j.at("step_index").get<std::size_t>(), j.at("input").get<std::string>(),
                   j.at("output").get<std::string>()});
  }
  return out;
}

}  // namespace lengthgen
