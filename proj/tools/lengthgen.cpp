// lengthgen: dataset export, fitting, solving and evaluation from the shell.
//
// Exit codes: 0 success, 1 when a graded run has failures, 2 on errors.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "lengthgen/harness.hpp"

using namespace lengthgen;

namespace {

constexpr int kOk = 0;
constexpr int kGradedFailure = 1;
constexpr int kError = 2;

struct Common {
  std::string task;
  std::string config;
  std::string preset = "desk";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool strict = false;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool with_task = true) {
  if (with_task) cmd->add_option("--task", c.task, "task id (arith_f7|f7, add1, add3, mul1, ko, arctan)");
  cmd->add_option("--config", c.config, "flat key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", c.preset, "desk (default) or paper")->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--seed", c.seed, "master seed (falls back to LENGTHGEN_SEED)");
  cmd->add_option("--threads", c.threads, "evaluation workers");
  cmd->add_flag("--strict", c.strict, "abort on unseen windows or causal inputs");
  cmd->add_option("--out", c.out, "output path (default stdout)");
}

// Precedence: defaults < LENGTHGEN_SEED < config file < flags.
ExperimentConfig build_config(const Common& c) {
  ExperimentConfig cfg = default_config(c.task.empty() ? "arith_f7" : c.task, c.preset);
  if (const char* env = std::getenv("LENGTHGEN_SEED"); env && *env) cfg.seed = std::stoull(env);
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw std::runtime_error("cannot read " + c.config);
    apply_config_stream(cfg, in);
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = std::max<std::size_t>(1, *c.threads);
  if (c.strict) cfg.strict = true;
  return cfg;
}

// Writes through `fn` to --out, or to stdout when it is empty.
template <class Fn>
void emit(const std::string& path, Fn fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  fn(os);
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<std::size_t> parse_levels(const std::string& spec) {
  if (const auto dots = spec.find(".."); dots != std::string::npos) {
    const std::size_t lo = std::stoul(spec.substr(0, dots));
    const std::size_t hi = std::stoul(spec.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("empty level range " + spec);
    std::vector<std::size_t> out;
    for (std::size_t l = lo; l <= hi; ++l) out.push_back(l);
    return out;
  }
  return parse_size_list(spec);
}

void print_summary(std::ostream& os, const AccuracyReport& rep) {
  os << "task " << rep.config.task << "  seed " << rep.config.seed << "  config " << config_hash(rep.config)
     << '\n';
  for (const auto& r : rep.ranges) {
    os << std::left << std::setw(8) << r.range.label << " bound=" << std::setw(4) << r.range.bound
       << " n=" << std::setw(5) << r.n << " accuracy=" << r.accuracy();
    if (r.failures.total()) {
      os << "  (wrong " << r.failures.wrong_answer << ", budget " << r.failures.budget_exhausted
         << ", unseen " << r.failures.unseen_window << ", domain " << r.failures.domain_miss << ')';
    }
    os << '\n';
  }
}

bool any_failure(const AccuracyReport& rep) {
  for (const auto& r : rep.ranges) {
    if (r.correct != r.n) return true;
  }
  return false;
}

int cmd_generate(const Common& c, std::size_t episodes, std::optional<std::size_t> bound) {
  const auto cfg = build_config(c);
  const auto task = make_task(cfg.task);
  SampleRange range = cfg.train;
  if (bound) range.bound = *bound;
  emit(c.out, [&](std::ostream& os) { export_dataset(*task, range, episodes, cfg.seed, os); });
  return kOk;
}

int cmd_fit(const Common& c) {
  const auto cfg = build_config(c);
  if (cfg.task == "arctan") throw std::invalid_argument("fit: arctan has no step models; use eval");
  const auto task = make_task(cfg.task);
  const auto m = train_models(*task, cfg);
  emit(c.out, [&](std::ostream& os) { save_models(os, m); });
  std::cerr << "fitted " << cfg.task << ": window " << m.g_hat.shape.before << '+' << 1 << '+'
            << m.g_hat.shape.after << ", " << m.g_hat.model.size() << " windows, " << m.f_hat.size()
            << " causal points\n";
  return kOk;
}

int cmd_solve(const Common& c, const std::string& models_path, const std::string& instance_text,
              const std::string& trace_path) {
  const auto cfg = build_config(c);
  const auto task = make_task(cfg.task);
  const Seq inst = task->parse_instance(instance_text);
  std::optional<TrainedModels> m;
  SolverPlugins plugins;
  if (models_path.empty()) {
    plugins = oracle_plugins(*task);
  } else {
    std::ifstream in(models_path);
    if (!in) throw std::runtime_error("cannot read " + models_path);
    m = load_models(in);
    if (m->g_hat.task != task->id()) {
      throw std::invalid_argument("models were fitted for " + m->g_hat.task + ", not " + task->id());
    }
    plugins = learned_plugins(*task, m->g_hat, m->f_hat,
                              cfg.strict ? UnseenPolicy::kStrict : UnseenPolicy::kKernel);
  }
  const auto tr = solve(*task, inst, plugins, StopRule::for_instance(*task, inst));
  if (!trace_path.empty()) emit(trace_path, [&](std::ostream& os) { write_trace(os, tr); });
  const auto g = grade(*task, inst, tr);
  emit(c.out, [&](std::ostream& os) {
    for (const auto& st : tr.steps) os << st.next.text() << '\n';
    os << "status " << to_string(tr.status) << "  answer " << task->answer_text(tr.final_state)
       << "  expected " << task->oracle_answer(inst) << "  " << (g.correct ? "correct" : "WRONG")
       << '\n';
  });
  return g.correct ? kOk : kGradedFailure;
}

int cmd_eval(const Common& c, const std::string& csv_path) {
  const auto cfg = build_config(c);
  const auto rep = run_experiment(cfg);
  print_summary(std::cerr, rep);
  emit(c.out, [&](std::ostream& os) { os << rep.to_json().dump(2) << '\n'; });
  if (!csv_path.empty()) emit(csv_path, [&](std::ostream& os) { os << rep.to_csv(); });
  return any_failure(rep) ? kGradedFailure : kOk;
}

int cmd_measure_r(const Common& c, const std::string& levels_spec, std::size_t samples) {
  const auto cfg = build_config(c);
  const auto task = make_task(cfg.task);
  const auto levels = parse_levels(levels_spec);
  const auto r = estimate_R(*task, levels, samples, cfg.seed);
  emit(c.out, [&](std::ostream& os) {
    os << "level  R\n";
    for (const auto& [level, value] : r.per_level) os << std::left << std::setw(6) << level << ' ' << value << '\n';
    os << "max " << r.overall_max << "  diverging=" << (r.diverging ? "true" : "false");
    if (const auto d = task->declared_R()) os << "  declared " << *d;
    os << '\n';
  });
  return kOk;
}

int cmd_demo_ko(const Common& c) {
  KoTask ko;
  const std::vector<Seq> pair{Seq::line("11010"), Seq::line("11011")};
  emit(c.out, [&](std::ostream& os) {
    for (const auto& s : pair) {
      os << s.text() << " -> " << ko.oracle_answer(s) << "  flip mask " << mask_string(ko.oracle_mask(s))
         << '\n';
    }
    try {
      fit_window_predictor(ko, WindowShape::of_width(4), pair);
      os << "width 4: no ambiguity (unexpected)\n";
    } catch (const AmbiguityError& e) {
      os << "width 4: window " << join(e.window) << " labelled both " << e.first_label << " and "
         << e.second_label << '\n';
    }
    fit_window_predictor(ko, WindowShape::of_width(5), pair);
    os << "width 5: fits without conflict\n";
  });
  return kOk;
}

int cmd_report(const std::string& in_path, bool csv, const std::string& out) {
  std::ifstream in(in_path);
  if (!in) throw std::runtime_error("cannot read " + in_path);
  const json j = json::parse(in);
  if (j.at("schema").get<std::string>() != kReportSchema) {
    throw FormatError("report: unknown schema " + j.at("schema").dump());
  }
  bool failed = false;
  emit(out, [&](std::ostream& os) {
    if (csv) {
      os << "task,range,bound,lo,hi,n,correct,accuracy,wrong_answer,budget_exhausted,"
            "unseen_window,domain_miss,mean_steps\n";
    } else {
      os << "task " << j.at("task").get<std::string>() << "  seed " << j.at("seed") << "  config "
         << j.at("config_hash").get<std::string>() << '\n';
    }
    for (const auto& r : j.at("ranges")) {
      const auto& f = r.at("failures");
      failed = failed || r.at("correct") != r.at("n");
      if (csv) {
        os << j.at("task").get<std::string>() << ',' << r.at("label").get<std::string>() << ','
           << r.at("bound") << ',' << r.at("lo") << ',' << r.at("hi") << ',' << r.at("n") << ','
           << r.at("correct") << ',' << r.at("accuracy") << ',' << f.at("wrong_answer") << ','
           << f.at("budget_exhausted") << ',' << f.at("unseen_window") << ',' << f.at("domain_miss")
           << ',' << r.at("mean_steps") << '\n';
      } else {
        os << std::left << std::setw(8) << r.at("label").get<std::string>() << " bound=" << std::setw(4)
           << r.at("bound").get<std::size_t>() << " n=" << std::setw(5) << r.at("n").get<std::size_t>()
           << " accuracy=" << r.at("accuracy").get<double>() << '\n';
      }
    }
  });
  return failed ? kGradedFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Length generalization testbed: step-wise interpolation on CoT tasks"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common c;

  auto* gen = app.add_subcommand("generate", "export a JSONL corpus of CoT steps");
  add_common(gen, c);
  std::size_t episodes = 100;
  std::optional<std::size_t> bound;
  gen->add_option("--episodes,-n", episodes, "number of episodes");
  gen->add_option("--bound", bound, "range bound (default: the train range)");

  auto* fit_cmd = app.add_subcommand("fit", "fit window and causal models on the train range");
  add_common(fit_cmd, c);

  auto* solve_cmd = app.add_subcommand("solve", "solve one instance step by step");
  add_common(solve_cmd, c);
  std::string models_path, instance, trace_path;
  solve_cmd->add_option("--models", models_path, "models file from `fit` (default: oracle steps)");
  solve_cmd->add_option("instance", instance, "instance text, e.g. 285+9805")->required();
  solve_cmd->add_option("--trace", trace_path, "write a JSONL step trace here");

  auto* eval_cmd = app.add_subcommand("eval", "train, then grade every test range");
  add_common(eval_cmd, c);
  std::string csv_path;
  eval_cmd->add_option("--csv", csv_path, "also write the CSV mirror here");

  auto* mr = app.add_subcommand("measure-r", "measure the step radius R per scale level");
  add_common(mr, c);
  std::string levels = "2..10";
  std::size_t samples = 20;
  mr->add_option("--levels,--digits,--lengths", levels, "levels as lo..hi or a,b,c");
  mr->add_option("--samples", samples, "instances per level");

  auto* ko_cmd = app.add_subcommand("demo-ko", "show the ko-pair window ambiguity");
  add_common(ko_cmd, c, false);

  auto* rep_cmd = app.add_subcommand("report", "render a saved JSON report");
  std::string report_in;
  bool report_csv = false;
  std::string report_out;
  rep_cmd->add_option("report", report_in, "report JSON from `eval`")->required()->check(CLI::ExistingFile);
  rep_cmd->add_flag("--csv", report_csv, "print CSV instead of a table");
  rep_cmd->add_option("--out", report_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kError;
  }

  try {
    const bool needs_task = !ko_cmd->parsed() && !rep_cmd->parsed();
    if (needs_task && c.task.empty() && c.config.empty()) {
      throw std::invalid_argument("--task (or a config file with task=...) is required");
    }
    if (gen->parsed()) return cmd_generate(c, episodes, bound);
    if (fit_cmd->parsed()) return cmd_fit(c);
    if (solve_cmd->parsed()) return cmd_solve(c, models_path, instance, trace_path);
    if (eval_cmd->parsed()) return cmd_eval(c, csv_path);
    if (mr->parsed()) return cmd_measure_r(c, levels, samples);
    if (ko_cmd->parsed()) return cmd_demo_ko(c);
    if (rep_cmd->parsed()) return cmd_report(report_in, report_csv, report_out);
  } catch (const std::exception& e) {
    std::cerr << "lengthgen: " << e.what() << '\n';
    return kError;
  }
  return kError;
}
