#pragma once

// The "what to compute next" predictor. Each position is classified from
// the window around it. Windows are read in the task's role alphabet; the
// stored label keeps every bit of the window, but only the centre bit is
// used when assembling a mask.

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "lengthgen/interpolator.hpp"
#include "lengthgen/metrics.hpp"
#include "lengthgen/tasks/common.hpp"

namespace lengthgen {

/// Positions [i - before, i + after]. A radius-R problem uses 2R each way.
struct WindowShape {
  std::size_t before = 0;
  std::size_t after = 0;

  std::size_t width() const { return before + after + 1; }
  static WindowShape for_R(std::size_t R) { return {2 * R, 2 * R}; }
  /// Width w with the centre at index w / 2 (left-biased for even widths).
  static WindowShape of_width(std::size_t w) {
    if (w == 0) throw std::invalid_argument("window width must be positive");
    return {w / 2, w - 1 - w / 2};
  }
  friend bool operator==(const WindowShape&, const WindowShape&) = default;
};

inline TokenTuple role_window(const SymbolicTask& task, const Seq& s, std::size_t i,
                              const WindowShape& sh) {
  TokenTuple w = window_tokens(s.tokens(), i, sh.before, sh.after);
  for (auto& t : w) {
    if (t != kBoundary) t = task.role(t);
  }
  return w;
}

/// Mask bits over the window's positions; '0' outside the sequence.
inline std::string window_label(const Mask& m, std::size_t i, const WindowShape& sh) {
  std::string out;
  out.reserve(sh.width());
  const auto c = static_cast<std::ptrdiff_t>(i);
  for (std::ptrdiff_t p = c - static_cast<std::ptrdiff_t>(sh.before);
       p <= c + static_cast<std::ptrdiff_t>(sh.after); ++p) {
    out.push_back(p >= 0 && p < static_cast<std::ptrdiff_t>(m.size()) && m[p] ? '1' : '0');
  }
  return out;
}

/// Oracle labels for a whole sequence.
inline Mask extract_labels(const SymbolicTask& task, const Seq& s) {
  return task.oracle_mask(s);
}

struct WindowModel {
  using Model = InterpolatingModel<TokenTuple, Token, RelevanceMetric>;

  std::string task;
  WindowShape shape;
  Model model;  // window -> centre bit ("0" / "1")
  std::unordered_map<TokenTuple, std::string, PointHash> labels;  // full bits
  std::size_t off_center_disagreements = 0;

  static constexpr std::string_view kHeader = "lengthgen-window 1";

  void save(std::ostream& os) const {
    os << kHeader << '\n';
    json meta = {{"task", task},
                 {"before", shape.before},
                 {"after", shape.after},
                 {"off_center_disagreements", off_center_disagreements}};
    json full = json::array();
    for (std::size_t i = 0; i < model.size(); ++i) full.push_back(labels.at(model.point(i)));
    meta["labels"] = std::move(full);
    os << meta.dump() << '\n';
    model.save(os);
  }

  static WindowModel load(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kHeader) {
      throw FormatError("window model: missing or unknown header");
    }
    if (!std::getline(is, line)) throw FormatError("window model: missing metadata");
    const json meta = json::parse(line);
    WindowModel w;
    w.task = meta.at("task").get<std::string>();
    w.shape = {meta.at("before").get<std::size_t>(), meta.at("after").get<std::size_t>()};
    w.off_center_disagreements = meta.at("off_center_disagreements").get<std::size_t>();
    w.model = Model::load(is);
    const auto& full = meta.at("labels");
    if (full.size() != w.model.size()) throw FormatError("window model: label count mismatch");
    for (std::size_t i = 0; i < w.model.size(); ++i) {
      w.labels.emplace(w.model.point(i), full[i].get<std::string>());
    }
    return w;
  }
};

/// Tabulates every window of every corpus state. Identical windows whose
/// centre bits disagree make the (task, shape) pairing ill-posed.
inline WindowModel fit_window_predictor(const SymbolicTask& task, const WindowShape& shape,
                                        const std::vector<Seq>& corpus,
                                        double exponent = 32.0) {
  WindowModel wm;
  wm.task = task.id();
  wm.shape = shape;
  std::vector<TokenTuple> xs;
  std::vector<Token> ys;
  for (const auto& s : corpus) {
    const Mask m = extract_labels(task, s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      TokenTuple w = role_window(task, s, i, shape);
      std::string lab = window_label(m, i, shape);
      auto [it, fresh] = wm.labels.try_emplace(w, lab);
      if (fresh) {
        xs.push_back(std::move(w));
        ys.push_back(std::string(1, lab[shape.before]));
        continue;
      }
      if (it->second == lab) continue;
      if (it->second[shape.before] != lab[shape.before]) {
        throw AmbiguityError(it->first, it->second, lab,
                             "ambiguous window " + join(it->first) + " in " + task.id() +
                                 ": labels " + it->second + " vs " + lab + " (state \"" +
                                 s.text() + "\")");
      }
      ++wm.off_center_disagreements;
    }
  }
  if (xs.empty()) throw std::invalid_argument("window corpus is empty");
  auto metric = RelevanceMetric::learn<Token>(
      xs, ys, shape.before, [](const Token& y) { return y; });
  LabeledDataset<TokenTuple, Token> d;
  for (std::size_t i = 0; i < xs.size(); ++i) d.add(xs[i], ys[i]);
  wm.model = fit(d, std::move(metric), exponent);
  return wm;
}

/// Centre bit of the model's output at every position. Strict mode throws
/// UnseenInputError at the first unseen window.
inline Mask predict_mask(const WindowModel& wm, const SymbolicTask& task, const Seq& s,
                         UnseenPolicy policy = UnseenPolicy::kKernel,
                         std::size_t* unseen = nullptr,
                         PredictionMemo<TokenTuple, Token>* memo = nullptr) {
  Mask m(s.size(), false);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const TokenTuple w = role_window(task, s, i, wm.shape);
    const Token* hit = wm.model.lookup(w);
    if (!hit) {
      if (policy == UnseenPolicy::kStrict) {
        throw UnseenInputError(i, "unseen window " + join(w) + " at position " +
                                      std::to_string(i));
      }
      if (unseen) ++*unseen;
    }
    if (hit) {
      m[i] = *hit == "1";
      continue;
    }
    auto kernel = [&] { return wm.model.predict(w); };
    m[i] = (memo ? memo->get(w, kernel) : kernel()) == "1";
  }
  return m;
}

// ---------------------------------------------------------------------------
// R measurement

struct RMeasurement {
  std::map<std::size_t, std::size_t> per_level;
  std::size_t overall_max = 0;
  bool diverging = false;
};

inline std::size_t group_diameter(const Group& g) {
  if (g.empty()) return 0;
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  return *hi - *lo;
}

/// Largest within-group index distance over every step of an oracle episode.
inline std::size_t episode_R(const SymbolicTask& task, const Episode& ep) {
  std::size_t r = 0;
  for (const auto& st : ep.steps) {
    for (const auto& g : task.groups(st.input, task.oracle_mask(st.input))) {
      r = std::max(r, group_diameter(g));
    }
  }
  return r;
}

/// Tail = the later half of the levels (at least two).
inline bool strictly_increasing_tail(const std::map<std::size_t, std::size_t>& per_level) {
  std::vector<std::size_t> v;
  for (const auto& [level, r] : per_level) v.push_back(r);
  if (v.size() < 2) return false;
  const std::size_t from = std::min(v.size() / 2, v.size() - 2);
  for (std::size_t i = from + 1; i < v.size(); ++i) {
    if (v[i] <= v[i - 1]) return false;
  }
  return true;
}

inline RMeasurement estimate_R(const SymbolicTask& task, const std::vector<std::size_t>& levels,
                               std::size_t samples_per_level, std::uint64_t seed) {
  RMeasurement out;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    std::size_t r = 0;
    for (std::size_t k = 0; k < samples_per_level; ++k) {
      Rng rng(derive_seed(seed, levels[li], k));
      r = std::max(r, episode_R(task, task.episode(task.sample_level(levels[li], rng))));
    }
    out.per_level[levels[li]] = r;
    out.overall_max = std::max(out.overall_max, r);
  }
  out.diverging = strictly_increasing_tail(out.per_level);
  return out;
}

}  // namespace lengthgen
