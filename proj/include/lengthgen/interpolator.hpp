#pragma once

// Exact-fit kernel interpolator.
//
// Away from the data the prediction is a kernel-weighted combination with
// K(x, x_i) = (eps / d(x, x_i))^p, where eps is the minimum pairwise distance
// of the training inputs. p = 1 is the plain inverse-distance kernel.
// Real-valued outputs are averaged; token outputs take the label with the
// largest kernel mass.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lengthgen/core.hpp"
#include "lengthgen/metrics.hpp"

namespace lengthgen {

// ---------------------------------------------------------------------------
// Point and value helpers

inline std::string point_string(const TokenTuple& x) {
  return "(" + join(x, ",") + ")";
}

inline std::string point_string(const RealPoint& x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ')';
  return os.str();
}

inline std::string label_key(const Token& y) { return y; }
inline std::string label_key(double y) { return hexfloat(y); }

struct PointHash {
  std::size_t operator()(const TokenTuple& x) const {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& t : x) {
      for (unsigned char c : t) h = (h ^ c) * 1099511628211ull;
      h = (h ^ 0x1f) * 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
  std::size_t operator()(const RealPoint& x) const {
    std::uint64_t h = 1469598103934665603ull;
    for (double v : x) {
      if (v == 0.0) v = 0.0;  // -0 and +0 compare equal
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = splitmix64(h ^ bits);
    }
    return static_cast<std::size_t>(h);
  }
};

template <class M, class P>
concept BucketedMetric = requires(const M& m, const P& p) {
  { m.bucket(p) } -> std::convertible_to<std::string>;
  { m.bucket_gap() } -> std::convertible_to<double>;
};

template <class Point, class Value>
struct LabeledDataset {
  std::vector<std::pair<Point, Value>> pairs;

  void add(Point x, Value y) { pairs.emplace_back(std::move(x), std::move(y)); }
  std::size_t size() const { return pairs.size(); }
};

template <class Point, class Value>
struct AdversarialSpec {
  std::vector<std::pair<Point, Value>> err_points;
};

enum class UnseenPolicy { kKernel, kStrict };

/// Thread-safe memo for kernel predictions, which are pure functions of the
/// query. Long rollouts ask about the same unseen point many times.
template <class Point, class Value>
class PredictionMemo {
 public:
  template <class Fn>
  Value get(const Point& x, Fn&& compute) {
    {
      std::lock_guard lock(mu_);
      if (auto it = cache_.find(x); it != cache_.end()) return it->second;
    }
    Value v = compute();
    std::lock_guard lock(mu_);
    cache_.emplace(x, v);
    return v;
  }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return cache_.size();
  }

 private:
  mutable std::mutex mu_;
  std::unordered_map<Point, Value, PointHash> cache_;
};

// ---------------------------------------------------------------------------

template <class Point, class Value, class Metric>
class InterpolatingModel {
 public:
  static constexpr bool kCategorical = !std::is_floating_point_v<Value>;

  InterpolatingModel() = default;

  /// Builds a model from deduplicated pairs. Use `fit` rather than calling
  /// this directly.
  InterpolatingModel(std::vector<Point> xs, std::vector<Value> ys, Metric metric,
                     double epsilon, double exponent)
      : xs_(std::move(xs)), ys_(std::move(ys)), metric_(std::move(metric)),
        epsilon_(epsilon), exponent_(exponent) {
    index_.reserve(xs_.size() * 2);
    for (std::size_t i = 0; i < xs_.size(); ++i) index_.emplace(xs_[i], i);
    if constexpr (kCategorical && BucketedMetric<Metric, Point>) {
      for (std::size_t i = 0; i < xs_.size(); ++i) {
        buckets_[metric_.bucket(xs_[i])].push_back(i);
      }
    }
  }

  std::size_t size() const { return xs_.size(); }
  const Point& point(std::size_t i) const { return xs_[i]; }
  const Value& value(std::size_t i) const { return ys_[i]; }
  double epsilon() const { return epsilon_; }
  double exponent() const { return exponent_; }
  const Metric& metric() const { return metric_; }

  /// Stored value if `x` is a training input.
  const Value* lookup(const Point& x) const {
    auto it = index_.find(x);
    return it == index_.end() ? nullptr : &ys_[it->second];
  }

  Value predict(const Point& x) const {
    if (const Value* hit = lookup(x)) return *hit;
    if (xs_.empty()) throw std::logic_error("predict on an empty model");
    if constexpr (kCategorical) {
      if constexpr (BucketedMetric<Metric, Point>) {
        if (auto v = predict_bucketed(x)) return *v;
      }
      return predict_categorical(x, all_indices());
    } else {
      return predict_real(x);
    }
  }

  /// Strict mode throws UnseenInputError instead of interpolating.
  Value predict(const Point& x, UnseenPolicy policy) const {
    if (policy == UnseenPolicy::kStrict) {
      if (const Value* hit = lookup(x)) return *hit;
      throw UnseenInputError(0, "unseen input " + point_string(x));
    }
    return predict(x);
  }

  // ---- serialization: versioned header, then one JSON record per line ----

  static constexpr std::string_view kHeader = "lengthgen-model 1";

  void save(std::ostream& os) const {
    os << kHeader << '\n';
    json head = {{"metric", metric_.to_json()},
                 {"epsilon", hexfloat(epsilon_)},
                 {"exponent", hexfloat(exponent_)},
                 {"count", xs_.size()}};
    os << head.dump() << '\n';
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      os << json::array({encode(xs_[i]), encode(ys_[i])}).dump() << '\n';
    }
  }

  static InterpolatingModel load(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kHeader) {
      throw FormatError("model file: missing or unknown header");
    }
    if (!std::getline(is, line)) throw FormatError("model file: missing metadata");
    const json head = json::parse(line);
    if (head.at("metric").at("id").get<std::string>() != Metric::kId) {
      throw FormatError("model file: metric mismatch");
    }
    const auto count = head.at("count").get<std::size_t>();
    std::vector<Point> xs;
    std::vector<Value> ys;
    xs.reserve(count);
    ys.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (!std::getline(is, line)) throw FormatError("model file: truncated");
      const json rec = json::parse(line);
      xs.push_back(decode<Point>(rec.at(0)));
      ys.push_back(decode<Value>(rec.at(1)));
    }
    return InterpolatingModel(std::move(xs), std::move(ys),
                              Metric::from_json(head.at("metric")),
                              parse_hexfloat(head.at("epsilon").get<std::string>()),
                              parse_hexfloat(head.at("exponent").get<std::string>()));
  }

 private:
  std::vector<std::size_t> all_indices() const {
    std::vector<std::size_t> idx(xs_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
  }

  double log_weight(double d) const {
    return exponent_ * (std::log(epsilon_) - std::log(d));
  }

  Value predict_real(const Point& x) const {
    std::vector<double> lw(xs_.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      lw[i] = log_weight(metric_(x, xs_[i]));
      top = std::max(top, lw[i]);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      const double w = std::exp(lw[i] - top);
      num += w * static_cast<double>(ys_[i]);
      den += w;
    }
    return static_cast<Value>(num / den);
  }

  struct Tally {
    double mass = 0.0;
    double nearest = std::numeric_limits<double>::infinity();
    std::size_t first = 0;
  };

  // Label masses relative to the largest log weight among `idx`.
  std::map<Value, Tally> tally(const Point& x, const std::vector<std::size_t>& idx,
                               double* top_out) const {
    std::vector<double> d(idx.size()), lw(idx.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      d[k] = metric_(x, xs_[idx[k]]);
      lw[k] = log_weight(d[k]);
      top = std::max(top, lw[k]);
    }
    std::map<Value, Tally> out;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto [it, fresh] = out.try_emplace(ys_[idx[k]]);
      Tally& t = it->second;
      if (fresh) t.first = idx[k];
      t.mass += std::exp(lw[k] - top);
      t.nearest = std::min(t.nearest, d[k]);
      t.first = std::min(t.first, idx[k]);
    }
    if (top_out) *top_out = top;
    return out;
  }

  static const Value& winner(const std::map<Value, Tally>& t) {
    auto best = t.begin();
    for (auto it = t.begin(); it != t.end(); ++it) {
      const Tally& a = it->second;
      const Tally& b = best->second;
      if (a.mass > b.mass ||
          (a.mass == b.mass &&
           (a.nearest < b.nearest || (a.nearest == b.nearest && a.first < b.first)))) {
        best = it;
      }
    }
    return best->first;
  }

  Value predict_categorical(const Point& x, const std::vector<std::size_t>& idx) const {
    return winner(tally(x, idx, nullptr));
  }

  // Exact shortcut: every point outside x's bucket is at least `gap` away, so
  // their total mass is bounded. If the bucket's winner leads by more than
  // that bound the full sum has the same argmax.
  std::optional<Value> predict_bucketed(const Point& x) const {
    auto it = buckets_.find(metric_.bucket(x));
    if (it == buckets_.end()) return std::nullopt;
    double top = 0.0;
    const auto t = tally(x, it->second, &top);
    double best = 0.0, second = 0.0;
    for (const auto& [label, s] : t) {
      if (s.mass > best) {
        second = best;
        best = s.mass;
      } else if (s.mass > second) {
        second = s.mass;
      }
    }
    const double far = static_cast<double>(xs_.size() - it->second.size());
    const double bound = far * std::exp(log_weight(metric_.bucket_gap()) - top);
    if (best - second > bound) return winner(t);
    return std::nullopt;
  }

  static json encode(const TokenTuple& x) { return x; }
  static json encode(const RealPoint& x) {
    json out = json::array();
    for (double v : x) out.push_back(hexfloat(v));
    return out;
  }
  static json encode(const Token& y) { return y; }
  static json encode(double y) { return hexfloat(y); }

  template <class T>
  static T decode(const json& j) {
    if constexpr (std::is_same_v<T, TokenTuple>) {
      return j.get<TokenTuple>();
    } else if constexpr (std::is_same_v<T, RealPoint>) {
      RealPoint out;
      for (const auto& v : j) out.push_back(parse_hexfloat(v.get<std::string>()));
      return out;
    } else if constexpr (std::is_same_v<T, Token>) {
      return j.get<Token>();
    } else {
      return parse_hexfloat(j.get<std::string>());
    }
  }

  std::vector<Point> xs_;
  std::vector<Value> ys_;
  Metric metric_{};
  double epsilon_ = 1.0;
  double exponent_ = 1.0;
  std::unordered_map<Point, std::size_t, PointHash> index_;
  std::unordered_map<std::string, std::vector<std::size_t>> buckets_;
};

// ---------------------------------------------------------------------------
// Fitting

/// Minimum pairwise distance. Sorted neighbours are tried first so that the
/// quadratic scan can stop as soon as the metric's infimum is reached.
template <class Point, class Metric>
double min_pairwise_distance(const std::vector<Point>& xs, const Metric& metric) {
  if (xs.size() < 2) return 1.0;
  const double floor = metric.infimum();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    best = std::min(best, metric(xs[order[k - 1]], xs[order[k]]));
    if (best <= floor) return best;
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      best = std::min(best, metric(xs[i], xs[j]));
      if (best <= floor) return best;
    }
  }
  return best;
}

template <class Point, class Value, class Metric>
InterpolatingModel<Point, Value, Metric> fit(const LabeledDataset<Point, Value>& d,
                                             Metric metric, double exponent = 1.0) {
  if (d.pairs.empty()) throw std::invalid_argument("fit needs at least one pair");
  std::vector<Point> xs;
  std::vector<Value> ys;
  std::unordered_map<Point, std::size_t, PointHash> seen;
  seen.reserve(d.pairs.size() * 2);
  for (const auto& [x, y] : d.pairs) {
    auto [it, fresh] = seen.try_emplace(x, xs.size());
    if (fresh) {
      xs.push_back(x);
      ys.push_back(y);
    } else if (!(ys[it->second] == y)) {
      throw ContradictionError("conflicting outputs at " + point_string(x) + ": " +
                               label_key(ys[it->second]) + " vs " + label_key(y));
    }
  }
  const double eps = min_pairwise_distance(xs, metric);
  return InterpolatingModel<Point, Value, Metric>(std::move(xs), std::move(ys),
                                                  std::move(metric), eps, exponent);
}

/// Fits D extended with the error points, which must all be new inputs.
template <class Point, class Value, class Metric>
InterpolatingModel<Point, Value, Metric> fit_adversarial(
    const LabeledDataset<Point, Value>& d, const AdversarialSpec<Point, Value>& spec,
    Metric metric, double exponent = 1.0) {
  std::unordered_map<Point, std::size_t, PointHash> known;
  for (std::size_t i = 0; i < d.pairs.size(); ++i) known.emplace(d.pairs[i].first, i);
  LabeledDataset<Point, Value> extended = d;
  for (const auto& [x, y] : spec.err_points) {
    if (known.count(x)) {
      throw ContradictionError("error point collides with training input " +
                               point_string(x));
    }
    extended.add(x, y);
  }
  return fit(extended, std::move(metric), exponent);
}

}  // namespace lengthgen
