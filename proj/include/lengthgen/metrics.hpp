#pragma once

// Distance functions for the interpolating learner.
//
// Every metric exposes `operator()` and `infimum()`, the smallest positive
// distance it can produce (0 when unbounded below). Bucketed metrics also
// expose `bucket()` and `bucket_gap()`: points in different buckets are at
// least `bucket_gap()` apart, which lets categorical prediction prune.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "lengthgen/core.hpp"

namespace lengthgen {

using RealPoint = std::vector<double>;
using json = nlohmann::json;

inline std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double parse_hexfloat(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw FormatError("bad float literal: " + s);
  return v;
}

inline const Token& token_or_boundary(const TokenTuple& t, std::size_t i) {
  return i < t.size() ? t[i] : kBoundary;
}

/// Count of differing positions; the shorter tuple is padded with the
/// boundary sentinel, which differs from every task token.
struct DiscreteMetric {
  static constexpr std::string_view kId = "discrete";

  double operator()(const TokenTuple& a, const TokenTuple& b) const {
    const std::size_t n = std::max(a.size(), b.size());
    std::size_t diff = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (token_or_boundary(a, i) != token_or_boundary(b, i)) ++diff;
    }
    return static_cast<double>(diff);
  }
  double infimum() const { return 1.0; }
  json to_json() const { return {{"id", kId}}; }
  static DiscreteMetric from_json(const json&) { return {}; }
};

struct EuclideanMetric {
  static constexpr std::string_view kId = "euclidean";

  double operator()(const RealPoint& a, const RealPoint& b) const {
    if (a.size() != b.size()) {
      throw std::invalid_argument("euclidean metric: dimension mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      s += d * d;
    }
    return std::sqrt(s);
  }
  double infimum() const { return 0.0; }
  json to_json() const { return {{"id", kId}}; }
  static EuclideanMetric from_json(const json&) { return {}; }
};

/// Weighted overlap metric whose weights are selected from the training data.
///
/// For each value of the pivot position (or globally when there is no pivot)
/// a greedy pass picks the smallest set of positions on which the labels are
/// a function of the projection. Positions outside that set weigh `delta`,
/// so all of them together weigh less than one picked position.
///
/// With a pivot, picked positions are tiered by their distance from it and
/// each tier outweighs every farther tier combined. A query whose projection
/// was never seen then takes its label from the points that share the most
/// context closest to the pivot. Points whose pivot values differ are
/// farther apart than any two that agree. Without a pivot the picked
/// positions weigh 1. Positions past `width`, and pivot values never seen,
/// weigh 1 as well.
class RelevanceMetric {
 public:
  static constexpr std::string_view kId = "relevance";

  RelevanceMetric() = default;
  RelevanceMetric(std::size_t width, std::optional<std::size_t> pivot,
                  std::map<Token, std::vector<std::size_t>> relevant)
      : width_(width), pivot_(pivot), relevant_(std::move(relevant)) {
    delta_ = 1.0 / (4.0 * static_cast<double>(std::max<std::size_t>(width_, 1)));
    double heaviest = static_cast<double>(width_);
    for (const auto& [key, positions] : relevant_) {
      std::vector<double> w(width_, delta_);
      std::map<std::size_t, std::vector<std::size_t>, std::greater<>> tiers;
      for (auto p : positions) {
        if (p < width_) tiers[pivot_ ? distance(p, *pivot_) : 0].push_back(p);
      }
      // Farthest tier first: each tier weighs one more than everything beyond it.
      double beyond = 0.0;
      for (const auto& [tier, ps] : tiers) {
        const double wt = beyond + 1.0;
        for (auto p : ps) w[p] = wt;
        beyond += wt * static_cast<double>(ps.size());
      }
      heaviest = std::max(heaviest, beyond + 1.0);
      weights_.emplace(key, std::move(w));
    }
    pivot_gap_ = heaviest + 1.0;
  }

  /// Greedy relevance selection. `label_key` maps a label to a comparable
  /// string.
  template <class Value, class LabelKey>
  static RelevanceMetric learn(std::span<const TokenTuple> xs,
                               std::span<const Value> ys,
                               std::optional<std::size_t> pivot,
                               LabelKey label_key) {
    if (xs.size() != ys.size()) {
      throw std::invalid_argument("relevance learn: size mismatch");
    }
    std::size_t width = 0;
    for (const auto& x : xs) width = std::max(width, x.size());
    if (pivot && *pivot >= width && !xs.empty()) {
      throw std::invalid_argument("relevance learn: pivot outside width");
    }

    std::map<Token, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      groups[pivot ? token_or_boundary(xs[i], *pivot) : Token{}].push_back(i);
    }

    std::vector<std::size_t> order(width);
    for (std::size_t i = 0; i < width; ++i) order[i] = i;
    if (pivot) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return distance(a, *pivot) < distance(b, *pivot);
      });
    }

    std::vector<std::string> labels(ys.size());
    for (std::size_t i = 0; i < ys.size(); ++i) labels[i] = label_key(ys[i]);

    auto conflicts = [&](const std::vector<std::size_t>& members,
                         const std::vector<std::size_t>& positions) {
      std::unordered_map<std::string, std::pair<const std::string*, bool>> seen;
      seen.reserve(members.size() * 2);
      std::size_t count = 0;
      std::string key;
      for (auto idx : members) {
        key.clear();
        for (auto p : positions) {
          key += token_or_boundary(xs[idx], p);
          key.push_back('\x1f');
        }
        auto [it, inserted] = seen.try_emplace(key, &labels[idx], false);
        if (!inserted && !it->second.second && *it->second.first != labels[idx]) {
          it->second.second = true;
          ++count;
        }
      }
      return count;
    };

    std::map<Token, std::vector<std::size_t>> relevant;
    for (const auto& [key, members] : groups) {
      std::vector<std::size_t> chosen;
      if (pivot) chosen.push_back(*pivot);
      std::size_t current = conflicts(members, chosen);
      while (current > 0 && chosen.size() < width) {
        std::size_t best_pos = width;
        std::size_t best_conf = 0;
        for (auto p : order) {
          if (std::find(chosen.begin(), chosen.end(), p) != chosen.end()) continue;
          chosen.push_back(p);
          const std::size_t c = conflicts(members, chosen);
          chosen.pop_back();
          if (best_pos == width || c < best_conf) {
            best_pos = p;
            best_conf = c;
          }
        }
        chosen.push_back(best_pos);
        current = best_conf;
      }
      std::sort(chosen.begin(), chosen.end());
      relevant.emplace(key, std::move(chosen));
    }
    return RelevanceMetric(width, pivot, std::move(relevant));
  }

  double operator()(const TokenTuple& a, const TokenTuple& b) const {
    const std::size_t n = std::max(a.size(), b.size());
    if (pivot_ &&
        token_or_boundary(a, *pivot_) != token_or_boundary(b, *pivot_)) {
      return std::max(pivot_gap_, static_cast<double>(n));
    }
    const std::vector<double>* w = weights_for(a);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (token_or_boundary(a, i) == token_or_boundary(b, i)) continue;
      d += weight(w, i);
    }
    return d;
  }

  double infimum() const {
    for (const auto& [key, w] : weights_) {
      for (double f : w) {
        if (f < 1.0) return delta_;
      }
    }
    return 1.0;
  }

  /// Projection onto the relevant positions (and the pivot).
  std::string bucket(const TokenTuple& x) const {
    std::string key;
    if (pivot_) {
      key += token_or_boundary(x, *pivot_);
      key.push_back('\x1e');
    }
    const std::vector<double>* w = weights_for(x);
    for (std::size_t i = 0; i < std::max(x.size(), width_); ++i) {
      if (weight(w, i) < 1.0) continue;
      key += token_or_boundary(x, i);
      key.push_back('\x1f');
    }
    return key;
  }
  double bucket_gap() const { return 1.0; }

  std::size_t width() const { return width_; }
  std::optional<std::size_t> pivot() const { return pivot_; }
  double delta() const { return delta_; }
  const std::map<Token, std::vector<std::size_t>>& relevant() const { return relevant_; }

  json to_json() const {
    json sets = json::object();
    for (const auto& [k, v] : relevant_) sets[k] = v;
    return {{"id", kId},
            {"width", width_},
            {"pivot", pivot_ ? json(*pivot_) : json(nullptr)},
            {"relevant", sets}};
  }
  static RelevanceMetric from_json(const json& j) {
    std::map<Token, std::vector<std::size_t>> sets;
    for (auto it = j.at("relevant").begin(); it != j.at("relevant").end(); ++it) {
      sets.emplace(it.key(), it.value().get<std::vector<std::size_t>>());
    }
    std::optional<std::size_t> pivot;
    if (!j.at("pivot").is_null()) pivot = j.at("pivot").get<std::size_t>();
    return RelevanceMetric(j.at("width").get<std::size_t>(), pivot, std::move(sets));
  }

 private:
  const std::vector<double>* weights_for(const TokenTuple& x) const {
    static const Token kNoPivot;
    auto it = weights_.find(pivot_ ? token_or_boundary(x, *pivot_) : kNoPivot);
    return it == weights_.end() ? nullptr : &it->second;
  }
  double weight(const std::vector<double>* w, std::size_t i) const {
    if (!w || i >= w->size()) return 1.0;
    return (*w)[i];
  }

  std::size_t width_ = 0;
  std::optional<std::size_t> pivot_;
  double delta_ = 0.25;
  double pivot_gap_ = 1.0;
  std::map<Token, std::vector<std::size_t>> relevant_;
  std::map<Token, std::vector<double>> weights_;
};

}  // namespace lengthgen
