#pragma once

// Shared vocabulary: tokens, one-line sequences, column grids, index distance
// and fixed-arity windows padded with a boundary sentinel.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lengthgen {

/// One element of a task alphabet. Grid columns are multi-character tokens.
using Token = std::string;
using TokenTuple = std::vector<Token>;

/// Boundary sentinel. Task alphabets are ASCII, so it never collides.
inline const Token kBoundary = "\xE2\x8A\xA5";  // U+22A5

using Mask = std::vector<bool>;
using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed task text or intermediate state.
struct FormatError : Error {
  using Error::Error;
};

/// A causal function was queried outside its domain.
struct DomainError : Error {
  using Error::Error;
};

/// Two training pairs share an input but disagree on the output.
struct ContradictionError : Error {
  using Error::Error;
};

/// Graph is not a DAG.
struct StructureError : Error {
  using Error::Error;
};

struct AlreadySolvedError : Error {
  using Error::Error;
};

/// Identical window observed with conflicting labels.
struct AmbiguityError : Error {
  AmbiguityError(TokenTuple w, std::string a, std::string b, std::string msg)
      : Error(std::move(msg)), window(std::move(w)), first_label(std::move(a)),
        second_label(std::move(b)) {}
  TokenTuple window;
  std::string first_label;
  std::string second_label;
};

/// Strict-mode lookup of an input that was never seen during fitting.
struct UnseenInputError : Error {
  UnseenInputError(std::size_t pos, std::string msg)
      : Error(std::move(msg)), position(pos) {}
  std::size_t position;
};

// ---------------------------------------------------------------------------
// Sequences

enum class SeqKind { kLine, kGrid };

/// A task state. One-line sequences hold one token per character; grids hold
/// one token per column (top-to-bottom characters), so index distance counts
/// columns.
class Seq {
 public:
  Seq() = default;

  static Seq line(std::string_view text) {
    Seq s;
    s.tokens_.reserve(text.size());
    for (char c : text) s.tokens_.emplace_back(1, c);
    return s;
  }

  /// Builds a grid from lines of identical width.
  static Seq grid(std::span<const std::string> lines) {
    if (lines.empty()) throw FormatError("grid needs at least one line");
    const std::size_t width = lines.front().size();
    for (const auto& l : lines) {
      if (l.size() != width) throw FormatError("grid lines differ in width");
    }
    Seq s;
    s.kind_ = SeqKind::kGrid;
    s.rows_ = lines.size();
    s.tokens_.resize(width);
    for (std::size_t c = 0; c < width; ++c) {
      for (const auto& l : lines) s.tokens_[c].push_back(l[c]);
    }
    return s;
  }

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const Token& operator[](std::size_t i) const { return tokens_[i]; }
  std::span<const Token> tokens() const { return tokens_; }
  SeqKind kind() const { return kind_; }
  std::size_t rows() const { return rows_; }

  /// Lines of a grid (a one-line sequence yields one line).
  std::vector<std::string> lines() const {
    if (kind_ == SeqKind::kLine) return {text()};
    std::vector<std::string> out(rows_);
    for (const auto& col : tokens_) {
      for (std::size_t r = 0; r < rows_; ++r) out[r].push_back(col[r]);
    }
    return out;
  }

  /// Text form; grid lines are joined with '\n'.
  std::string text() const {
    std::string out;
    if (kind_ == SeqKind::kLine) {
      for (const auto& t : tokens_) out += t;
      return out;
    }
    const auto ls = lines();
    for (std::size_t r = 0; r < ls.size(); ++r) {
      if (r) out.push_back('\n');
      out += ls[r];
    }
    return out;
  }

  friend bool operator==(const Seq&, const Seq&) = default;

 private:
  std::vector<Token> tokens_;
  SeqKind kind_ = SeqKind::kLine;
  std::size_t rows_ = 1;
};

// ---------------------------------------------------------------------------
// Distance and windows

/// d(v_i, v_j) = |i - j| on original sequence indices.
constexpr std::size_t distance(std::size_t i, std::size_t j) {
  return i > j ? i - j : j - i;
}

struct Window {
  std::size_t center = 0;
  std::size_t radius = 0;
  TokenTuple content;  // 2*radius+1 tokens
};

/// Tokens at positions [pos - before, pos + after], boundary-padded.
inline TokenTuple window_tokens(std::span<const Token> s, std::size_t pos,
                                std::size_t before, std::size_t after) {
  TokenTuple out;
  out.reserve(before + after + 1);
  const auto n = static_cast<std::ptrdiff_t>(s.size());
  const auto p = static_cast<std::ptrdiff_t>(pos);
  for (std::ptrdiff_t i = p - static_cast<std::ptrdiff_t>(before);
       i <= p + static_cast<std::ptrdiff_t>(after); ++i) {
    out.push_back(i >= 0 && i < n ? s[static_cast<std::size_t>(i)] : kBoundary);
  }
  return out;
}

inline Window window_at(const Seq& s, std::size_t center, std::size_t radius) {
  if (center >= s.size()) {
    throw std::out_of_range("window center " + std::to_string(center) +
                            " outside sequence of length " +
                            std::to_string(s.size()));
  }
  return Window{center, radius, window_tokens(s.tokens(), center, radius, radius)};
}

/// Joins tokens for messages and keys.
inline std::string join(std::span<const Token> ts, std::string_view sep = "") {
  std::string out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i) out += sep;
    out += ts[i];
  }
  return out;
}

inline std::string mask_string(const Mask& m) {
  std::string out(m.size(), '0');
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) out[i] = '1';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Seeding

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Per-item seed so parallel evaluation never changes results.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0x2545F4914F6CDD1Dull));
}

}  // namespace lengthgen
