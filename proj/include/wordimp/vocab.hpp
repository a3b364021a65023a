#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace wordimp {

/// Token inventory with training-corpus frequencies. Reserved symbols occupy
/// fixed indices 0..3.
class Vocab {
 public:
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kPad = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumReserved = 4;

  Vocab();

  /// Adds a token (or bumps its frequency by `count` if present).
  int add(const std::string& token, std::int64_t count = 0);

  /// Index of a token, kUnk if absent.
  int lookup(const std::string& token) const;
  bool contains(const std::string& token) const;

  const std::string& token(int index) const { return tokens_.at(index); }
  std::int64_t frequency(int index) const { return frequency_.at(index); }
  void set_frequency(int index, std::int64_t f) { frequency_.at(index) = f; }

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::int64_t>& frequencies() const { return frequency_; }

  /// Indices of the `n` most frequent non-reserved tokens (frequency desc,
  /// index asc on ties).
  std::vector<int> most_frequent(int n) const;

 private:
  std::vector<std::string> tokens_;
  std::vector<std::int64_t> frequency_;
  std::unordered_map<std::string, int> index_;
};

/// Surface words mapped to contiguous subword index ranges.
struct SubwordSpan {
  int begin = 0;  // first subword index
  int end = 0;    // one past last
};

/// A tokenized parallel sentence. `source`/`target` hold subword indices;
/// `source_surface` the original whitespace tokens; `subword_spans[i]` the
/// range of source indices produced by surface word i. Spans partition
/// 0..M-1 exactly.
struct SentencePair {
  std::vector<int> source;
  std::vector<int> target;
  std::vector<std::string> source_surface;
  std::vector<SubwordSpan> subword_spans;

  int source_len() const { return static_cast<int>(source.size()); }
  int target_len() const { return static_cast<int>(target.size()); }
  int surface_len() const { return static_cast<int>(subword_spans.size()); }

  void validate() const;  // throws on span gaps/overlaps or interior PAD
};

}  // namespace wordimp
