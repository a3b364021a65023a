#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "wordimp/vocab.hpp"

namespace wordimp {

/// Deterministic frequency-threshold subword rule standing in for learned
/// merges: surface words seen at least `min_frequency` times in training stay
/// whole; rarer words are cut into byte chunks of at most `piece_len`, every
/// chunk but the last carrying a "@@" continuation marker.
struct SubwordConfig {
  int min_frequency = 1;  // 1 = never split
  int piece_len = 4;
};

class SubwordSplitter {
 public:
  SubwordSplitter() = default;
  SubwordSplitter(SubwordConfig config,
                  std::unordered_map<std::string, std::int64_t> surface_freq)
      : config_(config), surface_freq_(std::move(surface_freq)) {}

  std::vector<std::string> split(const std::string& word) const;
  const SubwordConfig& config() const { return config_; }
  const std::unordered_map<std::string, std::int64_t>& surface_frequencies()
      const {
    return surface_freq_;
  }

 private:
  SubwordConfig config_;
  std::unordered_map<std::string, std::int64_t> surface_freq_;
};

struct Corpus {
  Vocab vocab;
  SubwordSplitter splitter;
  std::vector<SentencePair> pairs;
};

std::vector<std::string> split_whitespace(const std::string& line);
std::vector<std::string> read_lines(const std::string& path);

/// Builds vocab + splitter from parallel training lines and encodes them.
Corpus build_corpus(const std::vector<std::string>& source_lines,
                    const std::vector<std::string>& target_lines,
                    const SubwordConfig& config = {});

/// Encodes one sentence pair against an existing vocab/splitter; OOV subwords
/// map to UNK.
SentencePair encode_pair(const std::string& source_line,
                         const std::string& target_line, const Vocab& vocab,
                         const SubwordSplitter& splitter);

}  // namespace wordimp
