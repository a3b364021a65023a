#include "wordimp/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wordimp {

std::vector<std::string> SubwordSplitter::split(const std::string& word) const {
  auto it = surface_freq_.find(word);
  std::int64_t freq = it == surface_freq_.end() ? 0 : it->second;
  if (freq >= config_.min_frequency || config_.min_frequency <= 1 ||
      static_cast<int>(word.size()) <= config_.piece_len)
    return {word};
  std::vector<std::string> pieces;
  for (size_t pos = 0; pos < word.size(); pos += config_.piece_len) {
    std::string piece = word.substr(pos, config_.piece_len);
    if (pos + config_.piece_len < word.size()) piece += "@@";
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

SentencePair encode_pair(const std::string& source_line,
                         const std::string& target_line, const Vocab& vocab,
                         const SubwordSplitter& splitter) {
  SentencePair pair;
  pair.source_surface = split_whitespace(source_line);
  for (const auto& word : pair.source_surface) {
    SubwordSpan span;
    span.begin = pair.source_len();
    for (const auto& piece : splitter.split(word))
      pair.source.push_back(vocab.lookup(piece));
    span.end = pair.source_len();
    pair.subword_spans.push_back(span);
  }
  for (const auto& word : split_whitespace(target_line))
    for (const auto& piece : splitter.split(word))
      pair.target.push_back(vocab.lookup(piece));
  return pair;
}

Corpus build_corpus(const std::vector<std::string>& source_lines,
                    const std::vector<std::string>& target_lines,
                    const SubwordConfig& config) {
  if (source_lines.size() != target_lines.size())
    throw std::invalid_argument("parallel corpus length mismatch");
  std::unordered_map<std::string, std::int64_t> surface_freq;
  for (const auto& line : source_lines)
    for (const auto& w : split_whitespace(line)) ++surface_freq[w];
  for (const auto& line : target_lines)
    for (const auto& w : split_whitespace(line)) ++surface_freq[w];

  Corpus corpus;
  corpus.splitter = SubwordSplitter(config, std::move(surface_freq));

  // First pass registers subword types with their corpus counts.
  for (const auto& lines : {&source_lines, &target_lines})
    for (const auto& line : *lines)
      for (const auto& w : split_whitespace(line))
        for (const auto& piece : corpus.splitter.split(w))
          corpus.vocab.add(piece, 1);

  for (size_t i = 0; i < source_lines.size(); ++i) {
    if (split_whitespace(source_lines[i]).empty() ||
        split_whitespace(target_lines[i]).empty())
      continue;  // skip blank lines rather than emit degenerate pairs
    corpus.pairs.push_back(encode_pair(source_lines[i], target_lines[i],
                                       corpus.vocab, corpus.splitter));
  }
  return corpus;
}

}  // namespace wordimp
