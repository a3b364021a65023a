#include "wordimp/vocab.hpp"

#include <algorithm>
#include <stdexcept>

namespace wordimp {

Vocab::Vocab() {
  add("<bos>");
  add("<eos>");
  add("<pad>");
  add("<unk>");
}

int Vocab::add(const std::string& token, std::int64_t count) {
  auto it = index_.find(token);
  if (it != index_.end()) {
    frequency_[it->second] += count;
    return it->second;
  }
  int idx = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  frequency_.push_back(count);
  index_.emplace(token, idx);
  return idx;
}

int Vocab::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& token) const {
  return index_.count(token) != 0;
}

std::vector<int> Vocab::most_frequent(int n) const {
  std::vector<int> idx;
  for (int i = kNumReserved; i < size(); ++i) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [this](int a, int b) {
    return frequency_[a] > frequency_[b];
  });
  if (static_cast<int>(idx.size()) > n) idx.resize(n);
  return idx;
}

void SentencePair::validate() const {
  if (source.empty() || target.empty())
    throw std::invalid_argument("SentencePair: empty source or target");
  int pos = 0;
  for (const auto& span : subword_spans) {
    if (span.begin != pos || span.end <= span.begin)
      throw std::invalid_argument(
          "SentencePair: subword spans do not partition the source");
    pos = span.end;
  }
  if (pos != source_len())
    throw std::invalid_argument(
        "SentencePair: subword spans do not cover the source");
  for (int t : source)
    if (t == Vocab::kPad)
      throw std::invalid_argument("SentencePair: PAD inside source");
  for (int t : target)
    if (t == Vocab::kPad)
      throw std::invalid_argument("SentencePair: PAD inside target");
}

}  // namespace wordimp
