#include "wordimp/bleu.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace wordimp {

namespace {

using NgramCounts = std::map<std::vector<int>, std::int64_t>;

NgramCounts count_ngrams(const std::vector<int>& tokens, int order) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < order) return counts;
  for (size_t i = 0; i + order <= tokens.size(); ++i)
    ++counts[std::vector<int>(tokens.begin() + i, tokens.begin() + i + order)];
  return counts;
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (int i = 0; i < 4; ++i) {
    matches[i] += other.matches[i];
    totals[i] += other.totals[i];
  }
  hyp_len += other.hyp_len;
  ref_len += other.ref_len;
  return *this;
}

BleuStats bleu_stats(const std::vector<int>& hypothesis,
                     const std::vector<int>& reference, int max_order) {
  if (max_order < 1 || max_order > 4)
    throw std::invalid_argument("max_order must be in 1..4");
  BleuStats s;
  s.hyp_len = static_cast<std::int64_t>(hypothesis.size());
  s.ref_len = static_cast<std::int64_t>(reference.size());
  for (int order = 1; order <= max_order; ++order) {
    NgramCounts hyp = count_ngrams(hypothesis, order);
    NgramCounts ref = count_ngrams(reference, order);
    for (const auto& [ngram, count] : hyp) {
      s.totals[order - 1] += count;
      auto it = ref.find(ngram);
      if (it != ref.end())
        s.matches[order - 1] += std::min(count, it->second);
    }
  }
  return s;
}

double bleu_from_stats(const BleuStats& stats, int max_order) {
  if (stats.hyp_len == 0) return 0.0;
  double log_precision = 0.0;
  for (int i = 0; i < max_order; ++i) {
    if (stats.matches[i] == 0) return 0.0;
    log_precision +=
        std::log(double(stats.matches[i]) / double(stats.totals[i]));
  }
  log_precision /= max_order;
  double bp = stats.hyp_len < stats.ref_len
                  ? std::exp(1.0 - double(stats.ref_len) / stats.hyp_len)
                  : 1.0;
  return bp * std::exp(log_precision);
}

double corpus_bleu(const std::vector<std::vector<int>>& hypotheses,
                   const std::vector<std::vector<int>>& references,
                   int max_order) {
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("hypothesis/reference count mismatch");
  if (hypotheses.empty()) throw std::invalid_argument("empty corpus");
  BleuStats acc;
  for (size_t i = 0; i < hypotheses.size(); ++i)
    acc += bleu_stats(hypotheses[i], references[i], max_order);
  return bleu_from_stats(acc, max_order);
}

double sentence_bleu_smoothed(const std::vector<int>& hypothesis,
                              const std::vector<int>& reference,
                              int max_order) {
  BleuStats s = bleu_stats(hypothesis, reference, max_order);
  if (s.hyp_len == 0) return 0.0;
  double log_precision = 0.0;
  for (int i = 0; i < max_order; ++i)
    log_precision +=
        std::log(double(s.matches[i] + 1) / double(s.totals[i] + 1));
  log_precision /= max_order;
  double bp = s.hyp_len < s.ref_len
                  ? std::exp(1.0 - double(s.ref_len) / s.hyp_len)
                  : 1.0;
  return bp * std::exp(log_precision);
}

}  // namespace wordimp
