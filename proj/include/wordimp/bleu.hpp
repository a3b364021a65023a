#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace wordimp {

/// Clipped n-gram match statistics for orders 1..4. Accumulation over a
/// corpus is a commutative monoid, so reduction order is free.
struct BleuStats {
  std::array<std::int64_t, 4> matches{};
  std::array<std::int64_t, 4> totals{};
  std::int64_t hyp_len = 0;
  std::int64_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const std::vector<int>& hypothesis,
                     const std::vector<int>& reference, int max_order = 4);

/// Corpus BLEU: geometric mean of modified precisions times the brevity
/// penalty; zero when any order has zero matches (no smoothing).
double bleu_from_stats(const BleuStats& stats, int max_order = 4);

double corpus_bleu(const std::vector<std::vector<int>>& hypotheses,
                   const std::vector<std::vector<int>>& references,
                   int max_order = 4);

/// Sentence-level BLEU with add-one smoothing on every precision, used only
/// where single sentences must be scored (the erasure estimator).
double sentence_bleu_smoothed(const std::vector<int>& hypothesis,
                              const std::vector<int>& reference,
                              int max_order = 4);

}  // namespace wordimp
