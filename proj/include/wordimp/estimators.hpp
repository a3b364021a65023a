#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "wordimp/annotations.hpp"
#include "wordimp/rng.hpp"
#include "wordimp/seqmodel.hpp"

namespace wordimp {

enum class Method { Random, Frequency, Content, Attention, Erasure,
                    Attribution };

const char* method_name(Method m);
Method parse_method(const std::string& name);

/// Per-surface-word importance with a descending ranking (ties broken toward
/// the lower index).
struct ImportanceEstimate {
  Method method = Method::Random;
  Vector scores;             // one per surface word
  std::vector<int> ranking;  // permutation of 0..M-1, descending score
  bool stochastic = false;
};

std::vector<int> ranking_from_scores(const Vector& scores);

ImportanceEstimate estimate_random(const SentencePair& pair, Rng& rng);

/// Training-frequency ranking; the 50 globally most frequent vocabulary types
/// are pushed to the bottom (score -inf).
ImportanceEstimate estimate_frequency(const SentencePair& pair,
                                      const Vocab& vocab,
                                      int exclude_top = 50);

/// Content words (Noun/Verb/Adj) shuffled above the rest.
ImportanceEstimate estimate_content(const SentencePair& pair,
                                    const std::vector<PosTag>& pos, Rng& rng);

/// max over output words of the attention column, softmax-normalized, merged
/// to surface words. pair.target must be the decoded hypothesis.
ImportanceEstimate estimate_attention(const ToyModel& model,
                                      const SentencePair& pair);

/// Supervised: per-word smoothed-BLEU drop when that word alone is masked,
/// negatives clipped, sum-normalized.
ImportanceEstimate estimate_erasure(const ToyModel& model,
                                    const SentencePair& pair,
                                    const std::vector<int>& reference,
                                    int beam = 1, int max_len = 32);

/// Integrated-gradients importance merged to surface words.
ImportanceEstimate estimate_attribution(const ToyModel& model,
                                        const SentencePair& pair, int steps);

/// JSON export: {method, tokens, scores, ranking, seed}.
void write_estimate_json(std::ostream& out, const ImportanceEstimate& est,
                         const std::vector<std::string>& tokens,
                         std::uint64_t seed);

}  // namespace wordimp
