#include "wordimp/estimators.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"
#include "wordimp/attribution.hpp"
#include "wordimp/bleu.hpp"

namespace wordimp {

const char* method_name(Method m) {
  switch (m) {
    case Method::Random: return "random";
    case Method::Frequency: return "frequency";
    case Method::Content: return "content";
    case Method::Attention: return "attention";
    case Method::Erasure: return "erasure";
    case Method::Attribution: return "attribution";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::Random, Method::Frequency, Method::Content,
                   Method::Attention, Method::Erasure, Method::Attribution})
    if (name == method_name(m)) return m;
  throw std::invalid_argument("unknown estimator: " + name);
}

std::vector<int> ranking_from_scores(const Vector& scores) {
  std::vector<int> order(scores.size());
  for (int i = 0; i < scores.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&scores](int a, int b) { return scores(a) > scores(b); });
  return order;
}

ImportanceEstimate estimate_random(const SentencePair& pair, Rng& rng) {
  ImportanceEstimate est;
  est.method = Method::Random;
  est.stochastic = true;
  est.scores.resize(pair.surface_len());
  for (int i = 0; i < pair.surface_len(); ++i) est.scores(i) = rng.uniform();
  est.ranking = ranking_from_scores(est.scores);
  return est;
}

ImportanceEstimate estimate_frequency(const SentencePair& pair,
                                      const Vocab& vocab, int exclude_top) {
  std::unordered_set<int> excluded;
  for (int idx : vocab.most_frequent(exclude_top)) excluded.insert(idx);

  ImportanceEstimate est;
  est.method = Method::Frequency;
  est.scores.resize(pair.surface_len());
  for (int w = 0; w < pair.surface_len(); ++w) {
    const std::string& surface = pair.source_surface[w];
    if (vocab.contains(surface)) {
      int idx = vocab.lookup(surface);
      est.scores(w) = excluded.count(idx)
                          ? -std::numeric_limits<double>::infinity()
                          : double(vocab.frequency(idx));
    } else {
      // Split word: mean subword frequency; pieces are rare by construction
      // so none of them can sit in the global top bucket.
      const SubwordSpan& span = pair.subword_spans[w];
      double sum = 0.0;
      for (int i = span.begin; i < span.end; ++i)
        sum += double(vocab.frequency(pair.source[i]));
      est.scores(w) = sum / double(span.end - span.begin);
    }
  }
  est.ranking = ranking_from_scores(est.scores);
  return est;
}

ImportanceEstimate estimate_content(const SentencePair& pair,
                                    const std::vector<PosTag>& pos, Rng& rng) {
  if (static_cast<int>(pos.size()) != pair.surface_len())
    throw std::invalid_argument("POS annotation length mismatch");
  ImportanceEstimate est;
  est.method = Method::Content;
  est.stochastic = true;
  est.scores.resize(pair.surface_len());
  for (int w = 0; w < pair.surface_len(); ++w) {
    bool content = pos[w] == PosTag::Noun || pos[w] == PosTag::Verb ||
                   pos[w] == PosTag::Adj;
    est.scores(w) = (content ? 1.0 : 0.0) + rng.uniform();
  }
  est.ranking = ranking_from_scores(est.scores);
  return est;
}

ImportanceEstimate estimate_attention(const ToyModel& model,
                                      const SentencePair& pair) {
  if (pair.target.empty())
    throw std::invalid_argument("attention estimator needs a hypothesis");
  Matrix att = model.attention_scores(pair.source, pair.target);
  Vector maxed = att.rowwise().maxCoeff();
  Eigen::ArrayXd e = (maxed.array() - maxed.maxCoeff()).exp();
  ImportanceVector iv{(e / e.sum()).matrix(), true};
  iv = merge_to_words(iv, pair.subword_spans);

  ImportanceEstimate est;
  est.method = Method::Attention;
  est.scores = iv.values;
  est.ranking = ranking_from_scores(est.scores);
  return est;
}

ImportanceEstimate estimate_erasure(const ToyModel& model,
                                    const SentencePair& pair,
                                    const std::vector<int>& reference,
                                    int beam, int max_len) {
  std::vector<int> base_hyp =
      strip_eos(model.decode(pair.source, beam, max_len));
  double base = sentence_bleu_smoothed(base_hyp, reference);

  ImportanceEstimate est;
  est.method = Method::Erasure;
  est.scores.resize(pair.surface_len());
  for (int w = 0; w < pair.surface_len(); ++w) {
    std::vector<bool> masked(pair.source.size(), false);
    for (int i = pair.subword_spans[w].begin; i < pair.subword_spans[w].end;
         ++i)
      masked[i] = true;
    std::vector<int> hyp =
        strip_eos(model.decode_masked(pair.source, masked, beam, max_len));
    est.scores(w) = std::max(0.0, base - sentence_bleu_smoothed(hyp, reference));
  }
  double total = est.scores.sum();
  if (total > 0)
    est.scores /= total;
  else
    est.scores.setConstant(1.0 / double(pair.surface_len()));
  est.ranking = ranking_from_scores(est.scores);
  return est;
}

ImportanceEstimate estimate_attribution(const ToyModel& model,
                                        const SentencePair& pair, int steps) {
  ContributionMatrix cm = integrated_gradients(model, pair, steps);
  ImportanceVector iv = merge_to_words(word_importance(cm), pair.subword_spans);
  ImportanceEstimate est;
  est.method = Method::Attribution;
  est.scores = iv.values;
  est.ranking = ranking_from_scores(est.scores);
  return est;
}

void write_estimate_json(std::ostream& out, const ImportanceEstimate& est,
                         const std::vector<std::string>& tokens,
                         std::uint64_t seed) {
  nlohmann::json j;
  j["method"] = method_name(est.method);
  j["tokens"] = tokens;
  j["scores"] = std::vector<double>(est.scores.data(),
                                    est.scores.data() + est.scores.size());
  j["ranking"] = est.ranking;
  j["seed"] = seed;
  out << j.dump();
}

}  // namespace wordimp
