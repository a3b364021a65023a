#include "wordimp/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <stdexcept>

#include "wordimp/bleu.hpp"
#include "wordimp/parallel.hpp"

namespace wordimp {

const char* perturb_kind_name(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::Deletion: return "deletion";
    case PerturbKind::Mask: return "mask";
    case PerturbKind::GrammaticalReplacement: return "replace";
  }
  return "?";
}

PerturbKind parse_perturb_kind(const std::string& name) {
  for (PerturbKind k : {PerturbKind::Deletion, PerturbKind::Mask,
                        PerturbKind::GrammaticalReplacement})
    if (name == perturb_kind_name(k)) return k;
  throw std::invalid_argument("unknown perturbation: " + name);
}

void ReplacementPool::add(const std::string& word, PosTag tag) {
  auto& bucket = buckets_[tag];
  if (std::find(bucket.begin(), bucket.end(), word) == bucket.end())
    bucket.push_back(word);
}

std::optional<std::string> ReplacementPool::draw(const std::string& word,
                                                 PosTag tag, Rng& rng) const {
  auto it = buckets_.find(tag);
  if (it == buckets_.end()) return std::nullopt;
  std::vector<const std::string*> candidates;
  for (const auto& w : it->second)
    if (w != word) candidates.push_back(&w);
  if (candidates.empty()) return std::nullopt;
  return *candidates[rng.uniform_int(candidates.size())];
}

ReplacementPool build_replacement_pool(
    const std::vector<std::vector<std::pair<std::string, PosTag>>>& tagged) {
  ReplacementPool pool;
  for (const auto& sent : tagged)
    for (const auto& [word, tag] : sent) pool.add(word, tag);
  return pool;
}

PerturbedSource perturb(const SentencePair& pair,
                        const std::vector<int>& ranking, int k,
                        PerturbKind kind, const std::vector<PosTag>* pos,
                        const ReplacementPool* pool, const Vocab* vocab,
                        const SubwordSplitter* splitter, Rng& rng) {
  const int words = pair.surface_len();
  if (static_cast<int>(ranking.size()) != words)
    throw std::invalid_argument("ranking length != surface word count");
  k = std::min(k, words);

  std::vector<bool> selected(words, false);
  for (int i = 0; i < k; ++i) selected[ranking[i]] = true;

  PerturbedSource out;
  if (kind == PerturbKind::GrammaticalReplacement &&
      (pos == nullptr || pool == nullptr || vocab == nullptr ||
       splitter == nullptr))
    throw std::invalid_argument(
        "grammatical replacement needs POS annotation and a replacement pool");

  for (int w = 0; w < words; ++w) {
    const SubwordSpan& span = pair.subword_spans[w];
    if (!selected[w] || kind == PerturbKind::Mask) {
      for (int i = span.begin; i < span.end; ++i) {
        out.tokens.push_back(pair.source[i]);
        out.masked.push_back(selected[w] && kind == PerturbKind::Mask);
      }
      continue;
    }
    if (kind == PerturbKind::Deletion) continue;
    // Grammatical replacement: a different word of the same POS bucket;
    // an empty bucket falls back to Mask for this word.
    auto replacement = pool->draw(pair.source_surface[w], (*pos)[w], rng);
    if (!replacement) {
      ++out.replacement_fallbacks;
      for (int i = span.begin; i < span.end; ++i) {
        out.tokens.push_back(pair.source[i]);
        out.masked.push_back(true);
      }
      continue;
    }
    for (const auto& piece : splitter->split(*replacement)) {
      out.tokens.push_back(vocab->lookup(piece));
      out.masked.push_back(false);
    }
  }
  return out;
}

double relative_decline(const PerturbationCurve& curve) {
  if (curve.points.empty() || curve.points.front().k != 0)
    throw std::invalid_argument("curve lacks a k=0 point");
  double b0 = curve.points.front().mean_bleu;
  if (b0 == 0.0) throw std::domain_error("baseline BLEU is zero");
  return (b0 - curve.points.back().mean_bleu) / b0;
}

EvalHarness::EvalHarness(const ToyModel& model, const Vocab& vocab,
                         const SubwordSplitter& splitter,
                         std::vector<SentencePair> testset,
                         std::vector<std::vector<PosTag>> pos,
                         ReplacementPool pool, int beam, int max_len, int jobs)
    : model_(model),
      vocab_(vocab),
      splitter_(splitter),
      testset_(std::move(testset)),
      pos_(std::move(pos)),
      pool_(std::move(pool)),
      beam_(beam),
      max_len_(max_len),
      jobs_(jobs) {
  if (!pos_.empty() && pos_.size() != testset_.size())
    throw std::invalid_argument("POS annotation count != test set size");

  hyp_pairs_ = testset_;
  refs_.resize(testset_.size());
  std::vector<std::vector<int>> hyps(testset_.size());
  parallel_for(static_cast<int>(testset_.size()), jobs_, [this, &hyps](int i) {
    hyps[i] = strip_eos(model_.decode(testset_[i].source, beam_, max_len_));
  });
  for (size_t i = 0; i < testset_.size(); ++i) {
    refs_[i] = testset_[i].target;
    // An empty hypothesis cannot anchor teacher forcing; score it as the
    // bare EOS emission.
    hyp_pairs_[i].target = hyps[i].empty() ? std::vector<int>{Vocab::kEos}
                                           : hyps[i];
  }
  baseline_bleu_ = corpus_bleu(hyps, refs_);
}

ImportanceEstimate EvalHarness::compute_estimate(Method method, int sentence,
                                                 int attribution_steps) const {
  const SentencePair& pair = hyp_pairs_[sentence];
  switch (method) {
    case Method::Frequency:
      return estimate_frequency(pair, vocab_);
    case Method::Attention:
      return estimate_attention(model_, pair);
    case Method::Erasure:
      return estimate_erasure(model_, pair, refs_[sentence], beam_, max_len_);
    case Method::Attribution:
      return estimate_attribution(model_, pair, attribution_steps);
    default:
      throw std::invalid_argument("method is stochastic; use a seeded draw");
  }
}

const ImportanceEstimate& EvalHarness::cached_estimate(Method method,
                                                       int sentence,
                                                       int attribution_steps) {
  auto key = std::make_pair(static_cast<int>(method), sentence);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  return cache_
      .emplace(key, compute_estimate(method, sentence, attribution_steps))
      .first->second;
}

ImportanceEstimate EvalHarness::stochastic_estimate(Method method,
                                                    int sentence,
                                                    std::uint64_t seed,
                                                    int repeat) {
  const SentencePair& pair = hyp_pairs_[sentence];
  if (method == Method::Random) {
    Rng rng = Rng(seed).substream("random-estimator", repeat)
                  .substream("sentence", sentence);
    return estimate_random(pair, rng);
  }
  if (method == Method::Content) {
    if (pos_.empty())
      throw std::invalid_argument("content estimator needs POS annotations");
    Rng rng = Rng(seed).substream("content-estimator", repeat)
                  .substream("sentence", sentence);
    return estimate_content(pair, pos_[sentence], rng);
  }
  throw std::invalid_argument("method is deterministic");
}

PerturbationCurve EvalHarness::run_curve(const PerturbationSpec& spec) {
  const int sentences = static_cast<int>(testset_.size());
  const bool stochastic =
      spec.estimator == Method::Random || spec.estimator == Method::Content;
  const int repeats = std::max(1, spec.repeats);

  PerturbationCurve curve;
  curve.estimator = spec.estimator;
  curve.kind = spec.kind;
  curve.repeats = repeats;
  curve.baseline_bleu = baseline_bleu_;
  curve.points.push_back({0, baseline_bleu_, 0.0});

  // Deterministic rankings are shared across k and repeats. Fill cache
  // misses in parallel, then insert on one thread.
  std::vector<const ImportanceEstimate*> fixed(sentences, nullptr);
  if (!stochastic) {
    std::vector<int> missing;
    for (int s = 0; s < sentences; ++s)
      if (!cache_.count({static_cast<int>(spec.estimator), s}))
        missing.push_back(s);
    std::vector<ImportanceEstimate> fresh(missing.size());
    parallel_for(static_cast<int>(missing.size()), jobs_,
                 [this, &spec, &missing, &fresh](int i) {
                   fresh[i] = compute_estimate(spec.estimator, missing[i],
                                               spec.attribution_steps);
                 });
    for (size_t i = 0; i < missing.size(); ++i)
      cache_.emplace(std::make_pair(static_cast<int>(spec.estimator),
                                    missing[i]),
                     std::move(fresh[i]));
    for (int s = 0; s < sentences; ++s)
      fixed[s] = &cached_estimate(spec.estimator, s, spec.attribution_steps);
  }

  int fallbacks = 0;
  for (int k = 1; k <= spec.k_max; ++k) {
    std::vector<double> bleus;
    for (int rep = 0; rep < repeats; ++rep) {
      std::vector<std::vector<int>> hyps(sentences);
      std::vector<std::vector<int>> rankings(sentences);
      for (int s = 0; s < sentences; ++s)
        rankings[s] = stochastic
                          ? stochastic_estimate(spec.estimator, s, spec.seed,
                                                rep).ranking
                          : fixed[s]->ranking;
      std::vector<int> fb(sentences, 0);
      parallel_for(sentences, jobs_, [&, k, rep](int s) {
        Rng rng = Rng(spec.seed).substream("replacement", rep)
                      .substream("k", k)
                      .substream("sentence", s);
        PerturbedSource ps =
            perturb(testset_[s], rankings[s], k, spec.kind,
                    pos_.empty() ? nullptr : &pos_[s], &pool_, &vocab_,
                    &splitter_, rng);
        fb[s] = ps.replacement_fallbacks;
        hyps[s] = strip_eos(
            model_.decode_masked(ps.tokens, ps.masked, spec.beam,
                                 spec.max_len));
      });
      for (int s = 0; s < sentences; ++s) fallbacks += fb[s];
      bleus.push_back(corpus_bleu(hyps, refs_));
      if (!stochastic) break;  // identical across repeats
    }
    double mean = 0.0;
    for (double b : bleus) mean += b;
    mean /= double(bleus.size());
    double var = 0.0;
    for (double b : bleus) var += (b - mean) * (b - mean);
    var /= double(bleus.size());
    curve.points.push_back({k, mean, std::sqrt(var)});
  }
  if (fallbacks > 0 && log_)
    *log_ << "note: " << fallbacks
          << " replacement draws fell back to Mask (empty POS bucket)\n";
  return curve;
}

void write_curve_csv_header(std::ostream& out) {
  out << "estimator,perturbation,k,mean_bleu,std,repeats\n";
}

void write_curve_csv(std::ostream& out, const PerturbationCurve& curve) {
  for (const auto& p : curve.points)
    out << method_name(curve.estimator) << ','
        << perturb_kind_name(curve.kind) << ',' << p.k << ','
        << std::setprecision(12) << p.mean_bleu << ',' << p.std_bleu << ','
        << curve.repeats << '\n';
}

}  // namespace wordimp
