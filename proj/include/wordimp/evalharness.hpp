#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wordimp/annotations.hpp"
#include "wordimp/estimators.hpp"
#include "wordimp/rng.hpp"
#include "wordimp/seqmodel.hpp"

namespace wordimp {

enum class PerturbKind { Deletion, Mask, GrammaticalReplacement };

const char* perturb_kind_name(PerturbKind kind);
PerturbKind parse_perturb_kind(const std::string& name);

/// Same-POS replacement candidates harvested from an annotated corpus.
class ReplacementPool {
 public:
  void add(const std::string& word, PosTag tag);
  /// Uniform draw of a different same-POS word; nullopt when the bucket has
  /// no alternative.
  std::optional<std::string> draw(const std::string& word, PosTag tag,
                                  Rng& rng) const;
  bool empty() const { return buckets_.empty(); }

 private:
  std::map<PosTag, std::vector<std::string>> buckets_;
};

ReplacementPool build_replacement_pool(
    const std::vector<std::vector<std::pair<std::string, PosTag>>>& tagged);

/// A perturbed source: token stream plus per-token mask flags (flags are only
/// set by the Mask perturbation).
struct PerturbedSource {
  std::vector<int> tokens;
  std::vector<bool> masked;
  int replacement_fallbacks = 0;  // replacement words that fell back to Mask
};

/// Perturbs the k top-ranked surface words; a selected word's whole subword
/// span is perturbed together. k > M is clamped to M.
PerturbedSource perturb(const SentencePair& pair,
                        const std::vector<int>& ranking, int k,
                        PerturbKind kind, const std::vector<PosTag>* pos,
                        const ReplacementPool* pool, const Vocab* vocab,
                        const SubwordSplitter* splitter, Rng& rng);

struct PerturbationSpec {
  PerturbKind kind = PerturbKind::Mask;
  Method estimator = Method::Random;
  int k_max = 5;
  int repeats = 1;  // >1 only meaningful for stochastic estimators
  std::uint64_t seed = 1;
  int beam = 1;
  int max_len = 32;
  int attribution_steps = 300;
};

struct CurvePoint {
  int k = 0;
  double mean_bleu = 0.0;
  double std_bleu = 0.0;
};

struct PerturbationCurve {
  Method estimator;
  PerturbKind kind;
  int repeats = 1;
  std::vector<CurvePoint> points;  // sorted by k, k=0 first
  double baseline_bleu = 0.0;
};

/// (BLEU_0 - BLEU_kmax) / BLEU_0. Throws when the baseline is zero.
double relative_decline(const PerturbationCurve& curve);

/// Shared state for perturbation experiments: decodes the test set once,
/// caches deterministic rankings, and evaluates BLEU degradation curves.
class EvalHarness {
 public:
  EvalHarness(const ToyModel& model, const Vocab& vocab,
              const SubwordSplitter& splitter,
              std::vector<SentencePair> testset,
              std::vector<std::vector<PosTag>> pos = {},
              ReplacementPool pool = {}, int beam = 1, int max_len = 32,
              int jobs = 1);

  PerturbationCurve run_curve(const PerturbationSpec& spec);

  /// Test pairs with targets replaced by the model's own hypotheses (the
  /// attribution target per the teacher-forcing convention).
  const std::vector<SentencePair>& hypothesis_pairs() const {
    return hyp_pairs_;
  }
  const std::vector<std::vector<int>>& references() const { return refs_; }
  double baseline_bleu() const { return baseline_bleu_; }

  /// Deterministic per-sentence estimate (cached). Stochastic methods must go
  /// through stochastic_estimate.
  const ImportanceEstimate& cached_estimate(Method method, int sentence,
                                            int attribution_steps);
  ImportanceEstimate compute_estimate(Method method, int sentence,
                                      int attribution_steps) const;
  ImportanceEstimate stochastic_estimate(Method method, int sentence,
                                         std::uint64_t seed, int repeat);

  void set_log(std::ostream* log) { log_ = log; }

 private:
  const ToyModel& model_;
  const Vocab& vocab_;
  const SubwordSplitter& splitter_;
  std::vector<SentencePair> testset_;
  std::vector<std::vector<PosTag>> pos_;
  ReplacementPool pool_;
  int beam_;
  int max_len_;
  int jobs_;
  std::ostream* log_ = nullptr;

  std::vector<SentencePair> hyp_pairs_;
  std::vector<std::vector<int>> refs_;
  double baseline_bleu_ = 0.0;
  std::map<std::pair<int, int>, ImportanceEstimate> cache_;  // (method, sent)
};

/// CSV columns: estimator, perturbation, k, mean_bleu, std, repeats.
void write_curve_csv_header(std::ostream& out);
void write_curve_csv(std::ostream& out, const PerturbationCurve& curve);

}  // namespace wordimp
