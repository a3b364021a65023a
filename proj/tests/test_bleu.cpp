#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "wordimp/bleu.hpp"
#include "wordimp/rng.hpp"

using namespace wordimp;

namespace {

// Deliberately different implementation style (map-of-vectors, log-space
// geometric mean) serving as the independent oracle.
double reference_corpus_bleu(const std::vector<std::vector<int>>& hyps,
                             const std::vector<std::vector<int>>& refs) {
  long long match[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  long long hyp_len = 0, ref_len = 0;
  for (size_t s = 0; s < hyps.size(); ++s) {
    hyp_len += hyps[s].size();
    ref_len += refs[s].size();
    for (int n = 1; n <= 4; ++n) {
      std::map<std::vector<int>, long long> ref_counts;
      for (int i = 0; i + n <= static_cast<int>(refs[s].size()); ++i)
        ++ref_counts[std::vector<int>(refs[s].begin() + i,
                                      refs[s].begin() + i + n)];
      std::map<std::vector<int>, long long> hyp_counts;
      for (int i = 0; i + n <= static_cast<int>(hyps[s].size()); ++i)
        ++hyp_counts[std::vector<int>(hyps[s].begin() + i,
                                      hyps[s].begin() + i + n)];
      for (const auto& [gram, count] : hyp_counts) {
        total[n - 1] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end())
          match[n - 1] += std::min(count, it->second);
      }
    }
  }
  double log_prec = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (match[n] == 0) return 0.0;
    log_prec += std::log(double(match[n]) / double(total[n]));
  }
  double bp =
      hyp_len < ref_len ? std::exp(1.0 - double(ref_len) / hyp_len) : 1.0;
  return bp * std::exp(log_prec / 4.0);
}

}  // namespace

TEST_CASE("worked oracle: four of five words gives 0.7788") {
  std::vector<int> hyp = {10, 11, 12, 13};
  std::vector<int> ref = {10, 11, 12, 13, 14};
  double b = corpus_bleu({hyp}, {ref});
  CHECK(b == doctest::Approx(std::exp(-0.25)).epsilon(1e-12));
  CHECK(b == doctest::Approx(0.7788).epsilon(1e-4));
}

TEST_CASE("identity scores 1 and zero 4-gram overlap scores 0") {
  std::vector<int> sent = {1, 2, 3, 4, 5, 6};
  CHECK(corpus_bleu({sent}, {sent}) == 1.0);
  std::vector<int> other = {9, 9, 9, 9, 9, 9};
  CHECK(corpus_bleu({other}, {sent}) == 0.0);
  // Shared unigrams but no shared 4-gram is still 0 (no smoothing).
  std::vector<int> partial = {1, 9, 3, 9, 5, 9};
  CHECK(corpus_bleu({partial}, {sent}) == 0.0);
}

TEST_CASE("clipping: repeated hypothesis words do not overcount") {
  // "the the the the the the the" vs "the cat ..." — classic clipping case.
  std::vector<int> hyp = {7, 7, 7, 7, 7, 7, 7};
  std::vector<int> ref = {7, 1, 2, 3, 4, 5, 7};
  BleuStats st = bleu_stats(hyp, ref);
  CHECK(st.matches[0] == 2);  // clipped to the two refs "the"
  CHECK(st.totals[0] == 7);
}

TEST_CASE("brevity penalty only fires on short hypotheses") {
  std::vector<int> ref = {1, 2, 3, 4};
  std::vector<int> longer = {1, 2, 3, 4, 5};
  BleuStats st = bleu_stats(longer, ref);
  CHECK(st.hyp_len == 5);
  CHECK(st.ref_len == 4);
  // hyp longer than ref: BP = 1, score = product of precisions only.
  double got = bleu_from_stats(st);
  double expect = std::pow((4.0 / 5.0) * (3.0 / 4.0) * (2.0 / 3.0) *
                               (1.0 / 2.0),
                           0.25);
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("stats accumulate as a monoid") {
  std::vector<std::vector<int>> hyps = {{1, 2, 3, 4, 9}, {5, 6, 7, 8}};
  std::vector<std::vector<int>> refs = {{1, 2, 3, 4}, {5, 6, 7, 8, 9}};
  BleuStats a = bleu_stats(hyps[0], refs[0]);
  BleuStats b = bleu_stats(hyps[1], refs[1]);
  BleuStats ab = a;
  ab += b;
  CHECK(bleu_from_stats(ab) ==
        doctest::Approx(corpus_bleu(hyps, refs)).epsilon(1e-12));
}

TEST_CASE("agrees with an independent implementation on 50 random cases") {
  Rng rng(123);
  for (int c = 0; c < 50; ++c) {
    int sentences = 1 + static_cast<int>(rng.uniform_int(4));
    int vocab = 3 + static_cast<int>(rng.uniform_int(8));
    std::vector<std::vector<int>> hyps, refs;
    for (int s = 0; s < sentences; ++s) {
      int rlen = 4 + static_cast<int>(rng.uniform_int(8));
      std::vector<int> ref(rlen);
      for (int& t : ref) t = static_cast<int>(rng.uniform_int(vocab));
      // Mutate the reference a little so matches are plentiful but partial.
      std::vector<int> hyp = ref;
      int edits = static_cast<int>(rng.uniform_int(3));
      for (int e = 0; e < edits && !hyp.empty(); ++e)
        hyp[rng.uniform_int(hyp.size())] =
            static_cast<int>(rng.uniform_int(vocab));
      if (rng.uniform() < 0.3) hyp.push_back(rng.uniform_int(vocab));
      if (rng.uniform() < 0.3 && hyp.size() > 4) hyp.pop_back();
      hyps.push_back(hyp);
      refs.push_back(ref);
    }
    CHECK(corpus_bleu(hyps, refs) ==
          doctest::Approx(reference_corpus_bleu(hyps, refs)).epsilon(1e-9));
  }
}

TEST_CASE("corpus_bleu input validation") {
  CHECK_THROWS(corpus_bleu({}, {}));
  CHECK_THROWS(corpus_bleu({{1, 2}}, {{1, 2}, {3}}));
}

TEST_CASE("empty hypothesis is scored, not crashed on") {
  std::vector<int> ref = {1, 2, 3, 4, 5};
  CHECK(corpus_bleu({{}}, {ref}) == 0.0);
}

TEST_CASE("smoothed sentence BLEU is positive without 4-gram matches") {
  std::vector<int> hyp = {1, 2, 9};
  std::vector<int> ref = {1, 2, 3, 4, 5};
  double smoothed = sentence_bleu_smoothed(hyp, ref);
  CHECK(smoothed > 0.0);
  CHECK(smoothed < 1.0);
  // Add-one smoothing: p_n = (m_n + 1) / (t_n + 1).
  double p1 = (2.0 + 1) / (3.0 + 1), p2 = (1.0 + 1) / (2.0 + 1),
         p3 = (0.0 + 1) / (1.0 + 1), p4 = 1.0;  // no 4-grams: (0+1)/(0+1)
  double bp = std::exp(1.0 - 5.0 / 3.0);
  CHECK(smoothed ==
        doctest::Approx(bp * std::pow(p1 * p2 * p3 * p4, 0.25)).epsilon(1e-9));
  // Smoothing monotonicity: identical sentence still beats any mismatch.
  CHECK(sentence_bleu_smoothed(ref, ref) > smoothed);
}
