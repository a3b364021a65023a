#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wordimp/annotations.hpp"
#include "wordimp/corpus.hpp"
#include "wordimp/evalharness.hpp"
#include "wordimp/seqmodel.hpp"

namespace wordimp::testbed {

/// A self-contained synthetic experiment: training corpus, encoded test set,
/// optional annotations, and the training recipe that makes the task work.
struct Testbed {
  Corpus corpus;
  std::vector<SentencePair> test;
  std::vector<std::string> train_source_lines, train_target_lines;
  std::vector<std::string> test_source_lines, test_target_lines;
  std::vector<std::vector<PosTag>> pos;                  // may be empty
  std::vector<std::vector<AlignmentLink>> alignment;     // may be empty
  std::vector<std::vector<int>> depth;                   // may be empty
  std::map<int, std::vector<int>> undertranslation;      // may be empty
  ReplacementPool pool;
  TrainConfig train_config;
};

struct CopyOptions {
  int vocab_words = 480;
  int train_pairs = 2000;
  int test_pairs = 100;
  int min_len = 3;
  int max_len = 8;
  std::uint64_t seed = 7;
};

/// Identity translation over a ~500-word vocabulary; exercises attribution
/// and completeness on a realistically sized token inventory.
Testbed make_copy_testbed(const CopyOptions& options = {});

struct OrderingOptions {
  int fillers = 6;
  int singles = 40;
  int pairs = 20;
  int train_pairs = 1500;
  int test_pairs = 40;
  std::uint64_t seed = 7;
};

/// Template "f f u1 pa pb u2" -> "U1 PA PB U2": fillers carry no information,
/// u1/u2 are individually necessary, and the correlated pair (pa, pb) is
/// mutually redundant (either token implies both target words). Trained with
/// word dropout so the redundancy is actually learned; this separates
/// single-word erasure from path-integrated attribution.
Testbed make_ordering_testbed(const OrderingOptions& options = {});

/// Trains with the testbed's recipe.
ToyModel train_testbed(const Testbed& tb);

/// Writes train.src/train.tgt/test.src/test.tgt (and pos.txt, align.txt,
/// depth.txt, under.txt when the testbed has them) into dir; returns the
/// paths keyed by those names.
std::map<std::string, std::string> write_testbed_files(const Testbed& tb,
                                                       const std::string& dir);

}  // namespace wordimp::testbed
