#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "wordimp/annotations.hpp"
#include "wordimp/attribution.hpp"

namespace wordimp {

/// Per-source-word fertility from alignment links; a target word linked to
/// several sources splits its credit equally among them.
std::vector<TokenAnnotation> fertility_from_alignment(
    const std::vector<AlignmentLink>& links, int source_len, int target_len);

FertilityClass classify_fertility(double raw);

/// Importance scaled by sentence length so that token mass averages 1.
Vector length_normalize(const ImportanceVector& iv, int words);

struct DistributionRow {
  std::string label;
  double count_share = 0.0;
  double attr_share = 0.0;
  double delta = 0.0;    // (attr - count) / count
  bool present = true;   // false = category absent, reported as a dash
};

double relative_change(double count_share, double attr_share);

/// Rows for Noun/Verb/Adj/Prep/Dete/Punc/Others plus Content and
/// Content-Free totals. `importances` are per-sentence normalized vectors
/// over surface words; attribution mass is length-normalized before pooling.
std::vector<DistributionRow> pos_distribution(
    const std::vector<ImportanceVector>& importances,
    const std::vector<std::vector<TokenAnnotation>>& annotations);

/// Rows over fertility classes >=2, 1, (0,1), 0.
std::vector<DistributionRow> fertility_distribution(
    const std::vector<ImportanceVector>& importances,
    const std::vector<std::vector<TokenAnnotation>>& annotations);

struct F1Result {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  bool degenerate = false;  // no gold flags anywhere
};

/// Predicts the bottom threshold_pct% of words per sentence (ceiling, at
/// least one word) by length-normalized importance and scores against gold
/// under-translation flags.
F1Result detect_undertranslation(
    const std::vector<ImportanceVector>& importances,
    const std::vector<std::vector<TokenAnnotation>>& annotations,
    int threshold_pct);

struct TreeConfig {
  int max_depth = 6;
  int min_leaf = 20;
};

struct TreeResult {
  std::vector<double> importances;  // per feature, sums to 1 (or all zero)
  double total_variance_reduction = 0.0;
  bool constant_target = false;
};

/// CART regression tree; feature importance is each feature's normalized
/// share of total variance reduction. Deterministic: ties prefer the lower
/// feature index and the smaller threshold.
TreeResult tree_correlation(const Matrix& features, const Vector& target,
                            const TreeConfig& config = {});

/// Feature matrix for tree_correlation: POS one-hots, fertility one-hots and
/// depth-tercile one-hots (terciles over the given depths). Feature order
/// matches feature_labels().
Matrix build_feature_matrix(
    const std::vector<std::vector<TokenAnnotation>>& annotations);
std::vector<std::string> feature_labels();

void write_distribution_csv(std::ostream& out,
                            const std::vector<DistributionRow>& rows);

}  // namespace wordimp
