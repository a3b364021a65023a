#include "wordimp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <stdexcept>

namespace wordimp {

std::vector<TokenAnnotation> fertility_from_alignment(
    const std::vector<AlignmentLink>& links, int source_len, int target_len) {
  std::vector<int> target_in_degree(target_len, 0);
  for (const auto& link : links) {
    if (link.src < 0 || link.src >= source_len || link.tgt < 0 ||
        link.tgt >= target_len)
      throw std::out_of_range("alignment link out of bounds");
    ++target_in_degree[link.tgt];
  }
  std::vector<TokenAnnotation> out(source_len);
  for (const auto& link : links)
    out[link.src].fertility_raw += 1.0 / target_in_degree[link.tgt];
  for (auto& ann : out)
    ann.fertility_class = classify_fertility(ann.fertility_raw);
  return out;
}

FertilityClass classify_fertility(double raw) {
  if (raw >= 2.0 - 1e-9) return FertilityClass::GE2;
  if (raw >= 1.0 - 1e-9) return FertilityClass::ONE;
  if (raw > 1e-12) return FertilityClass::FRAC;
  return FertilityClass::ZERO;
}

Vector length_normalize(const ImportanceVector& iv, int words) {
  if (!iv.normalized)
    throw std::invalid_argument("length_normalize expects a normalized vector");
  if (iv.values.size() != words)
    throw std::invalid_argument("importance length != word count");
  return iv.values * double(words);
}

double relative_change(double count_share, double attr_share) {
  if (count_share <= 0.0)
    throw std::domain_error("relative change undefined for zero count share");
  return (attr_share - count_share) / count_share;
}

namespace {

std::vector<DistributionRow> shares_to_rows(
    const std::vector<std::string>& labels, const std::vector<double>& counts,
    const std::vector<double>& masses) {
  double total_count = std::accumulate(counts.begin(), counts.end(), 0.0);
  double total_mass = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (total_count <= 0.0)
    throw std::invalid_argument("no annotated tokens to pool");
  std::vector<DistributionRow> rows;
  for (size_t i = 0; i < labels.size(); ++i) {
    DistributionRow row;
    row.label = labels[i];
    row.count_share = counts[i] / total_count;
    row.attr_share = total_mass > 0 ? masses[i] / total_mass : 0.0;
    row.present = counts[i] > 0;
    row.delta = row.present ? relative_change(row.count_share, row.attr_share)
                            : 0.0;
    rows.push_back(row);
  }
  return rows;
}

void check_aligned(const std::vector<ImportanceVector>& importances,
                   const std::vector<std::vector<TokenAnnotation>>& ann) {
  if (importances.size() != ann.size())
    throw std::invalid_argument("importance/annotation sentence count mismatch");
  for (size_t s = 0; s < ann.size(); ++s)
    if (importances[s].values.size() != static_cast<int>(ann[s].size()))
      throw std::invalid_argument("unannotated token in sentence " +
                                  std::to_string(s));
}

}  // namespace

std::vector<DistributionRow> pos_distribution(
    const std::vector<ImportanceVector>& importances,
    const std::vector<std::vector<TokenAnnotation>>& annotations) {
  check_aligned(importances, annotations);
  constexpr int kCats = 7;  // Noun..Others; None-tagged tokens are excluded
  std::vector<double> counts(kCats, 0.0), masses(kCats, 0.0);
  for (size_t s = 0; s < annotations.size(); ++s) {
    Vector mass = length_normalize(importances[s],
                                   static_cast<int>(annotations[s].size()));
    for (size_t w = 0; w < annotations[s].size(); ++w) {
      int cat = static_cast<int>(annotations[s][w].pos);
      if (cat >= kCats) continue;
      counts[cat] += 1.0;
      masses[cat] += mass(static_cast<Eigen::Index>(w));
    }
  }
  std::vector<std::string> labels = {"Noun", "Verb", "Adj",   "Prep",
                                     "Dete", "Punc", "Others"};
  auto rows = shares_to_rows(labels, counts, masses);

  auto total_row = [&](const std::string& label, int from, int to) {
    DistributionRow row;
    row.label = label;
    for (int i = from; i < to; ++i) {
      row.count_share += rows[i].count_share;
      row.attr_share += rows[i].attr_share;
      row.present = row.present || rows[i].present;
    }
    row.present = row.count_share > 0;
    row.delta =
        row.present ? relative_change(row.count_share, row.attr_share) : 0.0;
    return row;
  };
  rows.push_back(total_row("Content", 0, 3));
  rows.push_back(total_row("Content-Free", 3, 7));
  return rows;
}

std::vector<DistributionRow> fertility_distribution(
    const std::vector<ImportanceVector>& importances,
    const std::vector<std::vector<TokenAnnotation>>& annotations) {
  check_aligned(importances, annotations);
  std::vector<double> counts(4, 0.0), masses(4, 0.0);
  for (size_t s = 0; s < annotations.size(); ++s) {
    Vector mass = length_normalize(importances[s],
                                   static_cast<int>(annotations[s].size()));
    for (size_t w = 0; w < annotations[s].size(); ++w) {
      int cat = static_cast<int>(annotations[s][w].fertility_class);
      counts[cat] += 1.0;
      masses[cat] += mass(static_cast<Eigen::Index>(w));
    }
  }
  return shares_to_rows({">=2", "1", "(0,1)", "0"}, counts, masses);
}

F1Result detect_undertranslation(
    const std::vector<ImportanceVector>& importances,
    const std::vector<std::vector<TokenAnnotation>>& annotations,
    int threshold_pct) {
  check_aligned(importances, annotations);
  if (threshold_pct < 1 || threshold_pct > 100)
    throw std::invalid_argument("threshold_pct out of range");
  bool any_flag = false;
  for (const auto& sent : annotations)
    for (const auto& ann : sent)
      if (ann.under_translated >= 0) any_flag = true;
  if (!any_flag)
    throw std::invalid_argument("no gold under-translation annotations");

  std::int64_t tp = 0, fp = 0, fn = 0;
  for (size_t s = 0; s < annotations.size(); ++s) {
    const int words = static_cast<int>(annotations[s].size());
    int predict = std::max(
        1, static_cast<int>(std::ceil(threshold_pct / 100.0 * words)));
    std::vector<int> order(words);
    std::iota(order.begin(), order.end(), 0);
    const Vector& v = importances[s].values;
    std::stable_sort(order.begin(), order.end(),
                     [&v](int a, int b) { return v(a) < v(b); });
    std::vector<bool> predicted(words, false);
    for (int i = 0; i < predict; ++i) predicted[order[i]] = true;
    for (int w = 0; w < words; ++w) {
      bool gold = annotations[s][w].under_translated == 1;
      if (predicted[w] && gold) ++tp;
      if (predicted[w] && !gold) ++fp;
      if (!predicted[w] && gold) ++fn;
    }
  }

  F1Result r;
  if (tp + fn == 0) {
    r.degenerate = true;  // empty gold set corpus-wide
    return r;
  }
  r.precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
  r.recall = double(tp) / double(tp + fn);
  r.f1 = (r.precision + r.recall) > 0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

namespace {

double node_sse(const Vector& target, const std::vector<int>& rows) {
  double mean = 0.0;
  for (int r : rows) mean += target(r);
  mean /= double(rows.size());
  double sse = 0.0;
  for (int r : rows) sse += (target(r) - mean) * (target(r) - mean);
  return sse;
}

struct TreeBuilder {
  const Matrix& features;
  const Vector& target;
  const TreeConfig& config;
  std::vector<double> importances;

  void split(const std::vector<int>& rows, int depth) {
    if (depth >= config.max_depth ||
        static_cast<int>(rows.size()) < 2 * config.min_leaf)
      return;
    double parent_sse = node_sse(target, rows);
    if (parent_sse <= 1e-12) return;

    int best_feature = -1;
    double best_threshold = 0.0, best_reduction = 1e-12;
    std::vector<int> best_left, best_right;
    for (int f = 0; f < features.cols(); ++f) {
      std::vector<double> values;
      for (int r : rows) values.push_back(features(r, f));
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (size_t i = 0; i + 1 < values.size(); ++i) {
        double threshold = 0.5 * (values[i] + values[i + 1]);
        std::vector<int> left, right;
        for (int r : rows)
          (features(r, f) <= threshold ? left : right).push_back(r);
        if (static_cast<int>(left.size()) < config.min_leaf ||
            static_cast<int>(right.size()) < config.min_leaf)
          continue;
        double reduction =
            parent_sse - node_sse(target, left) - node_sse(target, right);
        if (reduction > best_reduction) {
          best_reduction = reduction;
          best_feature = f;
          best_threshold = threshold;
          best_left = std::move(left);
          best_right = std::move(right);
        }
      }
    }
    if (best_feature < 0) return;
    importances[best_feature] += best_reduction;
    split(best_left, depth + 1);
    split(best_right, depth + 1);
  }
};

}  // namespace

TreeResult tree_correlation(const Matrix& features, const Vector& target,
                            const TreeConfig& config) {
  if (features.rows() != target.size())
    throw std::invalid_argument("feature/target row count mismatch");
  if (target.size() < 100)
    throw std::invalid_argument("tree_correlation needs >= 100 tokens");

  TreeResult result;
  result.importances.assign(features.cols(), 0.0);

  std::vector<int> rows(target.size());
  std::iota(rows.begin(), rows.end(), 0);
  if (node_sse(target, rows) <= 1e-12) {
    result.constant_target = true;
    return result;
  }

  TreeBuilder builder{features, target, config,
                      std::vector<double>(features.cols(), 0.0)};
  builder.split(rows, 0);
  double total = std::accumulate(builder.importances.begin(),
                                 builder.importances.end(), 0.0);
  result.total_variance_reduction = total;
  if (total > 0)
    for (double& v : builder.importances) v /= total;
  result.importances = std::move(builder.importances);
  return result;
}

Matrix build_feature_matrix(
    const std::vector<std::vector<TokenAnnotation>>& annotations) {
  std::vector<const TokenAnnotation*> tokens;
  for (const auto& sent : annotations)
    for (const auto& ann : sent) tokens.push_back(&ann);

  std::vector<int> depths;
  for (const auto* t : tokens)
    if (t->depth >= 0) depths.push_back(t->depth);
  std::sort(depths.begin(), depths.end());
  // Per-corpus depth terciles.
  auto tercile = [&depths](double q) {
    if (depths.empty()) return -1;
    size_t i = std::min(depths.size() - 1,
                        static_cast<size_t>(q * depths.size()));
    return depths[i];
  };
  int t1 = tercile(1.0 / 3.0), t2 = tercile(2.0 / 3.0);

  Matrix f = Matrix::Zero(tokens.size(), feature_labels().size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    f(i, static_cast<int>(tokens[i]->pos)) = 1.0;
    f(i, 8 + static_cast<int>(tokens[i]->fertility_class)) = 1.0;
    if (tokens[i]->depth >= 0) {
      int bucket = tokens[i]->depth <= t1 ? 0 : tokens[i]->depth <= t2 ? 1 : 2;
      f(i, 12 + bucket) = 1.0;
    }
  }
  return f;
}

std::vector<std::string> feature_labels() {
  return {"pos:Noun",  "pos:Verb",   "pos:Adj",    "pos:Prep",
          "pos:Dete",  "pos:Punc",   "pos:Others", "pos:None",
          "fert:>=2",  "fert:1",     "fert:(0,1)", "fert:0",
          "depth:low", "depth:mid",  "depth:high"};
}

void write_distribution_csv(std::ostream& out,
                            const std::vector<DistributionRow>& rows) {
  out << "category,count_share,attr_share,delta_pct\n";
  out << std::setprecision(12);
  for (const auto& row : rows) {
    if (!row.present) {
      out << row.label << ",-,-,-\n";
      continue;
    }
    out << row.label << ',' << row.count_share << ',' << row.attr_share << ','
        << row.delta * 100.0 << '\n';
  }
}

}  // namespace wordimp
