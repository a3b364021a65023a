#include "wordimp/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "wordimp/analysis.hpp"
#include "wordimp/attribution.hpp"
#include "wordimp/corpus.hpp"
#include "wordimp/parallel.hpp"

namespace wordimp {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void reject_unknown_keys(const json& obj, const std::string& section,
                         const std::set<std::string>& allowed,
                         std::vector<std::string>& problems) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      problems.push_back("unknown config key: " +
                         (section.empty() ? key : section + "." + key));
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) obj.at(key).get_to(out);
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                e.what());
  }
  if (!doc.is_object())
    throw std::invalid_argument("config root must be a JSON object");

  ExperimentConfig cfg;
  std::vector<std::string> problems;
  reject_unknown_keys(doc, "",
                      {"data", "annotations", "model", "attribution",
                       "evaluation", "analysis", "seed", "output_dir", "jobs"},
                      problems);

  if (doc.contains("data")) {
    const json& d = doc["data"];
    reject_unknown_keys(d, "data",
                        {"train_source", "train_target", "test_source",
                         "test_target"},
                        problems);
    read_field(d, "train_source", cfg.train_source);
    read_field(d, "train_target", cfg.train_target);
    read_field(d, "test_source", cfg.test_source);
    read_field(d, "test_target", cfg.test_target);
  }
  if (doc.contains("annotations")) {
    const json& a = doc["annotations"];
    reject_unknown_keys(a, "annotations",
                        {"pos", "alignment", "depth", "under_translation"},
                        problems);
    read_field(a, "pos", cfg.pos_path);
    read_field(a, "alignment", cfg.alignment_path);
    read_field(a, "depth", cfg.depth_path);
    read_field(a, "under_translation", cfg.undertranslation_path);
  }
  if (doc.contains("model")) {
    const json& m = doc["model"];
    reject_unknown_keys(m, "model",
                        {"embed_dim", "hidden_dim", "steps", "learning_rate",
                         "lr_decay", "clip_norm", "init_scale", "word_dropout",
                         "subword_min_frequency", "subword_piece_len"},
                        problems);
    read_field(m, "embed_dim", cfg.embed_dim);
    read_field(m, "hidden_dim", cfg.hidden_dim);
    read_field(m, "steps", cfg.train_steps);
    read_field(m, "learning_rate", cfg.learning_rate);
    read_field(m, "lr_decay", cfg.lr_decay);
    read_field(m, "clip_norm", cfg.clip_norm);
    read_field(m, "init_scale", cfg.init_scale);
    read_field(m, "word_dropout", cfg.word_dropout);
    read_field(m, "subword_min_frequency", cfg.subword_min_frequency);
    read_field(m, "subword_piece_len", cfg.subword_piece_len);
  }
  if (doc.contains("attribution")) {
    const json& a = doc["attribution"];
    reject_unknown_keys(a, "attribution", {"steps"}, problems);
    read_field(a, "steps", cfg.attribution_steps);
  }
  if (doc.contains("evaluation")) {
    const json& e = doc["evaluation"];
    reject_unknown_keys(e, "evaluation",
                        {"estimators", "perturbations", "k_max", "repeats",
                         "beam", "max_len"},
                        problems);
    if (e.contains("estimators")) {
      cfg.estimators.clear();
      for (const auto& name : e["estimators"]) {
        try {
          cfg.estimators.push_back(parse_method(name.get<std::string>()));
        } catch (const std::exception& ex) {
          problems.push_back(std::string("evaluation.estimators: ") +
                             ex.what());
        }
      }
    }
    if (e.contains("perturbations")) {
      cfg.perturbations.clear();
      for (const auto& name : e["perturbations"]) {
        try {
          cfg.perturbations.push_back(
              parse_perturb_kind(name.get<std::string>()));
        } catch (const std::exception& ex) {
          problems.push_back(std::string("evaluation.perturbations: ") +
                             ex.what());
        }
      }
    }
    read_field(e, "k_max", cfg.k_max);
    read_field(e, "repeats", cfg.repeats);
    read_field(e, "beam", cfg.beam);
    read_field(e, "max_len", cfg.max_len);
  }
  if (doc.contains("analysis")) {
    const json& a = doc["analysis"];
    reject_unknown_keys(a, "analysis", {"undertranslation_pct"}, problems);
    read_field(a, "undertranslation_pct", cfg.undertranslation_pct);
  }
  read_field(doc, "seed", cfg.seed);
  read_field(doc, "output_dir", cfg.output_dir);
  read_field(doc, "jobs", cfg.jobs);

  if (!problems.empty()) {
    std::string msg = "config problems:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw std::invalid_argument(msg);
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

std::string experiment_config_json(const ExperimentConfig& c) {
  json doc;
  doc["data"] = {{"train_source", c.train_source},
                 {"train_target", c.train_target},
                 {"test_source", c.test_source},
                 {"test_target", c.test_target}};
  doc["annotations"] = {{"pos", c.pos_path},
                        {"alignment", c.alignment_path},
                        {"depth", c.depth_path},
                        {"under_translation", c.undertranslation_path}};
  doc["model"] = {{"embed_dim", c.embed_dim},
                  {"hidden_dim", c.hidden_dim},
                  {"steps", c.train_steps},
                  {"learning_rate", c.learning_rate},
                  {"lr_decay", c.lr_decay},
                  {"clip_norm", c.clip_norm},
                  {"init_scale", c.init_scale},
                  {"word_dropout", c.word_dropout},
                  {"subword_min_frequency", c.subword_min_frequency},
                  {"subword_piece_len", c.subword_piece_len}};
  doc["attribution"] = {{"steps", c.attribution_steps}};
  json estimators = json::array(), perturbations = json::array();
  for (Method m : c.estimators) estimators.push_back(method_name(m));
  for (PerturbKind k : c.perturbations)
    perturbations.push_back(perturb_kind_name(k));
  doc["evaluation"] = {{"estimators", estimators},
                       {"perturbations", perturbations},
                       {"k_max", c.k_max},
                       {"repeats", c.repeats},
                       {"beam", c.beam},
                       {"max_len", c.max_len}};
  doc["analysis"] = {{"undertranslation_pct", c.undertranslation_pct}};
  doc["seed"] = c.seed;
  doc["output_dir"] = c.output_dir;
  doc["jobs"] = c.jobs;
  return doc.dump(2);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : experiment_config_json(config)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
  std::vector<std::string> problems;
  auto require_file = [&problems](const std::string& label,
                                  const std::string& path, bool required) {
    if (path.empty()) {
      if (required) problems.push_back(label + ": path is required");
      return;
    }
    if (!fs::is_regular_file(path))
      problems.push_back(label + ": file not found: " + path);
  };
  require_file("data.train_source", c.train_source, true);
  require_file("data.train_target", c.train_target, true);
  require_file("data.test_source", c.test_source, true);
  require_file("data.test_target", c.test_target, true);
  require_file("annotations.pos", c.pos_path, false);
  require_file("annotations.alignment", c.alignment_path, false);
  require_file("annotations.depth", c.depth_path, false);
  require_file("annotations.under_translation", c.undertranslation_path,
               false);

  auto positive = [&problems](const std::string& label, double v) {
    if (v <= 0) problems.push_back(label + ": must be positive");
  };
  positive("model.embed_dim", c.embed_dim);
  positive("model.hidden_dim", c.hidden_dim);
  positive("model.steps", c.train_steps);
  positive("model.learning_rate", c.learning_rate);
  positive("model.subword_piece_len", c.subword_piece_len);
  positive("attribution.steps", c.attribution_steps);
  positive("evaluation.k_max", c.k_max);
  positive("evaluation.repeats", c.repeats);
  positive("evaluation.beam", c.beam);
  positive("evaluation.max_len", c.max_len);
  positive("jobs", c.jobs);
  if (c.word_dropout < 0 || c.word_dropout >= 1)
    problems.push_back("model.word_dropout: must be in [0, 1)");
  if (c.undertranslation_pct < 1 || c.undertranslation_pct > 100)
    problems.push_back("analysis.undertranslation_pct: must be in 1..100");
  if (c.estimators.empty())
    problems.push_back("evaluation.estimators: list is empty");
  if (c.perturbations.empty())
    problems.push_back("evaluation.perturbations: list is empty");
  if (c.output_dir.empty())
    problems.push_back("output_dir: path is required");

  bool wants_content = false, wants_replace = false;
  for (Method m : c.estimators)
    if (m == Method::Content) wants_content = true;
  for (PerturbKind k : c.perturbations)
    if (k == PerturbKind::GrammaticalReplacement) wants_replace = true;
  if (wants_content && c.pos_path.empty())
    problems.push_back(
        "evaluation.estimators: 'content' needs annotations.pos");
  if (wants_replace && c.pos_path.empty())
    problems.push_back(
        "evaluation.perturbations: 'replace' needs annotations.pos");
  return problems;
}

namespace {

std::string sentence_name(int index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sentence_%04d.%s", index, ext);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write output file: " + path.string());
  return out;
}

std::vector<SentencePair> encode_test_set(
    const std::vector<std::string>& src_lines,
    const std::vector<std::string>& tgt_lines, const Vocab& vocab,
    const SubwordSplitter& splitter) {
  if (src_lines.size() != tgt_lines.size())
    throw std::runtime_error("test source/target line counts differ");
  std::vector<SentencePair> pairs;
  for (size_t i = 0; i < src_lines.size(); ++i) {
    try {
      pairs.push_back(
          encode_pair(src_lines[i], tgt_lines[i], vocab, splitter));
    } catch (const std::exception& e) {
      throw std::runtime_error("test line " + std::to_string(i + 1) + ": " +
                               e.what());
    }
  }
  return pairs;
}

}  // namespace

void run_pipeline(const ExperimentConfig& config, std::ostream& log) {
  std::vector<std::string> problems = validate_config(config);
  if (!problems.empty()) {
    std::string msg = "config problems:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw std::invalid_argument(msg);
  }

  fs::create_directories(config.output_dir);
  fs::create_directories(fs::path(config.output_dir) / "importance");
  fs::create_directories(fs::path(config.output_dir) / "contrib");

  json manifest;
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = config.seed;
  manifest["config"] = json::parse(experiment_config_json(config));
  json stages = json::array();
  auto stage = [&stages, &log](const std::string& name,
                               const std::string& status,
                               const std::string& detail = "") {
    json entry = {{"name", name}, {"status", status}};
    if (!detail.empty()) entry["detail"] = detail;
    stages.push_back(entry);
    log << "[" << status << "] " << name
        << (detail.empty() ? "" : ": " + detail) << "\n";
  };

  // --- data + training ------------------------------------------------
  SubwordConfig sub{config.subword_min_frequency, config.subword_piece_len};
  Corpus corpus = build_corpus(read_lines(config.train_source),
                               read_lines(config.train_target), sub);
  std::vector<SentencePair> testset =
      encode_test_set(read_lines(config.test_source),
                      read_lines(config.test_target), corpus.vocab,
                      corpus.splitter);
  stage("data", "done",
        std::to_string(corpus.pairs.size()) + " train / " +
            std::to_string(testset.size()) + " test pairs, vocab " +
            std::to_string(corpus.vocab.size()));

  TrainConfig tc;
  tc.steps = config.train_steps;
  tc.learning_rate = config.learning_rate;
  tc.lr_decay = config.lr_decay;
  tc.clip_norm = config.clip_norm;
  tc.init_scale = config.init_scale;
  tc.word_dropout = config.word_dropout;
  tc.seed = config.seed;
  tc.embed_dim = config.embed_dim;
  tc.hidden_dim = config.hidden_dim;
  ToyModel model = train(corpus.pairs, corpus.vocab, tc);
  model.save((fs::path(config.output_dir) / "model.json").string(),
             corpus.vocab, corpus.splitter);
  stage("train", "done",
        "held-out NLL " + std::to_string(model.held_out_nll(testset)));

  // --- annotations ------------------------------------------------------
  const size_t S = testset.size();
  std::vector<std::vector<PosTag>> pos;
  ReplacementPool pool;
  if (!config.pos_path.empty()) {
    auto tagged = read_pos_file(config.pos_path);
    if (tagged.size() != S)
      throw std::runtime_error("POS file sentence count != test set size");
    pos.resize(S);
    for (size_t s = 0; s < S; ++s) {
      if (tagged[s].size() != testset[s].source_surface.size())
        throw std::runtime_error("POS token count mismatch at sentence " +
                                 std::to_string(s + 1));
      for (const auto& [word, tag] : tagged[s]) pos[s].push_back(tag);
    }
    pool = build_replacement_pool(tagged);
  }

  std::vector<std::vector<TokenAnnotation>> annotations(S);
  for (size_t s = 0; s < S; ++s)
    annotations[s].resize(testset[s].surface_len());
  bool have_alignment = !config.alignment_path.empty();
  if (have_alignment) {
    auto links = read_alignment_file(config.alignment_path);
    if (links.size() != S)
      throw std::runtime_error(
          "alignment file sentence count != test set size");
    auto target_lines = read_lines(config.test_target);
    for (size_t s = 0; s < S; ++s)
      annotations[s] = fertility_from_alignment(
          links[s], testset[s].surface_len(),
          static_cast<int>(split_whitespace(target_lines[s]).size()));
  }
  if (!pos.empty())
    for (size_t s = 0; s < S; ++s)
      for (size_t w = 0; w < pos[s].size(); ++w)
        annotations[s][w].pos = pos[s][w];
  bool have_depth = !config.depth_path.empty();
  if (have_depth) {
    auto depths = read_depth_file(config.depth_path);
    if (depths.size() != S)
      throw std::runtime_error("depth file sentence count != test set size");
    for (size_t s = 0; s < S; ++s) {
      if (depths[s].size() != static_cast<size_t>(testset[s].surface_len()))
        throw std::runtime_error("depth token count mismatch at sentence " +
                                 std::to_string(s + 1));
      for (size_t w = 0; w < depths[s].size(); ++w)
        annotations[s][w].depth = depths[s][w];
    }
  }
  bool have_gold = !config.undertranslation_path.empty();
  if (have_gold) {
    auto gold = read_undertranslation_file(config.undertranslation_path);
    for (size_t s = 0; s < S; ++s)
      for (auto& ann : annotations[s]) ann.under_translated = 0;
    for (const auto& [sent, positions] : gold) {
      if (sent < 0 || sent >= static_cast<int>(S))
        throw std::runtime_error("under-translation sentence id out of range");
      for (int p : positions) {
        if (p < 0 || p >= testset[sent].surface_len())
          throw std::runtime_error(
              "under-translation word index out of range in sentence " +
              std::to_string(sent));
        annotations[sent][p].under_translated = 1;
      }
    }
  }

  // --- attribution -------------------------------------------------------
  EvalHarness harness(model, corpus.vocab, corpus.splitter, testset, pos,
                      pool, config.beam, config.max_len, config.jobs);
  harness.set_log(&log);

  const auto& hyp_pairs = harness.hypothesis_pairs();
  std::vector<ContributionMatrix> contribs(S);
  parallel_for(static_cast<int>(S), config.jobs,
               [&model, &hyp_pairs, &contribs, &config](int s) {
                 contribs[s] = integrated_gradients(model, hyp_pairs[s],
                                                    config.attribution_steps);
               });
  std::vector<ImportanceVector> importances(S);
  for (size_t s = 0; s < S; ++s) {
    importances[s] = merge_to_words(word_importance(contribs[s]),
                                    hyp_pairs[s].subword_spans);
    std::vector<std::string> in_tokens, out_tokens;
    for (int t : hyp_pairs[s].source) in_tokens.push_back(corpus.vocab.token(t));
    for (int t : hyp_pairs[s].target)
      out_tokens.push_back(corpus.vocab.token(t));
    auto csv = open_out(fs::path(config.output_dir) / "contrib" /
                        sentence_name(static_cast<int>(s), "csv"));
    write_contribution_csv(csv, contribs[s], in_tokens, out_tokens);

    ImportanceEstimate est;
    est.method = Method::Attribution;
    est.scores = importances[s].values;
    est.ranking = ranking_from_scores(est.scores);
    auto js = open_out(fs::path(config.output_dir) / "importance" /
                       sentence_name(static_cast<int>(s), "json"));
    write_estimate_json(js, est, hyp_pairs[s].source_surface, config.seed);
  }
  stage("attribution", "done",
        "S=" + std::to_string(config.attribution_steps) + ", " +
            std::to_string(S) + " sentences");

  // --- perturbation curves -------------------------------------------
  {
    auto csv = open_out(fs::path(config.output_dir) / "curves.csv");
    write_curve_csv_header(csv);
    for (PerturbKind kind : config.perturbations) {
      for (Method method : config.estimators) {
        PerturbationSpec spec;
        spec.kind = kind;
        spec.estimator = method;
        spec.k_max = config.k_max;
        spec.repeats = config.repeats;
        spec.seed = config.seed;
        spec.beam = config.beam;
        spec.max_len = config.max_len;
        spec.attribution_steps = config.attribution_steps;
        write_curve_csv(csv, harness.run_curve(spec));
      }
    }
  }
  stage("perturbation", "done",
        "baseline BLEU " + std::to_string(harness.baseline_bleu()));

  // --- analyses (each gated by its annotation) -------------------------
  if (!pos.empty()) {
    auto csv = open_out(fs::path(config.output_dir) / "pos_distribution.csv");
    write_distribution_csv(csv, pos_distribution(importances, annotations));
    stage("pos-distribution", "done");
  } else {
    stage("pos-distribution", "skipped", "no POS annotation configured");
  }

  if (have_alignment) {
    auto csv =
        open_out(fs::path(config.output_dir) / "fertility_distribution.csv");
    write_distribution_csv(csv,
                           fertility_distribution(importances, annotations));
    stage("fertility-distribution", "done");
  } else {
    stage("fertility-distribution", "skipped",
          "no alignment annotation configured");
  }

  if (have_gold) {
    F1Result f1 = detect_undertranslation(importances, annotations,
                                          config.undertranslation_pct);
    json report = {{"threshold_pct", config.undertranslation_pct},
                   {"f1", f1.f1},
                   {"precision", f1.precision},
                   {"recall", f1.recall},
                   {"degenerate", f1.degenerate}};
    open_out(fs::path(config.output_dir) / "undertranslation.json")
        << report.dump(2) << "\n";
    stage("under-translation", "done", "F1 " + std::to_string(f1.f1));
  } else {
    stage("under-translation", "skipped", "no gold flags configured");
  }

  int total_tokens = 0;
  for (const auto& sent : annotations)
    total_tokens += static_cast<int>(sent.size());
  if ((!pos.empty() || have_alignment || have_depth) && total_tokens >= 100) {
    Matrix features = build_feature_matrix(annotations);
    Vector target(total_tokens);
    int row = 0;
    for (size_t s = 0; s < S; ++s) {
      Vector mass = length_normalize(importances[s],
                                     static_cast<int>(annotations[s].size()));
      for (int w = 0; w < mass.size(); ++w) target(row++) = mass(w);
    }
    TreeResult tree = tree_correlation(features, target);
    json report;
    report["total_variance_reduction"] = tree.total_variance_reduction;
    report["constant_target"] = tree.constant_target;
    json imp = json::object();
    auto labels = feature_labels();
    for (size_t f = 0; f < labels.size(); ++f)
      imp[labels[f]] = tree.importances[f];
    report["feature_importance"] = imp;
    open_out(fs::path(config.output_dir) / "tree.json")
        << report.dump(2) << "\n";
    stage("tree-correlation", "done");
  } else {
    stage("tree-correlation", "skipped",
          total_tokens < 100 ? "needs >= 100 annotated tokens"
                             : "no annotations configured");
  }

  manifest["stages"] = stages;
  open_out(fs::path(config.output_dir) / "manifest.json")
      << manifest.dump(2) << "\n";
}

void attribute_one(const std::string& model_path, const std::string& sentence,
                   int steps, bool json_out, std::ostream& out,
                   std::ostream& log) {
  Checkpoint ckpt = Checkpoint::load(model_path);

  std::vector<std::string> words = split_whitespace(sentence);
  if (words.empty()) throw std::invalid_argument("empty input sentence");

  SentencePair pair;
  pair.source_surface = words;
  int oov = 0;
  for (const auto& word : words) {
    SubwordSpan span{pair.source_len(), 0};
    for (const auto& piece : ckpt.splitter.split(word)) {
      int id = ckpt.vocab.lookup(piece);
      if (id == Vocab::kUnk) ++oov;
      pair.source.push_back(id);
    }
    span.end = pair.source_len();
    pair.subword_spans.push_back(span);
  }
  if (oov > 0)
    log << "notice: " << oov
        << " out-of-vocabulary subword(s) mapped to UNK\n";

  std::vector<int> hyp = strip_eos(ckpt.model.decode(pair.source, 1, 32));
  pair.target = hyp.empty() ? std::vector<int>{Vocab::kEos} : hyp;

  ContributionMatrix cm = integrated_gradients(ckpt.model, pair, steps);
  ImportanceVector iv =
      merge_to_words(word_importance(cm), pair.subword_spans);

  // Collapse subword rows so the printed matrix is surface word x output.
  const int W = pair.surface_len(), N = cm.target_len();
  Matrix word_matrix = Matrix::Zero(W, N);
  for (int w = 0; w < W; ++w)
    for (int i = pair.subword_spans[w].begin; i < pair.subword_spans[w].end;
         ++i)
      word_matrix.row(w) += cm.values.row(i);

  std::vector<std::string> out_tokens;
  for (int t : pair.target) out_tokens.push_back(ckpt.vocab.token(t));

  if (json_out) {
    json doc;
    doc["tokens"] = words;
    doc["hypothesis"] = out_tokens;
    doc["steps"] = steps;
    json imp = json::array();
    for (int w = 0; w < W; ++w) imp.push_back(iv.values(w));
    doc["importance"] = imp;
    json matrix = json::array();
    for (int w = 0; w < W; ++w) {
      json row = json::array();
      for (int n = 0; n < N; ++n) row.push_back(word_matrix(w, n));
      matrix.push_back(row);
    }
    doc["matrix"] = matrix;
    out << doc.dump(2) << "\n";
    return;
  }

  out << "hypothesis:";
  for (const auto& t : out_tokens) out << ' ' << t;
  out << "\n\nword importance:\n";
  char buf[64];
  for (int w = 0; w < W; ++w) {
    std::snprintf(buf, sizeof(buf), "  %-16s %.6f", words[w].c_str(),
                  iv.values(w));
    out << buf << "\n";
  }
  out << "\ncontribution matrix (rows = input words, columns = output"
         " words):\n";
  out << "  " << std::string(16, ' ');
  for (const auto& t : out_tokens) {
    std::snprintf(buf, sizeof(buf), " %9.9s", t.c_str());
    out << buf;
  }
  out << "\n";
  for (int w = 0; w < W; ++w) {
    std::snprintf(buf, sizeof(buf), "  %-16s", words[w].c_str());
    out << buf;
    for (int n = 0; n < N; ++n) {
      std::snprintf(buf, sizeof(buf), " %+9.4f", word_matrix(w, n));
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace wordimp
