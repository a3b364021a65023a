#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "wordimp/analysis.hpp"
#include "wordimp/corpus.hpp"
#include "wordimp/pipeline.hpp"

namespace {

using namespace wordimp;

std::string default_out_dir() {
  const char* env = std::getenv("WORDIMP_OUT");
  return env ? env : "wordimp-out";
}

int run_train(const std::string& train_src, const std::string& train_tgt,
              const TrainConfig& tc, const SubwordConfig& sub,
              const std::string& out_path) {
  Corpus corpus = build_corpus(read_lines(train_src), read_lines(train_tgt),
                               sub);
  ToyModel model = train(corpus.pairs, corpus.vocab, tc);
  model.save(out_path, corpus.vocab, corpus.splitter);
  std::cout << "trained on " << corpus.pairs.size() << " pairs (vocab "
            << corpus.vocab.size() << "), checkpoint: " << out_path << "\n";
  return 0;
}

int run_evaluate(const std::string& model_path, const std::string& test_src,
                 const std::string& test_refs, const std::string& pos_path,
                 const std::string& perturbation,
                 const std::vector<std::string>& estimators, int k_max,
                 int repeats, std::uint64_t seed, int steps, int beam,
                 int max_len, int jobs, const std::string& out_dir) {
  Checkpoint ckpt = Checkpoint::load(model_path);
  auto src_lines = read_lines(test_src);
  auto ref_lines = read_lines(test_refs);
  if (src_lines.size() != ref_lines.size())
    throw std::invalid_argument("test/refs line counts differ");
  std::vector<SentencePair> testset;
  for (size_t i = 0; i < src_lines.size(); ++i)
    testset.push_back(
        encode_pair(src_lines[i], ref_lines[i], ckpt.vocab, ckpt.splitter));

  std::vector<std::vector<PosTag>> pos;
  ReplacementPool pool;
  if (!pos_path.empty()) {
    auto tagged = read_pos_file(pos_path);
    if (tagged.size() != testset.size())
      throw std::invalid_argument("POS file sentence count != test set size");
    pos.resize(tagged.size());
    for (size_t s = 0; s < tagged.size(); ++s)
      for (const auto& [word, tag] : tagged[s]) pos[s].push_back(tag);
    pool = build_replacement_pool(tagged);
  }

  EvalHarness harness(ckpt.model, ckpt.vocab, ckpt.splitter, testset, pos,
                      pool, beam, max_len, jobs);
  harness.set_log(&std::cerr);

  std::filesystem::create_directories(out_dir);
  std::ofstream csv(std::filesystem::path(out_dir) / "curves.csv");
  if (!csv) throw std::runtime_error("cannot write to " + out_dir);
  write_curve_csv_header(csv);
  for (const auto& name : estimators) {
    PerturbationSpec spec;
    spec.kind = parse_perturb_kind(perturbation);
    spec.estimator = parse_method(name);
    spec.k_max = k_max;
    spec.repeats = repeats;
    spec.seed = seed;
    spec.beam = beam;
    spec.max_len = max_len;
    spec.attribution_steps = steps;
    PerturbationCurve curve = harness.run_curve(spec);
    write_curve_csv(csv, curve);
    std::cout << name << ": baseline " << curve.baseline_bleu
              << ", relative decline " << relative_decline(curve) << "\n";
  }
  std::cout << "curves: " << out_dir << "/curves.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "wordimp: word importance for a micro translation model via integrated "
      "gradients, with perturbation evaluation and linguistic analysis"};
  app.require_subcommand(1);

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "Train a model checkpoint");
  std::string train_src, train_tgt;
  std::string train_out = default_out_dir() + "/model.json";
  TrainConfig tc;
  SubwordConfig sub;
  train_cmd->add_option("--source", train_src, "Training source file")
      ->required();
  train_cmd->add_option("--target", train_tgt, "Training target file")
      ->required();
  train_cmd->add_option("--out", train_out, "Checkpoint path");
  train_cmd->add_option("--steps", tc.steps, "SGD steps");
  train_cmd->add_option("--lr", tc.learning_rate, "Learning rate");
  train_cmd->add_option("--lr-decay", tc.lr_decay, "Per-step LR decay");
  train_cmd->add_option("--word-dropout", tc.word_dropout,
                        "Source word dropout rate");
  train_cmd->add_option("--embed-dim", tc.embed_dim, "Embedding width");
  train_cmd->add_option("--hidden-dim", tc.hidden_dim, "Hidden width");
  train_cmd->add_option("--seed", tc.seed, "Root seed");
  train_cmd->add_option("--report-every", tc.report_every,
                        "Progress print interval (0 = silent)");
  train_cmd->add_option("--subword-min-frequency", sub.min_frequency,
                        "Words rarer than this are split (1 = never)");
  train_cmd->add_option("--subword-piece-len", sub.piece_len,
                        "Maximum subword chunk length");

  // ---- attribute ----
  auto* attr_cmd =
      app.add_subcommand("attribute", "Attribute one sentence against a saved checkpoint");
  std::string attr_model, attr_sentence;
  int attr_steps = 300;
  bool attr_json = false;
  attr_cmd->add_option("--model", attr_model, "Checkpoint path")->required();
  attr_cmd->add_option("--sentence", attr_sentence, "Raw source sentence")
      ->required();
  attr_cmd->add_option("--steps", attr_steps, "Integration steps S");
  attr_cmd->add_flag("--json", attr_json, "Machine-readable output");

  // ---- evaluate ----
  auto* eval_cmd =
      app.add_subcommand("evaluate", "Perturbation-induced BLEU degradation");
  std::string eval_model, eval_test, eval_refs, eval_pos;
  std::string eval_perturbation = "mask";
  std::vector<std::string> eval_estimators = {"random",    "frequency",
                                              "attention", "erasure",
                                              "attribution"};
  int eval_kmax = 5, eval_repeats = 10, eval_steps = 300, eval_beam = 1,
      eval_maxlen = 32, eval_jobs = 1;
  std::uint64_t eval_seed = 1;
  std::string eval_out = default_out_dir();
  eval_cmd->add_option("--model", eval_model, "Checkpoint path")->required();
  eval_cmd->add_option("--test", eval_test, "Test source file")->required();
  eval_cmd->add_option("--refs", eval_refs, "Reference target file")
      ->required();
  eval_cmd->add_option("--pos", eval_pos,
                       "POS file (needed by content/replace)");
  eval_cmd
      ->add_option("--perturbation", eval_perturbation,
                   "deletion | mask | replace")
      ->check(CLI::IsMember({"deletion", "mask", "replace"}));
  eval_cmd->add_option("--estimators", eval_estimators,
                       "Estimators to evaluate");
  eval_cmd->add_option("--k-max", eval_kmax, "Perturb up to k words");
  eval_cmd->add_option("--repeats", eval_repeats,
                       "Repeats for stochastic estimators");
  eval_cmd->add_option("--seed", eval_seed, "Root seed");
  eval_cmd->add_option("--steps", eval_steps, "Integration steps S");
  eval_cmd->add_option("--beam", eval_beam, "Beam width");
  eval_cmd->add_option("--max-len", eval_maxlen, "Decode length cap");
  eval_cmd->add_option("--jobs", eval_jobs, "Worker threads");
  eval_cmd->add_option("--out", eval_out, "Output directory");

  // ---- analyze / pipeline (config-driven) ----
  auto* analyze_cmd = app.add_subcommand(
      "analyze", "Linguistic analyses only (reuses pipeline outputs)");
  auto* pipe_cmd =
      app.add_subcommand("pipeline", "Full experiment from a config file");
  std::string config_path, override_out;
  std::uint64_t override_seed = 0;
  bool have_seed = false;
  int override_jobs = 0;
  for (CLI::App* cmd : {analyze_cmd, pipe_cmd}) {
    cmd->add_option("--config", config_path, "JSON experiment config")
        ->required();
    cmd->add_option("--out", override_out, "Override output directory");
    cmd->add_option("--seed", override_seed, "Override root seed")
        ->each([&have_seed](const std::string&) { have_seed = true; });
    cmd->add_option("--jobs", override_jobs, "Override worker threads");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      std::filesystem::create_directories(
          std::filesystem::path(train_out).parent_path().empty()
              ? "."
              : std::filesystem::path(train_out).parent_path());
      return run_train(train_src, train_tgt, tc, sub, train_out);
    }
    if (attr_cmd->parsed()) {
      wordimp::attribute_one(attr_model, attr_sentence, attr_steps, attr_json,
                             std::cout, std::cerr);
      return 0;
    }
    if (eval_cmd->parsed())
      return run_evaluate(eval_model, eval_test, eval_refs, eval_pos,
                          eval_perturbation, eval_estimators, eval_kmax,
                          eval_repeats, eval_seed, eval_steps, eval_beam,
                          eval_maxlen, eval_jobs, eval_out);
    if (analyze_cmd->parsed() || pipe_cmd->parsed()) {
      ExperimentConfig config = load_experiment_config(config_path);
      if (!override_out.empty()) config.output_dir = override_out;
      if (config.output_dir.empty()) config.output_dir = default_out_dir();
      if (have_seed) config.seed = override_seed;
      if (override_jobs > 0) config.jobs = override_jobs;
      if (analyze_cmd->parsed()) {
        // Analyses need importance scores, so the reduced run still trains
        // and attributes, but skips the perturbation sweep.
        config.estimators = {wordimp::Method::Attribution};
        config.perturbations = {wordimp::PerturbKind::Mask};
        config.k_max = 1;
        config.repeats = 1;
      }
      run_pipeline(config, std::cerr);
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
