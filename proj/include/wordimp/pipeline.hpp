#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "wordimp/estimators.hpp"
#include "wordimp/evalharness.hpp"

namespace wordimp {

/// Everything one experiment needs, loadable from a JSON config file with
/// nested sections (data / annotations / model / attribution / evaluation /
/// analysis) plus top-level seed and output_dir. CLI flags override fields
/// after loading.
struct ExperimentConfig {
  // data
  std::string train_source, train_target;
  std::string test_source, test_target;

  // annotations (each optional; an empty path skips the analyses needing it)
  std::string pos_path, alignment_path, depth_path, undertranslation_path;

  // model
  int embed_dim = 32;
  int hidden_dim = 32;
  int train_steps = 2000;
  double learning_rate = 0.05;
  double lr_decay = 1.0;
  double clip_norm = 5.0;
  double init_scale = 0.1;
  double word_dropout = 0.0;
  int subword_min_frequency = 1;
  int subword_piece_len = 4;

  // attribution
  int attribution_steps = 300;

  // evaluation
  std::vector<Method> estimators = {Method::Random,    Method::Frequency,
                                    Method::Content,   Method::Attention,
                                    Method::Erasure,   Method::Attribution};
  std::vector<PerturbKind> perturbations = {PerturbKind::Mask};
  int k_max = 5;
  int repeats = 10;
  int beam = 1;
  int max_len = 32;

  // analysis
  int undertranslation_pct = 20;

  std::uint64_t seed = 1;
  std::string output_dir;
  int jobs = 1;
};

/// Parses a JSON config document. Unknown sections or keys are validation
/// errors so typos cannot silently fall back to defaults.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Canonical JSON form of a config (the manifest's reviewable copy).
std::string experiment_config_json(const ExperimentConfig& config);

/// FNV-1a hash of the canonical JSON; with the seed this pins every output.
std::uint64_t config_hash(const ExperimentConfig& config);

/// All problems with the config at once (missing files, bad ranges,
/// estimators that need absent annotations); empty means valid.
std::vector<std::string> validate_config(const ExperimentConfig& config);

/// Full experiment: train, checkpoint, attribute, perturbation curves, and
/// each analysis its annotations allow; everything lands in output_dir along
/// with a manifest (config hash + seed + skipped stages). Reruns with an
/// identical config are byte-identical. Throws std::invalid_argument on
/// validation failure (all problems in one message).
void run_pipeline(const ExperimentConfig& config, std::ostream& log);

/// Attributes one raw sentence against a saved checkpoint: decodes it, prints
/// per-word importance and the signed word-by-word contribution matrix
/// (machine-readable with json_out). OOV words map to UNK with a notice on
/// `log`.
void attribute_one(const std::string& model_path, const std::string& sentence,
                   int steps, bool json_out, std::ostream& out,
                   std::ostream& log);

}  // namespace wordimp
