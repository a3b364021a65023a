#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "wordimp/corpus.hpp"
#include "wordimp/vocab.hpp"

namespace wordimp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ModelConfig {
  int vocab_size = 0;
  int embed_dim = 32;
  int hidden_dim = 32;
};

struct TrainConfig {
  int steps = 2000;
  double learning_rate = 0.05;
  double lr_decay = 1.0;    // multiplicative decay applied each step
  double clip_norm = 5.0;   // global gradient norm clip
  double init_scale = 0.1;  // embedding init stddev
  double word_dropout = 0.0;  // source embedding rows zeroed during training
  std::uint64_t seed = 1;
  int embed_dim = 32;
  int hidden_dim = 32;
  int report_every = 0;  // 0 = silent
};

/// Micro encoder-decoder with one cross-attention block.
///
/// Encoder: word embeddings (plus an appended end-of-source sentinel row)
/// receive sinusoidal positions and a tanh projection. Decoder: each output
/// position is conditioned on the previous target token and its position,
/// attends over the encoder states with a single head, and predicts the next
/// token through a tanh mix layer and a softmax.
///
/// Positions are added after the embedded-input substitution point, so a
/// zeroed word embedding keeps its position information.
class ToyModel {
 public:
  struct Params {
    Matrix src_embed, tgt_embed;  // V x d
    Matrix w_enc, w_dec;          // d x h
    Matrix b_enc, b_dec;          // 1 x h
    Matrix w_key, w_val;          // h x h
    Matrix w_ctx, w_qry;          // h x h
    Matrix b_mix;                 // 1 x h
    Matrix w_out;                 // h x V
    Matrix b_out;                 // 1 x V
  };

  ToyModel() = default;
  ToyModel(const ModelConfig& config, std::uint64_t init_seed);

  const ModelConfig& config() const { return config_; }
  const Params& params() const { return params_; }
  Params& mutable_params() { return params_; }

  /// Rows of the source embedding table for these tokens (the detached
  /// EmbeddedInput; gradients flow to these rows, not through the table).
  Matrix embed_source(const std::vector<int>& source) const;

  /// Next-token distribution over V given an embedded source (M x d) and a
  /// target prefix beginning with BOS.
  Vector forward(const Matrix& embedded, const std::vector<int>& prefix) const;

  /// Teacher-forced distributions: row n-1 is P(. | y_<n, x) for n = 1..N
  /// with prefix (BOS, y_1 .. y_{N-1}).
  Matrix forward_all(const Matrix& embedded,
                     const std::vector<int>& target) const;

  /// d P(y_n | y_<n, x) / d embedded, n in 1..N. M x embed_dim.
  Matrix grad_input(const Matrix& embedded, const std::vector<int>& target,
                    int n) const;

  /// P(y_n | ...) for all n plus the input gradient of each, sharing one
  /// forward pass.
  Vector grad_input_all(const Matrix& embedded, const std::vector<int>& target,
                        std::vector<Matrix>* grads) const;

  /// Beam search; beam=1 is the greedy argmax chain. The result ends with
  /// EOS or has length max_len.
  std::vector<int> decode(const std::vector<int>& source, int beam,
                          int max_len) const;

  /// Decode with selected source embedding rows zeroed (Mask perturbation).
  std::vector<int> decode_masked(const std::vector<int>& source,
                                 const std::vector<bool>& masked, int beam,
                                 int max_len) const;

  /// Encoder-decoder attention, M x N; every column is a distribution over
  /// source positions (the internal sentinel row is folded out).
  Matrix attention_scores(const std::vector<int>& source,
                          const std::vector<int>& target) const;

  /// Mean per-token negative log-likelihood over a corpus (EOS included).
  double held_out_nll(const std::vector<SentencePair>& pairs) const;
  /// Teacher-forced next-token accuracy over a corpus (EOS included).
  double token_accuracy(const std::vector<SentencePair>& pairs) const;

  void save(const std::string& path, const Vocab& vocab,
            const SubwordSplitter& splitter) const;

 private:
  friend ToyModel train(const std::vector<SentencePair>&, const Vocab&,
                        const TrainConfig&);
  friend struct Checkpoint;

  ModelConfig config_;
  Params params_;
};

struct Checkpoint {
  ToyModel model;
  Vocab vocab;
  SubwordSplitter splitter;

  static Checkpoint load(const std::string& path);
};

/// Trains with plain SGD, gradient clipping at clip_norm, deterministic given
/// the seed. Throws on a non-finite loss, naming the offending step.
ToyModel train(const std::vector<SentencePair>& corpus, const Vocab& vocab,
               const TrainConfig& config);

/// Sinusoidal positional encoding, len x dim.
Matrix positional_encoding(int len, int dim);

/// Drops a trailing EOS if present (decode output -> surface token stream).
std::vector<int> strip_eos(std::vector<int> tokens);

}  // namespace wordimp
