#include "wordimp/seqmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "wordimp/rng.hpp"
#include "wordimp/tape.hpp"

namespace wordimp {

namespace {

struct ParamVars {
  ad::Var src_embed, tgt_embed, w_enc, w_dec, b_enc, b_dec, w_key, w_val,
      w_ctx, w_qry, b_mix, w_out, b_out;
};

ParamVars make_param_vars(ad::Tape& t, const ToyModel::Params& p) {
  ParamVars v;
  v.src_embed = t.input(p.src_embed);
  v.tgt_embed = t.input(p.tgt_embed);
  v.w_enc = t.input(p.w_enc);
  v.w_dec = t.input(p.w_dec);
  v.b_enc = t.input(p.b_enc);
  v.b_dec = t.input(p.b_dec);
  v.w_key = t.input(p.w_key);
  v.w_val = t.input(p.w_val);
  v.w_ctx = t.input(p.w_ctx);
  v.w_qry = t.input(p.w_qry);
  v.b_mix = t.input(p.b_mix);
  v.w_out = t.input(p.w_out);
  v.b_out = t.input(p.b_out);
  return v;
}

template <class F>
void for_each_param(ToyModel::Params& p, F f) {
  f("src_embed", p.src_embed);
  f("tgt_embed", p.tgt_embed);
  f("w_enc", p.w_enc);
  f("w_dec", p.w_dec);
  f("b_enc", p.b_enc);
  f("b_dec", p.b_dec);
  f("w_key", p.w_key);
  f("w_val", p.w_val);
  f("w_ctx", p.w_ctx);
  f("w_qry", p.w_qry);
  f("b_mix", p.b_mix);
  f("w_out", p.w_out);
  f("b_out", p.b_out);
}

template <class F>
void for_each_param_var(ParamVars& pv, F f) {
  f("src_embed", pv.src_embed);
  f("tgt_embed", pv.tgt_embed);
  f("w_enc", pv.w_enc);
  f("w_dec", pv.w_dec);
  f("b_enc", pv.b_enc);
  f("b_dec", pv.b_dec);
  f("w_key", pv.w_key);
  f("w_val", pv.w_val);
  f("w_ctx", pv.w_ctx);
  f("w_qry", pv.w_qry);
  f("b_mix", pv.b_mix);
  f("w_out", pv.w_out);
  f("b_out", pv.b_out);
}

struct ForwardGraph {
  ad::Var probs;  // N x V
  ad::Var attn;   // N x (M+1), rows are distributions over encoder states
};

/// Encoder over the embedded source rows plus the end-of-source sentinel,
/// one cross-attention read per decoder position.
ForwardGraph build_forward(ad::Tape& t, const ParamVars& pv, ad::Var embedded,
                           const std::vector<int>& prefix, int hidden_dim) {
  const int m = static_cast<int>(embedded.value().rows());
  const int n = static_cast<int>(prefix.size());
  const int d = static_cast<int>(pv.w_enc.value().rows());

  ad::Var sentinel = t.gather_rows(pv.src_embed, {Vocab::kEos});
  ad::Var xfull = t.vconcat(embedded, sentinel);
  ad::Var xpos = t.add_const(xfull, positional_encoding(m + 1, d));
  ad::Var enc = t.tanh(t.add_rowvec(t.matmul(xpos, pv.w_enc), pv.b_enc));
  ad::Var keys = t.matmul(enc, pv.w_key);
  ad::Var vals = t.matmul(enc, pv.w_val);

  ad::Var y = t.gather_rows(pv.tgt_embed, prefix);
  ad::Var ypos = t.add_const(y, positional_encoding(n, d));
  ad::Var qry = t.tanh(t.add_rowvec(t.matmul(ypos, pv.w_dec), pv.b_dec));

  ad::Var scores =
      t.scale(t.matmul_nt(qry, keys), 1.0 / std::sqrt(double(hidden_dim)));
  ad::Var attn = t.softmax_rows(scores);
  ad::Var ctx = t.matmul(attn, vals);

  ad::Var mix = t.tanh(t.add_rowvec(
      t.add(t.matmul(ctx, pv.w_ctx), t.matmul(qry, pv.w_qry)), pv.b_mix));
  ad::Var logits = t.add_rowvec(t.matmul(mix, pv.w_out), pv.b_out);
  return {t.softmax_rows(logits), attn};
}

std::vector<int> teacher_prefix(const std::vector<int>& target) {
  std::vector<int> prefix;
  prefix.push_back(Vocab::kBos);
  prefix.insert(prefix.end(), target.begin(), target.end() - 1);
  return prefix;
}

void check_embedded(const Matrix& embedded, int embed_dim) {
  if (embedded.cols() != embed_dim)
    throw std::invalid_argument("embedded input width != embed_dim");
  if (embedded.rows() < 1)
    throw std::invalid_argument("embedded input must have at least one row");
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data(m.size());
  Eigen::Map<Matrix>(data.data(), m.rows(), m.cols()) = m;
  j["data"] = data;
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Eigen::Index rows = j.at("rows"), cols = j.at("cols");
  std::vector<double> data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::runtime_error("checkpoint tensor size mismatch");
  return Eigen::Map<Matrix>(data.data(), rows, cols);
}

}  // namespace

Matrix positional_encoding(int len, int dim) {
  Matrix pe(len, dim);
  for (int pos = 0; pos < len; ++pos)
    for (int i = 0; i < dim; ++i) {
      double rate = std::pow(10000.0, -double(i / 2 * 2) / dim);
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  return pe;
}

std::vector<int> strip_eos(std::vector<int> tokens) {
  if (!tokens.empty() && tokens.back() == Vocab::kEos) tokens.pop_back();
  return tokens;
}

ToyModel::ToyModel(const ModelConfig& config, std::uint64_t init_seed)
    : config_(config) {
  if (config.vocab_size < Vocab::kNumReserved)
    throw std::invalid_argument("vocab_size too small");
  const int v = config.vocab_size, d = config.embed_dim, h = config.hidden_dim;
  params_.src_embed.resize(v, d);
  params_.tgt_embed.resize(v, d);
  params_.w_enc.resize(d, h);
  params_.w_dec.resize(d, h);
  params_.b_enc = Matrix::Zero(1, h);
  params_.b_dec = Matrix::Zero(1, h);
  params_.w_key.resize(h, h);
  params_.w_val.resize(h, h);
  params_.w_ctx.resize(h, h);
  params_.w_qry.resize(h, h);
  params_.b_mix = Matrix::Zero(1, h);
  params_.w_out.resize(h, v);
  params_.b_out = Matrix::Zero(1, v);

  Rng root(init_seed);
  for_each_param(params_, [&root](const char* name, Matrix& m) {
    if (std::string_view(name).starts_with("b_")) return;
    Rng rng = root.substream(name);
    double scale = std::string_view(name).ends_with("embed")
                       ? 0.1
                       : 1.0 / std::sqrt(double(m.rows()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        m(r, c) = scale * rng.gaussian();
  });
}

Matrix ToyModel::embed_source(const std::vector<int>& source) const {
  Matrix e(source.size(), config_.embed_dim);
  for (size_t i = 0; i < source.size(); ++i) {
    if (source[i] < 0 || source[i] >= config_.vocab_size)
      throw std::out_of_range("source token index out of vocab range");
    e.row(i) = params_.src_embed.row(source[i]);
  }
  return e;
}

Vector ToyModel::forward(const Matrix& embedded,
                         const std::vector<int>& prefix) const {
  check_embedded(embedded, config_.embed_dim);
  if (prefix.empty() || prefix.front() != Vocab::kBos)
    throw std::invalid_argument("target prefix must begin with BOS");
  ad::Tape t;
  ParamVars pv = make_param_vars(t, params_);
  ad::Var x = t.input(embedded);
  ForwardGraph g = build_forward(t, pv, x, prefix, config_.hidden_dim);
  return g.probs.value().row(static_cast<Eigen::Index>(prefix.size()) - 1);
}

Matrix ToyModel::forward_all(const Matrix& embedded,
                             const std::vector<int>& target) const {
  check_embedded(embedded, config_.embed_dim);
  if (target.empty()) throw std::invalid_argument("empty target");
  ad::Tape t;
  ParamVars pv = make_param_vars(t, params_);
  ad::Var x = t.input(embedded);
  ForwardGraph g =
      build_forward(t, pv, x, teacher_prefix(target), config_.hidden_dim);
  return g.probs.value();
}

Matrix ToyModel::grad_input(const Matrix& embedded,
                            const std::vector<int>& target, int n) const {
  check_embedded(embedded, config_.embed_dim);
  if (n < 1 || n > static_cast<int>(target.size()))
    throw std::out_of_range("output position out of range");
  ad::Tape t;
  ParamVars pv = make_param_vars(t, params_);
  ad::Var x = t.input(embedded);
  ForwardGraph g =
      build_forward(t, pv, x, teacher_prefix(target), config_.hidden_dim);
  t.backward(g.probs, n - 1, target[n - 1]);
  return x.grad();
}

Vector ToyModel::grad_input_all(const Matrix& embedded,
                                const std::vector<int>& target,
                                std::vector<Matrix>* grads) const {
  check_embedded(embedded, config_.embed_dim);
  if (target.empty()) throw std::invalid_argument("empty target");
  ad::Tape t;
  ParamVars pv = make_param_vars(t, params_);
  ad::Var x = t.input(embedded);
  ForwardGraph g =
      build_forward(t, pv, x, teacher_prefix(target), config_.hidden_dim);
  const int n = static_cast<int>(target.size());
  Vector outputs(n);
  grads->clear();
  grads->reserve(n);
  for (int i = 0; i < n; ++i) {
    outputs(i) = g.probs.value()(i, target[i]);
    t.zero_grad();
    t.backward(g.probs, i, target[i]);
    grads->push_back(x.grad());
  }
  return outputs;
}

namespace {

struct Hypothesis {
  std::vector<int> tokens;
  double logp = 0.0;
  bool done = false;
};

std::vector<int> decode_embedded(const ToyModel& model, const Matrix& embedded,
                                 int beam, int max_len) {
  if (beam < 1) throw std::invalid_argument("beam must be positive");
  if (max_len < 1) throw std::invalid_argument("max_len must be positive");
  std::vector<Hypothesis> pool{Hypothesis{}};
  for (int step = 0; step < max_len; ++step) {
    std::vector<Hypothesis> next;
    bool any_live = false;
    for (const auto& hyp : pool) {
      if (hyp.done) {
        next.push_back(hyp);
        continue;
      }
      any_live = true;
      std::vector<int> prefix{Vocab::kBos};
      prefix.insert(prefix.end(), hyp.tokens.begin(), hyp.tokens.end());
      Vector dist = model.forward(embedded, prefix);
      // Candidate tokens exclude BOS and PAD.
      std::vector<int> order(dist.size());
      for (int i = 0; i < dist.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&dist](int a, int b) { return dist(a) > dist(b); });
      int taken = 0;
      for (int tok : order) {
        if (tok == Vocab::kBos || tok == Vocab::kPad) continue;
        Hypothesis ext = hyp;
        ext.tokens.push_back(tok);
        ext.logp += std::log(std::max(dist(tok), 1e-300));
        ext.done = (tok == Vocab::kEos);
        next.push_back(std::move(ext));
        if (++taken == beam) break;
      }
    }
    if (!any_live) break;
    std::stable_sort(next.begin(), next.end(),
                     [](const Hypothesis& a, const Hypothesis& b) {
                       return a.logp > b.logp;
                     });
    if (static_cast<int>(next.size()) > beam) next.resize(beam);
    pool = std::move(next);
  }
  auto best = std::max_element(pool.begin(), pool.end(),
                               [](const Hypothesis& a, const Hypothesis& b) {
                                 return a.logp < b.logp;
                               });
  return best->tokens;
}

double sequence_logp(const ToyModel& model, const Matrix& embedded,
                     const std::vector<int>& tokens) {
  if (tokens.empty()) return 0.0;
  Matrix probs = model.forward_all(embedded, tokens);
  double lp = 0.0;
  for (size_t i = 0; i < tokens.size(); ++i)
    lp += std::log(std::max(probs(static_cast<Eigen::Index>(i), tokens[i]),
                            1e-300));
  return lp;
}

}  // namespace

std::vector<int> ToyModel::decode(const std::vector<int>& source, int beam,
                                  int max_len) const {
  return decode_masked(source, std::vector<bool>(source.size(), false), beam,
                       max_len);
}

std::vector<int> ToyModel::decode_masked(const std::vector<int>& source,
                                         const std::vector<bool>& masked,
                                         int beam, int max_len) const {
  if (masked.size() != source.size())
    throw std::invalid_argument("mask length != source length");
  Matrix embedded(source.size(), config_.embed_dim);
  for (size_t i = 0; i < source.size(); ++i) {
    if (masked[i])
      embedded.row(i).setZero();
    else
      embedded.row(i) = params_.src_embed.row(source[i]);
  }
  std::vector<int> result = decode_embedded(*this, embedded, beam, max_len);
  if (beam > 1) {
    // A pruned greedy path can outscore the surviving beam; keep the better.
    std::vector<int> greedy = decode_embedded(*this, embedded, 1, max_len);
    if (sequence_logp(*this, embedded, greedy) >
        sequence_logp(*this, embedded, result))
      result = greedy;
  }
  return result;
}

Matrix ToyModel::attention_scores(const std::vector<int>& source,
                                  const std::vector<int>& target) const {
  if (source.empty() || target.empty())
    throw std::invalid_argument("attention_scores: empty source or target");
  ad::Tape t;
  ParamVars pv = make_param_vars(t, params_);
  ad::Var x = t.input(embed_source(source));
  ForwardGraph g =
      build_forward(t, pv, x, teacher_prefix(target), config_.hidden_dim);
  // Fold out the sentinel row and renormalize each output-word column.
  Matrix a = g.attn.value().transpose();  // (M+1) x N
  Matrix out = a.topRows(a.rows() - 1);
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    double s = out.col(c).sum();
    if (s > 0)
      out.col(c) /= s;
    else
      out.col(c).setConstant(1.0 / double(out.rows()));
  }
  return out;
}

double ToyModel::held_out_nll(const std::vector<SentencePair>& pairs) const {
  double nll = 0.0;
  std::int64_t tokens = 0;
  for (const auto& pair : pairs) {
    std::vector<int> gold = pair.target;
    gold.push_back(Vocab::kEos);
    Matrix probs = forward_all(embed_source(pair.source), gold);
    for (size_t i = 0; i < gold.size(); ++i)
      nll -= std::log(std::max(probs(static_cast<Eigen::Index>(i), gold[i]),
                               1e-300));
    tokens += static_cast<std::int64_t>(gold.size());
  }
  return nll / double(tokens);
}

double ToyModel::token_accuracy(const std::vector<SentencePair>& pairs) const {
  std::int64_t correct = 0, total = 0;
  for (const auto& pair : pairs) {
    std::vector<int> gold = pair.target;
    gold.push_back(Vocab::kEos);
    Matrix probs = forward_all(embed_source(pair.source), gold);
    for (size_t i = 0; i < gold.size(); ++i) {
      Eigen::Index argmax;
      probs.row(static_cast<Eigen::Index>(i)).maxCoeff(&argmax);
      if (argmax == gold[i]) ++correct;
      ++total;
    }
  }
  return double(correct) / double(total);
}

ToyModel train(const std::vector<SentencePair>& corpus, const Vocab& vocab,
               const TrainConfig& config) {
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
  for (const auto& pair : corpus) {
    pair.validate();
    for (int tok : pair.source)
      if (tok >= vocab.size()) throw std::invalid_argument("source index >= V");
    for (int tok : pair.target)
      if (tok >= vocab.size()) throw std::invalid_argument("target index >= V");
  }

  ModelConfig mc{vocab.size(), config.embed_dim, config.hidden_dim};
  ToyModel model(mc, config.seed);
  Rng root(config.seed);
  Rng order = root.substream("train-order");
  Rng dropout = root.substream("word-dropout");
  double lr = config.learning_rate;

  for (int step = 0; step < config.steps; ++step) {
    const SentencePair& pair =
        corpus[order.uniform_int(corpus.size())];
    std::vector<int> gold = pair.target;
    gold.push_back(Vocab::kEos);

    ad::Tape t;
    ParamVars pv = make_param_vars(t, model.params_);
    ad::Var embedded = t.gather_rows(pv.src_embed, pair.source);
    if (config.word_dropout > 0.0) {
      Matrix keep = Matrix::Ones(pair.source_len(), config.embed_dim);
      for (int r = 0; r < pair.source_len(); ++r)
        if (dropout.uniform() < config.word_dropout) keep.row(r).setZero();
      embedded = t.cwise_mul_const(embedded, std::move(keep));
    }
    std::vector<int> prefix{Vocab::kBos};
    prefix.insert(prefix.end(), pair.target.begin(), pair.target.end());
    ForwardGraph g =
        build_forward(t, pv, embedded, prefix, config.hidden_dim);

    std::vector<std::pair<int, int>> cells;
    for (size_t i = 0; i < gold.size(); ++i)
      cells.emplace_back(static_cast<int>(i), gold[i]);
    ad::Var loss =
        t.scale(t.sum(t.log(t.pick(g.probs, cells))), -1.0 / gold.size());

    double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value))
      throw std::runtime_error("train: non-finite loss at step " +
                               std::to_string(step));
    t.backward(loss);

    double sq_norm = 0.0;
    for_each_param_var(pv, [&sq_norm](const char*, ad::Var& v) {
      sq_norm += v.grad().squaredNorm();
    });
    double clip = 1.0;
    if (config.clip_norm > 0 && std::sqrt(sq_norm) > config.clip_norm)
      clip = config.clip_norm / std::sqrt(sq_norm);

    ToyModel::Params& p = model.params_;
    double rate = lr * clip;
    p.src_embed -= rate * pv.src_embed.grad();
    p.tgt_embed -= rate * pv.tgt_embed.grad();
    p.w_enc -= rate * pv.w_enc.grad();
    p.w_dec -= rate * pv.w_dec.grad();
    p.b_enc -= rate * pv.b_enc.grad();
    p.b_dec -= rate * pv.b_dec.grad();
    p.w_key -= rate * pv.w_key.grad();
    p.w_val -= rate * pv.w_val.grad();
    p.w_ctx -= rate * pv.w_ctx.grad();
    p.w_qry -= rate * pv.w_qry.grad();
    p.b_mix -= rate * pv.b_mix.grad();
    p.w_out -= rate * pv.w_out.grad();
    p.b_out -= rate * pv.b_out.grad();
    lr *= config.lr_decay;

    if (config.report_every > 0 && (step + 1) % config.report_every == 0)
      std::fprintf(stderr, "step %d loss %.4f\n", step + 1, loss_value);
  }
  return model;
}

void ToyModel::save(const std::string& path, const Vocab& vocab,
                    const SubwordSplitter& splitter) const {
  nlohmann::json j;
  j["format"] = "wordimp-checkpoint-v1";
  j["config"] = {{"vocab_size", config_.vocab_size},
                 {"embed_dim", config_.embed_dim},
                 {"hidden_dim", config_.hidden_dim}};
  j["vocab"] = {{"tokens", vocab.tokens()},
                {"frequency", vocab.frequencies()}};
  j["subword"] = {{"min_frequency", splitter.config().min_frequency},
                  {"piece_len", splitter.config().piece_len},
                  {"surface_freq", splitter.surface_frequencies()}};
  nlohmann::json params;
  for_each_param(const_cast<Params&>(params_),
                 [&params](const char* name, Matrix& m) {
                   params[name] = matrix_to_json(m);
                 });
  j["params"] = std::move(params);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump();
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "wordimp-checkpoint-v1")
    throw std::runtime_error("unrecognized checkpoint format: " + path);

  Checkpoint ckpt;
  ckpt.model.config_.vocab_size = j["config"]["vocab_size"];
  ckpt.model.config_.embed_dim = j["config"]["embed_dim"];
  ckpt.model.config_.hidden_dim = j["config"]["hidden_dim"];
  for_each_param(ckpt.model.params_, [&j](const char* name, Matrix& m) {
    m = matrix_from_json(j["params"].at(name));
  });

  std::vector<std::string> tokens = j["vocab"]["tokens"];
  std::vector<std::int64_t> freq = j["vocab"]["frequency"];
  for (size_t i = Vocab::kNumReserved; i < tokens.size(); ++i)
    ckpt.vocab.add(tokens[i]);
  for (size_t i = 0; i < freq.size(); ++i)
    ckpt.vocab.set_frequency(static_cast<int>(i), freq[i]);

  SubwordConfig sc;
  sc.min_frequency = j["subword"]["min_frequency"];
  sc.piece_len = j["subword"]["piece_len"];
  std::unordered_map<std::string, std::int64_t> sf =
      j["subword"]["surface_freq"];
  ckpt.splitter = SubwordSplitter(sc, std::move(sf));
  return ckpt;
}

}  // namespace wordimp
