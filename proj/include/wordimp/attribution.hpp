#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "wordimp/seqmodel.hpp"

namespace wordimp {

/// Signed per-(input word, output word) attribution scores. Negative entries
/// are meaningful and never clipped.
struct ContributionMatrix {
  Matrix values;  // M x N
  int steps_used = 0;

  int source_len() const { return static_cast<int>(values.rows()); }
  int target_len() const { return static_cast<int>(values.cols()); }
};

struct ImportanceVector {
  Vector values;
  bool normalized = false;
};

/// A sequence-valued differentiable function of an embedded input: scalar
/// outputs F(x)_n for n = 1..N with gradients w.r.t. the input rows.
class DifferentiableSeq {
 public:
  virtual ~DifferentiableSeq() = default;
  virtual int output_len() const = 0;
  virtual Vector outputs(const Matrix& embedded) const = 0;
  /// d F(x)_n / d embedded for 1-based n.
  virtual Matrix output_grad(const Matrix& embedded, int n) const = 0;
  /// All outputs plus all gradients; overridable to share a forward pass.
  virtual Vector outputs_and_grads(const Matrix& embedded,
                                   std::vector<Matrix>* grads) const {
    grads->clear();
    for (int n = 1; n <= output_len(); ++n)
      grads->push_back(output_grad(embedded, n));
    return outputs(embedded);
  }
};

/// ToyModel teacher-forced on a fixed target sequence.
class ModelSeq : public DifferentiableSeq {
 public:
  ModelSeq(const ToyModel& model, std::vector<int> target)
      : model_(model), target_(std::move(target)) {}

  int output_len() const override {
    return static_cast<int>(target_.size());
  }
  Vector outputs(const Matrix& embedded) const override;
  Matrix output_grad(const Matrix& embedded, int n) const override;
  Vector outputs_and_grads(const Matrix& embedded,
                           std::vector<Matrix>* grads) const override;

 private:
  const ToyModel& model_;
  std::vector<int> target_;
};

/// Path-sum approximation of integrated gradients from the all-zero baseline:
/// the mean of S+1 gradient evaluations at k/S for k = 0..S. Averaging over
/// all S+1 samples keeps the estimate exact for constant integrands (linear
/// models) at every S. Per-dimension attributions are collapsed to one scalar
/// per cell by the dot product with (x_m - x'_m).
ContributionMatrix integrated_gradients_fn(const DifferentiableSeq& f,
                                           const Matrix& input, int steps);

/// pair.target must be the model's decoded hypothesis for pair.source.
ContributionMatrix integrated_gradients(const ToyModel& model,
                                        const SentencePair& pair, int steps);

/// Row sums passed through a softmax.
ImportanceVector word_importance(const ContributionMatrix& cm);

/// Surface-word importance: subword masses summed per span, renormalized.
ImportanceVector merge_to_words(const ImportanceVector& iv,
                                const std::vector<SubwordSpan>& spans);

/// max_n |sum_m IG(m,n) - (F(x)_n - F(x')_n)|, the completeness residual.
double completeness_residual(const DifferentiableSeq& f, const Matrix& input,
                             const ContributionMatrix& cm);

/// Residual per step count; step_schedule must be strictly increasing.
std::vector<std::pair<int, double>> convergence_probe(
    const DifferentiableSeq& f, const Matrix& input,
    const std::vector<int>& step_schedule);

/// CSV: header row = output tokens, first column = input tokens, >= 9
/// significant digits.
void write_contribution_csv(std::ostream& out, const ContributionMatrix& cm,
                            const std::vector<std::string>& input_tokens,
                            const std::vector<std::string>& output_tokens);

}  // namespace wordimp
