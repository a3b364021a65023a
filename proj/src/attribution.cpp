#include "wordimp/attribution.hpp"

#include <cmath>
#include <iomanip>
#include <stdexcept>

namespace wordimp {

Vector ModelSeq::outputs(const Matrix& embedded) const {
  Matrix probs = model_.forward_all(embedded, target_);
  Vector out(target_.size());
  for (size_t i = 0; i < target_.size(); ++i)
    out(i) = probs(static_cast<Eigen::Index>(i), target_[i]);
  return out;
}

Matrix ModelSeq::output_grad(const Matrix& embedded, int n) const {
  return model_.grad_input(embedded, target_, n);
}

Vector ModelSeq::outputs_and_grads(const Matrix& embedded,
                                   std::vector<Matrix>* grads) const {
  return model_.grad_input_all(embedded, target_, grads);
}

ContributionMatrix integrated_gradients_fn(const DifferentiableSeq& f,
                                           const Matrix& input, int steps) {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  const int m = static_cast<int>(input.rows());
  const int n = f.output_len();

  std::vector<Matrix> grad_sum(n, Matrix::Zero(m, input.cols()));
  std::vector<Matrix> grads;
  for (int k = 0; k <= steps; ++k) {
    Matrix point = (double(k) / steps) * input;
    f.outputs_and_grads(point, &grads);
    for (int j = 0; j < n; ++j) {
      if (!grads[j].allFinite())
        throw std::runtime_error("non-finite gradient at path step " +
                                 std::to_string(k) + ", output position " +
                                 std::to_string(j + 1));
      grad_sum[j] += grads[j];
    }
  }

  ContributionMatrix cm;
  cm.steps_used = steps;
  cm.values.resize(m, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i)
      cm.values(i, j) = input.row(i).dot(grad_sum[j].row(i)) / (steps + 1);
  return cm;
}

ContributionMatrix integrated_gradients(const ToyModel& model,
                                        const SentencePair& pair, int steps) {
  ModelSeq f(model, pair.target);
  return integrated_gradients_fn(f, model.embed_source(pair.source), steps);
}

ImportanceVector word_importance(const ContributionMatrix& cm) {
  Vector sums = cm.values.rowwise().sum();
  Eigen::ArrayXd e = (sums.array() - sums.maxCoeff()).exp();
  ImportanceVector iv;
  iv.values = (e / e.sum()).matrix();
  iv.normalized = true;
  return iv;
}

ImportanceVector merge_to_words(const ImportanceVector& iv,
                                const std::vector<SubwordSpan>& spans) {
  int pos = 0;
  for (const auto& span : spans) {
    if (span.begin != pos || span.end <= span.begin)
      throw std::invalid_argument("spans do not partition the input");
    pos = span.end;
  }
  if (pos != iv.values.size())
    throw std::invalid_argument("spans do not cover the input");

  ImportanceVector out;
  out.values.resize(spans.size());
  for (size_t w = 0; w < spans.size(); ++w)
    out.values(w) =
        iv.values.segment(spans[w].begin, spans[w].end - spans[w].begin).sum();
  double total = out.values.sum();
  if (total > 0) out.values /= total;
  out.normalized = true;
  return out;
}

double completeness_residual(const DifferentiableSeq& f, const Matrix& input,
                             const ContributionMatrix& cm) {
  Vector at_input = f.outputs(input);
  Vector at_baseline = f.outputs(Matrix::Zero(input.rows(), input.cols()));
  double worst = 0.0;
  for (int j = 0; j < f.output_len(); ++j) {
    double lhs = cm.values.col(j).sum();
    worst = std::max(worst, std::abs(lhs - (at_input(j) - at_baseline(j))));
  }
  return worst;
}

std::vector<std::pair<int, double>> convergence_probe(
    const DifferentiableSeq& f, const Matrix& input,
    const std::vector<int>& step_schedule) {
  for (size_t i = 1; i < step_schedule.size(); ++i)
    if (step_schedule[i] <= step_schedule[i - 1])
      throw std::invalid_argument("step schedule must be strictly increasing");
  std::vector<std::pair<int, double>> out;
  for (int s : step_schedule) {
    ContributionMatrix cm = integrated_gradients_fn(f, input, s);
    out.emplace_back(s, completeness_residual(f, input, cm));
  }
  return out;
}

void write_contribution_csv(std::ostream& out, const ContributionMatrix& cm,
                            const std::vector<std::string>& input_tokens,
                            const std::vector<std::string>& output_tokens) {
  if (static_cast<int>(input_tokens.size()) != cm.source_len() ||
      static_cast<int>(output_tokens.size()) != cm.target_len())
    throw std::invalid_argument("token label count mismatch");
  out << "input";
  for (const auto& tok : output_tokens) out << ',' << tok;
  out << '\n';
  out << std::setprecision(12);
  for (int i = 0; i < cm.source_len(); ++i) {
    out << input_tokens[i];
    for (int j = 0; j < cm.target_len(); ++j) out << ',' << cm.values(i, j);
    out << '\n';
  }
}

}  // namespace wordimp
