#include "capfix/neural/network.h"

#include <algorithm>
#include <cmath>

#include "capfix/error.h"

namespace capfix::neural {
namespace {

using Eigen::Index;

Matrix dropout_mask(Index rows, Index cols, double rate, Rng& rng) {
  Matrix mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  double* data = mask.data();
  for (Index i = 0; i < mask.size(); ++i) {
    data[i] = uniform_real(rng) < rate ? 0.0 : keep_scale;
  }
  return mask;
}

}  // namespace

std::size_t Batch::token_count() const {
  std::size_t n = 0;
  for (auto len : lengths) n += len;
  return n;
}

Batch make_batch(std::span<const std::vector<int>> sequences,
                 std::span<const Labels> labels) {
  if (sequences.empty()) throw Error("make_batch: no sequences");
  if (!labels.empty() && labels.size() != sequences.size()) {
    throw Error("make_batch: labels and sequences differ in count");
  }
  Batch batch;
  std::size_t steps = 0;
  for (const auto& seq : sequences) {
    if (seq.empty()) throw Error("make_batch: empty sequence");
    steps = std::max(steps, seq.size());
    batch.lengths.push_back(seq.size());
  }
  const std::size_t B = sequences.size();
  batch.layout.steps = steps;
  batch.layout.batch = B;
  batch.layout.mask.assign(steps * B, 0.0);
  batch.indices.assign(steps * B, Vocabulary::kPad);
  if (!labels.empty()) batch.labels.assign(steps * B, 0);
  for (std::size_t b = 0; b < B; ++b) {
    if (!labels.empty() && labels[b].size() != sequences[b].size()) {
      throw Error("make_batch: sequence " + std::to_string(b) +
                  " has mismatched label count");
    }
    for (std::size_t t = 0; t < sequences[b].size(); ++t) {
      const std::size_t row = t * B + b;
      batch.indices[row] = sequences[b][t];
      batch.layout.mask[row] = 1.0;
      if (!labels.empty()) batch.labels[row] = labels[b][t];
    }
  }
  return batch;
}

Matrix embed_forward(const ModelParameters& params, std::span<const int> indices) {
  const Index V = params.embedding.rows();
  Matrix out(static_cast<Index>(indices.size()), params.embedding.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= V) {
      throw Error("embedding index " + std::to_string(indices[i]) +
                  " out of range [0, " + std::to_string(V) + ")");
    }
    out.row(static_cast<Index>(i)) = params.embedding.row(indices[i]);
  }
  return out;
}

ForwardTrace model_forward(const ModelParameters& params, const Batch& batch,
                           bool training, double dropout, Rng* rng) {
  if (batch.layout.rows() == 0) throw Error("model_forward: empty batch");
  if (training && dropout > 0 && rng == nullptr) {
    throw Error("model_forward: training with dropout needs an rng");
  }
  if (dropout < 0 || dropout >= 1) throw Error("dropout must lie in [0, 1)");
  const bool use_dropout = training && dropout > 0;

  ForwardTrace trace;
  trace.layout = batch.layout;
  trace.indices = batch.indices;
  Matrix input = embed_forward(params, batch.indices);
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    Matrix mask;
    if (use_dropout) mask = dropout_mask(input.rows(), input.cols(), dropout, *rng);
    trace.layers[l] = bilstm_layer_forward(params.layers[l], input, trace.layout, mask);
    if (l + 1 < kNumLayers) input = trace.layers[l].output;
  }
  const Matrix& top = trace.layers.back().output;
  trace.logits.noalias() = top * params.classifier_w.transpose();
  trace.logits.rowwise() += params.classifier_b.transpose();

  trace.probabilities.resize(trace.logits.rows(), trace.logits.cols());
  for (Index r = 0; r < trace.logits.rows(); ++r) {
    const double m = trace.logits.row(r).maxCoeff();
    auto e = (trace.logits.row(r).array() - m).exp();
    trace.probabilities.row(r) = e / e.sum();
  }
  return trace;
}

ForwardTrace model_forward(const ModelParameters& params,
                           std::span<const int> indices) {
  const std::vector<int> seq(indices.begin(), indices.end());
  return model_forward(params, make_batch(std::span(&seq, 1)));
}

LossAndGradient softmax_cross_entropy(const Matrix& logits,
                                      std::span<const int> labels,
                                      std::span<const double> mask,
                                      std::optional<double> normalizer) {
  const auto rows = static_cast<std::size_t>(logits.rows());
  if (labels.size() != rows || mask.size() != rows ||
      logits.cols() != static_cast<Index>(kNumClasses)) {
    throw Error("softmax_cross_entropy: shape mismatch");
  }
  double count = 0;
  for (double m : mask) count += m != 0 ? 1 : 0;
  if (count == 0) throw Error("softmax_cross_entropy: every position is masked");
  const double norm = normalizer.value_or(count);

  LossAndGradient out;
  out.d_logits = Matrix::Zero(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask[r] == 0) continue;
    if (labels[r] < 0 || labels[r] >= static_cast<int>(kNumClasses)) {
      throw Error("softmax_cross_entropy: label out of range");
    }
    const auto row = logits.row(static_cast<Index>(r)).array();
    const double m = row.maxCoeff();
    const double lse = m + std::log((row - m).exp().sum());
    out.loss += lse - row(labels[r]);
    auto d = out.d_logits.row(static_cast<Index>(r));
    d = ((row - lse).exp() / norm).matrix();
    d(labels[r]) -= 1.0 / norm;
  }
  out.loss /= norm;
  return out;
}

void backward(const ModelParameters& params, const ForwardTrace& trace,
              const Matrix& d_logits, Gradients& grads) {
  const Matrix& top = trace.layers.back().output;
  grads.classifier_w.noalias() += d_logits.transpose() * top;
  grads.classifier_b += d_logits.colwise().sum().transpose();
  Matrix d = d_logits * params.classifier_w;
  for (std::size_t l = kNumLayers; l-- > 0;) {
    d = bilstm_layer_backward(params.layers[l], trace.layers[l], trace.layout,
                              d, grads.layers[l]);
  }
  for (std::size_t r = 0; r < trace.indices.size(); ++r) {
    if (trace.layout.mask[r] == 0) continue;
    grads.embedding.row(trace.indices[r]) += d.row(static_cast<Index>(r));
  }
}

Gradients backward(const ModelParameters& params, const ForwardTrace& trace,
                   std::span<const int> labels, std::span<const double> mask) {
  Gradients grads = ModelParameters::zeros(params.dims);
  const auto loss = softmax_cross_entropy(trace.logits, labels, mask);
  backward(params, trace, loss.d_logits, grads);
  return grads;
}

}  // namespace capfix::neural
