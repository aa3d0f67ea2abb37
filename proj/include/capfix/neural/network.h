#ifndef CAPFIX_NEURAL_NETWORK_H_
#define CAPFIX_NEURAL_NETWORK_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "capfix/corpus.h"
#include "capfix/neural/lstm.h"
#include "capfix/neural/model.h"
#include "capfix/random.h"

namespace capfix::neural {

// Padded, time-major batch of index sequences.
struct Batch {
  StepLayout layout;
  std::vector<int> indices;     // layout.rows(), pad index at padding
  std::vector<int> labels;      // layout.rows(), 0 at padding; empty if unlabelled
  std::vector<std::size_t> lengths;

  std::size_t token_count() const;
};

// Pads every sequence to the longest with Vocabulary::kPad.
Batch make_batch(std::span<const std::vector<int>> sequences,
                 std::span<const Labels> labels = {});

// Row i is embedding row indices[i]. Throws on an out-of-range index.
Matrix embed_forward(const ModelParameters& params, std::span<const int> indices);

struct ForwardTrace {
  StepLayout layout;
  std::vector<int> indices;
  std::array<LayerTrace, kNumLayers> layers;
  Matrix logits;         // rows x 2
  Matrix probabilities;  // rows x 2, softmax of logits
};

// Embedding -> three BiLSTM layers -> per-position logits and softmax.
// With `training` set, inverted dropout with rate `dropout` is applied to the
// input of every BiLSTM layer using `rng`; otherwise the pass is
// deterministic and `rng` is unused.
ForwardTrace model_forward(const ModelParameters& params, const Batch& batch,
                           bool training = false, double dropout = 0.0,
                           Rng* rng = nullptr);

// Single sequence convenience (inference mode).
ForwardTrace model_forward(const ModelParameters& params,
                           std::span<const int> indices);

struct LossAndGradient {
  double loss = 0;
  Matrix d_logits;
};

// Mean over unmasked rows of -log softmax(logits)[label]. d_logits is
// (softmax - onehot) / normalizer on unmasked rows and zero elsewhere. The
// normalizer defaults to the number of unmasked rows.
LossAndGradient softmax_cross_entropy(const Matrix& logits,
                                      std::span<const int> labels,
                                      std::span<const double> mask,
                                      std::optional<double> normalizer = {});

// Accumulates analytic gradients of the loss whose logit gradient is
// `d_logits` into `grads` (which must already have the parameters' shape).
void backward(const ModelParameters& params, const ForwardTrace& trace,
              const Matrix& d_logits, Gradients& grads);

// Fresh gradients of the masked mean cross-entropy for `trace`.
Gradients backward(const ModelParameters& params, const ForwardTrace& trace,
                   std::span<const int> labels, std::span<const double> mask);

}  // namespace capfix::neural

#endif  // CAPFIX_NEURAL_NETWORK_H_
