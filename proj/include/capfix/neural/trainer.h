#ifndef CAPFIX_NEURAL_TRAINER_H_
#define CAPFIX_NEURAL_TRAINER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "capfix/corpus.h"
#include "capfix/metrics.h"
#include "capfix/neural/adam.h"
#include "capfix/neural/model.h"

namespace capfix::neural {

struct TrainingConfig {
  std::size_t epochs = 25;
  std::size_t hidden_dim = 256;
  std::size_t embed_dim = 256;
  double dropout = 0.5;
  double lr_start = 1e-3;
  double lr_end = 5e-4;
  std::size_t batch_size = 32;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  // Global L2 norm clip on the batch gradient; 0 disables.
  double grad_clip = 5.0;
  int min_count = 1;
  // Batch shards processed in parallel; results depend on this value but are
  // reproducible for a fixed value.
  int threads = 1;

  // Learning rates as published (1e-6 decaying to 5e-7).
  static TrainingConfig paper();
  // Desk-scale defaults (1e-3 decaying to 5e-4).
  static TrainingConfig desk();

  void validate() const;
  AdamConfig adam() const { return {adam_beta1, adam_beta2, adam_eps}; }

  // Flat key -> value text form, shared by the config file and checkpoints.
  std::map<std::string, std::string> to_map() const;
  // Unknown keys are reported via `unknown` when given, otherwise rejected.
  static TrainingConfig from_map(const std::map<std::string, std::string>& values,
                                 std::vector<std::string>* unknown = nullptr);
};

// lr_start * (lr_end / lr_start)^(epoch / (epochs - 1)); lr_start when
// epochs == 1. Both endpoints are returned exactly.
double lr_schedule(const TrainingConfig& cfg, std::size_t epoch);

struct EpochLog {
  std::size_t epoch = 0;  // 0-based
  double lr = 0;
  double train_loss = 0;
  double val_accuracy = 0;
  double val_macro_f1 = 0;
};

struct TrainResult {
  ModelParameters params;  // best validation macro-F1
  Vocabulary vocab;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Vocabulary from `train_split` only. Shuffles each epoch from cfg.seed,
// groups similar lengths into batches, pads and masks, and keeps the
// parameters with the best validation macro-F1. Throws DivergenceError on a
// non-finite loss, naming the epoch and batch.
TrainResult train(std::span<const LabeledCaption> train_split,
                  std::span<const LabeledCaption> validation_split,
                  const TrainingConfig& cfg, const EpochCallback& on_epoch = {});

// Inference-mode labels for many sentences, batched by length.
std::vector<Labels> predict_many(const ModelParameters& params,
                                 const Vocabulary& vocab,
                                 std::span<const LabeledCaption> pairs,
                                 std::size_t batch_size = 64);

// Token metrics of `predict_many` against the gold labels.
TokenMetrics evaluate_labels(const ModelParameters& params,
                             const Vocabulary& vocab,
                             std::span<const LabeledCaption> pairs);

}  // namespace capfix::neural

#endif  // CAPFIX_NEURAL_TRAINER_H_
