#include "capfix/corrector.h"

#include <algorithm>
#include <thread>

#include "capfix/error.h"
#include "capfix/neural/checkpoint.h"
#include "capfix/neural/network.h"

namespace capfix {

Labels predict_labels(const neural::ModelParameters& params, const Vocabulary& vocab,
                      std::span<const std::string> tokens) {
  if (tokens.empty()) throw Error("cannot label an empty caption");
  const auto indices = vocab.encode(tokens);
  const auto trace = neural::model_forward(params, indices);
  Labels labels(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    labels[t] = trace.probabilities(row, 1) >= trace.probabilities(row, 0) ? 1 : 0;
  }
  return labels;
}

Tokens apply_mask(std::span<const std::string> tokens, std::span<const std::uint8_t> labels) {
  if (tokens.size() != labels.size()) {
    throw Error("mask length " + std::to_string(labels.size()) +
                " does not match " + std::to_string(tokens.size()) + " tokens");
  }
  Tokens out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (labels[i]) out.push_back(tokens[i]);
  }
  if (out.empty()) return Tokens(tokens.begin(), tokens.end());
  return out;
}

Corrector::Corrector(neural::ModelParameters params, Vocabulary vocab)
    : params_(std::move(params)), vocab_(std::move(vocab)) {
  params_.check_shapes();
  if (params_.dims.vocab != vocab_.size()) {
    throw Error("model vocabulary size does not match the vocabulary");
  }
}

Corrector Corrector::from_checkpoint(const std::filesystem::path& path) {
  auto ck = neural::load_checkpoint(path);
  return Corrector(std::move(ck.params), std::move(ck.vocab));
}

Labels Corrector::predict(std::span<const std::string> tokens) const {
  return predict_labels(params_, vocab_, tokens);
}

Correction Corrector::correct(std::span<const std::string> tokens, bool iterate) const {
  Correction result;
  result.tokens.assign(tokens.begin(), tokens.end());
  result.mask.assign(tokens.size(), 1);
  if (tokens.empty()) return result;
  // Positions of result.tokens within the input.
  std::vector<std::size_t> origin(tokens.size());
  for (std::size_t i = 0; i < origin.size(); ++i) origin[i] = i;

  const int max_passes = iterate ? kMaxPasses : 1;
  while (result.passes < max_passes) {
    ++result.passes;
    const Labels labels = predict(result.tokens);
    Tokens next = apply_mask(result.tokens, labels);
    if (next.size() == result.tokens.size()) break;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i]) {
        kept.push_back(origin[i]);
      } else {
        result.mask[origin[i]] = 0;
      }
    }
    origin = std::move(kept);
    result.tokens = std::move(next);
  }
  return result;
}

CorrectionSummary correct_file(const Corrector& corrector,
                               const std::filesystem::path& in_path,
                               const std::filesystem::path& out_path,
                               const CorrectOptions& options) {
  const auto captions = load_captions(in_path);
  std::vector<Correction> results(captions.size());
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < captions.size(); i += step) {
      results[i] = corrector.correct(captions[i].tokens, options.iterate);
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, options.threads));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }

  CorrectionSummary summary;
  summary.count = captions.size();
  std::vector<Caption> corrected;
  std::vector<LabeledCaption> masks;
  corrected.reserve(captions.size());
  for (std::size_t i = 0; i < captions.size(); ++i) {
    const auto deleted = captions[i].tokens.size() - results[i].tokens.size();
    if (deleted > 0) ++summary.count_changed;
    summary.tokens_deleted += deleted;
    corrected.push_back({captions[i].id, results[i].tokens});
    if (options.labels_out) {
      masks.push_back({captions[i].tokens, results[i].mask, captions[i].id, std::nullopt});
    }
  }
  if (options.labels_out) save_labeled(*options.labels_out, masks);
  save_captions(out_path, corrected);
  return summary;
}

}  // namespace capfix
