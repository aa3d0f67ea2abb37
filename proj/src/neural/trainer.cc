#include "capfix/neural/trainer.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <thread>

#include "capfix/error.h"
#include "capfix/neural/network.h"
#include "capfix/random.h"

namespace capfix::neural {
namespace {

struct EncodedSet {
  std::vector<std::vector<int>> indices;
  std::vector<Labels> labels;
};

EncodedSet encode_all(const Vocabulary& vocab, std::span<const LabeledCaption> pairs) {
  EncodedSet set;
  set.indices.reserve(pairs.size());
  set.labels.reserve(pairs.size());
  for (const auto& pair : pairs) {
    set.indices.push_back(vocab.encode(pair.tokens));
    set.labels.push_back(pair.labels);
  }
  return set;
}

// Shuffle, sort by length inside windows of 50 batches, cut, shuffle the
// batch order. Keeps padding small without a fixed curriculum.
std::vector<std::vector<std::size_t>> make_batches(
    const std::vector<std::vector<int>>& sequences, std::size_t batch_size,
    Rng& rng) {
  std::vector<std::size_t> order(sequences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order.begin(), order.end(), rng);
  const std::size_t window = batch_size * 50;
  for (std::size_t start = 0; start < order.size(); start += window) {
    const auto end = std::min(order.size(), start + window);
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) {
                       return sequences[a].size() < sequences[b].size();
                     });
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const auto end = std::min(order.size(), start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

void clip_global_norm(Gradients& grads, double max_norm) {
  if (max_norm <= 0) return;
  double sq = 0;
  for (const auto& block : parameter_blocks(std::as_const(grads))) {
    for (double g : block.values) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm)) return;
  const double scale = max_norm / norm;
  for (auto& block : parameter_blocks(grads)) {
    for (double& g : block.values) g *= scale;
  }
}

void add_into(Gradients& dst, const Gradients& src) {
  auto d = parameter_blocks(dst);
  auto s = parameter_blocks(src);
  for (std::size_t b = 0; b < d.size(); ++b) {
    for (std::size_t i = 0; i < d[b].values.size(); ++i) {
      d[b].values[i] += s[b].values[i];
    }
  }
}

struct Shard {
  Gradients grads;
  double loss = 0;  // already divided by the batch token count
};

void run_shard(const ModelParameters& params, const EncodedSet& data,
               std::span<const std::size_t> members, double normalizer,
               double dropout, std::uint64_t rng_seed, Shard& shard) {
  std::vector<std::vector<int>> seqs;
  std::vector<Labels> labels;
  for (auto i : members) {
    seqs.push_back(data.indices[i]);
    labels.push_back(data.labels[i]);
  }
  const Batch batch = make_batch(seqs, labels);
  Rng rng(rng_seed);
  const ForwardTrace trace = model_forward(params, batch, true, dropout, &rng);
  const auto loss = softmax_cross_entropy(trace.logits, batch.labels,
                                          batch.layout.mask, normalizer);
  shard.loss = loss.loss;
  backward(params, trace, loss.d_logits, shard.grads);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

TrainingConfig TrainingConfig::paper() {
  TrainingConfig cfg;
  cfg.lr_start = 1e-6;
  cfg.lr_end = 5e-7;
  return cfg;
}

TrainingConfig TrainingConfig::desk() { return TrainingConfig{}; }

void TrainingConfig::validate() const {
  std::vector<std::string> problems;
  if (epochs < 1) problems.push_back("epochs must be >= 1");
  if (hidden_dim < 1) problems.push_back("hidden_dim must be >= 1");
  if (embed_dim < 1) problems.push_back("embed_dim must be >= 1");
  if (!(dropout >= 0 && dropout < 1)) problems.push_back("dropout must lie in [0, 1)");
  if (!(lr_start > 0)) problems.push_back("lr_start must be positive");
  if (!(lr_end > 0 && lr_end <= lr_start)) problems.push_back("lr_end must lie in (0, lr_start]");
  if (batch_size < 1) problems.push_back("batch_size must be >= 1");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1)) problems.push_back("adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0 && adam_beta2 < 1)) problems.push_back("adam_beta2 must lie in [0, 1)");
  if (!(adam_eps > 0)) problems.push_back("adam_eps must be positive");
  if (!(grad_clip >= 0)) problems.push_back("grad_clip must be >= 0");
  if (min_count < 1) problems.push_back("min_count must be >= 1");
  if (threads < 1) problems.push_back("threads must be >= 1");
  if (!problems.empty()) {
    std::string what = "invalid training config:";
    for (const auto& p : problems) what += "\n  " + p;
    throw Error(what);
  }
}

std::map<std::string, std::string> TrainingConfig::to_map() const {
  return {
      {"epochs", std::to_string(epochs)},
      {"hidden_dim", std::to_string(hidden_dim)},
      {"embed_dim", std::to_string(embed_dim)},
      {"dropout", format_double(dropout)},
      {"lr_start", format_double(lr_start)},
      {"lr_end", format_double(lr_end)},
      {"batch_size", std::to_string(batch_size)},
      {"adam_beta1", format_double(adam_beta1)},
      {"adam_beta2", format_double(adam_beta2)},
      {"adam_eps", format_double(adam_eps)},
      {"seed", std::to_string(seed)},
      {"grad_clip", format_double(grad_clip)},
      {"min_count", std::to_string(min_count)},
      {"threads", std::to_string(threads)},
  };
}

TrainingConfig TrainingConfig::from_map(
    const std::map<std::string, std::string>& values,
    std::vector<std::string>* unknown) {
  TrainingConfig cfg;
  std::vector<std::string> bad;
  auto parse = [&](const std::string& key, const std::string& text, auto& out) {
    const char* end = text.data() + text.size();
    auto res = std::from_chars(text.data(), end, out);
    if (res.ec != std::errc() || res.ptr != end) bad.push_back(key + " = " + text);
  };
  std::vector<std::string> unknown_keys;
  for (const auto& [key, text] : values) {
    if (key == "epochs") parse(key, text, cfg.epochs);
    else if (key == "hidden_dim") parse(key, text, cfg.hidden_dim);
    else if (key == "embed_dim") parse(key, text, cfg.embed_dim);
    else if (key == "dropout") parse(key, text, cfg.dropout);
    else if (key == "lr_start") parse(key, text, cfg.lr_start);
    else if (key == "lr_end") parse(key, text, cfg.lr_end);
    else if (key == "batch_size") parse(key, text, cfg.batch_size);
    else if (key == "adam_beta1") parse(key, text, cfg.adam_beta1);
    else if (key == "adam_beta2") parse(key, text, cfg.adam_beta2);
    else if (key == "adam_eps") parse(key, text, cfg.adam_eps);
    else if (key == "seed") parse(key, text, cfg.seed);
    else if (key == "grad_clip") parse(key, text, cfg.grad_clip);
    else if (key == "min_count") parse(key, text, cfg.min_count);
    else if (key == "threads") parse(key, text, cfg.threads);
    else unknown_keys.push_back(key);
  }
  if (unknown) *unknown = unknown_keys;
  if (!bad.empty()) {
    std::string what = "malformed training values:";
    for (const auto& b : bad) what += "\n  " + b;
    throw Error(what);
  }
  if (!unknown && !unknown_keys.empty()) {
    std::string what = "unknown training keys:";
    for (const auto& k : unknown_keys) what += " " + k;
    throw Error(what);
  }
  return cfg;
}

double lr_schedule(const TrainingConfig& cfg, std::size_t epoch) {
  if (cfg.epochs <= 1 || epoch == 0) return cfg.lr_start;
  if (epoch + 1 >= cfg.epochs) return cfg.lr_end;
  const double frac = static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1);
  return cfg.lr_start * std::pow(cfg.lr_end / cfg.lr_start, frac);
}

std::vector<Labels> predict_many(const ModelParameters& params,
                                 const Vocabulary& vocab,
                                 std::span<const LabeledCaption> pairs,
                                 std::size_t batch_size) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pairs[a].tokens.size() < pairs[b].tokens.size();
  });
  std::vector<Labels> predicted(pairs.size());
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const auto end = std::min(order.size(), start + batch_size);
    std::vector<std::vector<int>> seqs;
    for (std::size_t k = start; k < end; ++k) {
      seqs.push_back(vocab.encode(pairs[order[k]].tokens));
    }
    const Batch batch = make_batch(seqs);
    const ForwardTrace trace = model_forward(params, batch);
    const std::size_t B = batch.layout.batch;
    for (std::size_t b = 0; b < B; ++b) {
      Labels& out = predicted[order[start + b]];
      out.resize(seqs[b].size());
      for (std::size_t t = 0; t < seqs[b].size(); ++t) {
        const auto row = static_cast<Eigen::Index>(t * B + b);
        out[t] = trace.probabilities(row, 1) >= trace.probabilities(row, 0) ? 1 : 0;
      }
    }
  }
  return predicted;
}

TokenMetrics evaluate_labels(const ModelParameters& params,
                             const Vocabulary& vocab,
                             std::span<const LabeledCaption> pairs) {
  const auto predicted = predict_many(params, vocab, pairs);
  std::vector<Labels> gold;
  gold.reserve(pairs.size());
  for (const auto& pair : pairs) gold.push_back(pair.labels);
  return token_metrics(predicted, gold);
}

TrainResult train(std::span<const LabeledCaption> train_split,
                  std::span<const LabeledCaption> validation_split,
                  const TrainingConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_split.empty()) throw Error("training split is empty");
  if (validation_split.empty()) throw Error("validation split is empty");

  TrainResult result;
  result.vocab = build_vocab(train_split, cfg.min_count);
  const EncodedSet data = encode_all(result.vocab, train_split);
  const ModelDims dims{result.vocab.size(), cfg.embed_dim, cfg.hidden_dim};

  Rng rng(cfg.seed);
  ModelParameters params = init_parameters(dims, rng);
  OptimizerState state = OptimizerState::for_model(params);
  const AdamConfig adam = cfg.adam();

  const auto shards_per_batch = static_cast<std::size_t>(cfg.threads);
  std::vector<Shard> shards(shards_per_batch);
  for (auto& shard : shards) shard.grads = ModelParameters::zeros(dims);

  double best_f1 = -1;
  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(cfg, epoch);
    const auto batches = make_batches(data.indices, cfg.batch_size, rng);
    double loss_sum = 0, token_sum = 0;

    for (std::size_t bi = 0; bi < batches.size(); ++bi, ++step) {
      const auto& members = batches[bi];
      double tokens = 0;
      for (auto i : members) tokens += static_cast<double>(data.indices[i].size());

      const std::size_t used = std::min(shards_per_batch, members.size());
      const std::size_t per = (members.size() + used - 1) / used;
      auto shard_members = [&](std::size_t s) {
        const auto begin = std::min(members.size(), s * per);
        const auto end = std::min(members.size(), begin + per);
        return std::span<const std::size_t>(members).subspan(begin, end - begin);
      };
      auto shard_seed = [&](std::size_t s) {
        return splitmix64(cfg.seed ^ splitmix64(step * 64 + s + 1));
      };
      for (std::size_t s = 0; s < used; ++s) shards[s].grads.set_zero();
      if (used == 1) {
        run_shard(params, data, shard_members(0), tokens, cfg.dropout,
                  shard_seed(0), shards[0]);
      } else {
        std::vector<std::jthread> pool;
        for (std::size_t s = 0; s < used; ++s) {
          if (shard_members(s).empty()) continue;
          pool.emplace_back([&, s] {
            run_shard(params, data, shard_members(s), tokens, cfg.dropout,
                      shard_seed(s), shards[s]);
          });
        }
      }

      double batch_loss = 0;
      for (std::size_t s = 0; s < used; ++s) {
        if (shard_members(s).empty()) continue;
        batch_loss += shards[s].loss;
        if (s > 0) add_into(shards[0].grads, shards[s].grads);
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(bi));
      }
      clip_global_norm(shards[0].grads, cfg.grad_clip);
      try {
        adam_step(params, shards[0].grads, state, lr, adam);
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " at epoch " +
                              std::to_string(epoch) + ", batch " + std::to_string(bi));
      }
      loss_sum += batch_loss * tokens;
      token_sum += tokens;
    }

    const TokenMetrics val = evaluate_labels(params, result.vocab, validation_split);
    EpochLog entry{epoch, lr, loss_sum / token_sum, val.accuracy, val.macro_f1};
    result.log.push_back(entry);
    if (val.macro_f1 > best_f1) {
      best_f1 = val.macro_f1;
      result.params = params;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

}  // namespace capfix::neural
