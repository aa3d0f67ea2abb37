#ifndef CAPFIX_NEURAL_MODEL_H_
#define CAPFIX_NEURAL_MODEL_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capfix/neural/matrix.h"
#include "capfix/random.h"

namespace capfix::neural {

inline constexpr std::size_t kNumLayers = 3;
inline constexpr std::size_t kNumClasses = 2;
// Row blocks of every gate matrix, in this order: input, forget, cell, output.
inline constexpr std::string_view kGateOrder = "ifgo";

struct ModelDims {
  std::size_t vocab = 0;
  std::size_t embed = 0;
  std::size_t hidden = 0;

  bool operator==(const ModelDims&) const = default;
};

// One recurrent direction. w_input is 4H x D_in, w_hidden is 4H x H.
struct LstmDirection {
  Matrix w_input;
  Matrix w_hidden;
  Vector bias;
};

struct BiLstmLayer {
  LstmDirection forward;
  LstmDirection backward;
};

// Embedding -> 3 x BiLSTM -> linear classifier over {delete, keep}.
struct ModelParameters {
  ModelDims dims;
  Matrix embedding;  // V x D
  std::array<BiLstmLayer, kNumLayers> layers;
  Matrix classifier_w;  // 2 x 2H
  Vector classifier_b;  // 2

  // All-zero parameters of the given shape.
  static ModelParameters zeros(const ModelDims& dims);

  void set_zero();
  std::size_t parameter_count() const;
  // Throws capfix::Error if any block disagrees with dims.
  void check_shapes() const;
};

// Same shapes as the parameters.
using Gradients = ModelParameters;

// Uniform(-k, k) with k = 1/sqrt(fan_in) per weight matrix (fan_in = 1 for
// the embedding lookup), zero biases except the forget gate at 1.0, and a
// zero padding row.
ModelParameters init_parameters(const ModelDims& dims, Rng& rng);

// Input width of a layer: D for the first, 2H after that.
std::size_t layer_input_dim(const ModelDims& dims, std::size_t layer);

struct ParameterBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<double> values;
};

struct ConstParameterBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<const double> values;
};

// Every parameter block in declaration order: embedding, then per layer
// forward.{w_input,w_hidden,bias}, backward.{...}, then classifier w and b.
std::vector<ParameterBlock> parameter_blocks(ModelParameters& params);
std::vector<ConstParameterBlock> parameter_blocks(const ModelParameters& params);

}  // namespace capfix::neural

#endif  // CAPFIX_NEURAL_MODEL_H_
