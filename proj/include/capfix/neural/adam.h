#ifndef CAPFIX_NEURAL_ADAM_H_
#define CAPFIX_NEURAL_ADAM_H_

#include <cstdint>

#include "capfix/neural/model.h"

namespace capfix::neural {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  Gradients first_moment;
  Gradients second_moment;
  std::uint64_t step_count = 0;

  // Zero moments shaped like `params`.
  static OptimizerState for_model(const ModelParameters& params);
};

// One bias-corrected Adam update:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
// Throws DivergenceError naming the block if any gradient is non-finite; in
// that case nothing is modified.
void adam_step(ModelParameters& params, const Gradients& grads,
               OptimizerState& state, double lr, const AdamConfig& cfg = {});

}  // namespace capfix::neural

#endif  // CAPFIX_NEURAL_ADAM_H_
