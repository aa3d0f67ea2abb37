#include "capfix/neural/adam.h"

#include <cmath>

#include "capfix/error.h"

namespace capfix::neural {

OptimizerState OptimizerState::for_model(const ModelParameters& params) {
  OptimizerState state;
  state.first_moment = ModelParameters::zeros(params.dims);
  state.second_moment = ModelParameters::zeros(params.dims);
  return state;
}

void adam_step(ModelParameters& params, const Gradients& grads,
               OptimizerState& state, double lr, const AdamConfig& cfg) {
  if (!(lr > 0)) throw Error("adam_step: learning rate must be positive");
  auto p_blocks = parameter_blocks(params);
  auto g_blocks = parameter_blocks(grads);
  auto m_blocks = parameter_blocks(state.first_moment);
  auto v_blocks = parameter_blocks(state.second_moment);
  if (g_blocks.size() != p_blocks.size()) throw Error("adam_step: shape mismatch");
  for (std::size_t b = 0; b < p_blocks.size(); ++b) {
    if (g_blocks[b].values.size() != p_blocks[b].values.size() ||
        m_blocks[b].values.size() != p_blocks[b].values.size()) {
      throw Error("adam_step: shape mismatch in " + p_blocks[b].name);
    }
    for (double g : g_blocks[b].values) {
      if (!std::isfinite(g)) {
        throw DivergenceError("non-finite gradient in " + g_blocks[b].name);
      }
    }
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t b = 0; b < p_blocks.size(); ++b) {
    using Map = Eigen::Map<Eigen::ArrayXd>;
    Map p(p_blocks[b].values.data(), static_cast<Eigen::Index>(p_blocks[b].values.size()));
    Eigen::Map<const Eigen::ArrayXd> g(g_blocks[b].values.data(), p.size());
    Map m(m_blocks[b].values.data(), p.size());
    Map v(v_blocks[b].values.data(), p.size());
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    p -= lr * (m / correction1) / ((v / correction2).sqrt() + cfg.eps);
  }
}

}  // namespace capfix::neural
