#include "capfix/neural/model.h"

#include <cmath>

#include "capfix/error.h"

namespace capfix::neural {
namespace {

void fill_uniform(Eigen::Ref<Matrix> m, double k, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = (2.0 * uniform_real(rng) - 1.0) * k;
    }
  }
}

template <typename Params, typename Block, typename Out>
void collect_blocks(Params& p, Out& out) {
  auto add = [&](std::string name, auto& m) {
    out.push_back(Block{std::move(name), static_cast<std::size_t>(m.rows()),
                        static_cast<std::size_t>(m.cols()),
                        {m.data(), static_cast<std::size_t>(m.size())}});
  };
  add("embedding", p.embedding);
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    const std::string prefix = "layer" + std::to_string(l + 1) + ".";
    for (auto [dir, name] : {std::pair{&p.layers[l].forward, "forward"},
                             std::pair{&p.layers[l].backward, "backward"}}) {
      add(prefix + name + ".w_input", dir->w_input);
      add(prefix + name + ".w_hidden", dir->w_hidden);
      add(prefix + name + ".bias", dir->bias);
    }
  }
  add("classifier.w", p.classifier_w);
  add("classifier.b", p.classifier_b);
}

}  // namespace

std::size_t layer_input_dim(const ModelDims& dims, std::size_t layer) {
  return layer == 0 ? dims.embed : 2 * dims.hidden;
}

ModelParameters ModelParameters::zeros(const ModelDims& dims) {
  ModelParameters p;
  p.dims = dims;
  const auto H = static_cast<Eigen::Index>(dims.hidden);
  p.embedding = Matrix::Zero(static_cast<Eigen::Index>(dims.vocab),
                             static_cast<Eigen::Index>(dims.embed));
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    const auto in = static_cast<Eigen::Index>(layer_input_dim(dims, l));
    for (LstmDirection* dir : {&p.layers[l].forward, &p.layers[l].backward}) {
      dir->w_input = Matrix::Zero(4 * H, in);
      dir->w_hidden = Matrix::Zero(4 * H, H);
      dir->bias = Vector::Zero(4 * H);
    }
  }
  p.classifier_w = Matrix::Zero(kNumClasses, 2 * H);
  p.classifier_b = Vector::Zero(kNumClasses);
  return p;
}

void ModelParameters::set_zero() {
  for (auto& block : parameter_blocks(*this)) {
    std::fill(block.values.begin(), block.values.end(), 0.0);
  }
}

std::size_t ModelParameters::parameter_count() const {
  std::size_t n = 0;
  for (const auto& block : parameter_blocks(*this)) n += block.values.size();
  return n;
}

void ModelParameters::check_shapes() const {
  const ModelParameters expected = zeros(dims);
  auto want = parameter_blocks(expected);
  auto have = parameter_blocks(*this);
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i].rows != have[i].rows || want[i].cols != have[i].cols) {
      throw Error("parameter block " + have[i].name + " is " +
                  std::to_string(have[i].rows) + "x" +
                  std::to_string(have[i].cols) + ", expected " +
                  std::to_string(want[i].rows) + "x" +
                  std::to_string(want[i].cols));
    }
  }
}

ModelParameters init_parameters(const ModelDims& dims, Rng& rng) {
  if (dims.vocab < 2 || dims.embed == 0 || dims.hidden == 0) {
    throw Error("model dimensions must be positive (vocab >= 2)");
  }
  ModelParameters p = ModelParameters::zeros(dims);
  const auto H = static_cast<Eigen::Index>(dims.hidden);
  fill_uniform(p.embedding, 1.0, rng);
  p.embedding.row(0).setZero();
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    const double in = static_cast<double>(layer_input_dim(dims, l));
    for (LstmDirection* dir : {&p.layers[l].forward, &p.layers[l].backward}) {
      fill_uniform(dir->w_input, 1.0 / std::sqrt(in), rng);
      fill_uniform(dir->w_hidden, 1.0 / std::sqrt(static_cast<double>(H)), rng);
      dir->bias.segment(H, H).setOnes();
    }
  }
  fill_uniform(p.classifier_w, 1.0 / std::sqrt(2.0 * static_cast<double>(H)), rng);
  return p;
}

std::vector<ParameterBlock> parameter_blocks(ModelParameters& params) {
  std::vector<ParameterBlock> out;
  collect_blocks<ModelParameters, ParameterBlock>(params, out);
  return out;
}

std::vector<ConstParameterBlock> parameter_blocks(const ModelParameters& params) {
  std::vector<ConstParameterBlock> out;
  collect_blocks<const ModelParameters, ConstParameterBlock>(params, out);
  return out;
}

}  // namespace capfix::neural
