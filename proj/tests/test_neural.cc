#include <cmath>

#include "capfix/error.h"
#include "capfix/neural/adam.h"
#include "capfix/neural/lstm.h"
#include "capfix/neural/network.h"
#include "doctest.h"
#include "support/gradcheck.h"

using namespace capfix;
using namespace capfix::neural;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * (2 * uniform_real(rng) - 1);
  return m;
}

ModelParameters random_model(const ModelDims& dims, std::uint64_t seed) {
  Rng rng(seed);
  ModelParameters p = init_parameters(dims, rng);
  // Non-zero biases and pad row so every block is exercised.
  for (auto& block : parameter_blocks(p)) {
    for (double& v : block.values) v += 0.3 * (2 * uniform_real(rng) - 1);
  }
  return p;
}

LstmDirection random_direction(Eigen::Index in, Eigen::Index H, Rng& rng) {
  return {random_matrix(4 * H, in, rng), random_matrix(4 * H, H, rng),
          random_matrix(4 * H, 1, rng).col(0)};
}

}  // namespace

TEST_CASE("embedding lookup") {
  ModelParameters p = ModelParameters::zeros({3, 2, 1});
  p.embedding << 1, 2, 3, 4, 5, 6;
  const std::vector<int> idx = {2, 0};
  Matrix expected(2, 2);
  expected << 5, 6, 1, 2;
  CHECK(embed_forward(p, idx) == expected);
  const std::vector<int> bad = {3};
  CHECK_THROWS_AS(embed_forward(p, bad), Error);

  Rng rng(1);
  const ModelParameters init = init_parameters({5, 4, 2}, rng);
  const std::vector<int> pad = {0};
  CHECK(embed_forward(init, pad).isZero());
}

TEST_CASE("lstm cell") {
  SUBCASE("zero parameters stay at the zero state") {
    LstmDirection cell{Matrix::Zero(8, 3), Matrix::Zero(8, 2), Vector::Zero(8)};
    Rng rng(3);
    const auto out = lstm_cell_forward(cell, random_matrix(1, 3, rng), Matrix::Zero(1, 2),
                                       Matrix::Zero(1, 2));
    CHECK(out.h.isZero());
    CHECK(out.c.isZero());
  }
  SUBCASE("hand-evaluated single unit") {
    LstmDirection cell{Matrix::Zero(4, 1), Matrix::Zero(4, 1), Vector::Zero(4)};
    cell.w_input(2, 0) = 10;  // cell-candidate row
    const auto out =
        lstm_cell_forward(cell, Matrix::Ones(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1));
    CHECK(out.gates(0, 0) == doctest::Approx(0.5));
    CHECK(out.gates(0, 1) == doctest::Approx(0.5));
    CHECK(out.gates(0, 2) == doctest::Approx(std::tanh(10.0)));
    CHECK(out.c(0, 0) == doctest::Approx(0.5 * std::tanh(10.0)));
    CHECK(out.h(0, 0) == doctest::Approx(0.2311).epsilon(1e-4));
    CHECK(out.h(0, 0) == doctest::Approx(0.5 * std::tanh(0.5 * std::tanh(10.0))).epsilon(1e-14));
  }
  SUBCASE("cell state grows by at most one per step") {
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
      const auto cell = random_direction(3, 4, rng);
      const Matrix c_prev = random_matrix(2, 4, rng, 5.0);
      const auto out =
          lstm_cell_forward(cell, random_matrix(2, 3, rng, 3.0), random_matrix(2, 4, rng), c_prev);
      CHECK(((out.c.array().abs() - c_prev.array().abs()) <= 1.0 + 1e-12).all());
    }
  }
  SUBCASE("shape mismatch") {
    LstmDirection cell{Matrix::Zero(8, 3), Matrix::Zero(8, 2), Vector::Zero(8)};
    CHECK_THROWS_AS(
        lstm_cell_forward(cell, Matrix::Zero(1, 2), Matrix::Zero(1, 2), Matrix::Zero(1, 2)),
        Error);
  }
}

TEST_CASE("bidirectional layer") {
  Rng rng(4);
  const Eigen::Index D = 3, H = 2;
  BiLstmLayer layer{random_direction(D, H, rng), random_direction(D, H, rng)};

  SUBCASE("zero parameters give zero output") {
    BiLstmLayer zero{{Matrix::Zero(4 * H, D), Matrix::Zero(4 * H, H), Vector::Zero(4 * H)},
                     {Matrix::Zero(4 * H, D), Matrix::Zero(4 * H, H), Vector::Zero(4 * H)}};
    const auto tr = bilstm_layer_forward(zero, random_matrix(5, D, rng), StepLayout::dense(5, 1));
    CHECK(tr.output.isZero());
  }
  SUBCASE("a single step is two independent cells") {
    const Matrix x = random_matrix(1, D, rng);
    const auto tr = bilstm_layer_forward(layer, x, StepLayout::dense(1, 1));
    const Matrix z = Matrix::Zero(1, H);
    const auto f = lstm_cell_forward(layer.forward, x, z, z);
    const auto b = lstm_cell_forward(layer.backward, x, z, z);
    CHECK((tr.output.leftCols(H) - f.h).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((tr.output.rightCols(H) - b.h).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("reversal symmetry") {
    const Eigen::Index L = 6;
    const Matrix x = random_matrix(L, D, rng);
    const Matrix reversed = x.colwise().reverse();
    const BiLstmLayer swapped{layer.backward, layer.forward};
    const auto a = bilstm_layer_forward(layer, x, StepLayout::dense(L, 1));
    const auto b = bilstm_layer_forward(swapped, reversed, StepLayout::dense(L, 1));
    const Matrix b_back = b.output.colwise().reverse();
    CHECK((a.output.leftCols(H) - b_back.rightCols(H)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((a.output.rightCols(H) - b_back.leftCols(H)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("model forward") {
  const ModelDims dims{9, 3, 2};
  const std::vector<int> seq = {2, 5, 7, 1};
  const auto zero = model_forward(ModelParameters::zeros(dims), seq);
  CHECK((zero.probabilities.array() == 0.5).all());

  const auto p = random_model(dims, 12);
  const auto tr = model_forward(p, seq);
  CHECK(tr.probabilities.rows() == 4);
  for (Eigen::Index r = 0; r < tr.probabilities.rows(); ++r) {
    CHECK(std::abs(tr.probabilities.row(r).sum() - 1.0) <= 1e-12);
  }
  // Inference ignores the rng and dropout arguments.
  Rng rng(1);
  const auto again = model_forward(p, make_batch(std::vector<std::vector<int>>{seq}), false, 0.5, &rng);
  CHECK(again.probabilities == tr.probabilities);
}

TEST_CASE("padding never changes real positions") {
  const ModelDims dims{12, 4, 3};
  const auto p = random_model(dims, 21);
  const std::vector<int> short_seq = {3, 4, 5};
  const std::vector<std::vector<int>> mixed = {{2, 9, 9, 11, 6, 7}, short_seq, {8}};
  const std::vector<Labels> labels = {{1, 0, 0, 1, 1, 1}, {1, 1, 0}, {0}};

  const auto alone = model_forward(p, short_seq);
  const auto batch = make_batch(mixed, labels);
  const auto tr = model_forward(p, batch);
  for (std::size_t t = 0; t < short_seq.size(); ++t) {
    const auto row = static_cast<Eigen::Index>(t * 3 + 1);
    CHECK((tr.probabilities.row(row) - alone.probabilities.row(static_cast<Eigen::Index>(t)))
              .cwiseAbs()
              .maxCoeff() < 1e-13);
  }

  // Loss over a batch equals the token-weighted loss of its members.
  const double batch_loss =
      softmax_cross_entropy(tr.logits, batch.labels, batch.layout.mask).loss;
  double sum = 0;
  for (std::size_t s = 0; s < mixed.size(); ++s) {
    const auto one = make_batch(std::vector<std::vector<int>>{mixed[s]},
                                std::vector<Labels>{labels[s]});
    const auto t1 = model_forward(p, one);
    sum += softmax_cross_entropy(t1.logits, one.labels, one.layout.mask).loss *
           static_cast<double>(mixed[s].size());
  }
  CHECK(batch_loss == doctest::Approx(sum / 10.0).epsilon(1e-12));
}

TEST_CASE("softmax cross-entropy") {
  Matrix logits(1, 2);
  logits << 0, 0;
  const std::vector<int> one = {1};
  const std::vector<double> mask = {1.0};
  const auto uniform = softmax_cross_entropy(logits, one, mask);
  CHECK(uniform.loss == doctest::Approx(std::log(2.0)));
  CHECK(uniform.d_logits(0, 0) == doctest::Approx(0.5));
  CHECK(uniform.d_logits(0, 1) == doctest::Approx(-0.5));

  logits << 1000, 0;
  const std::vector<int> zero = {0};
  const auto saturated = softmax_cross_entropy(logits, zero, mask);
  CHECK(std::isfinite(saturated.loss));
  CHECK(saturated.loss == doctest::Approx(0.0));

  const std::vector<double> none = {0.0};
  CHECK_THROWS_AS(softmax_cross_entropy(logits, zero, none), Error);

  Rng rng(2);
  Matrix random = random_matrix(5, 2, rng, 3.0);
  const std::vector<int> labels = {0, 1, 1, 0, 1};
  const std::vector<double> m5 = {1, 1, 0, 1, 1};
  const auto analytic = softmax_cross_entropy(random, labels, m5);
  for (Eigen::Index i = 0; i < random.size(); ++i) {
    const double saved = random.data()[i];
    random.data()[i] = saved + 1e-6;
    const double up = softmax_cross_entropy(random, labels, m5).loss;
    random.data()[i] = saved - 1e-6;
    const double down = softmax_cross_entropy(random, labels, m5).loss;
    random.data()[i] = saved;
    CHECK(analytic.d_logits.data()[i] == doctest::Approx((up - down) / 2e-6).epsilon(1e-6));
  }
  CHECK(analytic.d_logits.row(2).isZero());

  // Doubling the normalizer halves the gradient.
  const auto doubled = softmax_cross_entropy(random, labels, m5, 8.0);
  CHECK((doubled.d_logits * 2 - analytic.d_logits).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("analytic gradients match finite differences") {
  SUBCASE("V=7 D=3 H=2 L=4") {
    const auto p = random_model({7, 3, 2}, 31);
    const auto batch = make_batch(std::vector<std::vector<int>>{{2, 5, 6, 3}},
                                  std::vector<Labels>{{1, 0, 0, 1}});
    const auto result = testing::check_gradients(p, batch, 0.0, 0);
    INFO(result.worst_block);
    CHECK(result.max_rel_error <= 1e-4);
  }
  SUBCASE("padded batch with dropout") {
    const auto p = random_model({8, 3, 3}, 32);
    const auto batch = make_batch(std::vector<std::vector<int>>{{2, 5, 6, 3, 7}, {4, 4}, {1, 6, 2}},
                                  std::vector<Labels>{{1, 0, 0, 1, 1}, {1, 0}, {0, 1, 1}});
    const auto result = testing::check_gradients(p, batch, 0.3, 99);
    INFO(result.worst_block);
    CHECK(result.max_rel_error <= 1e-4);
  }
}

TEST_CASE("untouched embedding rows get no gradient") {
  const auto p = random_model({10, 3, 2}, 41);
  const auto batch = make_batch(std::vector<std::vector<int>>{{2, 3}, {3}},
                                std::vector<Labels>{{1, 0}, {1}});
  const auto tr = model_forward(p, batch);
  const auto g = backward(p, tr, batch.labels, batch.layout.mask);
  for (Eigen::Index r = 0; r < g.embedding.rows(); ++r) {
    if (r == 2 || r == 3) {
      CHECK_FALSE(g.embedding.row(r).isZero());
    } else {
      CHECK(g.embedding.row(r).isZero());
    }
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient is the identity") {
    Rng rng(1);
    ModelParameters p = init_parameters({6, 3, 2}, rng);
    const ModelParameters before = p;
    OptimizerState state = OptimizerState::for_model(p);
    adam_step(p, ModelParameters::zeros(p.dims), state, 0.1);
    CHECK(p.embedding == before.embedding);
    CHECK(p.layers[2].backward.w_hidden == before.layers[2].backward.w_hidden);
    CHECK(state.step_count == 1);
  }
  SUBCASE("first step moves each coordinate by about lr against the gradient") {
    Rng rng(2);
    ModelParameters p = init_parameters({6, 3, 2}, rng);
    p.classifier_b(0) = 1.0;
    const ModelParameters before = p;
    Gradients g = ModelParameters::zeros(p.dims);
    g.classifier_b(0) = 1.0;
    g.classifier_w(1, 2) = -3.0;
    OptimizerState state = OptimizerState::for_model(p);
    adam_step(p, g, state, 0.1);
    CHECK(p.classifier_b(0) == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(p.classifier_w(1, 2) - before.classifier_w(1, 2) == doctest::Approx(0.1).epsilon(1e-6));
  }
  SUBCASE("non-finite gradients change nothing") {
    Rng rng(3);
    ModelParameters p = init_parameters({6, 3, 2}, rng);
    const ModelParameters before = p;
    Gradients g = ModelParameters::zeros(p.dims);
    g.embedding(1, 1) = 1.0;
    g.layers[1].forward.bias(0) = std::nan("");
    OptimizerState state = OptimizerState::for_model(p);
    try {
      adam_step(p, g, state, 0.1);
      FAIL("expected divergence");
    } catch (const DivergenceError& e) {
      CHECK(std::string(e.what()).find("layer2.forward.bias") != std::string::npos);
    }
    CHECK(p.embedding == before.embedding);
    CHECK(state.step_count == 0);
  }
}
