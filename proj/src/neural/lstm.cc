#include "capfix/neural/lstm.h"

#include "capfix/error.h"

namespace capfix::neural {
namespace {

using Eigen::Index;

// Preactivations -> activations, in place, for a rows x 4H block.
template <typename Block>
void activate(Block&& g, Index H) {
  g.leftCols(2 * H) = g.leftCols(2 * H).array().logistic();
  g.middleCols(2 * H, H) = fast_tanh(g.middleCols(2 * H, H).array());
  g.rightCols(H) = g.rightCols(H).array().logistic();
}

void run_direction(const LstmDirection& p, const Matrix& x,
                   const StepLayout& layout, bool reverse,
                   DirectionTrace& out) {
  const auto B = static_cast<Index>(layout.batch);
  const auto L = static_cast<Index>(layout.steps);
  const Index H = p.w_hidden.cols();
  const Index rows = B * L;

  out.gates.noalias() = x * p.w_input.transpose();
  out.gates.rowwise() += p.bias.transpose();
  out.cells.resize(rows, H);
  out.cell_tanh.resize(rows, H);
  out.hidden.resize(rows, H);

  for (Index s = 0; s < L; ++s) {
    const Index t = reverse ? L - 1 - s : s;
    const Index prev = reverse ? t + 1 : t - 1;
    auto g = out.gates.middleRows(t * B, B);
    if (s > 0) {
      g.noalias() += out.hidden.middleRows(prev * B, B) * p.w_hidden.transpose();
    }
    activate(g, H);

    const auto mask = layout.step_mask(static_cast<std::size_t>(t)).array();
    auto c = out.cells.middleRows(t * B, B);
    c = g.leftCols(H).cwiseProduct(g.middleCols(2 * H, H));
    if (s > 0) {
      c += g.middleCols(H, H).cwiseProduct(out.cells.middleRows(prev * B, B));
    }
    c.array().colwise() *= mask;
    auto ct = out.cell_tanh.middleRows(t * B, B);
    ct = fast_tanh(c.array());
    auto h = out.hidden.middleRows(t * B, B);
    h = g.rightCols(H).cwiseProduct(ct);
    h.array().colwise() *= mask;
  }
}

void backprop_direction(const LstmDirection& p, const DirectionTrace& tr,
                        const Matrix& x, const StepLayout& layout, bool reverse,
                        const Eigen::Ref<const Matrix>& d_hidden,
                        LstmDirection& grads, Matrix& d_x) {
  const auto B = static_cast<Index>(layout.batch);
  const auto L = static_cast<Index>(layout.steps);
  const Index H = p.w_hidden.cols();
  const Index rows = B * L;

  Matrix d_gates(rows, 4 * H);
  Matrix dh_carry = Matrix::Zero(B, H);
  Matrix dc_carry = Matrix::Zero(B, H);
  Matrix dh(B, H), dc(B, H);

  for (Index s = L - 1; s >= 0; --s) {
    const Index t = reverse ? L - 1 - s : s;
    const Index prev = reverse ? t + 1 : t - 1;
    const auto mask = layout.step_mask(static_cast<std::size_t>(t)).array();
    const auto g = tr.gates.middleRows(t * B, B).array();
    const auto i = g.leftCols(H);
    const auto f = g.middleCols(H, H);
    const auto gg = g.middleCols(2 * H, H);
    const auto o = g.rightCols(H);
    const auto ct = tr.cell_tanh.middleRows(t * B, B).array();

    dh = d_hidden.middleRows(t * B, B) + dh_carry;
    dh.array().colwise() *= mask;
    dc.array() = dc_carry.array() + dh.array() * o * (1.0 - ct.square());
    dc.array().colwise() *= mask;

    auto dg = d_gates.middleRows(t * B, B);
    dg.leftCols(H).array() = dc.array() * gg * i * (1.0 - i);
    if (s > 0) {
      const auto c_prev = tr.cells.middleRows(prev * B, B).array();
      dg.middleCols(H, H).array() = dc.array() * c_prev * f * (1.0 - f);
    } else {
      dg.middleCols(H, H).setZero();
    }
    dg.middleCols(2 * H, H).array() = dc.array() * i * (1.0 - gg.square());
    dg.rightCols(H).array() = dh.array() * ct * o * (1.0 - o);

    if (s > 0) {
      dc_carry.array() = dc.array() * f;
      dh_carry.noalias() = dg * p.w_hidden;
    }
  }

  grads.w_input.noalias() += d_gates.transpose() * x;
  grads.bias += d_gates.colwise().sum().transpose();
  if (L > 1) {
    const Index span = rows - B;
    if (reverse) {
      grads.w_hidden.noalias() +=
          d_gates.topRows(span).transpose() * tr.hidden.bottomRows(span);
    } else {
      grads.w_hidden.noalias() +=
          d_gates.bottomRows(span).transpose() * tr.hidden.topRows(span);
    }
  }
  d_x.noalias() += d_gates * p.w_input;
}

}  // namespace

StepLayout StepLayout::dense(std::size_t steps, std::size_t batch) {
  StepLayout layout;
  layout.steps = steps;
  layout.batch = batch;
  layout.mask.assign(steps * batch, 1.0);
  return layout;
}

CellOutput lstm_cell_forward(const LstmDirection& cell, const Matrix& x,
                             const Matrix& h_prev, const Matrix& c_prev) {
  const Index H = cell.w_hidden.cols();
  if (x.cols() != cell.w_input.cols() || h_prev.cols() != H ||
      c_prev.cols() != H || h_prev.rows() != x.rows() ||
      c_prev.rows() != x.rows() || cell.w_input.rows() != 4 * H ||
      cell.bias.size() != 4 * H) {
    throw Error("lstm_cell_forward: shape mismatch");
  }
  CellOutput out;
  out.gates.noalias() = x * cell.w_input.transpose();
  out.gates.noalias() += h_prev * cell.w_hidden.transpose();
  out.gates.rowwise() += cell.bias.transpose();
  activate(out.gates, H);
  out.c = out.gates.middleCols(H, H).cwiseProduct(c_prev) +
          out.gates.leftCols(H).cwiseProduct(out.gates.middleCols(2 * H, H));
  out.h = out.gates.rightCols(H).cwiseProduct(Matrix(fast_tanh(out.c.array())));
  return out;
}

LayerTrace bilstm_layer_forward(const BiLstmLayer& layer, const Matrix& input,
                                const StepLayout& layout,
                                const Matrix& dropout_mask) {
  const auto rows = static_cast<Index>(layout.rows());
  if (layout.steps == 0 || layout.batch == 0) {
    throw Error("bilstm_layer_forward: empty batch");
  }
  if (input.rows() != rows || input.cols() != layer.forward.w_input.cols() ||
      layout.mask.size() != layout.rows()) {
    throw Error("bilstm_layer_forward: shape mismatch");
  }
  LayerTrace tr;
  tr.input = input;
  if (dropout_mask.size() > 0) {
    tr.input.array() *= dropout_mask.array();
    tr.dropout_mask = dropout_mask;
  }
  run_direction(layer.forward, tr.input, layout, false, tr.forward);
  run_direction(layer.backward, tr.input, layout, true, tr.backward);
  const Index H = layer.forward.w_hidden.cols();
  tr.output.resize(rows, 2 * H);
  tr.output.leftCols(H) = tr.forward.hidden;
  tr.output.rightCols(H) = tr.backward.hidden;
  return tr;
}

Matrix bilstm_layer_backward(const BiLstmLayer& layer, const LayerTrace& trace,
                             const StepLayout& layout, const Matrix& d_output,
                             BiLstmLayer& grads) {
  const Index H = layer.forward.w_hidden.cols();
  Matrix d_x = Matrix::Zero(trace.input.rows(), trace.input.cols());
  backprop_direction(layer.forward, trace.forward, trace.input, layout, false,
                     d_output.leftCols(H), grads.forward, d_x);
  backprop_direction(layer.backward, trace.backward, trace.input, layout, true,
                     d_output.rightCols(H), grads.backward, d_x);
  if (trace.dropout_mask.size() > 0) d_x.array() *= trace.dropout_mask.array();
  return d_x;
}

}  // namespace capfix::neural
