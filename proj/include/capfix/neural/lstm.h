#ifndef CAPFIX_NEURAL_LSTM_H_
#define CAPFIX_NEURAL_LSTM_H_

#include <cstddef>
#include <vector>

#include "capfix/neural/matrix.h"
#include "capfix/neural/model.h"

namespace capfix::neural {

// A batch laid out time-major: row t * batch + b holds step t of sequence b.
// mask[row] is 1 for real tokens and 0 for padding; padding only ever
// follows the real tokens of a sequence.
struct StepLayout {
  std::size_t steps = 0;
  std::size_t batch = 0;
  std::vector<double> mask;

  std::size_t rows() const { return steps * batch; }
  Eigen::Map<const Vector> step_mask(std::size_t t) const {
    return {mask.data() + t * batch, static_cast<Eigen::Index>(batch)};
  }
  // All-ones layout for `batch` sequences of length `steps`.
  static StepLayout dense(std::size_t steps, std::size_t batch);
};

struct CellOutput {
  Matrix h;
  Matrix c;
  Matrix gates;  // activated i, f, g, o column blocks
};

// One LSTM step for a block of rows:
//   [i f g o] = [sigma sigma tanh sigma](x W_input^T + h_prev W_hidden^T + b)
//   c = f * c_prev + i * g,  h = o * tanh(c)
CellOutput lstm_cell_forward(const LstmDirection& cell, const Matrix& x,
                             const Matrix& h_prev, const Matrix& c_prev);

struct DirectionTrace {
  Matrix gates;      // rows x 4H, activated
  Matrix cells;      // rows x H
  Matrix cell_tanh;  // rows x H
  Matrix hidden;     // rows x H
};

struct LayerTrace {
  Matrix input;         // rows x D_in, after dropout
  Matrix dropout_mask;  // empty when no dropout was applied
  DirectionTrace forward;
  DirectionTrace backward;
  Matrix output;  // rows x 2H, [h_forward | h_backward]
};

// Runs both directions over the batch from zero initial state. Padding rows
// hold zero state, so a backward scan starts fresh at each sequence's last
// real token. `dropout_mask` (already scaled by 1/(1-p)) multiplies the
// input; pass an empty matrix for inference.
LayerTrace bilstm_layer_forward(const BiLstmLayer& layer, const Matrix& input,
                                const StepLayout& layout,
                                const Matrix& dropout_mask = {});

// Backpropagation through time for one layer. Accumulates parameter
// gradients into `grads` and returns the gradient with respect to the
// layer's input before dropout.
Matrix bilstm_layer_backward(const BiLstmLayer& layer, const LayerTrace& trace,
                             const StepLayout& layout, const Matrix& d_output,
                             BiLstmLayer& grads);

}  // namespace capfix::neural

#endif  // CAPFIX_NEURAL_LSTM_H_
