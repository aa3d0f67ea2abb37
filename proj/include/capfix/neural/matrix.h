#ifndef CAPFIX_NEURAL_MATRIX_H_
#define CAPFIX_NEURAL_MATRIX_H_

#include <Eigen/Dense>

namespace capfix::neural {

// Row-major so that one timestep of a time-major batch is a contiguous block.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// tanh(x) = 2 * logistic(2x) - 1; Eigen vectorises logistic but not tanh
// for doubles.
template <typename Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& x) {
  return 2.0 * (2.0 * x).logistic() - 1.0;
}

}  // namespace capfix::neural

#endif  // CAPFIX_NEURAL_MATRIX_H_
