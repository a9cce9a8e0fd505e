#ifndef TRF_LSTM_HPP
#define TRF_LSTM_HPP

#include <cstddef>

#include <Eigen/Dense>

namespace trf::lstm {

// Flat layout of one LSTM cell: W (4h x in), U (4h x h), b (4h), all
// column-major. Gate rows are ordered input, forget, candidate, output.
struct CellShape {
  int input = 0;
  int hidden = 0;

  std::size_t size() const {
    const std::size_t g = 4 * static_cast<std::size_t>(hidden);
    return g * input + g * hidden + g;
  }
};

// Activations of one sequence pass, columns in time order.
struct Trace {
  Eigen::MatrixXd x;      // in x T
  Eigen::MatrixXd h;      // h x T
  Eigen::MatrixXd c;      // h x T
  Eigen::MatrixXd gates;  // 4h x T, after nonlinearities
  bool reverse = false;   // true: step t depends on t+1
};

// Runs the cell over the columns of `x`, from a zero state. With `reverse`
// the recurrence runs right to left.
void forward(const double* params, CellShape shape, const Eigen::MatrixXd& x,
             bool reverse, Trace& out);

// Adds d(loss)/d(params) into `grad` given d(loss)/d(h) for every column.
// When `dx` is non-null it receives d(loss)/d(x).
void backward(const double* params, CellShape shape, const Trace& trace,
              const Eigen::MatrixXd& dh, double* grad, Eigen::MatrixXd* dx);

// One step without recording activations; updates h and c in place.
void step(const double* params, CellShape shape, const Eigen::VectorXd& x,
          Eigen::VectorXd& h, Eigen::VectorXd& c);

}  // namespace trf::lstm

#endif  // TRF_LSTM_HPP
