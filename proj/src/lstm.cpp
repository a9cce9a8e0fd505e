#include "trf/lstm.hpp"

#include <cmath>
#include <stdexcept>

namespace trf::lstm {

namespace {

using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

struct Weights {
  ConstMatMap w, u;
  ConstVecMap b;
  Weights(const double* p, CellShape s)
      : w(p, 4 * s.hidden, s.input),
        u(p + 4 * s.hidden * s.input, 4 * s.hidden, s.hidden),
        b(p + 4 * s.hidden * (s.input + s.hidden), 4 * s.hidden) {}
};

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// z holds pre-activations on entry, gate values on exit.
void activate(Eigen::Ref<Eigen::VectorXd> z, int h) {
  for (int k = 0; k < h; ++k) {
    z[k] = sigmoid(z[k]);
    z[h + k] = sigmoid(z[h + k]);
    z[2 * h + k] = std::tanh(z[2 * h + k]);
    z[3 * h + k] = sigmoid(z[3 * h + k]);
  }
}

}  // namespace

void forward(const double* params, CellShape shape, const Eigen::MatrixXd& x,
             bool reverse, Trace& out) {
  if (x.rows() != shape.input)
    throw std::invalid_argument("LSTM input dimension mismatch");
  const int h = shape.hidden;
  const auto T = x.cols();
  Weights wt(params, shape);
  out.x = x;
  out.reverse = reverse;
  out.gates.noalias() = wt.w * x;
  out.gates.colwise() += wt.b;
  out.h.resize(h, T);
  out.c.resize(h, T);
  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
  for (Eigen::Index n = 0; n < T; ++n) {
    const Eigen::Index t = reverse ? T - 1 - n : n;
    auto z = out.gates.col(t);
    z.noalias() += wt.u * h_prev;
    activate(z, h);
    auto c = out.c.col(t);
    c = z.segment(h, h).cwiseProduct(c_prev) +
        z.segment(0, h).cwiseProduct(z.segment(2 * h, h));
    out.h.col(t) = z.segment(3 * h, h).cwiseProduct(c.array().tanh().matrix());
    h_prev = out.h.col(t);
    c_prev = c;
  }
}

void backward(const double* params, CellShape shape, const Trace& trace,
              const Eigen::MatrixXd& dh, double* grad, Eigen::MatrixXd* dx) {
  const int h = shape.hidden;
  const auto T = trace.h.cols();
  if (dh.rows() != h || dh.cols() != T)
    throw std::invalid_argument("LSTM gradient shape mismatch");
  Weights wt(params, shape);
  Eigen::MatrixXd dz(4 * h, T);
  Eigen::MatrixXd h_prev_all = Eigen::MatrixXd::Zero(h, T);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(h);

  for (Eigen::Index n = T - 1; n >= 0; --n) {
    const Eigen::Index t = trace.reverse ? T - 1 - n : n;
    const Eigen::Index prev = trace.reverse ? t + 1 : t - 1;
    const bool has_prev = n > 0;
    Eigen::VectorXd c_prev = has_prev ? Eigen::VectorXd(trace.c.col(prev)) : zero;
    if (has_prev) h_prev_all.col(t) = trace.h.col(prev);

    const auto g = trace.gates.col(t);
    const auto gi = g.segment(0, h).array();
    const auto gf = g.segment(h, h).array();
    const auto gg = g.segment(2 * h, h).array();
    const auto go = g.segment(3 * h, h).array();
    const Eigen::ArrayXd tc = trace.c.col(t).array().tanh();

    const Eigen::ArrayXd dht = (dh.col(t) + dh_next).array();
    const Eigen::ArrayXd dc = dht * go * (1.0 - tc.square()) + dc_next.array();
    auto d = dz.col(t);
    d.segment(0, h) = (dc * gg * gi * (1.0 - gi)).matrix();
    d.segment(h, h) = (dc * c_prev.array() * gf * (1.0 - gf)).matrix();
    d.segment(2 * h, h) = (dc * gi * (1.0 - gg.square())).matrix();
    d.segment(3 * h, h) = (dht * tc * go * (1.0 - go)).matrix();
    dc_next = (dc * gf).matrix();
    dh_next.noalias() = wt.u.transpose() * d;
  }

  MatMap gw(grad, 4 * h, shape.input);
  MatMap gu(grad + 4 * h * shape.input, 4 * h, h);
  VecMap gb(grad + 4 * h * (shape.input + h), 4 * h);
  gw.noalias() += dz * trace.x.transpose();
  gu.noalias() += dz * h_prev_all.transpose();
  gb += dz.rowwise().sum();
  if (dx) dx->noalias() = wt.w.transpose() * dz;
}

void step(const double* params, CellShape shape, const Eigen::VectorXd& x,
          Eigen::VectorXd& h, Eigen::VectorXd& c) {
  const int hd = shape.hidden;
  Weights wt(params, shape);
  Eigen::VectorXd z = wt.b;
  z.noalias() += wt.w * x;
  z.noalias() += wt.u * h;
  activate(z, hd);
  c = z.segment(hd, hd).cwiseProduct(c) +
      z.segment(0, hd).cwiseProduct(z.segment(2 * hd, hd));
  h = z.segment(3 * hd, hd).cwiseProduct(c.array().tanh().matrix());
}

}  // namespace trf::lstm
