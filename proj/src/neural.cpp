#include "trf/neural.hpp"

#include <stdexcept>

#include "trf/random.hpp"

namespace trf {

std::size_t NeuralShape::cell_offset(int layer, int direction) const {
  std::size_t off = embedding_size();
  for (int k = 0; k < layer; ++k) off += 2 * cell(k).size();
  return off + static_cast<std::size_t>(direction) * cell(layer).size();
}

std::size_t NeuralShape::size() const { return cell_offset(layers, 0); }

NeuralParams::NeuralParams(NeuralShape shape)
    : shape_(shape), values_(shape.size(), 0.0) {
  if (shape.dim < 1 || shape.vocab_size < 1 || shape.layers < 1)
    throw std::invalid_argument("neural potential needs V, dim, layers >= 1");
}

NeuralParams init_neural_params(int vocab_size, int dim, int layers,
                                std::uint64_t seed) {
  NeuralParams p({vocab_size, dim, layers});
  Rng rng(seed);
  for (double& v : p.values()) v = uniform(rng, -0.1, 0.1);
  return p;
}

std::pair<double, NeuralCache> phi_forward(const Sentence& s,
                                           const NeuralParams& params) {
  const auto& shape = params.shape();
  const int l = s.length();
  const int d = shape.dim;
  NeuralCache cache;
  cache.shape = shape;
  cache.tokens = s.tokens;
  cache.embeddings.resize(d, l);
  const auto emb = params.embedding();
  for (int t = 0; t < l; ++t) {
    if (s.tokens[t] < 0 || s.tokens[t] >= shape.vocab_size)
      throw std::invalid_argument("token id outside the potential's vocabulary");
    cache.embeddings.col(t) = emb.col(s.tokens[t]);
  }
  if (l == 0) return {0.0, std::move(cache)};

  cache.forward.resize(shape.layers);
  cache.backward.resize(shape.layers);
  Eigen::MatrixXd input = cache.embeddings;
  for (int k = 0; k < shape.layers; ++k) {
    lstm::forward(params.cell(k, 0), shape.cell(k), input, false,
                  cache.forward[k]);
    lstm::forward(params.cell(k, 1), shape.cell(k), input, true,
                  cache.backward[k]);
    if (k + 1 < shape.layers) {
      input.resize(2 * d, l);
      input.topRows(d) = cache.forward[k].h;
      input.bottomRows(d) = cache.backward[k].h;
    }
  }
  const auto& hf = cache.forward.back().h;
  const auto& hb = cache.backward.back().h;
  const auto& e = cache.embeddings;
  double value = 0.0;
  for (int t = 0; t + 1 < l; ++t) value += hf.col(t).dot(e.col(t + 1));
  for (int t = 1; t < l; ++t) value += hb.col(t).dot(e.col(t - 1));
  return {value, std::move(cache)};
}

double phi(const Sentence& s, const NeuralParams& params) {
  return phi_forward(s, params).first;
}

void phi_backward(const NeuralCache& cache, const NeuralParams& params,
                  double scale, std::span<double> grad) {
  const auto& shape = params.shape();
  if (!(cache.shape == shape) || grad.size() != params.size())
    throw std::invalid_argument("phi_backward: shape mismatch");
  if (scale == 0.0) return;
  const int l = static_cast<int>(cache.tokens.size());
  if (l < 2) return;
  const int d = shape.dim;
  const auto& e = cache.embeddings;

  Eigen::MatrixXd dhf = Eigen::MatrixXd::Zero(d, l);
  Eigen::MatrixXd dhb = Eigen::MatrixXd::Zero(d, l);
  Eigen::MatrixXd de = Eigen::MatrixXd::Zero(d, l);
  const auto& hf = cache.forward.back().h;
  const auto& hb = cache.backward.back().h;
  for (int t = 0; t + 1 < l; ++t) {
    dhf.col(t) = scale * e.col(t + 1);
    de.col(t + 1) += scale * hf.col(t);
  }
  for (int t = 1; t < l; ++t) {
    dhb.col(t) = scale * e.col(t - 1);
    de.col(t - 1) += scale * hb.col(t);
  }

  Eigen::MatrixXd dxf, dxb;
  for (int k = shape.layers - 1; k >= 0; --k) {
    double* gf = grad.data() + shape.cell_offset(k, 0);
    double* gb = grad.data() + shape.cell_offset(k, 1);
    lstm::backward(params.cell(k, 0), shape.cell(k), cache.forward[k], dhf, gf,
                   &dxf);
    lstm::backward(params.cell(k, 1), shape.cell(k), cache.backward[k], dhb, gb,
                   &dxb);
    if (k > 0) {
      dhf = dxf.topRows(d) + dxb.topRows(d);
      dhb = dxf.bottomRows(d) + dxb.bottomRows(d);
    } else {
      de += dxf + dxb;
    }
  }
  Eigen::Map<Eigen::MatrixXd> gemb(grad.data(), d, shape.vocab_size);
  for (int t = 0; t < l; ++t) gemb.col(cache.tokens[t]) += de.col(t);
}

}  // namespace trf
