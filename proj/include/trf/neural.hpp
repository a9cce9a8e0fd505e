#ifndef TRF_NEURAL_HPP
#define TRF_NEURAL_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "trf/corpus.hpp"
#include "trf/lstm.hpp"

namespace trf {

// Dimensions of the bidirectional potential network. Hidden size equals the
// embedding size so that h^T e is defined.
struct NeuralShape {
  int vocab_size = 0;
  int dim = 0;
  int layers = 1;

  lstm::CellShape cell(int layer) const {
    return {layer == 0 ? dim : 2 * dim, dim};
  }
  std::size_t embedding_size() const {
    return static_cast<std::size_t>(vocab_size) * dim;
  }
  // Offset of the cell for (layer, direction); direction 0 forward, 1 backward.
  std::size_t cell_offset(int layer, int direction) const;
  std::size_t size() const;
  bool operator==(const NeuralShape&) const = default;
};

// theta: embedding matrix (dim x V, one column per word) followed by the
// forward and backward cells of each layer.
class NeuralParams {
 public:
  NeuralParams() = default;
  explicit NeuralParams(NeuralShape shape);

  const NeuralShape& shape() const { return shape_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  Eigen::Map<const Eigen::MatrixXd> embedding() const {
    return {values_.data(), shape_.dim, shape_.vocab_size};
  }
  Eigen::Map<Eigen::MatrixXd> embedding() {
    return {values_.data(), shape_.dim, shape_.vocab_size};
  }
  const double* cell(int layer, int direction) const {
    return values_.data() + shape_.cell_offset(layer, direction);
  }

 private:
  NeuralShape shape_;
  std::vector<double> values_;
};

struct NeuralCache {
  std::vector<WordId> tokens;
  Eigen::MatrixXd embeddings;  // dim x l
  std::vector<lstm::Trace> forward, backward;  // one per layer
  NeuralShape shape;
};

// Uniform in [-0.1, 0.1] per coordinate, deterministic in `seed`.
NeuralParams init_neural_params(int vocab_size, int dim, int layers,
                                std::uint64_t seed);

// phi = sum_{i<l} h_f,i . e_{i+1} + sum_{i>1} h_b,i . e_{i-1}, both
// directions started from zero state.
std::pair<double, NeuralCache> phi_forward(const Sentence& s,
                                           const NeuralParams& params);
double phi(const Sentence& s, const NeuralParams& params);

// grad += scale * d(phi)/d(theta).
void phi_backward(const NeuralCache& cache, const NeuralParams& params,
                  double scale, std::span<double> grad);

}  // namespace trf

#endif  // TRF_NEURAL_HPP
