#ifndef TRF_NOISE_HPP
#define TRF_NOISE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trf/archive.hpp"
#include "trf/corpus.hpp"
#include "trf/lstm.hpp"
#include "trf/random.hpp"

namespace trf {

struct NoiseShape {
  int vocab_size = 0;
  int dim = 0;
  int layers = 1;

  lstm::CellShape cell() const { return {dim, dim}; }
  // Embedding has V + 1 columns; the last one is the BOS symbol.
  std::size_t embedding_size() const {
    return static_cast<std::size_t>(vocab_size + 1) * dim;
  }
  std::size_t cell_offset(int layer) const {
    return embedding_size() + static_cast<std::size_t>(layer) * cell().size();
  }
  std::size_t output_offset() const { return cell_offset(layers); }
  std::size_t size() const {
    return output_offset() + static_cast<std::size_t>(vocab_size) * dim +
           vocab_size;
  }
  bool operator==(const NoiseShape&) const = default;
};

// p_n(l, x) = pi_l * prod_i p(x_i | BOS, x_<i): an LSTM language model whose
// length distribution is the empirical prior. No end-of-sentence factor.
class NoiseModel {
 public:
  NoiseModel() = default;
  NoiseModel(NoiseShape shape, LengthPrior prior);

  const NoiseShape& shape() const { return shape_; }
  const LengthPrior& prior() const { return prior_; }
  WordId bos() const { return shape_.vocab_size; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  Eigen::Map<const Eigen::MatrixXd> embedding() const {
    return {values_.data(), shape_.dim, shape_.vocab_size + 1};
  }
  const double* cell(int layer) const {
    return values_.data() + shape_.cell_offset(layer);
  }
  Eigen::Map<const Eigen::MatrixXd> output_weights() const {
    return {values_.data() + shape_.output_offset(), shape_.vocab_size,
            shape_.dim};
  }
  Eigen::Map<const Eigen::VectorXd> output_bias() const {
    return {values_.data() + shape_.output_offset() +
                static_cast<std::size_t>(shape_.vocab_size) * shape_.dim,
            shape_.vocab_size};
  }

 private:
  NoiseShape shape_;
  LengthPrior prior_;
  std::vector<double> values_;
};

// Uniform in [-0.1, 0.1], deterministic in `seed`.
NoiseModel init_noise_model(int vocab_size, int dim, int layers,
                            LengthPrior prior, std::uint64_t seed);

// sum_i log p(x_i | BOS, x_<i), without the length prior.
double sequence_log_prob(const NoiseModel& n, const Sentence& s);
// log pi_l + sequence_log_prob; throws DataError when pi_l = 0.
double noise_log_prob(const NoiseModel& n, const Sentence& s);

// Conditional distribution of every position given its prefix, V x l.
Eigen::MatrixXd next_word_probs(const NoiseModel& n, const Sentence& s);

struct NoiseSample {
  Sentence sentence;
  double log_p_seq = 0.0;  // sequence_log_prob of the draw
};

// Draws l ~ pi, then exactly l words from the conditionals.
std::vector<NoiseSample> sample_scored(const NoiseModel& n, std::size_t count,
                                      Rng& rng);
std::vector<Sentence> sample(const NoiseModel& n, std::size_t count, Rng& rng);

// Mean negative sequence log-likelihood over `batch`; `grad` (size of the
// parameter vector) receives its gradient when non-empty.
double noise_nll(const NoiseModel& n, std::span<const Sentence> batch,
                 std::span<double> grad = {});

// One SGD step on the mean NLL with the gradient's global norm clipped to
// `clip_norm`. Returns the NLL before the step.
double noise_train_step(NoiseModel& n, std::span<const Sentence> batch,
                        double lr, double clip_norm = 5.0);

Archive to_archive(const NoiseModel& n);
NoiseModel noise_from_archive(const Archive& ar);
void save_noise(const NoiseModel& n, const std::string& path);
NoiseModel load_noise(const std::string& path);

}  // namespace trf

#endif  // TRF_NOISE_HPP
