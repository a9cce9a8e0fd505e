#ifndef TRF_MODEL_HPP
#define TRF_MODEL_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trf/archive.hpp"
#include "trf/corpus.hpp"
#include "trf/features.hpp"
#include "trf/neural.hpp"

namespace trf {

// zeta_l = l log V for l = 1..L: the exact log-normalisers of the model with
// all potentials zero.
std::vector<double> zeta_init(std::size_t vocab_size, int max_length);

// p(l, x) = pi_l exp(lambda . f(x) + phi(x; theta) - zeta_l). Either
// potential may be disabled: no feature templates gives a neural-only model,
// no `neural` gives a discrete-only model.
struct TrfModel {
  Vocabulary vocab;
  std::optional<ClassMap> classes;
  FeatureIndex features;
  std::vector<double> lambda;
  std::optional<NeuralParams> neural;
  std::vector<double> zeta;  // zeta[l-1]
  LengthPrior prior;

  int max_length() const { return prior.max_length(); }
  bool has_discrete() const { return !features.templates().templates.empty(); }
  bool has_neural() const { return neural.has_value(); }

  // Throws std::invalid_argument when the parts disagree on dimensions.
  void validate() const;

  // Size of the flat (lambda, theta, zeta) vector.
  std::size_t parameter_count() const;
  std::vector<double> pack_parameters() const;
  void unpack_parameters(std::span<const double> flat);
};

// lambda . f(x) + phi(x; theta).
double log_weight(const TrfModel& m, const Sentence& s);
// log pi_l + log_weight - zeta_l; throws DataError when pi_l = 0.
double log_prob(const TrfModel& m, const Sentence& s);

Archive to_archive(const TrfModel& m);
TrfModel from_archive(const Archive& ar);
void save_model(const TrfModel& m, const std::string& path);
TrfModel load_model(const std::string& path);

}  // namespace trf

#endif  // TRF_MODEL_HPP
