#ifndef TRF_TESTS_HELPERS_HPP
#define TRF_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "trf/corpus.hpp"
#include "trf/features.hpp"
#include "trf/model.hpp"
#include "trf/neural.hpp"
#include "trf/noise.hpp"
#include "trf/oracle.hpp"
#include "trf/random.hpp"

namespace trf::testing {

// "<unk>", "b", "c", ... so that every id has a one-letter surface form.
inline Vocabulary letter_vocab(int V) {
  std::vector<std::string> words{"<unk>"};
  for (int i = 1; i < V; ++i) words.push_back(std::string(1, static_cast<char>('a' + i)));
  return Vocabulary(words, "<unk>");
}

inline LengthPrior random_prior(int L, Rng& rng) {
  std::vector<double> p(L);
  double total = 0.0;
  for (double& x : p) total += (x = 0.2 + uniform01(rng));
  for (double& x : p) x /= total;
  return LengthPrior(p);
}

inline std::vector<Sentence> all_sentences(int V, int L) {
  std::vector<Sentence> out;
  EnumSpace(V, L).for_each([&](const Sentence& s) { out.push_back(s); });
  return out;
}

struct TinyModelOptions {
  int vocab_size = 3;
  int max_length = 3;
  int dim = 2;             // 0 disables the neural potential
  std::string templates = "w:2";  // "" disables the discrete potential
  double lambda_range = 0.5;
  double theta_range = 0.5;
  std::uint64_t seed = 1;
};

// Every n-gram of the enumeration space is a feature, cutoffs all zero.
inline TrfModel tiny_model(const TinyModelOptions& o) {
  Rng rng(o.seed);
  TrfModel m;
  m.vocab = letter_vocab(o.vocab_size);
  const std::string spec = o.templates.empty() ? ":1" : o.templates;
  TemplateSet ts = compile_templates(spec, false);
  std::vector<int> cutoffs(ts.max_order, 0);
  m.features = build_feature_index(all_sentences(o.vocab_size, o.max_length), ts,
                                   cutoffs);
  m.lambda.resize(m.features.size());
  for (double& x : m.lambda) x = uniform(rng, -o.lambda_range, o.lambda_range);
  if (o.dim > 0) {
    NeuralParams p({o.vocab_size, o.dim, 1});
    for (double& x : p.values()) x = uniform(rng, -o.theta_range, o.theta_range);
    m.neural = std::move(p);
  }
  m.prior = random_prior(o.max_length, rng);
  m.zeta = zeta_init(m.vocab.size(), o.max_length);
  return m;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Largest coordinate-wise relative error, with relative error measured
// against max(|a|, |b|, floor).
inline double max_rel_err(const std::vector<double>& a,
                          const std::vector<double>& b, double floor = 1e-3) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace trf::testing

#endif  // TRF_TESTS_HELPERS_HPP
