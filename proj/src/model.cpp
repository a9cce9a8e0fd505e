#include "trf/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace trf {

std::vector<double> zeta_init(std::size_t vocab_size, int max_length) {
  if (vocab_size < 1) throw std::invalid_argument("vocabulary must be nonempty");
  const double log_v = std::log(static_cast<double>(vocab_size));
  std::vector<double> zeta(max_length);
  for (int l = 1; l <= max_length; ++l) zeta[l - 1] = l * log_v;
  return zeta;
}

void TrfModel::validate() const {
  if (lambda.size() != features.size())
    throw std::invalid_argument("lambda dimension does not match feature index");
  if (zeta.size() != prior.probs().size())
    throw std::invalid_argument("zeta and length prior disagree on L");
  if (neural && static_cast<std::size_t>(neural->shape().vocab_size) != vocab.size())
    throw std::invalid_argument("neural potential vocabulary size mismatch");
  if (classes && classes->word_to_class.size() != vocab.size())
    throw std::invalid_argument("class map size does not match vocabulary");
}

std::size_t TrfModel::parameter_count() const {
  return lambda.size() + (neural ? neural->size() : 0) + zeta.size();
}

std::vector<double> TrfModel::pack_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  flat.insert(flat.end(), lambda.begin(), lambda.end());
  if (neural) flat.insert(flat.end(), neural->values().begin(), neural->values().end());
  flat.insert(flat.end(), zeta.begin(), zeta.end());
  return flat;
}

void TrfModel::unpack_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count())
    throw std::invalid_argument("flat parameter vector has the wrong size");
  auto it = flat.begin();
  std::copy(it, it + lambda.size(), lambda.begin());
  it += lambda.size();
  if (neural) {
    auto v = neural->values();
    std::copy(it, it + v.size(), v.begin());
    it += v.size();
  }
  std::copy(it, it + zeta.size(), zeta.begin());
}

double log_weight(const TrfModel& m, const Sentence& s) {
  double w = 0.0;
  if (m.has_discrete()) w += linear_potential(s, m.features, m.lambda);
  if (m.neural) w += phi(s, *m.neural);
  return w;
}

double log_prob(const TrfModel& m, const Sentence& s) {
  const int l = s.length();
  const double pi = m.prior.prob(l);
  if (!(pi > 0.0))
    throw DataError("sentence length " + std::to_string(l) +
                    " has zero prior probability");
  return std::log(pi) + log_weight(m, s) - m.zeta[l - 1];
}

Archive to_archive(const TrfModel& m) {
  m.validate();
  Archive ar("trf-model");
  {
    std::ostringstream os;
    os << m.vocab.unk_id() << '\n';
    for (const auto& w : m.vocab.words()) os << w << '\n';
    ar.put_text("vocab", os.str());
  }
  if (m.classes) {
    std::ostringstream os;
    os << m.classes->n_classes << '\n';
    for (auto c : m.classes->word_to_class) os << c << '\n';
    ar.put_text("classes", os.str());
  }
  {
    std::ostringstream os;
    os << m.features.templates().spec << '\n';
    for (int c : m.features.cutoffs()) os << c;
    os << '\n';
    for (const auto& k : m.features.keys()) {
      os << k.tmpl;
      const int order = m.features.templates().templates[k.tmpl].order();
      for (int i = 0; i < order; ++i) os << ' ' << k.values[i];
      os << '\n';
    }
    ar.put_text("features", os.str());
  }
  if (m.neural) {
    const auto& s = m.neural->shape();
    ar.put_text("neural", std::to_string(s.vocab_size) + ' ' +
                              std::to_string(s.dim) + ' ' +
                              std::to_string(s.layers) + '\n');
  }
  ar.put_array("lambda", {m.lambda.size()}, m.lambda);
  if (m.neural) ar.put_array("theta", {m.neural->size()}, m.neural->values());
  ar.put_array("zeta", {m.zeta.size()}, m.zeta);
  ar.put_array("prior", {m.prior.probs().size()}, m.prior.probs());
  return ar;
}

TrfModel from_archive(const Archive& ar) {
  TrfModel m;
  {
    std::istringstream is(ar.text("vocab"));
    WordId unk = 0;
    is >> unk;
    std::vector<std::string> words;
    std::string w;
    while (is >> w) words.push_back(w);
    if (unk < 0 || static_cast<std::size_t>(unk) >= words.size())
      throw ArchiveError("model vocabulary has a bad unknown-token id");
    std::string unk_token = words[unk];
    m.vocab = Vocabulary(std::move(words), unk_token);
  }
  if (ar.has_text("classes")) {
    std::istringstream is(ar.text("classes"));
    ClassMap cm;
    is >> cm.n_classes;
    cm.word_to_class.resize(m.vocab.size());
    for (auto& c : cm.word_to_class)
      if (!(is >> c)) throw ArchiveError("model class map truncated");
    m.classes = std::move(cm);
  }
  {
    std::istringstream is(ar.text("features"));
    std::string spec, cutoffs, line;
    std::getline(is, spec);
    std::getline(is, cutoffs);
    TemplateSet ts = compile_templates(spec, m.classes.has_value());
    std::vector<FeatureKey> keys;
    while (std::getline(is, line)) {
      std::istringstream ls(line);
      FeatureKey k;
      if (!(ls >> k.tmpl)) continue;
      if (k.tmpl < 0 || static_cast<std::size_t>(k.tmpl) >= ts.templates.size())
        throw ArchiveError("feature key refers to a missing template");
      const int order = ts.templates[k.tmpl].order();
      for (int i = 0; i < order; ++i)
        if (!(ls >> k.values[i])) throw ArchiveError("feature key truncated");
      keys.push_back(k);
    }
    std::vector<std::int32_t> w2c;
    if (m.classes) w2c = m.classes->word_to_class;
    m.features = FeatureIndex(std::move(ts), std::move(w2c),
                              parse_cutoffs(cutoffs), std::move(keys));
  }
  m.lambda = ar.array("lambda").values;
  if (ar.has_text("neural")) {
    std::istringstream is(ar.text("neural"));
    NeuralShape s;
    is >> s.vocab_size >> s.dim >> s.layers;
    NeuralParams p(s);
    const auto& theta = ar.array("theta").values;
    if (theta.size() != p.size()) throw ArchiveError("theta size mismatch");
    std::copy(theta.begin(), theta.end(), p.values().begin());
    m.neural = std::move(p);
  }
  m.zeta = ar.array("zeta").values;
  m.prior = LengthPrior(ar.array("prior").values);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ArchiveError(std::string("inconsistent model file: ") + e.what());
  }
  return m;
}

void save_model(const TrfModel& m, const std::string& path) {
  to_archive(m).save(path);
}

TrfModel load_model(const std::string& path) {
  return from_archive(Archive::load(path, "trf-model"));
}

}  // namespace trf
