#include "trf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace trf {

PerplexityReport perplexity(const TrfModel& m, std::span<const Sentence> corpus) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (!(m.prior.prob(corpus[i].length()) > 0.0)) bad.push_back(i + 1);
  if (!bad.empty()) {
    std::ostringstream os;
    os << bad.size() << " sentence(s) have a length with zero prior probability:";
    for (std::size_t k = 0; k < std::min<std::size_t>(bad.size(), 20); ++k)
      os << ' ' << bad[k];
    if (bad.size() > 20) os << " ...";
    throw DataError(os.str());
  }
  if (corpus.empty()) throw DataError("empty corpus: perplexity undefined");
  PerplexityReport r;
  for (const auto& s : corpus) {
    r.total_log_prob += log_prob(m, s);
    r.tokens += static_cast<std::size_t>(s.length());
    ++r.sentences;
  }
  r.perplexity = std::exp(-r.total_log_prob / static_cast<double>(r.tokens));
  return r;
}

SentenceScorer model_scorer(const TrfModel& m) {
  return [&m](const std::vector<std::string>& tokens) {
    Sentence s;
    s.tokens.reserve(tokens.size());
    for (const auto& t : tokens) s.tokens.push_back(m.vocab.lookup(t));
    if (!(m.prior.prob(s.length()) > 0.0))
      return -std::numeric_limits<double>::infinity();
    return log_prob(m, s);
  };
}

ScorerSet ScorerSet::equal(std::vector<SentenceScorer> scorers) {
  ScorerSet set;
  const double w = scorers.empty() ? 0.0 : 1.0 / static_cast<double>(scorers.size());
  set.weights.assign(scorers.size(), w);
  set.scorers = std::move(scorers);
  return set;
}

double ScorerSet::score(const std::vector<std::string>& tokens) const {
  if (scorers.size() != weights.size())
    throw std::invalid_argument("scorer and weight counts differ");
  double total = 0.0;
  for (std::size_t k = 0; k < scorers.size(); ++k)
    total += weights[k] * scorers[k](tokens);
  return total;
}

double interpolate(std::span<const SentenceScorer> scorers,
                   const std::vector<std::string>& tokens) {
  if (scorers.empty()) throw std::invalid_argument("no scorers to interpolate");
  double total = 0.0;
  for (const auto& s : scorers) total += s(tokens);
  return total / static_cast<double>(scorers.size());
}

std::vector<RankedHypothesis> score_nbest(const NBestList& list,
                                          const ScorerSet& scorers,
                                          double lm_weight) {
  if (list.hypotheses.empty())
    throw DataError("utterance " + list.utterance + " has no hypotheses");
  std::vector<RankedHypothesis> out(list.hypotheses.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& h = list.hypotheses[i];
    out[i] = {i, h.aux_score + lm_weight * scorers.score(h.tokens)};
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedHypothesis& a, const RankedHypothesis& b) {
                     return a.combined > b.combined;
                   });
  return out;
}

WerResult wer(const std::vector<std::string>& reference,
              const std::vector<std::string>& hypothesis) {
  if (reference.empty()) throw DataError("empty reference: WER undefined");
  const std::size_t n = reference.size(), m = hypothesis.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (reference[i - 1] != hypothesis[j - 1]);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  WerResult r;
  r.errors = prev[m];
  r.ref_len = n;
  r.rate = static_cast<double>(r.errors) / static_cast<double>(n);
  return r;
}

WerResult corpus_wer(std::span<const WerResult> utterances) {
  WerResult total;
  for (const auto& u : utterances) {
    total.errors += u.errors;
    total.ref_len += u.ref_len;
  }
  if (total.ref_len == 0) throw DataError("no reference words: WER undefined");
  total.rate = static_cast<double>(total.errors) / static_cast<double>(total.ref_len);
  return total;
}

std::vector<NBestList> read_nbest(std::istream& in) {
  std::vector<NBestList> lists;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (tokenize(line).empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw DataError("n-best line " + std::to_string(lineno) +
                      ": expected utt_id<TAB>aux_score<TAB>words");
    Hypothesis h;
    try {
      std::size_t used = 0;
      const std::string num = line.substr(t1 + 1, t2 - t1 - 1);
      h.aux_score = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw DataError("n-best line " + std::to_string(lineno) + ": bad aux score");
    }
    h.tokens = tokenize(std::string_view(line).substr(t2 + 1));
    std::string utt = line.substr(0, t1);
    if (lists.empty() || lists.back().utterance != utt) lists.push_back({utt, {}});
    lists.back().hypotheses.push_back(std::move(h));
  }
  return lists;
}

std::map<std::string, std::vector<std::string>> read_references(std::istream& in) {
  std::map<std::string, std::vector<std::string>> refs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (tokenize(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("reference line " + std::to_string(lineno) +
                      ": expected utt_id<TAB>words");
    refs[line.substr(0, tab)] = tokenize(std::string_view(line).substr(tab + 1));
  }
  return refs;
}

}  // namespace trf
