#ifndef TRF_EVALUATION_HPP
#define TRF_EVALUATION_HPP

#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "trf/model.hpp"

namespace trf {

struct PerplexityReport {
  double perplexity = 0.0;
  double total_log_prob = 0.0;
  std::size_t sentences = 0;
  std::size_t tokens = 0;
};

// exp(-sum log p(l, x) / sum l). There is no end-of-sentence token: length is
// priced by pi_l, so values are not comparable with conditional-LM perplexity.
// Throws DataError naming every sentence (1-based) whose length is unseen.
PerplexityReport perplexity(const TrfModel& m, std::span<const Sentence> corpus);

using SentenceScorer = std::function<double(const std::vector<std::string>&)>;

// log_prob of the encoded tokens (OOV -> unk); -inf when the length has zero
// prior probability, so such hypotheses are never preferred.
SentenceScorer model_scorer(const TrfModel& m);

struct ScorerSet {
  std::vector<SentenceScorer> scorers;
  std::vector<double> weights;

  // Weights 1/K each.
  static ScorerSet equal(std::vector<SentenceScorer> scorers);
  double score(const std::vector<std::string>& tokens) const;
};

// Mean of the scorers' log-scores.
double interpolate(std::span<const SentenceScorer> scorers,
                   const std::vector<std::string>& tokens);

struct Hypothesis {
  double aux_score = 0.0;
  std::vector<std::string> tokens;
};

struct NBestList {
  std::string utterance;
  std::vector<Hypothesis> hypotheses;
};

struct RankedHypothesis {
  std::size_t index = 0;  // position in the input list, 0-based
  double combined = 0.0;
};

// combined = aux + lm_weight * sum_k w_k score_k, sorted descending; ties keep
// input order.
std::vector<RankedHypothesis> score_nbest(const NBestList& list,
                                          const ScorerSet& scorers,
                                          double lm_weight);

struct WerResult {
  std::size_t errors = 0;
  std::size_t ref_len = 0;
  double rate = 0.0;
};

// Levenshtein distance with unit costs; rate = errors / ref_len.
WerResult wer(const std::vector<std::string>& reference,
              const std::vector<std::string>& hypothesis);

// Sums errors and reference words before dividing.
WerResult corpus_wer(std::span<const WerResult> utterances);

// "utt_id<TAB>aux_score<TAB>w1 ... wn", grouped by consecutive utt_id.
std::vector<NBestList> read_nbest(std::istream& in);
// "utt_id<TAB>w1 ... wn".
std::map<std::string, std::vector<std::string>> read_references(std::istream& in);

}  // namespace trf

#endif  // TRF_EVALUATION_HPP
