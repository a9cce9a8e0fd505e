#ifndef TRF_CORPUS_HPP
#define TRF_CORPUS_HPP

#include <cstdint>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace trf {

using WordId = std::int32_t;

// Raised for malformed input data: empty corpora, bad files, unseen lengths.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Word <-> id table. Ids are contiguous 0..V-1 and the unknown token is
// always present.
class Vocabulary {
 public:
  Vocabulary() = default;
  // `words` is the id order; `unk_token` must be one of them.
  Vocabulary(std::vector<std::string> words, const std::string& unk_token);

  WordId lookup(std::string_view word) const;  // OOV -> unk_id()
  bool contains(std::string_view word) const;
  const std::string& word(WordId id) const { return words_.at(id); }
  const std::vector<std::string>& words() const { return words_; }
  WordId unk_id() const { return unk_id_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
  WordId unk_id_ = 0;
};

struct Sentence {
  std::vector<WordId> tokens;

  int length() const { return static_cast<int>(tokens.size()); }
  bool operator==(const Sentence&) const = default;
};

// Empirical distribution over sentence lengths 1..L.
class LengthPrior {
 public:
  LengthPrior() = default;
  explicit LengthPrior(std::vector<double> probs);

  int max_length() const { return static_cast<int>(probs_.size()); }
  // Zero outside 1..L.
  double prob(int length) const;
  double log_prob(int length) const;
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;  // probs_[l-1] = pi_l
};

struct ClassMap {
  std::vector<std::int32_t> word_to_class;
  int n_classes = 0;
};

// Splits on ASCII whitespace.
std::vector<std::string> tokenize(std::string_view line);

std::vector<std::string> read_lines(const std::string& path);

// Keeps the unk token plus the (max_size - 1) most frequent other words;
// frequency ties are broken lexicographically. Id 0 is the unk token.
Vocabulary build_vocab(std::istream& corpus_lines, std::size_t max_size,
                       const std::string& unk_token = "<unk>");
Vocabulary build_vocab(std::span<const std::string> corpus_lines,
                       std::size_t max_size,
                       const std::string& unk_token = "<unk>");

Sentence encode(std::string_view line, const Vocabulary& vocab);
std::string decode(const Sentence& s, const Vocabulary& vocab);

// Encodes every nonblank line; blank lines are dropped.
std::vector<Sentence> encode_corpus(std::span<const std::string> lines,
                                    const Vocabulary& vocab);

// Sentences longer than max_length are skipped, never truncated.
std::vector<Sentence> filter_by_length(std::span<const Sentence> corpus,
                                       int max_length,
                                       std::size_t* skipped = nullptr);

int longest_sentence(std::span<const Sentence> corpus);

// pi_l = count(l) / total over sentences with l <= max_length.
LengthPrior length_prior(std::span<const Sentence> corpus, int max_length,
                         std::size_t* skipped = nullptr);

// Class-bigram log-likelihood of `corpus` under `classes`, using bigrams
// inside sentences only (no boundary tokens).
double class_bigram_log_likelihood(std::span<const Sentence> corpus,
                                   std::size_t vocab_size,
                                   const ClassMap& classes);

// Exchange clustering. Words are initialised round-robin by frequency rank,
// then each sweep visits words in a seed-shuffled order and moves each one to
// the class with the highest class-bigram log-likelihood. The trace gets the
// initial objective and then one entry per accepted move.
ClassMap cluster_words(std::span<const Sentence> corpus, const Vocabulary& vocab,
                       int n_classes, int max_iters, std::uint64_t seed,
                       std::vector<double>* objective_trace = nullptr);

void write_class_map(std::ostream& out, const ClassMap& classes,
                     const Vocabulary& vocab);
// Words absent from the file are an error; unknown words in the file too.
ClassMap read_class_map(std::istream& in, const Vocabulary& vocab);

}  // namespace trf

#endif  // TRF_CORPUS_HPP
