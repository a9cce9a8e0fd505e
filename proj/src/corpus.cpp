#include "trf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "trf/random.hpp"

namespace trf {

Vocabulary::Vocabulary(std::vector<std::string> words,
                       const std::string& unk_token)
    : words_(std::move(words)) {
  ids_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    auto [it, inserted] = ids_.emplace(words_[i], static_cast<WordId>(i));
    if (!inserted) throw DataError("duplicate vocabulary word: " + words_[i]);
  }
  auto it = ids_.find(unk_token);
  if (it == ids_.end())
    throw DataError("vocabulary lacks unknown token " + unk_token);
  unk_id_ = it->second;
}

WordId Vocabulary::lookup(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? unk_id_ : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return ids_.count(std::string(word)) != 0;
}

LengthPrior::LengthPrior(std::vector<double> probs) : probs_(std::move(probs)) {
  for (double p : probs_)
    if (!(p >= 0.0)) throw DataError("length prior has a negative entry");
}

double LengthPrior::prob(int length) const {
  if (length < 1 || length > max_length()) return 0.0;
  return probs_[length - 1];
}

double LengthPrior::log_prob(int length) const {
  return std::log(prob(length));
}

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

Vocabulary build_vocab(std::istream& corpus_lines, std::size_t max_size,
                       const std::string& unk_token) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(corpus_lines, line)) lines.push_back(line);
  return build_vocab(lines, max_size, unk_token);
}

Vocabulary build_vocab(std::span<const std::string> corpus_lines,
                       std::size_t max_size, const std::string& unk_token) {
  if (max_size < 1) throw DataError("vocabulary size must be at least 1");
  std::unordered_map<std::string, std::size_t> counts;
  std::size_t n_tokens = 0;
  for (const auto& line : corpus_lines) {
    for (auto& tok : tokenize(line)) {
      ++n_tokens;
      if (tok != unk_token) ++counts[tok];
    }
  }
  if (n_tokens == 0) throw DataError("empty corpus: cannot build vocabulary");

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> words{unk_token};
  for (std::size_t i = 0; i < ranked.size() && words.size() < max_size; ++i)
    words.push_back(ranked[i].first);
  return Vocabulary(std::move(words), unk_token);
}

Sentence encode(std::string_view line, const Vocabulary& vocab) {
  auto toks = tokenize(line);
  if (toks.empty()) throw DataError("cannot encode an empty line");
  Sentence s;
  s.tokens.reserve(toks.size());
  for (const auto& t : toks) s.tokens.push_back(vocab.lookup(t));
  return s;
}

std::string decode(const Sentence& s, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (i) out += ' ';
    out += vocab.word(s.tokens[i]);
  }
  return out;
}

std::vector<Sentence> encode_corpus(std::span<const std::string> lines,
                                    const Vocabulary& vocab) {
  std::vector<Sentence> out;
  out.reserve(lines.size());
  for (const auto& line : lines) {
    if (tokenize(line).empty()) continue;
    out.push_back(encode(line, vocab));
  }
  return out;
}

std::vector<Sentence> filter_by_length(std::span<const Sentence> corpus,
                                       int max_length, std::size_t* skipped) {
  std::vector<Sentence> kept;
  std::size_t n_skipped = 0;
  for (const auto& s : corpus) {
    if (s.length() <= max_length)
      kept.push_back(s);
    else
      ++n_skipped;
  }
  if (skipped) *skipped = n_skipped;
  return kept;
}

int longest_sentence(std::span<const Sentence> corpus) {
  int longest = 0;
  for (const auto& s : corpus) longest = std::max(longest, s.length());
  return longest;
}

LengthPrior length_prior(std::span<const Sentence> corpus, int max_length,
                         std::size_t* skipped) {
  if (max_length < 1) throw DataError("maximum length must be at least 1");
  std::vector<std::size_t> counts(max_length, 0);
  std::size_t total = 0, n_skipped = 0;
  for (const auto& s : corpus) {
    if (s.length() < 1 || s.length() > max_length) {
      ++n_skipped;
      continue;
    }
    ++counts[s.length() - 1];
    ++total;
  }
  if (skipped) *skipped = n_skipped;
  if (total == 0)
    throw DataError("no sentences within the maximum length; prior undefined");
  std::vector<double> probs(max_length);
  for (int l = 0; l < max_length; ++l)
    probs[l] = static_cast<double>(counts[l]) / static_cast<double>(total);
  return LengthPrior(std::move(probs));
}

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// Word-level bigram statistics used by the exchange algorithm.
struct BigramStats {
  std::vector<std::vector<std::pair<WordId, double>>> succ, pred;
  std::vector<double> self, left_count, right_count;
};

BigramStats collect_bigrams(std::span<const Sentence> corpus, std::size_t V) {
  std::vector<std::unordered_map<WordId, double>> succ(V), pred(V);
  BigramStats st;
  st.self.assign(V, 0.0);
  st.left_count.assign(V, 0.0);
  st.right_count.assign(V, 0.0);
  for (const auto& s : corpus) {
    for (std::size_t i = 0; i + 1 < s.tokens.size(); ++i) {
      WordId u = s.tokens[i], v = s.tokens[i + 1];
      if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= V ||
          static_cast<std::size_t>(v) >= V)
        throw DataError("token id outside vocabulary");
      st.left_count[u] += 1.0;
      st.right_count[v] += 1.0;
      if (u == v) {
        st.self[u] += 1.0;
      } else {
        succ[u][v] += 1.0;
        pred[v][u] += 1.0;
      }
    }
  }
  st.succ.resize(V);
  st.pred.resize(V);
  for (std::size_t w = 0; w < V; ++w) {
    st.succ[w].assign(succ[w].begin(), succ[w].end());
    st.pred[w].assign(pred[w].begin(), pred[w].end());
    std::sort(st.succ[w].begin(), st.succ[w].end());
    std::sort(st.pred[w].begin(), st.pred[w].end());
  }
  return st;
}

}  // namespace

double class_bigram_log_likelihood(std::span<const Sentence> corpus,
                                   std::size_t vocab_size,
                                   const ClassMap& classes) {
  const int n = classes.n_classes;
  std::vector<double> cc(static_cast<std::size_t>(n) * n, 0.0), nl(n, 0.0),
      nr(n, 0.0), wr(vocab_size, 0.0);
  for (const auto& s : corpus) {
    for (std::size_t i = 0; i + 1 < s.tokens.size(); ++i) {
      int a = classes.word_to_class[s.tokens[i]];
      int b = classes.word_to_class[s.tokens[i + 1]];
      cc[static_cast<std::size_t>(a) * n + b] += 1.0;
      nl[a] += 1.0;
      nr[b] += 1.0;
      wr[s.tokens[i + 1]] += 1.0;
    }
  }
  double ll = 0.0;
  for (double c : cc) ll += xlogx(c);
  for (double c : nl) ll -= xlogx(c);
  for (double c : nr) ll -= xlogx(c);
  for (double c : wr) ll += xlogx(c);
  return ll;
}

ClassMap cluster_words(std::span<const Sentence> corpus, const Vocabulary& vocab,
                       int n_classes, int max_iters, std::uint64_t seed,
                       std::vector<double>* objective_trace) {
  const std::size_t V = vocab.size();
  if (n_classes < 1) throw DataError("number of classes must be positive");
  if (static_cast<std::size_t>(n_classes) > V)
    throw DataError("more classes (" + std::to_string(n_classes) +
                    ") than vocabulary words (" + std::to_string(V) + ")");
  if (corpus.empty()) throw DataError("empty corpus: cannot cluster words");

  const BigramStats st = collect_bigrams(corpus, V);

  // Round-robin by frequency rank, ties lexicographic via vocabulary order.
  std::vector<double> freq(V, 0.0);
  for (const auto& s : corpus)
    for (WordId w : s.tokens) freq[w] += 1.0;
  std::vector<WordId> by_rank(V);
  std::iota(by_rank.begin(), by_rank.end(), 0);
  std::stable_sort(by_rank.begin(), by_rank.end(), [&](WordId a, WordId b) {
    if (freq[a] != freq[b]) return freq[a] > freq[b];
    return vocab.word(a) < vocab.word(b);
  });

  ClassMap cm;
  cm.n_classes = n_classes;
  cm.word_to_class.assign(V, 0);
  for (std::size_t r = 0; r < V; ++r)
    cm.word_to_class[by_rank[r]] = static_cast<int>(r % n_classes);
  if (n_classes == 1) {
    if (objective_trace)
      objective_trace->push_back(class_bigram_log_likelihood(corpus, V, cm));
    return cm;
  }

  const std::size_t n = static_cast<std::size_t>(n_classes);
  std::vector<double> cc(n * n, 0.0), nl(n, 0.0), nr(n, 0.0);
  std::vector<int> members(n, 0);
  auto& cls = cm.word_to_class;
  for (std::size_t w = 0; w < V; ++w) {
    ++members[cls[w]];
    nl[cls[w]] += st.left_count[w];
    nr[cls[w]] += st.right_count[w];
    cc[cls[w] * n + cls[w]] += st.self[w];
    for (auto [v, k] : st.succ[w]) cc[cls[w] * n + cls[v]] += k;
  }
  double objective = class_bigram_log_likelihood(corpus, V, cm);
  if (objective_trace) objective_trace->push_back(objective);

  std::vector<double> right(n, 0.0), left(n, 0.0);
  std::vector<int> right_touched, left_touched;
  std::vector<double> delta(n);
  std::vector<WordId> order(V);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);

  for (int sweep = 0; sweep < max_iters; ++sweep) {
    shuffle(std::span<WordId>(order), rng);
    bool moved = false;
    for (WordId w : order) {
      const int a = cls[w];
      if (members[a] == 1) continue;  // keep every class nonempty
      if (st.left_count[w] == 0.0 && st.right_count[w] == 0.0) continue;

      right_touched.clear();
      left_touched.clear();
      for (auto [v, k] : st.succ[w]) {
        int c = cls[v];
        if (right[c] == 0.0) right_touched.push_back(c);
        right[c] += k;
      }
      for (auto [v, k] : st.pred[w]) {
        int c = cls[v];
        if (left[c] == 0.0) left_touched.push_back(c);
        left[c] += k;
      }
      const double self = st.self[w], wl = st.left_count[w],
                   wr = st.right_count[w];

      auto apply = [&](int b, double sign) {
        for (int c : right_touched) cc[b * n + c] += sign * right[c];
        for (int c : left_touched) cc[c * n + b] += sign * left[c];
        cc[b * n + b] += sign * self;
        nl[b] += sign * wl;
        nr[b] += sign * wr;
      };
      apply(a, -1.0);

      for (std::size_t b = 0; b < n; ++b) {
        double d = 0.0;
        for (int c : right_touched) {
          if (static_cast<std::size_t>(c) == b) continue;
          double x = cc[b * n + c];
          d += xlogx(x + right[c]) - xlogx(x);
        }
        for (int c : left_touched) {
          if (static_cast<std::size_t>(c) == b) continue;
          double x = cc[c * n + b];
          d += xlogx(x + left[c]) - xlogx(x);
        }
        double diag = cc[b * n + b];
        d += xlogx(diag + right[b] + left[b] + self) - xlogx(diag);
        d -= xlogx(nl[b] + wl) - xlogx(nl[b]);
        d -= xlogx(nr[b] + wr) - xlogx(nr[b]);
        delta[b] = d;
      }
      int best = a;
      const double tol = 1e-9 * std::max(1.0, std::abs(objective));
      for (std::size_t b = 0; b < n; ++b)
        if (delta[b] > delta[best] + tol) best = static_cast<int>(b);
      apply(best, +1.0);

      if (best != a) {
        --members[a];
        ++members[best];
        cls[w] = best;
        objective += delta[best] - delta[a];
        moved = true;
        if (objective_trace) objective_trace->push_back(objective);
      }
      for (int c : right_touched) right[c] = 0.0;
      for (int c : left_touched) left[c] = 0.0;
    }
    if (!moved) break;
  }
  return cm;
}

void write_class_map(std::ostream& out, const ClassMap& classes,
                     const Vocabulary& vocab) {
  for (std::size_t w = 0; w < vocab.size(); ++w)
    out << vocab.word(static_cast<WordId>(w)) << '\t'
        << classes.word_to_class[w] << '\n';
}

ClassMap read_class_map(std::istream& in, const Vocabulary& vocab) {
  ClassMap cm;
  cm.word_to_class.assign(vocab.size(), -1);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (tokenize(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError("class map line " + std::to_string(lineno) +
                      ": expected word<TAB>class_id");
    std::string word = line.substr(0, tab);
    if (!vocab.contains(word))
      throw DataError("class map line " + std::to_string(lineno) +
                      ": word not in vocabulary: " + word);
    int c = 0;
    try {
      c = std::stoi(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError("class map line " + std::to_string(lineno) +
                      ": bad class id");
    }
    if (c < 0) throw DataError("negative class id in class map");
    cm.word_to_class[vocab.lookup(word)] = c;
    cm.n_classes = std::max(cm.n_classes, c + 1);
  }
  for (std::size_t w = 0; w < vocab.size(); ++w)
    if (cm.word_to_class[w] < 0)
      throw DataError("class map has no entry for word " +
                      vocab.word(static_cast<WordId>(w)));
  return cm;
}

}  // namespace trf
