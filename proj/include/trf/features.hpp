#ifndef TRF_FEATURES_HPP
#define TRF_FEATURES_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "trf/corpus.hpp"

namespace trf {

enum class FeatureSource : std::uint8_t { kWord = 0, kClass = 1 };

inline constexpr int kMaxFeatureOrder = 8;

// One n-gram pattern: the observed positions are offsets from the placement
// start, strictly increasing, first offset 0. Gaps between offsets are skips.
struct FeatureTemplate {
  FeatureSource source = FeatureSource::kWord;
  std::vector<int> offsets;

  int order() const { return static_cast<int>(offsets.size()); }
  int span() const { return offsets.back() + 1; }
  std::string name() const;
  bool operator==(const FeatureTemplate&) const = default;
};

struct TemplateSet {
  std::vector<FeatureTemplate> templates;
  int max_order = 0;
  std::string spec;  // canonical "w+c:5" form
};

// Accepts "+"-joined groups from {w, c, ws, cs} with an optional ":order"
// suffix (default 5). "w"/"c" give contiguous n-grams of orders 1..order;
// "ws"/"cs" give skip bigrams (x_i, x_{i+k+1}), k = 1..3, and skip trigrams
// (x_i, x_{i+1}, x_{i+k+2}), k = 1..2, limited to patterns within the order.
TemplateSet compile_templates(const std::string& spec, bool class_map_present);

// "00225" -> {0, 0, 2, 2, 5}.
std::vector<int> parse_cutoffs(const std::string& cutoffs);

struct FeatureKey {
  std::int32_t tmpl = 0;
  std::array<std::int32_t, kMaxFeatureOrder> values{};

  bool operator==(const FeatureKey&) const = default;
  auto operator<=>(const FeatureKey&) const = default;
};

struct FeatureKeyHash {
  std::size_t operator()(const FeatureKey& k) const noexcept;
};

struct SparseVector {
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;  // (index, count)

  bool empty() const { return pairs.empty(); }
};

class FeatureIndex {
 public:
  FeatureIndex() = default;
  // `word_to_class` may be empty when no class templates are present.
  FeatureIndex(TemplateSet templates, std::vector<std::int32_t> word_to_class,
               std::vector<int> cutoffs, std::vector<FeatureKey> keys);

  std::size_t size() const { return keys_.size(); }
  const TemplateSet& templates() const { return templates_; }
  const std::vector<int>& cutoffs() const { return cutoffs_; }
  const std::vector<FeatureKey>& keys() const { return keys_; }
  const std::vector<std::int32_t>& word_to_class() const {
    return word_to_class_;
  }
  // -1 when absent.
  std::int32_t find(const FeatureKey& key) const;

  // Calls fn(key) for every in-bounds placement in `s`; never crosses the
  // sentence ends.
  template <typename Fn>
  void for_each_placement(const Sentence& s, Fn&& fn) const;

 private:
  TemplateSet templates_;
  std::vector<std::int32_t> word_to_class_;
  std::vector<int> cutoffs_;
  std::vector<FeatureKey> keys_;
  std::unordered_map<FeatureKey, std::int32_t, FeatureKeyHash> ids_;
};

// Keeps key k of order n iff its training count is strictly greater than
// cutoffs[n-1]. Index order is (template id, value tuple).
FeatureIndex build_feature_index(std::span<const Sentence> corpus,
                                 const TemplateSet& templates,
                                 const std::vector<int>& cutoffs,
                                 const ClassMap* classes = nullptr);

SparseVector extract(const Sentence& s, const FeatureIndex& index);

double linear_potential(const Sentence& s, const FeatureIndex& index,
                        std::span<const double> lambda);
double linear_potential(const SparseVector& f, std::span<const double> lambda);

template <typename Fn>
void FeatureIndex::for_each_placement(const Sentence& s, Fn&& fn) const {
  const int l = s.length();
  for (std::size_t t = 0; t < templates_.templates.size(); ++t) {
    const auto& tp = templates_.templates[t];
    const bool use_class = tp.source == FeatureSource::kClass;
    for (int i = 0; i + tp.span() <= l; ++i) {
      FeatureKey key;
      key.tmpl = static_cast<std::int32_t>(t);
      for (int k = 0; k < tp.order(); ++k) {
        WordId w = s.tokens[i + tp.offsets[k]];
        key.values[k] = use_class ? word_to_class_[w] : w;
      }
      fn(key);
    }
  }
}

}  // namespace trf

#endif  // TRF_FEATURES_HPP
