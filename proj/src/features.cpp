#include "trf/features.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace trf {

std::string FeatureTemplate::name() const {
  std::string out = source == FeatureSource::kWord ? "w" : "c";
  out += '[';
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(offsets[i]);
  }
  out += ']';
  return out;
}

namespace {

void add_contiguous(TemplateSet& set, FeatureSource src, int order) {
  for (int n = 1; n <= order; ++n) {
    FeatureTemplate t{src, {}};
    for (int k = 0; k < n; ++k) t.offsets.push_back(k);
    set.templates.push_back(std::move(t));
  }
}

void add_skips(TemplateSet& set, FeatureSource src, int order) {
  if (order >= 2)
    for (int k = 1; k <= 3; ++k) set.templates.push_back({src, {0, k + 1}});
  if (order >= 3)
    for (int k = 1; k <= 2; ++k) set.templates.push_back({src, {0, 1, k + 2}});
}

}  // namespace

TemplateSet compile_templates(const std::string& spec, bool class_map_present) {
  std::string groups = spec;
  int order = 5;
  if (auto colon = spec.find(':'); colon != std::string::npos) {
    groups = spec.substr(0, colon);
    try {
      std::size_t used = 0;
      order = std::stoi(spec.substr(colon + 1), &used);
      if (used != spec.size() - colon - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::invalid_argument("bad feature order in template spec: " + spec);
    }
  }
  if (order < 1 || order > kMaxFeatureOrder)
    throw std::invalid_argument("feature order must be in 1.." +
                                std::to_string(kMaxFeatureOrder));

  bool w = false, c = false, ws = false, cs = false;
  std::size_t start = 0;
  while (start <= groups.size()) {
    auto plus = groups.find('+', start);
    std::string g = groups.substr(start, plus == std::string::npos
                                             ? std::string::npos
                                             : plus - start);
    if (g == "w")
      w = true;
    else if (g == "c")
      c = true;
    else if (g == "ws")
      ws = true;
    else if (g == "cs")
      cs = true;
    else if (!(g.empty() && groups.empty()))
      throw std::invalid_argument("unknown feature group '" + g +
                                  "' in template spec " + spec);
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  if ((c || cs) && !class_map_present)
    throw std::invalid_argument("class features requested without a class map");

  TemplateSet set;
  set.max_order = order;
  std::string canon;
  auto tag = [&](bool on, const char* name) {
    if (!on) return;
    if (!canon.empty()) canon += '+';
    canon += name;
  };
  tag(w, "w");
  tag(c, "c");
  tag(ws, "ws");
  tag(cs, "cs");
  set.spec = canon + ":" + std::to_string(order);
  if (w) add_contiguous(set, FeatureSource::kWord, order);
  if (c) add_contiguous(set, FeatureSource::kClass, order);
  if (ws) add_skips(set, FeatureSource::kWord, order);
  if (cs) add_skips(set, FeatureSource::kClass, order);
  return set;
}

std::vector<int> parse_cutoffs(const std::string& cutoffs) {
  std::vector<int> out;
  for (char ch : cutoffs) {
    if (ch < '0' || ch > '9')
      throw std::invalid_argument("cutoff string must be digits: " + cutoffs);
    out.push_back(ch - '0');
  }
  return out;
}

std::size_t FeatureKeyHash::operator()(const FeatureKey& k) const noexcept {
  std::uint64_t h = 0x9E3779B97F4A7C15ull ^ static_cast<std::uint32_t>(k.tmpl);
  for (auto v : k.values) {
    h ^= static_cast<std::uint32_t>(v);
    h *= 0xFF51AFD7ED558CCDull;
    h ^= h >> 29;
  }
  return static_cast<std::size_t>(h);
}

FeatureIndex::FeatureIndex(TemplateSet templates,
                           std::vector<std::int32_t> word_to_class,
                           std::vector<int> cutoffs, std::vector<FeatureKey> keys)
    : templates_(std::move(templates)),
      word_to_class_(std::move(word_to_class)),
      cutoffs_(std::move(cutoffs)),
      keys_(std::move(keys)) {
  for (const auto& t : templates_.templates)
    if (t.source == FeatureSource::kClass && word_to_class_.empty())
      throw std::invalid_argument("class template without a class map");
  ids_.reserve(keys_.size());
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    if (keys_[i].tmpl < 0 ||
        static_cast<std::size_t>(keys_[i].tmpl) >= templates_.templates.size())
      throw std::invalid_argument("feature key refers to a missing template");
    if (!ids_.emplace(keys_[i], static_cast<std::int32_t>(i)).second)
      throw std::invalid_argument("duplicate feature key");
  }
}

std::int32_t FeatureIndex::find(const FeatureKey& key) const {
  auto it = ids_.find(key);
  return it == ids_.end() ? -1 : it->second;
}

FeatureIndex build_feature_index(std::span<const Sentence> corpus,
                                 const TemplateSet& templates,
                                 const std::vector<int>& cutoffs,
                                 const ClassMap* classes) {
  if (!templates.templates.empty() &&
      cutoffs.size() != static_cast<std::size_t>(templates.max_order))
    throw std::invalid_argument(
        "cutoff string length must equal the feature order");
  std::vector<std::int32_t> w2c;
  if (classes) w2c = classes->word_to_class;
  // An index without keys is only used here as a placement enumerator.
  FeatureIndex scan(templates, w2c, cutoffs, {});

  std::unordered_map<FeatureKey, std::int64_t, FeatureKeyHash> counts;
  for (const auto& s : corpus) scan.for_each_placement(s, [&](const FeatureKey& k) {
    ++counts[k];
  });

  std::vector<FeatureKey> kept;
  for (const auto& [k, n] : counts) {
    int order = templates.templates[k.tmpl].order();
    if (n > cutoffs[order - 1]) kept.push_back(k);
  }
  std::sort(kept.begin(), kept.end());
  return FeatureIndex(templates, std::move(w2c), cutoffs, std::move(kept));
}

SparseVector extract(const Sentence& s, const FeatureIndex& index) {
  std::vector<std::int32_t> hits;
  index.for_each_placement(s, [&](const FeatureKey& k) {
    if (auto id = index.find(k); id >= 0) hits.push_back(id);
  });
  std::sort(hits.begin(), hits.end());
  SparseVector out;
  for (std::size_t i = 0; i < hits.size();) {
    std::size_t j = i;
    while (j < hits.size() && hits[j] == hits[i]) ++j;
    out.pairs.emplace_back(hits[i], static_cast<std::int32_t>(j - i));
    i = j;
  }
  return out;
}

double linear_potential(const SparseVector& f, std::span<const double> lambda) {
  double sum = 0.0;
  for (auto [idx, n] : f.pairs) {
    if (static_cast<std::size_t>(idx) >= lambda.size())
      throw std::invalid_argument("feature index exceeds parameter dimension");
    sum += n * lambda[idx];
  }
  return sum;
}

double linear_potential(const Sentence& s, const FeatureIndex& index,
                        std::span<const double> lambda) {
  if (lambda.size() != index.size())
    throw std::invalid_argument("lambda has " + std::to_string(lambda.size()) +
                                " entries, feature index has " +
                                std::to_string(index.size()));
  return linear_potential(extract(s, index), lambda);
}

}  // namespace trf
