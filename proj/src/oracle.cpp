#include "trf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trf {

EnumSpace::EnumSpace(int vocab_size, int max_length)
    : vocab_size_(vocab_size), max_length_(max_length) {
  if (vocab_size < 1 || max_length < 1)
    throw std::invalid_argument("enumeration space needs V >= 1 and L >= 1");
  if (std::pow(static_cast<double>(vocab_size), max_length) > kMaxConfigurations)
    throw OracleGuardError("V^L = " + std::to_string(vocab_size) + "^" +
                           std::to_string(max_length) +
                           " exceeds the enumeration guard of 1e7");
  for (int l = 1; l <= max_length; ++l) size_ += count(l);
}

std::size_t EnumSpace::count(int length) const {
  std::size_t n = 1;
  for (int i = 0; i < length; ++i) n *= static_cast<std::size_t>(vocab_size_);
  return n;
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double mx = std::max(a, b);
  return mx + std::log1p(std::exp(-std::abs(a - b)));
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(xs.begin(), xs.end());
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - mx);
  return mx + std::log(sum);
}

std::vector<double> exact_log_z(const TrfModel& m, const EnumSpace& space) {
  std::vector<double> zeta(space.max_length());
  std::vector<double> weights;
  for (int l = 1; l <= space.max_length(); ++l) {
    weights.clear();
    weights.reserve(space.count(l));
    space.for_each_of_length(l, [&](const Sentence& s) {
      weights.push_back(log_weight(m, s));
    });
    zeta[l - 1] = log_sum_exp(weights);
  }
  return zeta;
}

std::vector<double> exact_expectations(const TrfModel& m, const EnumSpace& space) {
  const auto zeta = exact_log_z(m, space);
  std::vector<double> out(m.features.size(), 0.0);
  if (out.empty()) return out;
  space.for_each([&](const Sentence& s) {
    const int l = s.length();
    const double pi = m.prior.prob(l);
    if (pi <= 0.0) return;
    const double p = pi * std::exp(log_weight(m, s) - zeta[l - 1]);
    for (auto [idx, n] : extract(s, m.features).pairs) out[idx] += p * n;
  });
  return out;
}

std::vector<double> empirical_expectations(const FeatureIndex& index,
                                           std::span<const Sentence> corpus) {
  std::vector<double> out(index.size(), 0.0);
  if (corpus.empty()) return out;
  for (const auto& s : corpus)
    for (auto [idx, n] : extract(s, index).pairs) out[idx] += n;
  for (double& v : out) v /= static_cast<double>(corpus.size());
  return out;
}

std::vector<double> finite_diff(
    const std::function<double(std::span<const double>)>& fn,
    std::span<const double> params, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  std::vector<double> p(params.begin(), params.end());
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + epsilon;
    const double up = fn(p);
    p[i] = orig - epsilon;
    const double down = fn(p);
    p[i] = orig;
    grad[i] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

std::vector<double> enumerate_noise_log_probs(const NoiseModel& n,
                                              const EnumSpace& space) {
  std::vector<double> out;
  out.reserve(space.size());
  space.for_each([&](const Sentence& s) {
    const double pi = n.prior().prob(s.length());
    out.push_back(pi > 0.0 ? noise_log_prob(n, s)
                           : -std::numeric_limits<double>::infinity());
  });
  return out;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double model_log_joint(const TrfModel& m, const Sentence& s) {
  return m.prior.prob(s.length()) > 0.0 ? log_prob(m, s) : kNegInf;
}

void check_tables(const EnumSpace& space, const DnceTables& t) {
  if (t.log_pd.size() != space.size() || t.log_pn.size() != space.size())
    throw std::invalid_argument("DNCE tables do not cover the enumeration space");
}

// log P(C=0|x) and log P(C=1|x) from joint log-probabilities.
std::pair<double, double> log_posteriors(double log_pm, double log_pn, double nu) {
  const double a = log_pm, b = std::log(nu) + log_pn;
  const double denom = log_add_exp(a, b);
  return {a - denom, b - denom};
}

}  // namespace

double exact_dnce_objective(const TrfModel& m, const EnumSpace& space,
                            const DnceTables& tables, double alpha, double nu) {
  check_tables(space, tables);
  std::size_t i = 0;
  double j = 0.0;
  const double log_a = std::log(alpha), log_1ma = std::log1p(-alpha);
  space.for_each([&](const Sentence& s) {
    const double lpd = tables.log_pd[i], lpn = tables.log_pn[i];
    ++i;
    const double log_q = log_add_exp(log_a + lpd, log_1ma + lpn);
    if (log_q == kNegInf && lpn == kNegInf) return;
    auto [lp0, lp1] = log_posteriors(model_log_joint(m, s), lpn, nu);
    if (log_q != kNegInf) j += std::exp(log_q) * lp0;
    if (lpn != kNegInf) j += nu * std::exp(lpn) * lp1;
  });
  return j;
}

GradientBundle exact_dnce_gradient(const TrfModel& m, const EnumSpace& space,
                                   const DnceTables& tables, double alpha,
                                   double nu) {
  check_tables(space, tables);
  GradientBundle g = GradientBundle::zeros_like(m);
  std::size_t i = 0;
  const double log_a = std::log(alpha), log_1ma = std::log1p(-alpha);
  space.for_each([&](const Sentence& s) {
    const double lpd = tables.log_pd[i], lpn = tables.log_pn[i];
    ++i;
    const double log_q = log_add_exp(log_a + lpd, log_1ma + lpn);
    if (log_q == kNegInf && lpn == kNegInf) return;
    auto [lp0, lp1] = log_posteriors(model_log_joint(m, s), lpn, nu);
    const double w = std::exp(log_q + lp1) - nu * std::exp(lpn + lp0);
    if (w != 0.0) add_potential_gradient(m, s, w, g);
  });
  return g;
}

}  // namespace trf
