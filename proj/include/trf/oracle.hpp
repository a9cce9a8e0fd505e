#ifndef TRF_ORACLE_HPP
#define TRF_ORACLE_HPP

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "trf/dnce.hpp"
#include "trf/model.hpp"
#include "trf/noise.hpp"

namespace trf {

class OracleGuardError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// All sentences of lengths 1..L over V words, enumerated length-major and
// lexicographically within a length (last position varies fastest).
class EnumSpace {
 public:
  static constexpr double kMaxConfigurations = 1e7;  // bound on V^L

  EnumSpace(int vocab_size, int max_length);

  int vocab_size() const { return vocab_size_; }
  int max_length() const { return max_length_; }
  // V + V^2 + ... + V^L.
  std::size_t size() const { return size_; }
  std::size_t count(int length) const;

  template <typename Fn>  // fn(const Sentence&)
  void for_each(Fn&& fn) const;
  template <typename Fn>
  void for_each_of_length(int length, Fn&& fn) const;

 private:
  int vocab_size_;
  int max_length_;
  std::size_t size_ = 0;
};

double log_sum_exp(std::span<const double> xs);
double log_add_exp(double a, double b);

// zeta*_l = log sum_{x of length l} exp(log_weight(x)).
std::vector<double> exact_log_z(const TrfModel& m, const EnumSpace& space);

// E_{p_m}[f] under exact normalisers, lengths mixed by pi.
std::vector<double> exact_expectations(const TrfModel& m, const EnumSpace& space);

// Empirical mean of f over `corpus`.
std::vector<double> empirical_expectations(const FeatureIndex& index,
                                           std::span<const Sentence> corpus);

// Central differences: (fn(p + eps e_i) - fn(p - eps e_i)) / (2 eps).
std::vector<double> finite_diff(
    const std::function<double(std::span<const double>)>& fn,
    std::span<const double> params, double epsilon);

// log p_n(l, x) for every sentence of `space`, in enumeration order.
std::vector<double> enumerate_noise_log_probs(const NoiseModel& n,
                                              const EnumSpace& space);

// Joint log-probabilities of the data and noise distributions over `space`,
// in enumeration order. -inf marks zero probability.
struct DnceTables {
  std::vector<double> log_pd, log_pn;
};

// J = sum q log P(C=0|x) + nu sum p_n log P(C=1|x) with
// q = alpha p_d + (1 - alpha) p_n, by full enumeration.
double exact_dnce_objective(const TrfModel& m, const EnumSpace& space,
                            const DnceTables& tables, double alpha, double nu);

// dJ/d(lambda, theta, zeta) = sum_x [q P(C=1|x) - nu p_n P(C=0|x)] g(x).
GradientBundle exact_dnce_gradient(const TrfModel& m, const EnumSpace& space,
                                   const DnceTables& tables, double alpha,
                                   double nu);

template <typename Fn>
void EnumSpace::for_each_of_length(int length, Fn&& fn) const {
  Sentence s;
  s.tokens.assign(length, 0);
  for (;;) {
    fn(static_cast<const Sentence&>(s));
    int pos = length - 1;
    while (pos >= 0 && ++s.tokens[pos] == vocab_size_) s.tokens[pos--] = 0;
    if (pos < 0) return;
  }
}

template <typename Fn>
void EnumSpace::for_each(Fn&& fn) const {
  for (int l = 1; l <= max_length_; ++l) for_each_of_length(l, fn);
}

}  // namespace trf

#endif  // TRF_ORACLE_HPP
