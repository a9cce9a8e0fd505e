#ifndef TRF_DNCE_HPP
#define TRF_DNCE_HPP

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trf/archive.hpp"
#include "trf/model.hpp"
#include "trf/noise.hpp"
#include "trf/random.hpp"

namespace trf {

enum class Schedule { kDevHalving, kPerEpochHalving };

std::string to_string(Schedule s);
Schedule parse_schedule(const std::string& s);

struct DnceConfig {
  double alpha = 0.25;
  double nu = 1.0;
  std::size_t batch_size = 100;
  double lr_lambda = 0.003;
  double lr_theta = 0.003;
  double lr_zeta = 0.01;
  double lr_noise = 1.0;
  double noise_clip = 5.0;
  // Halve lr_lambda and lr_theta when the dev log-likelihood improves on the
  // best so far by less than this fraction.
  double halving_threshold = 0.001;
  // Stop once the halved rates fall below this fraction of their start.
  double stop_ratio = 0.1;
  int max_epochs = 100;
  std::uint64_t seed = 1;
  int max_train_length = 60;
  Schedule schedule = Schedule::kDevHalving;
  int threads = 1;

  // Returns every violated constraint; empty when valid.
  std::vector<std::string> problems() const;
};

// |B1| = (1 - alpha) / alpha |D|, |B2| = nu / alpha |D|, rounded to nearest,
// at least 1.
std::pair<std::size_t, std::size_t> minibatch_sizes(double alpha, double nu,
                                                    std::size_t d_size);

struct Posterior {
  double c0 = 0.0;  // interpolated data/noise class, modelled by p_m
  double c1 = 0.0;  // noise class
};

// P(C=0) = p_m / (p_m + nu p_n). The length prior cancels, so the inputs are
// (potential - zeta_l) and the noise sequence log-probability without pi.
// c0 + c1 == 1 exactly.
Posterior posterior(double log_pm_unnorm_minus_zeta, double log_p_seq, double nu);
inline double posterior_c0(double log_pm_unnorm_minus_zeta, double log_p_seq,
                           double nu) {
  return posterior(log_pm_unnorm_minus_zeta, log_p_seq, nu).c0;
}

struct ScoredSentence {
  Sentence sentence;
  double log_p_seq = 0.0;  // noise sequence log-probability, no pi
};

struct MinibatchTriple {
  std::vector<ScoredSentence> data, b1, b2;
};

// Scores D under the noise model and draws B1 then B2 from it.
MinibatchTriple make_minibatch(const NoiseModel& noise,
                               std::span<const Sentence> data, double alpha,
                               double nu, Rng& rng);

// Dense storage; the lambda part is written sparsely.
struct GradientBundle {
  std::vector<double> lambda, theta, zeta;

  static GradientBundle zeros_like(const TrfModel& m);
  void add(const GradientBundle& other);
  double max_abs() const;
  std::vector<double> flat() const;  // (lambda, theta, zeta)
};

// grad += weight * g(l, x) with g = (f(x), dphi/dtheta, -onehot(l)).
void add_potential_gradient(const TrfModel& m, const Sentence& s, double weight,
                            GradientBundle& grad);

// Ascent direction on the DNCE objective:
//   alpha/|D| sum_{D u B1} P(C=1|x) g(x) - alpha/|D| sum_{B2} P(C=0|x) g(x).
GradientBundle grad_estimate(const TrfModel& m, const MinibatchTriple& batch,
                             double alpha, double nu, int threads = 1);

struct AdamState {
  std::vector<double> m, v;
  std::int64_t t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Adam ascent step (beta1 0.9, beta2 0.999, eps 1e-8, bias corrected).
void adam_step(std::span<double> params, std::span<const double> grads,
               double lr, AdamState& state);

struct EpochLog {
  int epoch = 0;
  double dev_log_likelihood = 0.0;  // mean log p per dev sentence
  double lr_lambda = 0.0, lr_theta = 0.0, lr_zeta = 0.0, lr_noise = 0.0;
  double wall_seconds = 0.0;
};

// "epoch<TAB>dev_ll<TAB>lr_lambda<TAB>lr_theta<TAB>lr_zeta<TAB>lr_noise<TAB>wall_s"
void write_epoch_log(std::ostream& out, const EpochLog& log);
std::string epoch_log_header();

// Mean log_prob over `dev`; sentences whose length has zero prior
// probability are skipped.
double dev_log_likelihood(const TrfModel& m, std::span<const Sentence> dev);

class DnceTrainer {
 public:
  DnceTrainer(DnceConfig config, std::vector<Sentence> train,
              std::vector<Sentence> dev, TrfModel model, NoiseModel noise);

  // One DNCE update on the data minibatch `data`.
  void step(std::span<const Sentence> data);
  // One pass over the shuffled training data, then dev evaluation and the
  // learning-rate schedule.
  EpochLog run_epoch();
  // Runs epochs until the schedule stops; each EpochLog goes to `log` and
  // `on_epoch` when given.
  void train(std::ostream* log = nullptr,
             const std::function<void(const DnceTrainer&)>& on_epoch = {});

  bool finished() const;
  int epoch() const { return epoch_; }
  std::size_t steps_per_epoch() const;
  const std::vector<EpochLog>& history() const { return history_; }
  const TrfModel& model() const { return model_; }
  const NoiseModel& noise() const { return noise_; }
  const DnceConfig& config() const { return config_; }
  double lr_scale() const { return lr_scale_; }

  // Full trainer state at an epoch boundary, for bit-exact resumption.
  Archive checkpoint() const;
  static DnceTrainer resume(const Archive& checkpoint, DnceConfig config,
                            std::vector<Sentence> train,
                            std::vector<Sentence> dev);

 private:
  DnceConfig config_;
  std::vector<Sentence> train_, dev_;
  TrfModel model_;
  NoiseModel noise_;
  AdamState adam_lambda_, adam_theta_, adam_zeta_;
  Rng rng_;
  int epoch_ = 0;
  double lr_scale_ = 1.0;
  double best_dev_ = 0.0;
  bool stopped_ = false;
  std::vector<EpochLog> history_;
};

}  // namespace trf

#endif  // TRF_DNCE_HPP
