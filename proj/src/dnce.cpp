#include "trf/dnce.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "trf/parallel.hpp"

namespace trf {

std::string to_string(Schedule s) {
  return s == Schedule::kDevHalving ? "dev-halving" : "per-epoch-halving";
}

Schedule parse_schedule(const std::string& s) {
  if (s == "dev-halving") return Schedule::kDevHalving;
  if (s == "per-epoch-halving") return Schedule::kPerEpochHalving;
  throw std::invalid_argument("unknown schedule '" + s +
                              "' (expected dev-halving or per-epoch-halving)");
}

std::vector<std::string> DnceConfig::problems() const {
  std::vector<std::string> out;
  if (!(alpha > 0.0 && alpha < 1.0)) out.push_back("alpha must lie in (0, 1)");
  if (!(nu > 0.0)) out.push_back("nu must be positive");
  if (batch_size < 1) out.push_back("batch_size must be at least 1");
  if (!(lr_lambda > 0.0)) out.push_back("lr_lambda must be positive");
  if (!(lr_theta > 0.0)) out.push_back("lr_theta must be positive");
  if (!(lr_zeta > 0.0)) out.push_back("lr_zeta must be positive");
  if (!(lr_noise > 0.0)) out.push_back("lr_noise must be positive");
  if (!(noise_clip > 0.0)) out.push_back("noise_clip must be positive");
  if (!(halving_threshold >= 0.0)) out.push_back("halving_threshold must be >= 0");
  if (!(stop_ratio > 0.0 && stop_ratio <= 1.0))
    out.push_back("stop_ratio must lie in (0, 1]");
  if (max_epochs < 1) out.push_back("max_epochs must be at least 1");
  if (max_train_length < 1) out.push_back("max_train_length must be at least 1");
  if (threads < 1) out.push_back("threads must be at least 1");
  return out;
}

std::pair<std::size_t, std::size_t> minibatch_sizes(double alpha, double nu,
                                                    std::size_t d_size) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(nu > 0.0)) throw std::invalid_argument("nu must be positive");
  if (d_size < 1) throw std::invalid_argument("|D| must be at least 1");
  const double d = static_cast<double>(d_size);
  auto size = [](double x) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(x)));
  };
  return {size((1.0 - alpha) / alpha * d), size(nu / alpha * d)};
}

Posterior posterior(double log_pm_unnorm_minus_zeta, double log_p_seq,
                    double nu) {
  const double delta = log_pm_unnorm_minus_zeta - log_p_seq - std::log(nu);
  // Compute the smaller class probability directly; the other is 1 - it.
  Posterior p;
  if (delta >= 0.0) {
    const double e = std::exp(-delta);
    p.c1 = e / (1.0 + e);
    p.c0 = 1.0 - p.c1;
  } else {
    const double e = std::exp(delta);
    p.c0 = e / (1.0 + e);
    p.c1 = 1.0 - p.c0;
  }
  return p;
}

MinibatchTriple make_minibatch(const NoiseModel& noise,
                               std::span<const Sentence> data, double alpha,
                               double nu, Rng& rng) {
  const auto [n1, n2] = minibatch_sizes(alpha, nu, data.size());
  MinibatchTriple batch;
  batch.data.reserve(data.size());
  for (const auto& s : data) batch.data.push_back({s, sequence_log_prob(noise, s)});
  for (auto& smp : sample_scored(noise, n1, rng))
    batch.b1.push_back({std::move(smp.sentence), smp.log_p_seq});
  for (auto& smp : sample_scored(noise, n2, rng))
    batch.b2.push_back({std::move(smp.sentence), smp.log_p_seq});
  return batch;
}

GradientBundle GradientBundle::zeros_like(const TrfModel& m) {
  GradientBundle g;
  g.lambda.assign(m.lambda.size(), 0.0);
  g.theta.assign(m.neural ? m.neural->size() : 0, 0.0);
  g.zeta.assign(m.zeta.size(), 0.0);
  return g;
}

void GradientBundle::add(const GradientBundle& other) {
  if (other.lambda.size() != lambda.size() || other.theta.size() != theta.size() ||
      other.zeta.size() != zeta.size())
    throw std::invalid_argument("gradient bundle shape mismatch");
  for (std::size_t i = 0; i < lambda.size(); ++i) lambda[i] += other.lambda[i];
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += other.theta[i];
  for (std::size_t i = 0; i < zeta.size(); ++i) zeta[i] += other.zeta[i];
}

double GradientBundle::max_abs() const {
  double mx = 0.0;
  for (const auto* v : {&lambda, &theta, &zeta})
    for (double x : *v) mx = std::max(mx, std::abs(x));
  return mx;
}

std::vector<double> GradientBundle::flat() const {
  std::vector<double> out;
  out.reserve(lambda.size() + theta.size() + zeta.size());
  out.insert(out.end(), lambda.begin(), lambda.end());
  out.insert(out.end(), theta.begin(), theta.end());
  out.insert(out.end(), zeta.begin(), zeta.end());
  return out;
}

namespace {

void check_shape(const TrfModel& m, const GradientBundle& g) {
  if (g.lambda.size() != m.lambda.size() || g.zeta.size() != m.zeta.size() ||
      g.theta.size() != (m.neural ? m.neural->size() : 0))
    throw std::invalid_argument("gradient bundle does not match the model");
}

// Scores one sentence and, given the coefficient chosen from its score,
// adds coefficient * g(l, x) into `grad`.
template <typename CoefFn>
void accumulate(const TrfModel& m, const Sentence& s, CoefFn&& coef_of,
                GradientBundle& grad) {
  const int l = s.length();
  if (l < 1 || l > m.max_length())
    throw std::invalid_argument("sentence length outside 1..L");
  SparseVector f;
  double pot = 0.0;
  if (m.has_discrete()) {
    f = extract(s, m.features);
    pot += linear_potential(f, m.lambda);
  }
  NeuralCache cache;
  if (m.neural) {
    auto [value, c] = phi_forward(s, *m.neural);
    pot += value;
    cache = std::move(c);
  }
  const double coef = coef_of(pot - m.zeta[l - 1]);
  if (coef == 0.0) return;
  for (auto [idx, n] : f.pairs) grad.lambda[idx] += coef * n;
  if (m.neural) phi_backward(cache, *m.neural, coef, grad.theta);
  grad.zeta[l - 1] -= coef;
}

constexpr std::size_t kGradientChunks = 8;

}  // namespace

void add_potential_gradient(const TrfModel& m, const Sentence& s, double weight,
                            GradientBundle& grad) {
  check_shape(m, grad);
  accumulate(m, s, [weight](double) { return weight; }, grad);
}

GradientBundle grad_estimate(const TrfModel& m, const MinibatchTriple& batch,
                             double alpha, double nu, int threads) {
  if (batch.data.empty()) throw std::invalid_argument("empty data minibatch");
  const double scale = alpha / static_cast<double>(batch.data.size());
  const std::size_t n_d = batch.data.size(), n_b1 = batch.b1.size();
  const std::size_t total = n_d + n_b1 + batch.b2.size();
  auto item = [&](std::size_t i) -> std::pair<const ScoredSentence*, bool> {
    if (i < n_d) return {&batch.data[i], false};
    if (i < n_d + n_b1) return {&batch.b1[i - n_d], false};
    return {&batch.b2[i - n_d - n_b1], true};
  };

  // Fixed chunking makes the summation order independent of `threads`.
  std::vector<GradientBundle> partial(kGradientChunks);
  parallel_for(
      kGradientChunks,
      [&](std::size_t c) {
        partial[c] = GradientBundle::zeros_like(m);
        const std::size_t lo = c * total / kGradientChunks;
        const std::size_t hi = (c + 1) * total / kGradientChunks;
        for (std::size_t i = lo; i < hi; ++i) {
          auto [x, is_b2] = item(i);
          const double log_p_seq = x->log_p_seq;
          accumulate(
              m, x->sentence,
              [&](double log_pm) {
                const Posterior p = posterior(log_pm, log_p_seq, nu);
                return is_b2 ? -scale * p.c0 : scale * p.c1;
              },
              partial[c]);
        }
      },
      threads);
  GradientBundle out = std::move(partial[0]);
  for (std::size_t c = 1; c < kGradientChunks; ++c) out.add(partial[c]);
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               double lr, AdamState& state) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.t;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = kBeta1 * state.m[i] + (1.0 - kBeta1) * grads[i];
    state.v[i] = kBeta2 * state.v[i] + (1.0 - kBeta2) * grads[i] * grads[i];
    params[i] += lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + kEps);
  }
}

std::string epoch_log_header() {
  return "epoch\tdev_ll\tlr_lambda\tlr_theta\tlr_zeta\tlr_noise\twall_s";
}

void write_epoch_log(std::ostream& out, const EpochLog& log) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d\t%.10g\t%.6g\t%.6g\t%.6g\t%.6g\t%.3f\n",
                log.epoch, log.dev_log_likelihood, log.lr_lambda, log.lr_theta,
                log.lr_zeta, log.lr_noise, log.wall_seconds);
  out << buf << std::flush;
}

double dev_log_likelihood(const TrfModel& m, std::span<const Sentence> dev) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : dev) {
    if (!(m.prior.prob(s.length()) > 0.0)) continue;
    total += log_prob(m, s);
    ++n;
  }
  if (n == 0) throw DataError("no dev sentence has a length seen in training");
  return total / static_cast<double>(n);
}

DnceTrainer::DnceTrainer(DnceConfig config, std::vector<Sentence> train,
                         std::vector<Sentence> dev, TrfModel model,
                         NoiseModel noise)
    : config_(std::move(config)),
      train_(std::move(train)),
      dev_(std::move(dev)),
      model_(std::move(model)),
      noise_(std::move(noise)),
      adam_lambda_(model_.lambda.size()),
      adam_theta_(model_.neural ? model_.neural->size() : 0),
      adam_zeta_(model_.zeta.size()),
      rng_(config_.seed) {
  if (auto p = config_.problems(); !p.empty())
    throw std::invalid_argument("invalid DNCE config: " + p.front());
  if (train_.empty()) throw DataError("empty training corpus");
  if (dev_.empty()) throw DataError("empty dev corpus");
  model_.validate();
  if (noise_.prior().probs() != model_.prior.probs())
    throw std::invalid_argument("noise and model must share the length prior");
  if (static_cast<std::size_t>(noise_.shape().vocab_size) != model_.vocab.size())
    throw std::invalid_argument("noise and model vocabularies differ");
  for (const auto& s : train_)
    if (s.length() < 1 || s.length() > model_.max_length())
      throw DataError("training sentence length outside 1..L");

  best_dev_ = dev_log_likelihood(model_, dev_);
  history_.push_back({0, best_dev_, config_.lr_lambda, config_.lr_theta,
                      config_.lr_zeta, config_.lr_noise, 0.0});
}

std::size_t DnceTrainer::steps_per_epoch() const {
  return (train_.size() + config_.batch_size - 1) / config_.batch_size;
}

bool DnceTrainer::finished() const { return stopped_; }

void DnceTrainer::step(std::span<const Sentence> data) {
  const MinibatchTriple batch =
      make_minibatch(noise_, data, config_.alpha, config_.nu, rng_);
  const GradientBundle g =
      grad_estimate(model_, batch, config_.alpha, config_.nu, config_.threads);
  adam_step(model_.lambda, g.lambda, config_.lr_lambda * lr_scale_, adam_lambda_);
  if (model_.neural)
    adam_step(model_.neural->values(), g.theta, config_.lr_theta * lr_scale_,
              adam_theta_);
  adam_step(model_.zeta, g.zeta, config_.lr_zeta, adam_zeta_);
  noise_train_step(noise_, data, config_.lr_noise, config_.noise_clip);
}

EpochLog DnceTrainer::run_epoch() {
  if (stopped_) throw std::logic_error("training already finished");
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::size_t> order(train_.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(std::span<std::size_t>(order), rng_);
  std::vector<Sentence> batch;
  for (std::size_t b = 0; b < order.size(); b += config_.batch_size) {
    batch.clear();
    for (std::size_t i = b; i < std::min(order.size(), b + config_.batch_size); ++i)
      batch.push_back(train_[order[i]]);
    step(batch);
  }
  ++epoch_;

  const double ll = dev_log_likelihood(model_, dev_);
  if (config_.schedule == Schedule::kPerEpochHalving) {
    lr_scale_ *= 0.5;
  } else {
    const double gain = (ll - best_dev_) / std::max(std::abs(best_dev_), 1e-300);
    if (gain < config_.halving_threshold) lr_scale_ *= 0.5;
  }
  best_dev_ = std::max(best_dev_, ll);
  if (lr_scale_ < config_.stop_ratio || epoch_ >= config_.max_epochs)
    stopped_ = true;

  EpochLog log;
  log.epoch = epoch_;
  log.dev_log_likelihood = ll;
  log.lr_lambda = config_.lr_lambda * lr_scale_;
  log.lr_theta = config_.lr_theta * lr_scale_;
  log.lr_zeta = config_.lr_zeta;
  log.lr_noise = config_.lr_noise;
  log.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  history_.push_back(log);
  return log;
}

void DnceTrainer::train(std::ostream* log,
                        const std::function<void(const DnceTrainer&)>& on_epoch) {
  while (!stopped_) {
    EpochLog e = run_epoch();
    if (log) write_epoch_log(*log, e);
    if (on_epoch) on_epoch(*this);
  }
}

Archive DnceTrainer::checkpoint() const {
  Archive ar("dnce-checkpoint");
  ar.put_text("model", to_archive(model_).serialize());
  ar.put_text("noise", to_archive(noise_).serialize());
  ar.put_text("rng", save_rng(rng_));
  auto put_adam = [&](const std::string& name, const AdamState& st) {
    ar.put_array(name + "_m", {st.m.size()}, st.m);
    ar.put_array(name + "_v", {st.v.size()}, st.v);
  };
  put_adam("adam_lambda", adam_lambda_);
  put_adam("adam_theta", adam_theta_);
  put_adam("adam_zeta", adam_zeta_);
  const std::vector<double> counters{
      static_cast<double>(adam_lambda_.t), static_cast<double>(adam_theta_.t),
      static_cast<double>(adam_zeta_.t), static_cast<double>(epoch_), lr_scale_,
      best_dev_, stopped_ ? 1.0 : 0.0};
  ar.put_array("state", {counters.size()}, counters);
  std::vector<double> hist;
  for (const auto& h : history_)
    hist.insert(hist.end(), {static_cast<double>(h.epoch), h.dev_log_likelihood,
                             h.lr_lambda, h.lr_theta, h.lr_zeta, h.lr_noise,
                             h.wall_seconds});
  ar.put_array("history", {history_.size(), 7}, hist);
  return ar;
}

DnceTrainer DnceTrainer::resume(const Archive& ar, DnceConfig config,
                                std::vector<Sentence> train,
                                std::vector<Sentence> dev) {
  if (ar.kind() != "dnce-checkpoint")
    throw ArchiveError("not a training checkpoint");
  TrfModel model = from_archive(Archive::parse(ar.text("model"), "trf-model"));
  NoiseModel noise =
      noise_from_archive(Archive::parse(ar.text("noise"), "noise-model"));
  DnceTrainer t(std::move(config), std::move(train), std::move(dev),
                std::move(model), std::move(noise));
  t.rng_ = load_rng(ar.text("rng"));
  auto get_adam = [&](const std::string& name, AdamState& st) {
    st.m = ar.array(name + "_m").values;
    st.v = ar.array(name + "_v").values;
  };
  get_adam("adam_lambda", t.adam_lambda_);
  get_adam("adam_theta", t.adam_theta_);
  get_adam("adam_zeta", t.adam_zeta_);
  const auto& st = ar.array("state").values;
  if (st.size() != 7) throw ArchiveError("malformed checkpoint state");
  t.adam_lambda_.t = static_cast<std::int64_t>(st[0]);
  t.adam_theta_.t = static_cast<std::int64_t>(st[1]);
  t.adam_zeta_.t = static_cast<std::int64_t>(st[2]);
  t.epoch_ = static_cast<int>(st[3]);
  t.lr_scale_ = st[4];
  t.best_dev_ = st[5];
  // A larger max_epochs in `config` extends a run that stopped on its epoch cap.
  t.stopped_ = t.lr_scale_ < t.config_.stop_ratio || t.epoch_ >= t.config_.max_epochs;
  t.history_.clear();
  const auto& hist = ar.array("history").values;
  for (std::size_t i = 0; i + 7 <= hist.size(); i += 7)
    t.history_.push_back({static_cast<int>(hist[i]), hist[i + 1], hist[i + 2],
                          hist[i + 3], hist[i + 4], hist[i + 5], hist[i + 6]});
  return t;
}

}  // namespace trf
