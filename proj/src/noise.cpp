#include "trf/noise.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace trf {

NoiseModel::NoiseModel(NoiseShape shape, LengthPrior prior)
    : shape_(shape), prior_(std::move(prior)), values_(shape.size(), 0.0) {
  if (shape.vocab_size < 1 || shape.dim < 1 || shape.layers < 1)
    throw std::invalid_argument("noise model needs V, dim, layers >= 1");
}

NoiseModel init_noise_model(int vocab_size, int dim, int layers,
                            LengthPrior prior, std::uint64_t seed) {
  NoiseModel n({vocab_size, dim, layers}, std::move(prior));
  Rng rng(seed);
  for (double& v : n.values()) v = uniform(rng, -0.1, 0.1);
  return n;
}

namespace {

struct SequencePass {
  Eigen::MatrixXd inputs;  // dim x l: BOS, x_1 .. x_{l-1}
  std::vector<lstm::Trace> traces;
  Eigen::MatrixXd log_probs;  // V x l, log-softmax of the logits
};

SequencePass run_sequence(const NoiseModel& n, const Sentence& s) {
  const auto& sh = n.shape();
  const int l = s.length();
  SequencePass pass;
  const auto emb = n.embedding();
  pass.inputs.resize(sh.dim, l);
  for (int t = 0; t < l; ++t) {
    WordId prev = t == 0 ? n.bos() : s.tokens[t - 1];
    if (s.tokens[t] < 0 || s.tokens[t] >= sh.vocab_size)
      throw std::invalid_argument("token id outside the noise vocabulary");
    pass.inputs.col(t) = emb.col(prev);
  }
  pass.traces.resize(sh.layers);
  const Eigen::MatrixXd* x = &pass.inputs;
  for (int k = 0; k < sh.layers; ++k) {
    lstm::forward(n.cell(k), sh.cell(), *x, false, pass.traces[k]);
    x = &pass.traces[k].h;
  }
  Eigen::MatrixXd logits = n.output_weights() * pass.traces.back().h;
  logits.colwise() += n.output_bias();
  for (int t = 0; t < l; ++t) {
    auto col = logits.col(t);
    const double mx = col.maxCoeff();
    const double lse = mx + std::log((col.array() - mx).exp().sum());
    col.array() -= lse;
  }
  pass.log_probs = std::move(logits);
  return pass;
}

}  // namespace

double sequence_log_prob(const NoiseModel& n, const Sentence& s) {
  if (s.length() == 0) return 0.0;
  auto pass = run_sequence(n, s);
  double lp = 0.0;
  for (int t = 0; t < s.length(); ++t) lp += pass.log_probs(s.tokens[t], t);
  return lp;
}

double noise_log_prob(const NoiseModel& n, const Sentence& s) {
  const double pi = n.prior().prob(s.length());
  if (!(pi > 0.0))
    throw DataError("sentence length " + std::to_string(s.length()) +
                    " has zero prior probability under the noise model");
  return std::log(pi) + sequence_log_prob(n, s);
}

Eigen::MatrixXd next_word_probs(const NoiseModel& n, const Sentence& s) {
  return run_sequence(n, s).log_probs.array().exp().matrix();
}

std::vector<NoiseSample> sample_scored(const NoiseModel& n, std::size_t count,
                                      Rng& rng) {
  const auto& sh = n.shape();
  const auto& pi = n.prior().probs();
  double pi_total = 0.0;
  for (double p : pi) pi_total += p;
  const auto emb = n.embedding();
  const auto w_out = n.output_weights();
  const auto b_out = n.output_bias();

  std::vector<NoiseSample> out;
  out.reserve(count);
  std::vector<Eigen::VectorXd> h(sh.layers), c(sh.layers);
  Eigen::VectorXd logits(sh.vocab_size);
  Eigen::VectorXd probs(sh.vocab_size);
  for (std::size_t i = 0; i < count; ++i) {
    const int l = static_cast<int>(sample_discrete(pi, pi_total, rng)) + 1;
    NoiseSample smp;
    smp.sentence.tokens.reserve(l);
    for (int k = 0; k < sh.layers; ++k) {
      h[k] = Eigen::VectorXd::Zero(sh.dim);
      c[k] = Eigen::VectorXd::Zero(sh.dim);
    }
    WordId prev = n.bos();
    for (int t = 0; t < l; ++t) {
      Eigen::VectorXd x = emb.col(prev);
      for (int k = 0; k < sh.layers; ++k) {
        lstm::step(n.cell(k), sh.cell(), x, h[k], c[k]);
        x = h[k];
      }
      logits.noalias() = w_out * x;
      logits += b_out;
      const double mx = logits.maxCoeff();
      probs.array() = (logits.array() - mx).exp();
      const double total = probs.sum();
      const auto w = static_cast<WordId>(sample_discrete(
          std::span<const double>(probs.data(), probs.size()), total, rng));
      smp.log_p_seq += logits[w] - mx - std::log(total);
      smp.sentence.tokens.push_back(w);
      prev = w;
    }
    out.push_back(std::move(smp));
  }
  return out;
}

std::vector<Sentence> sample(const NoiseModel& n, std::size_t count, Rng& rng) {
  std::vector<Sentence> out;
  out.reserve(count);
  for (auto& s : sample_scored(n, count, rng)) out.push_back(std::move(s.sentence));
  return out;
}

double noise_nll(const NoiseModel& n, std::span<const Sentence> batch,
                 std::span<double> grad) {
  const auto& sh = n.shape();
  const bool want_grad = !grad.empty();
  if (want_grad && grad.size() != sh.size())
    throw std::invalid_argument("noise gradient buffer has the wrong size");
  if (batch.empty()) throw std::invalid_argument("empty noise minibatch");
  const double scale = 1.0 / static_cast<double>(batch.size());

  Eigen::Map<Eigen::MatrixXd> g_emb(want_grad ? grad.data() : nullptr, sh.dim,
                                    sh.vocab_size + 1);
  double* g_out = want_grad ? grad.data() + sh.output_offset() : nullptr;
  Eigen::Map<Eigen::MatrixXd> g_w(g_out, sh.vocab_size, sh.dim);
  Eigen::Map<Eigen::VectorXd> g_b(
      g_out ? g_out + static_cast<std::size_t>(sh.vocab_size) * sh.dim : nullptr,
      sh.vocab_size);

  double nll = 0.0;
  for (const auto& s : batch) {
    const int l = s.length();
    if (l == 0) continue;
    auto pass = run_sequence(n, s);
    for (int t = 0; t < l; ++t) nll -= scale * pass.log_probs(s.tokens[t], t);
    if (!want_grad) continue;

    // d(-log p)/d(logits) = softmax - onehot, scaled for the batch mean.
    Eigen::MatrixXd dlogits = pass.log_probs.array().exp().matrix() * scale;
    for (int t = 0; t < l; ++t) dlogits(s.tokens[t], t) -= scale;
    const auto& top = pass.traces.back().h;
    g_w.noalias() += dlogits * top.transpose();
    g_b += dlogits.rowwise().sum();
    Eigen::MatrixXd dh = n.output_weights().transpose() * dlogits;
    Eigen::MatrixXd dx;
    for (int k = sh.layers - 1; k >= 0; --k) {
      lstm::backward(n.cell(k), sh.cell(), pass.traces[k], dh,
                     grad.data() + sh.cell_offset(k), &dx);
      dh = dx;
    }
    for (int t = 0; t < l; ++t) {
      WordId prev = t == 0 ? n.bos() : s.tokens[t - 1];
      g_emb.col(prev) += dh.col(t);
    }
  }
  return nll;
}

double noise_train_step(NoiseModel& n, std::span<const Sentence> batch,
                        double lr, double clip_norm) {
  std::vector<double> grad(n.shape().size(), 0.0);
  const double nll = noise_nll(n, batch, grad);
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  const double factor = norm > clip_norm ? clip_norm / norm : 1.0;
  auto v = n.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * factor * grad[i];
  return nll;
}

Archive to_archive(const NoiseModel& n) {
  Archive ar("noise-model");
  const auto& s = n.shape();
  ar.put_text("shape", std::to_string(s.vocab_size) + ' ' +
                           std::to_string(s.dim) + ' ' +
                           std::to_string(s.layers) + '\n');
  ar.put_array("mu", {n.values().size()}, n.values());
  ar.put_array("prior", {n.prior().probs().size()}, n.prior().probs());
  return ar;
}

NoiseModel noise_from_archive(const Archive& ar) {
  std::istringstream is(ar.text("shape"));
  NoiseShape s;
  if (!(is >> s.vocab_size >> s.dim >> s.layers))
    throw ArchiveError("malformed noise shape");
  NoiseModel n(s, LengthPrior(ar.array("prior").values));
  const auto& mu = ar.array("mu").values;
  if (mu.size() != s.size()) throw ArchiveError("noise parameter size mismatch");
  std::copy(mu.begin(), mu.end(), n.values().begin());
  return n;
}

void save_noise(const NoiseModel& n, const std::string& path) {
  to_archive(n).save(path);
}

NoiseModel load_noise(const std::string& path) {
  return noise_from_archive(Archive::load(path, "noise-model"));
}

}  // namespace trf
