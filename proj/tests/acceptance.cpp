// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. `--only 4,6` runs a subset; `--data DIR` locates bundled corpora.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "trf/dnce.hpp"
#include "trf/evaluation.hpp"
#include "trf/oracle.hpp"
#include "trf/parallel.hpp"

using namespace trf;
using trf::testing::TinyModelOptions;
using trf::testing::max_rel_err;
using trf::testing::tiny_model;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 3) {
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string data_dir = "data";

// ------------------------------------------------------------------ 1

Outcome exact_normalization() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    TinyModelOptions o;
    o.vocab_size = 3;
    o.max_length = 3;
    o.dim = 1 + k % 4;
    o.lambda_range = 0.5;
    o.theta_range = 0.5;
    o.seed = 1000 + k;
    TrfModel m = tiny_model(o);
    EnumSpace space(3, 3);
    m.zeta = exact_log_z(m, space);
    double total = 0.0;
    for (int l = 1; l <= 3; ++l) {
      double mass = 0.0;
      space.for_each_of_length(l, [&](const Sentence& s) {
        mass += std::exp(log_weight(m, s) - m.zeta[l - 1]);
      });
      total += m.prior.prob(l) * mass;
    }
    worst = std::max(worst, std::abs(total - 1.0));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-9 && secs < 10.0,
          "20 models, max |sum - 1| = " + fmt(worst) + ", " + fmt(secs) + " s"};
}

// ------------------------------------------------------------------ 2

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  double e_phi = 0.0, e_noise = 0.0, e_j = 0.0;
  Rng rng(77);
  for (int layers : {1, 2}) {
    NeuralParams p({4, 3, layers});
    for (double& x : p.values()) x = uniform(rng, -0.5, 0.5);
    for (int l : {2, 4}) {
      Sentence s;
      for (int i = 0; i < l; ++i) s.tokens.push_back(static_cast<WordId>(uniform01(rng) * 4));
      auto [v, cache] = phi_forward(s, p);
      std::vector<double> g(p.size(), 0.0);
      phi_backward(cache, p, 1.0, g);
      std::vector<double> theta(p.values().begin(), p.values().end());
      auto fd = finite_diff(
          [&](std::span<const double> x) {
            NeuralParams q(p.shape());
            std::copy(x.begin(), x.end(), q.values().begin());
            return phi(s, q);
          },
          theta, 1e-6);
      e_phi = std::max(e_phi, max_rel_err(g, fd));
    }

    NoiseModel n({4, 3, layers}, LengthPrior({0.3, 0.3, 0.4}));
    for (double& x : n.values()) x = uniform(rng, -0.5, 0.5);
    std::vector<Sentence> batch{{{1, 3, 0}}, {{2}}, {{0, 0, 3}}};
    std::vector<double> g(n.values().size(), 0.0);
    noise_nll(n, batch, g);
    std::vector<double> mu(n.values().begin(), n.values().end());
    auto fd = finite_diff(
        [&](std::span<const double> x) {
          NoiseModel q = n;
          std::copy(x.begin(), x.end(), q.values().begin());
          return noise_nll(q, batch);
        },
        mu, 1e-6);
    e_noise = std::max(e_noise, max_rel_err(g, fd));
  }
  {
    TinyModelOptions o;
    o.vocab_size = 3;
    o.max_length = 2;
    o.dim = 2;
    o.seed = 5;
    TrfModel m = tiny_model(o);
    NoiseModel n = init_noise_model(3, 2, 1, m.prior, 6);
    NoiseModel d = init_noise_model(3, 2, 1, m.prior, 7);
    for (double& x : n.values()) x *= 5.0;
    for (double& x : d.values()) x *= 5.0;
    EnumSpace space(3, 2);
    DnceTables t{enumerate_noise_log_probs(d, space), enumerate_noise_log_probs(n, space)};
    for (auto [alpha, nu] : {std::pair{0.25, 1.0}, std::pair{2.0 / 3.0, 4.0}}) {
      GradientBundle g = exact_dnce_gradient(m, space, t, alpha, nu);
      auto fd = finite_diff(
          [&](std::span<const double> x) {
            TrfModel q = m;
            q.unpack_parameters(x);
            return exact_dnce_objective(q, space, t, alpha, nu);
          },
          m.pack_parameters(), 1e-6);
      e_j = std::max(e_j, max_rel_err(g.flat(), fd));
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = e_phi < 1e-4 && e_noise < 1e-4 && e_j < 1e-4 && secs < 60.0;
  return {ok, "max rel err phi " + fmt(e_phi) + ", noise NLL " + fmt(e_noise) +
                  ", DNCE J " + fmt(e_j) + ", " + fmt(secs) + " s"};
}

// ------------------------------------------------------------------ 3

Outcome fixed_point() {
  // Discrete-only model with every unigram and bigram of V=3, L=2. Setting
  // lambda_a = log q(a | l=1), beta_ab = log q(ab | l=2) - lambda_a - lambda_b
  // and zeta = 0 gives p_m = q exactly.
  Rng rng(31);
  EnumSpace space(3, 2);
  LengthPrior prior({0.35, 0.65});
  NoiseModel n = init_noise_model(3, 2, 1, prior, 8);
  for (double& x : n.values()) x *= 5.0;
  DnceTables t;
  t.log_pn = enumerate_noise_log_probs(n, space);
  for (int l = 1; l <= 2; ++l) {
    std::vector<double> w;
    space.for_each_of_length(l, [&](const Sentence&) { w.push_back(0.05 + uniform01(rng)); });
    double total = 0.0;
    for (double x : w) total += x;
    for (double x : w) t.log_pd.push_back(std::log(prior.prob(l) * x / total));
  }
  double worst = 0.0;
  for (auto [alpha, nu] : {std::pair{0.25, 1.0}, std::pair{2.0 / 3.0, 4.0}}) {
    TinyModelOptions o;
    o.vocab_size = 3;
    o.max_length = 2;
    o.dim = 0;
    o.templates = "w:2";
    TrfModel m = tiny_model(o);
    m.prior = prior;
    m.zeta.assign(2, 0.0);
    std::vector<double> uni(3);
    std::size_t i = 0;
    space.for_each([&](const Sentence& s) {
      const double lq = log_add_exp(std::log(alpha) + t.log_pd[i],
                                    std::log(1.0 - alpha) + t.log_pn[i]) -
                        std::log(prior.prob(s.length()));
      ++i;
      FeatureKey k;
      k.tmpl = s.length() - 1;
      for (int j = 0; j < s.length(); ++j) k.values[j] = s.tokens[j];
      double v = lq;
      if (s.length() == 1)
        uni[s.tokens[0]] = lq;
      else
        v -= uni[s.tokens[0]] + uni[s.tokens[1]];
      m.lambda[m.features.find(k)] = v;
    });
    worst = std::max(worst, exact_dnce_gradient(m, space, t, alpha, nu).max_abs());
  }
  return {worst < 1e-8, "max-norm of exact gradient at p_m = q: " + fmt(worst)};
}

// ------------------------------------------------------------------ 4

struct Planted {
  TrfModel model;
  std::vector<Sentence> all;
  std::vector<double> probs;
};

Planted make_planted(std::uint64_t seed) {
  Planted p;
  TinyModelOptions o;
  o.vocab_size = 5;
  o.max_length = 4;
  o.dim = 0;
  o.templates = "w:2";
  o.lambda_range = 1.0;
  o.seed = seed;
  p.model = tiny_model(o);
  EnumSpace space(5, 4);
  p.model.zeta = exact_log_z(p.model, space);
  space.for_each([&](const Sentence& s) {
    p.all.push_back(s);
    p.probs.push_back(std::exp(log_prob(p.model, s)));
  });
  return p;
}

std::vector<Sentence> draw(const Planted& p, std::size_t n, Rng& rng) {
  std::vector<Sentence> out;
  out.reserve(n);
  double total = 0.0;
  for (double x : p.probs) total += x;
  for (std::size_t i = 0; i < n; ++i) out.push_back(p.all[sample_discrete(p.probs, total, rng)]);
  return out;
}

Outcome planted_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  Planted planted = make_planted(4);
  Rng rng(2024);
  std::vector<Sentence> train = draw(planted, 400000, rng);
  std::vector<Sentence> dev = draw(planted, 2000, rng);

  TrfModel m = planted.model;
  std::fill(m.lambda.begin(), m.lambda.end(), 0.0);
  m.prior = length_prior(train, 4);
  m.zeta = zeta_init(5, 4);
  NoiseModel noise = init_noise_model(5, 8, 1, m.prior, 3);

  // The fixed point is q = alpha p_d + (1 - alpha) p_n, and the noise LSTM cannot
  // condition on length, so a large alpha keeps its residual error out of q.
  // Rare bigrams need low gradient variance: large batches, then a geometric
  // anneal over long epochs.
  DnceConfig c;
  c.alpha = 0.95;
  c.nu = 1.0;
  c.batch_size = 2000;
  c.lr_lambda = 0.03;
  c.lr_zeta = 0.01;
  c.lr_noise = 1.0;
  c.schedule = Schedule::kPerEpochHalving;
  c.max_epochs = 10;  // 200 steps per epoch: 2000 steps
  c.stop_ratio = 1e-4;
  c.seed = 11;
  DnceTrainer tr(c, train, dev, m, noise);
  tr.train();
  const std::size_t steps = tr.steps_per_epoch() * static_cast<std::size_t>(tr.epoch());

  const TrfModel& got = tr.model();
  EnumSpace space(5, 4);
  const auto model_e = exact_expectations(got, space);
  const auto data_e = empirical_expectations(got.features, train);
  double worst = 0.0;
  for (std::size_t i = 0; i < model_e.size(); ++i)
    worst = std::max(worst, std::abs(model_e[i] - data_e[i]) / std::abs(data_e[i]));
  const auto zstar = exact_log_z(got, space);
  double zgap = 0.0;
  for (int l = 0; l < 4; ++l) zgap = std::max(zgap, std::abs(got.zeta[l] - zstar[l]));
  const double secs = seconds_since(t0);
  const bool ok = worst < 0.02 && zgap < 0.05 && steps <= 2000 && secs < 300.0;
  return {ok, std::to_string(steps) + " steps, max feature rel err " + fmt(worst) +
                  ", max |zeta - zeta*| " + fmt(zgap) + " nats, " + fmt(secs) + " s"};
}

// ------------------------------------------------------------------ 5

std::vector<Sentence> load(const std::string& path, const Vocabulary& v) {
  return encode_corpus(read_lines(path), v);
}

Outcome noise_adaptation() {
  const auto train_lines = read_lines(data_dir + "/tiny/train.txt");
  Vocabulary v = build_vocab(train_lines, 1000);
  auto train = encode_corpus(train_lines, v);
  auto dev = load(data_dir + "/tiny/dev.txt", v);
  auto test = load(data_dir + "/tiny/test.txt", v);
  const int L = longest_sentence(train);

  TrfModel m;
  m.vocab = v;
  m.prior = length_prior(train, L);
  m.features = build_feature_index(train, compile_templates("w:2", false), {0, 0});
  m.lambda.assign(m.features.size(), 0.0);
  m.neural = init_neural_params(static_cast<int>(v.size()), 8, 1, 1);
  m.zeta = zeta_init(v.size(), L);
  NoiseModel noise = init_noise_model(static_cast<int>(v.size()), 8, 1, m.prior, 2);
  const double before = noise_nll(noise, test);

  DnceConfig c;
  c.batch_size = 50;
  c.max_epochs = 5;
  c.stop_ratio = 0.01;
  c.seed = 3;
  DnceTrainer tr(c, train, dev, m, noise);
  tr.train();
  const double after = noise_nll(tr.noise(), test);
  return {tr.epoch() == 5 && after < before,
          "held-out noise NLL per sentence " + fmt(before, 5) + " -> " + fmt(after, 5) +
              " after " + std::to_string(tr.epoch()) + " epochs"};
}

// ------------------------------------------------------------------ 6, 7

struct TrendRun {
  std::string name;
  std::vector<double> dev_ll;  // index = epoch
};

struct TrendResults {
  TrendRun mixed, discrete, neural;
  double seconds = 0.0;
};

std::optional<TrendResults> trend_cache;

TrfModel trend_model(const std::string& mode, const Vocabulary& v, const ClassMap& cm,
                     const std::vector<Sentence>& train, int L) {
  TrfModel m;
  m.vocab = v;
  m.classes = cm;
  m.prior = length_prior(train, L);
  const std::string spec = mode == "neural" ? ":1" : "w+c:3";
  TemplateSet ts = compile_templates(spec, true);
  m.features = build_feature_index(train, ts, std::vector<int>(ts.max_order, 0), &cm);
  m.lambda.assign(m.features.size(), 0.0);
  if (mode != "discrete") m.neural = init_neural_params(static_cast<int>(v.size()), 16, 1, 5);
  m.zeta = zeta_init(v.size(), L);
  return m;
}

const TrendResults& trend_runs() {
  if (trend_cache) return *trend_cache;
  const auto t0 = std::chrono::steady_clock::now();
  const auto train_lines = read_lines(data_dir + "/synth/train.txt");
  Vocabulary v = build_vocab(train_lines, 1000000);
  auto train = encode_corpus(train_lines, v);
  auto dev = load(data_dir + "/synth/dev.txt", v);
  const int L = longest_sentence(train);
  ClassMap cm = cluster_words(train, v, 40, 10, 1);

  DnceConfig c;
  c.alpha = 0.25;
  c.nu = 1.0;
  c.batch_size = 100;
  c.max_epochs = 8;
  c.seed = 9;
  c.threads = configured_threads();

  TrendResults r;
  auto run = [&](const std::string& mode, TrendRun& out) {
    TrfModel m = trend_model(mode, v, cm, train, L);
    NoiseModel noise = init_noise_model(static_cast<int>(v.size()), 16, 1, m.prior, 6);
    DnceTrainer tr(c, train, dev, std::move(m), std::move(noise));
    tr.train();
    out.name = mode;
    for (const auto& h : tr.history()) out.dev_ll.push_back(h.dev_log_likelihood);
  };
  run("mixed", r.mixed);
  run("discrete", r.discrete);
  run("neural", r.neural);
  r.seconds = seconds_since(t0);
  trend_cache = r;
  return *trend_cache;
}

std::string curve(const TrendRun& r) {
  std::string s = r.name + " [";
  for (std::size_t i = 0; i < r.dev_ll.size(); ++i) s += (i ? " " : "") + fmt(r.dev_ll[i], 5);
  return s + "]";
}

// First epoch whose dev log-likelihood reaches `threshold`, or -1.
int epochs_to(const TrendRun& r, double threshold) {
  for (std::size_t i = 0; i < r.dev_ll.size(); ++i)
    if (r.dev_ll[i] >= threshold) return static_cast<int>(i);
  return -1;
}

Outcome convergence_trend() {
  const auto& r = trend_runs();
  // The threshold is the best dev log-likelihood the neural TRF attains.
  const double threshold = *std::max_element(r.neural.dev_ll.begin(), r.neural.dev_ll.end());
  const int em = epochs_to(r.mixed, threshold), en = epochs_to(r.neural, threshold);
  const bool ok = em >= 0 && em <= en;
  return {ok, "threshold " + fmt(threshold, 6) + ": mixed reaches it at epoch " +
                  std::to_string(em) + ", neural at epoch " + std::to_string(en) + "; " +
                  curve(r.mixed) + " " + curve(r.neural)};
}

Outcome integration_trend() {
  const auto& r = trend_runs();
  const double m = r.mixed.dev_ll.back(), d = r.discrete.dev_ll.back(),
               n = r.neural.dev_ll.back();
  return {m >= d && m >= n, "final dev LL mixed " + fmt(m, 6) + ", discrete " + fmt(d, 6) +
                                ", neural " + fmt(n, 6) + " (three runs " +
                                fmt(r.seconds) + " s)"};
}

// ------------------------------------------------------------------ 8

Outcome rescoring_pipeline() {
  std::ifstream nb(data_dir + "/nbest/nbest.txt"), rf(data_dir + "/nbest/refs.txt");
  if (!nb || !rf) return {false, "missing " + data_dir + "/nbest files"};
  const auto lists = read_nbest(nb);
  const auto refs = read_references(rf);

  // Scorer with hand-checkable values: -1 per word, -3 more per "uh".
  SentenceScorer hand = [](const std::vector<std::string>& w) {
    double s = 0.0;
    for (const auto& x : w) s -= x == "uh" ? 4.0 : 1.0;
    return s;
  };
  const ScorerSet set = ScorerSet::equal({hand});
  const double lm_weight = 0.5;

  // Hand-computed with combined = aux + 0.5 * lm:
  //   utt1: -10 + 0.5(-4) = -12.0 | -9 + 0.5(-7) = -12.5 | -11 + 0.5(-3) = -12.5 -> 0
  //   utt2: -5 + 0.5(-2) = -6.0 | -4 + 0.5(-5) = -6.5 | -5.5 + 0.5(-2) = -6.5 -> 0
  //   utt3: -20 + 0.5(-5) = -22.5 | -21 + 0.5(-3) = -22.5 | -19 + 0.5(-8) = -23.0
  //         -> tie between 0 and 1 kept in input order: 0
  //   utt4: -3 + 0.5(-3) = -4.5 | -2 + 0.5(-6) = -5.0 | -3.5 + 0.5(-2) = -4.5
  //         -> tie between 0 and 2 kept in input order: 0
  //   utt5: -8 + 0.5(-4) = -10.0 | -7 + 0.5(-4) = -9.0 | -7.5 + 0.5(-4) = -9.5 -> 1
  const std::vector<std::size_t> want_best{0, 0, 0, 0, 1};
  const std::vector<double> want_combined{-12.0, -6.0, -22.5, -4.5, -9.0};
  // Word errors of the selected hypotheses against the references: 1, 0, 2, 0, 1
  // over reference lengths 4, 2, 5, 3, 4.
  const std::size_t want_errors = 4, want_ref_len = 18;

  if (lists.size() != want_best.size()) return {false, "unexpected n-best list count"};
  bool ok = true;
  std::vector<WerResult> wers;
  std::string picks;
  for (std::size_t u = 0; u < lists.size(); ++u) {
    const auto ranked = score_nbest(lists[u], set, lm_weight);
    ok = ok && ranked.front().index == want_best[u] &&
         ranked.front().combined == want_combined[u];
    picks += (u ? "," : "") + std::to_string(ranked.front().index);
    wers.push_back(wer(refs.at(lists[u].utterance),
                       lists[u].hypotheses[ranked.front().index].tokens));
  }
  const WerResult total = corpus_wer(wers);
  ok = ok && total.errors == want_errors && total.ref_len == want_ref_len;

  // Equal-weight interpolation of a model with itself keeps its ranking.
  TinyModelOptions o;
  o.vocab_size = 6;
  o.max_length = 6;
  o.dim = 3;
  o.templates = "w:2";
  TrfModel m = tiny_model(o);
  auto single = model_scorer(m);
  bool same = true;
  for (const auto& list : lists) {
    const auto a = score_nbest(list, ScorerSet::equal({single}), 1.0);
    const auto b = score_nbest(list, ScorerSet::equal({single, single}), 1.0);
    for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].index == b[i].index;
  }
  return {ok && same, "picks " + picks + ", corpus WER " + std::to_string(total.errors) +
                          "/" + std::to_string(total.ref_len) + " = " + fmt(total.rate, 4) +
                          ", self-interpolation ranking " + (same ? "identical" : "differs")};
}

// ------------------------------------------------------------------ 9

Outcome minibatch_arithmetic() {
  const auto a = minibatch_sizes(0.25, 1.0, 100);
  const auto b = minibatch_sizes(2.0 / 3.0, 4.0, 100);
  const bool ok = a == std::pair<std::size_t, std::size_t>{300, 400} &&
                  b == std::pair<std::size_t, std::size_t>{50, 600};
  return {ok, "(0.25, 1, 100) -> (" + std::to_string(a.first) + ", " +
                  std::to_string(a.second) + "), (2/3, 4, 100) -> (" +
                  std::to_string(b.first) + ", " + std::to_string(b.second) + ")"};
}

// ------------------------------------------------------------------ 10

Outcome determinism_persistence() {
  const auto train_lines = read_lines(data_dir + "/tiny/train.txt");
  Vocabulary v = build_vocab(train_lines, 1000);
  auto train = encode_corpus(train_lines, v);
  auto dev = load(data_dir + "/tiny/dev.txt", v);
  auto test = load(data_dir + "/tiny/test.txt", v);
  const int L = longest_sentence(train);

  TrfModel m;
  m.vocab = v;
  m.prior = length_prior(train, L);
  m.features = build_feature_index(train, compile_templates("w:3", false), {0, 0, 0});
  m.lambda.assign(m.features.size(), 0.0);
  m.neural = init_neural_params(static_cast<int>(v.size()), 6, 1, 1);
  m.zeta = zeta_init(v.size(), L);
  NoiseModel noise = init_noise_model(static_cast<int>(v.size()), 6, 1, m.prior, 2);

  DnceConfig c;
  c.batch_size = 40;
  c.max_epochs = 3;
  c.stop_ratio = 0.01;
  c.seed = 17;
  DnceTrainer a(c, train, dev, m, noise), b(c, train, dev, m, noise);
  a.train();
  b.train();
  const bool same_seed = a.model().pack_parameters() == b.model().pack_parameters();

  const auto path = (std::filesystem::temp_directory_path() / "trf_acceptance_model").string();
  save_model(a.model(), path);
  TrfModel back = load_model(path);
  std::filesystem::remove(path);
  bool same_scores = true;
  for (const auto& s : test)
    if (a.model().prior.prob(s.length()) > 0.0)
      same_scores = same_scores && log_prob(back, s) == log_prob(a.model(), s);

  DnceTrainer part(c, train, dev, m, noise);
  part.run_epoch();
  const std::string ckpt = part.checkpoint().serialize();
  DnceTrainer resumed =
      DnceTrainer::resume(Archive::parse(ckpt, "dnce-checkpoint"), c, train, dev);
  resumed.train();
  const bool same_resume =
      resumed.model().pack_parameters() == a.model().pack_parameters() &&
      std::equal(resumed.noise().values().begin(), resumed.noise().values().end(),
                 a.noise().values().begin());

  DnceConfig threaded = c;
  threaded.threads = 4;
  DnceTrainer t4(threaded, train, dev, m, noise);
  t4.train();
  const bool same_threads = t4.model().pack_parameters() == a.model().pack_parameters();

  auto yn = [](bool x) { return x ? "identical" : "DIFFERENT"; };
  return {same_seed && same_scores && same_resume && same_threads,
          std::string("same-seed models ") + yn(same_seed) + ", reloaded scores " +
              yn(same_scores) + ", resumed run " + yn(same_resume) + ", 4-thread run " +
              yn(same_threads)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--data" && i + 1 < argc) {
      data_dir = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string x; std::getline(ss, x, ',');) only.insert(std::stoi(x));
    } else {
      std::cerr << "usage: acceptance [--data DIR] [--only N,M,...]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact normalization", exact_normalization},
      {"gradient suite", gradient_suite},
      {"DNCE fixed point", fixed_point},
      {"planted-model recovery", planted_recovery},
      {"noise adaptation", noise_adaptation},
      {"convergence-speed trend", convergence_trend},
      {"integration-benefit trend", integration_trend},
      {"rescoring pipeline", rescoring_pipeline},
      {"minibatch-size arithmetic", minibatch_arithmetic},
      {"determinism and persistence", determinism_persistence},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << id << "  "
              << criteria[k].first << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
