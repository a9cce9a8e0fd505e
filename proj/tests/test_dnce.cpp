#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "trf/dnce.hpp"

using namespace trf;
using trf::testing::TinyModelOptions;
using trf::testing::tiny_model;

namespace {

// Data distribution with the model's length prior: random conditionals per length.
std::vector<double> random_log_pd(const LengthPrior& prior, const EnumSpace& space,
                                  Rng& rng) {
  std::vector<double> out;
  for (int l = 1; l <= space.max_length(); ++l) {
    std::vector<double> w;
    space.for_each_of_length(l, [&](const Sentence&) { w.push_back(0.1 + uniform01(rng)); });
    double total = 0.0;
    for (double x : w) total += x;
    for (double x : w) out.push_back(std::log(prior.prob(l) * x / total));
  }
  return out;
}

// Discrete bigram model set so that p_m = q exactly (V=3, L=2, zeta = 0).
TrfModel planted_q_model(const NoiseModel& noise, const DnceTables& t, double alpha) {
  TinyModelOptions o;
  o.vocab_size = 3;
  o.max_length = 2;
  o.dim = 0;
  o.templates = "w:2";
  TrfModel m = tiny_model(o);
  m.prior = noise.prior();
  m.zeta.assign(2, 0.0);
  EnumSpace space(3, 2);
  std::vector<double> log_q(t.log_pd.size());
  for (std::size_t i = 0; i < log_q.size(); ++i)
    log_q[i] = log_add_exp(std::log(alpha) + t.log_pd[i], std::log(1 - alpha) + t.log_pn[i]);
  std::size_t i = 0;
  std::vector<double> uni(3);
  space.for_each([&](const Sentence& s) {
    const double lq = log_q[i++] - std::log(m.prior.prob(s.length()));
    if (s.length() == 1) {
      uni[s.tokens[0]] = lq;
      FeatureKey k;
      k.tmpl = 0;
      k.values[0] = s.tokens[0];
      m.lambda[m.features.find(k)] = lq;
    } else {
      FeatureKey k;
      k.tmpl = 1;
      k.values[0] = s.tokens[0];
      k.values[1] = s.tokens[1];
      m.lambda[m.features.find(k)] = lq - uni[s.tokens[0]] - uni[s.tokens[1]];
    }
  });
  return m;
}

std::vector<Sentence> draw_corpus(int V, int L, std::size_t n, Rng& rng) {
  std::vector<Sentence> out;
  for (std::size_t i = 0; i < n; ++i) {
    Sentence s;
    const int l = 1 + static_cast<int>(uniform01(rng) * L);
    for (int k = 0; k < l; ++k) s.tokens.push_back(static_cast<WordId>(uniform01(rng) * V));
    out.push_back(s);
  }
  return out;
}

struct Setup {
  std::vector<Sentence> train, dev;
  TrfModel model;
  NoiseModel noise;
};

Setup small_setup(std::uint64_t seed) {
  Rng rng(seed);
  Setup s;
  s.train = draw_corpus(4, 3, 60, rng);
  s.dev = draw_corpus(4, 3, 20, rng);
  TinyModelOptions o;
  o.vocab_size = 4;
  o.max_length = 3;
  o.dim = 2;
  o.seed = seed;
  s.model = tiny_model(o);
  s.model.prior = length_prior(s.train, 3);
  s.noise = init_noise_model(4, 2, 1, s.model.prior, seed + 1);
  return s;
}

DnceConfig small_config() {
  DnceConfig c;
  c.batch_size = 16;
  c.max_epochs = 3;
  c.seed = 77;
  c.lr_lambda = c.lr_theta = 0.01;
  c.lr_noise = 0.1;
  return c;
}

}  // namespace

TEST_CASE("minibatch sizes") {
  CHECK(minibatch_sizes(0.25, 1.0, 100) == std::pair<std::size_t, std::size_t>{300, 400});
  CHECK(minibatch_sizes(2.0 / 3.0, 4.0, 100) == std::pair<std::size_t, std::size_t>{50, 600});
  CHECK(minibatch_sizes(0.5, 1.0, 2) == std::pair<std::size_t, std::size_t>{2, 4});
  CHECK(minibatch_sizes(0.99, 0.01, 1) == std::pair<std::size_t, std::size_t>{1, 1});
  CHECK_THROWS_AS(minibatch_sizes(1.0, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(minibatch_sizes(0.0, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(minibatch_sizes(0.5, 0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(minibatch_sizes(0.5, 1.0, 0), std::invalid_argument);
}

TEST_CASE("posterior examples and complement") {
  CHECK(posterior_c0(1.3, 1.3, 1.0) == doctest::Approx(0.5));
  CHECK(posterior_c0(std::log(3.0), 0.0, 1.0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(posterior_c0(-2.0, -2.0, 4.0) == doctest::Approx(0.2).epsilon(1e-15));
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double a = uniform(rng, -800, 800), b = uniform(rng, -800, 800);
    const Posterior p = posterior(a, b, uniform(rng, 0.1, 10));
    CHECK(p.c0 + p.c1 == 1.0);
    CHECK(p.c0 >= 0.0);
    CHECK(p.c1 >= 0.0);
    CHECK(std::isfinite(p.c0));
  }
  CHECK(posterior_c0(700, -700, 1.0) == 1.0);
  CHECK(posterior_c0(-700, 700, 1.0) == 0.0);
}

TEST_CASE("adam step") {
  AdamState st(2);
  std::vector<double> p{1.0, -2.0};
  adam_step(p, std::vector<double>{0.0, 0.0}, 0.1, st);
  CHECK(p == std::vector<double>{1.0, -2.0});

  AdamState first(2);
  std::vector<double> q{0.0, 0.0};
  adam_step(q, std::vector<double>{3.0, -0.5}, 0.01, first);
  CHECK(q[0] == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(q[1] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(first.t == 1);

  // Scalar reference implementation.
  AdamState st2(1);
  std::vector<double> x{0.5};
  double m = 0, v = 0, ref = 0.5;
  Rng rng(3);
  for (int t = 1; t <= 20; ++t) {
    const double g = uniform(rng, -1, 1);
    adam_step(x, std::vector<double>{g}, 0.05, st2);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    ref += 0.05 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    CHECK(x[0] == doctest::Approx(ref).epsilon(1e-12));
  }

  // Ascent on -(x - a)^2 - 3 (y - b)^2.
  AdamState qs(2);
  std::vector<double> z{0.0, 0.0};
  const double a = 1.5, b = -0.7;
  double prev = std::hypot(z[0] - a, z[1] - b);
  for (int i = 0; i < 100; ++i)
    adam_step(z, std::vector<double>{-2 * (z[0] - a), -6 * (z[1] - b)}, 0.05, qs);
  CHECK(std::hypot(z[0] - a, z[1] - b) < 0.5 * prev);
  CHECK_THROWS(adam_step(z, std::vector<double>{1.0}, 0.1, qs));
}

TEST_CASE("zeta gradient touches only lengths in the batch") {
  TinyModelOptions o;
  TrfModel m = tiny_model(o);
  GradientBundle g = GradientBundle::zeros_like(m);
  add_potential_gradient(m, Sentence{{1, 2}}, 0.5, g);
  CHECK(g.zeta == std::vector<double>{0.0, -0.5, 0.0});

  MinibatchTriple batch;
  batch.data.push_back({Sentence{{1, 2}}, -1.0});
  batch.b1.push_back({Sentence{{2, 2}}, -1.0});
  batch.b2.push_back({Sentence{{0, 1}}, -1.0});
  batch.b2.push_back({Sentence{{0, 1}}, -1.0});
  GradientBundle e = grad_estimate(m, batch, 0.5, 1.0);
  CHECK(e.zeta[0] == 0.0);
  CHECK(e.zeta[2] == 0.0);
}

TEST_CASE("grad_estimate matches a direct per-sentence sum") {
  Setup s = small_setup(3);
  Rng rng(8);
  std::vector<Sentence> d(s.train.begin(), s.train.begin() + 10);
  MinibatchTriple batch = make_minibatch(s.noise, d, 0.25, 2.0, rng);
  CHECK(batch.b1.size() == 30);
  CHECK(batch.b2.size() == 80);
  GradientBundle got = grad_estimate(s.model, batch, 0.25, 2.0);

  GradientBundle want = GradientBundle::zeros_like(s.model);
  const double c = 0.25 / 10.0;
  auto post = [&](const ScoredSentence& x) {
    return posterior(log_weight(s.model, x.sentence) - s.model.zeta[x.sentence.length() - 1],
                     x.log_p_seq, 2.0);
  };
  for (const auto& x : batch.data) add_potential_gradient(s.model, x.sentence, c * post(x).c1, want);
  for (const auto& x : batch.b1) add_potential_gradient(s.model, x.sentence, c * post(x).c1, want);
  for (const auto& x : batch.b2) add_potential_gradient(s.model, x.sentence, -c * post(x).c0, want);
  CHECK(trf::testing::max_rel_err(got.flat(), want.flat(), 1e-9) < 1e-10);

  // Thread count does not change a single bit.
  for (int threads : {2, 3, 8}) CHECK(grad_estimate(s.model, batch, 0.25, 2.0, threads).flat() == got.flat());
}

TEST_CASE("grad_estimate is an unbiased estimate of the exact gradient") {
  Rng rng(21);
  TinyModelOptions o;
  o.vocab_size = 3;
  o.max_length = 2;
  o.dim = 2;
  o.seed = 6;
  TrfModel m = tiny_model(o);
  NoiseModel n = init_noise_model(3, 2, 1, m.prior, 9);
  EnumSpace space(3, 2);
  DnceTables t{random_log_pd(m.prior, space, rng), enumerate_noise_log_probs(n, space)};
  const double alpha = 0.4, nu = 1.5;
  const std::vector<double> exact = exact_dnce_gradient(m, space, t, alpha, nu).flat();

  std::vector<Sentence> all;
  space.for_each([&](const Sentence& s) { all.push_back(s); });
  std::vector<double> pd(t.log_pd.size());
  for (std::size_t i = 0; i < pd.size(); ++i) pd[i] = std::exp(t.log_pd[i]);

  const int draws = 3000;
  std::vector<double> sum(exact.size(), 0.0), sum_sq(exact.size(), 0.0);
  std::vector<Sentence> d(20);
  for (int k = 0; k < draws; ++k) {
    for (auto& s : d) s = all[sample_discrete(pd, 1.0, rng)];
    const auto g = grad_estimate(m, make_minibatch(n, d, alpha, nu, rng), alpha, nu).flat();
    for (std::size_t i = 0; i < g.size(); ++i) {
      sum[i] += g[i];
      sum_sq[i] += g[i] * g[i];
    }
  }
  // Each coordinate's mean lies within 5 standard errors of the exact value.
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double mean = sum[i] / draws;
    const double se = std::sqrt(std::max(sum_sq[i] / draws - mean * mean, 0.0) / draws);
    CHECK(std::abs(mean - exact[i]) <= 5.0 * se + 1e-12);
  }
}

TEST_CASE("saturated posteriors give a zero bundle") {
  TrfModel m = tiny_model({});
  MinibatchTriple batch;
  // P(C=1) = 0 for D and B1 (huge model score), P(C=0) = 0 for B2.
  batch.data.push_back({Sentence{{1, 2}}, -5000.0});
  batch.b1.push_back({Sentence{{2}}, -5000.0});
  batch.b2.push_back({Sentence{{1, 1, 1}}, 5000.0});
  CHECK(grad_estimate(m, batch, 0.5, 1.0).max_abs() == 0.0);
}

TEST_CASE("exact DNCE gradient matches finite differences of J") {
  Rng rng(12);
  for (int variant = 0; variant < 2; ++variant) {
    TinyModelOptions o;
    o.vocab_size = 3;
    o.max_length = 2;
    o.dim = variant == 0 ? 2 : 0;
    o.seed = 40 + variant;
    TrfModel m = tiny_model(o);
    NoiseModel n = init_noise_model(3, 2, 1, m.prior, 9);
    EnumSpace space(3, 2);
    DnceTables t{random_log_pd(m.prior, space, rng), enumerate_noise_log_probs(n, space)};
    GradientBundle g = exact_dnce_gradient(m, space, t, 0.3, 1.5);
    auto fd = finite_diff(
        [&](std::span<const double> x) {
          TrfModel q = m;
          q.unpack_parameters(x);
          return exact_dnce_objective(q, space, t, 0.3, 1.5);
        },
        m.pack_parameters(), 1e-6);
    CHECK(trf::testing::max_rel_err(g.flat(), fd, 1e-4) < 1e-4);
  }
}

TEST_CASE("exact gradient vanishes at p_m = q") {
  Rng rng(5);
  NoiseModel n = init_noise_model(3, 2, 1, LengthPrior({0.4, 0.6}), 4);
  for (double& x : n.values()) x *= 5.0;
  EnumSpace space(3, 2);
  DnceTables t{random_log_pd(n.prior(), space, rng), enumerate_noise_log_probs(n, space)};
  for (double alpha : {0.25, 0.5, 2.0 / 3.0}) {
    TrfModel m = planted_q_model(n, t, alpha);
    CHECK(exact_dnce_gradient(m, space, t, alpha, 1.0).max_abs() < 1e-8);
    CHECK(exact_dnce_gradient(m, space, t, alpha, 4.0).max_abs() < 1e-8);
    // Moving away from q breaks stationarity.
    m.lambda[0] += 0.3;
    CHECK(exact_dnce_gradient(m, space, t, alpha, 1.0).max_abs() > 1e-4);
  }
}

TEST_CASE("config validation lists every problem") {
  DnceConfig c;
  CHECK(c.problems().empty());
  c.alpha = 1.5;
  c.nu = -1;
  c.lr_zeta = 0;
  auto p = c.problems();
  CHECK(p.size() == 3);
  Setup s = small_setup(1);
  CHECK_THROWS_AS(DnceTrainer(c, s.train, s.dev, s.model, s.noise), std::invalid_argument);
  CHECK(parse_schedule(to_string(Schedule::kPerEpochHalving)) == Schedule::kPerEpochHalving);
  CHECK(parse_schedule(to_string(Schedule::kDevHalving)) == Schedule::kDevHalving);
  CHECK_THROWS(parse_schedule("sometimes"));
}

TEST_CASE("trainer: epoch structure, log format and halving") {
  Setup s = small_setup(2);
  DnceTrainer tr(small_config(), s.train, s.dev, s.model, s.noise);
  CHECK(tr.steps_per_epoch() == 4);
  REQUIRE(tr.history().size() == 1);
  CHECK(tr.history()[0].epoch == 0);
  std::ostringstream log;
  tr.train(&log);
  CHECK(tr.epoch() == 3);
  CHECK(tr.finished());
  std::istringstream lines(log.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("epoch", 0) == 0) continue;
    ++count;
    CHECK(std::count(line.begin(), line.end(), '\t') == 6);
  }
  CHECK(count >= 3);
  for (std::size_t i = 1; i < tr.history().size(); ++i) {
    const auto& h = tr.history()[i];
    CHECK(h.lr_zeta == small_config().lr_zeta);
    CHECK(h.lr_lambda == h.lr_theta);
    CHECK(h.lr_lambda <= small_config().lr_lambda);
  }

  DnceConfig per = small_config();
  per.schedule = Schedule::kPerEpochHalving;
  per.max_epochs = 100;
  DnceTrainer halving(per, s.train, s.dev, s.model, s.noise);
  halving.train();
  // 1, 1/2, 1/4, 1/8, 1/16 < 0.1: stops after four halvings.
  CHECK(halving.epoch() == 4);
  CHECK(halving.lr_scale() == 1.0 / 16.0);
}

TEST_CASE("trainer is deterministic and resumes bit-exactly") {
  Setup s = small_setup(6);
  DnceConfig c = small_config();
  DnceTrainer a(c, s.train, s.dev, s.model, s.noise);
  DnceTrainer b(c, s.train, s.dev, s.model, s.noise);
  a.train();
  b.train();
  CHECK(a.model().pack_parameters() == b.model().pack_parameters());
  CHECK(std::equal(a.noise().values().begin(), a.noise().values().end(),
                   b.noise().values().begin()));

  DnceTrainer part(c, s.train, s.dev, s.model, s.noise);
  part.run_epoch();
  const std::string bytes = part.checkpoint().serialize();
  DnceTrainer resumed =
      DnceTrainer::resume(Archive::parse(bytes, "dnce-checkpoint"), c, s.train, s.dev);
  CHECK(resumed.epoch() == 1);
  resumed.train();
  CHECK(resumed.model().pack_parameters() == a.model().pack_parameters());
  CHECK(resumed.history().size() == a.history().size());
  for (std::size_t i = 0; i < a.history().size(); ++i)
    CHECK(resumed.history()[i].dev_log_likelihood == a.history()[i].dev_log_likelihood);

  DnceConfig threaded = c;
  threaded.threads = 4;
  DnceTrainer t4(threaded, s.train, s.dev, s.model, s.noise);
  t4.train();
  CHECK(t4.model().pack_parameters() == a.model().pack_parameters());
}

TEST_CASE("dev log-likelihood skips zero-prior lengths") {
  TrfModel m = tiny_model({});
  m.prior = LengthPrior({0.5, 0.0, 0.5});
  std::vector<Sentence> dev{{{1}}, {{1, 2}}, {{2, 2, 2}}};
  const double want = 0.5 * (log_prob(m, dev[0]) + log_prob(m, dev[2]));
  CHECK(dev_log_likelihood(m, dev) == doctest::Approx(want).epsilon(1e-14));
}
