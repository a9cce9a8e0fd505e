#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trf/archive.hpp"
#include "trf/corpus.hpp"
#include "trf/dnce.hpp"
#include "trf/evaluation.hpp"
#include "trf/features.hpp"
#include "trf/model.hpp"
#include "trf/neural.hpp"
#include "trf/noise.hpp"
#include "trf/oracle.hpp"
#include "trf/parallel.hpp"

namespace {

using namespace trf;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Bad arguments or configuration; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool exists(const std::string& path) { return std::filesystem::exists(path); }

std::string vocab_text(const Vocabulary& v) {
  std::ostringstream os;
  os << v.unk_id() << '\n';
  for (std::size_t i = 0; i < v.size(); ++i) os << v.word(static_cast<WordId>(i)) << '\n';
  return os.str();
}

std::optional<Vocabulary> vocab_from_text(const std::string& text) {
  std::istringstream is(text);
  WordId unk = 0;
  if (!(is >> unk)) return std::nullopt;
  std::vector<std::string> words;
  for (std::string w; is >> w;) words.push_back(w);
  if (unk < 0 || static_cast<std::size_t>(unk) >= words.size()) return std::nullopt;
  const std::string token = words[unk];
  return Vocabulary(std::move(words), token);
}

// The noise sidecar carries the vocabulary so `sample` can print words.
void save_noise_with_vocab(const NoiseModel& n, const Vocabulary& v,
                           const std::string& path) {
  Archive ar = to_archive(n);
  ar.put_text("vocab", vocab_text(v));
  ar.save(path);
}

// Vocabulary listed by a class-map file, in file order.
Vocabulary vocab_from_class_file(const std::string& path) {
  std::vector<std::string> words;
  bool has_unk = false;
  for (const auto& line : read_lines(path)) {
    auto t = tokenize(line);
    if (t.empty()) continue;
    if (t.size() != 2) throw DataError("class map " + path + ": expected word<TAB>class");
    has_unk = has_unk || t[0] == "<unk>";
    words.push_back(t[0]);
  }
  if (!has_unk) throw DataError("class map " + path + " lacks the <unk> entry");
  return Vocabulary(std::move(words), "<unk>");
}

// ---------------------------------------------------------------- cluster

struct ClusterArgs {
  std::string corpus, out;
  int classes = 200;
  std::size_t vocab_size = 1000000;
  int iters = 20;
  std::uint64_t seed = 1;
};

int cmd_cluster(const ClusterArgs& a) {
  if (!exists(a.corpus)) throw UsageError("corpus not found: " + a.corpus);
  const auto lines = read_lines(a.corpus);
  Vocabulary vocab = build_vocab(lines, a.vocab_size);
  if (a.classes < 1 || static_cast<std::size_t>(a.classes) > vocab.size())
    throw UsageError("classes must lie in 1.." + std::to_string(vocab.size()) +
                     " (vocabulary size)");
  const auto corpus = encode_corpus(lines, vocab);
  std::vector<double> trace;
  ClassMap cm = cluster_words(corpus, vocab, a.classes, a.iters, a.seed, &trace);
  std::ofstream out(a.out);
  if (!out) throw DataError("cannot write " + a.out);
  write_class_map(out, cm, vocab);
  std::cout << "words\t" << vocab.size() << "\nclasses\t" << cm.n_classes
            << "\nmoves\t" << (trace.empty() ? 0 : trace.size() - 1)
            << "\nclass_bigram_ll\t" << std::setprecision(12)
            << (trace.empty() ? 0.0 : trace.back()) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string train, dev, model, classes, log, checkpoint, resume;
  std::string mode = "mixed";
  std::string features;
  std::string cutoffs;
  std::string schedule = "dev-halving";
  std::size_t vocab_size = 1000000;
  int dim = 200, layers = 1, noise_dim = 200, noise_layers = 1;
  std::optional<double> alpha;
  DnceConfig cfg;
};

std::vector<std::string> train_problems(TrainArgs& a, TemplateSet* templates,
                                        std::vector<int>* cutoffs) {
  std::vector<std::string> p;
  auto need_file = [&](const std::string& key, const std::string& path) {
    if (path.empty())
      p.push_back(key + " is required");
    else if (!exists(path))
      p.push_back(key + ": file not found: " + path);
  };
  need_file("train", a.train);
  need_file("dev", a.dev);
  if (a.model.empty()) p.push_back("model (output path) is required");
  if (!a.classes.empty() && !exists(a.classes))
    p.push_back("classes: file not found: " + a.classes);
  if (!a.resume.empty() && !exists(a.resume))
    p.push_back("resume: file not found: " + a.resume);

  const bool discrete = a.mode == "mixed" || a.mode == "discrete";
  const bool neural = a.mode == "mixed" || a.mode == "neural";
  if (!discrete && !neural)
    p.push_back("mode must be one of mixed, discrete, neural (got '" + a.mode + "')");
  if (neural && a.dim < 1) p.push_back("dim must be at least 1");
  if (neural && a.layers < 1) p.push_back("layers must be at least 1");
  if (a.noise_dim < 1) p.push_back("noise_dim must be at least 1");
  if (a.noise_layers < 1) p.push_back("noise_layers must be at least 1");
  if (a.vocab_size < 2) p.push_back("vocab_size must be at least 2");

  try {
    a.cfg.schedule = parse_schedule(a.schedule);
  } catch (const std::exception& e) {
    p.push_back(e.what());
  }
  a.cfg.alpha = a.alpha.value_or(a.mode == "mixed" ? 0.2 : 0.25);
  for (auto& s : a.cfg.problems()) p.push_back(s);

  if (discrete) {
    std::string spec = a.features;
    if (spec.empty()) spec = a.classes.empty() ? "w:5" : "w+c:5";
    try {
      *templates = compile_templates(spec, !a.classes.empty());
      if (templates->templates.empty()) p.push_back("features: no templates in '" + spec + "'");
      std::string cut = a.cutoffs.empty() ? std::string(templates->max_order, '0') : a.cutoffs;
      *cutoffs = parse_cutoffs(cut);
      if (static_cast<int>(cutoffs->size()) != templates->max_order)
        p.push_back("cutoffs '" + cut + "' has " + std::to_string(cutoffs->size()) +
                    " digits but the feature order is " +
                    std::to_string(templates->max_order));
    } catch (const std::invalid_argument& e) {
      p.push_back(std::string("features/cutoffs: ") + e.what());
    }
  } else if (!a.features.empty()) {
    p.push_back("features given but mode=neural has no discrete potential");
  }
  return p;
}

// CLI11 only reads config files attached to the root app, so subcommand files
// are applied here: each key fills its option unless the command line set it.
void apply_config_file(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config: cannot open " + path);
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::ParseError& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config")
      throw UsageError("config " + path + ": unknown key '" + item.name + "'");
    if (opt->count() != 0) continue;
    try {
      opt->add_result(item.inputs);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("config " + path + ": " + item.name + ": " + e.what());
    }
  }
}

int cmd_train(TrainArgs a) {
  TemplateSet templates;
  std::vector<int> cutoffs;
  if (auto p = train_problems(a, &templates, &cutoffs); !p.empty()) {
    std::ostringstream os;
    os << "invalid training configuration (" << p.size() << " problem"
       << (p.size() == 1 ? "" : "s") << "):";
    for (const auto& s : p) os << "\n  - " << s;
    throw UsageError(os.str());
  }
  const auto train_lines = read_lines(a.train);
  std::optional<ClassMap> classes;
  Vocabulary vocab;
  if (!a.classes.empty()) {
    vocab = vocab_from_class_file(a.classes);
    std::ifstream in(a.classes);
    classes = read_class_map(in, vocab);
  } else {
    vocab = build_vocab(train_lines, a.vocab_size);
  }
  std::size_t skipped = 0;
  auto train =
      filter_by_length(encode_corpus(train_lines, vocab), a.cfg.max_train_length, &skipped);
  if (train.empty()) throw DataError("no training sentences within max_train_length");
  const int L = longest_sentence(train);
  auto dev = encode_corpus(read_lines(a.dev), vocab);
  if (dev.empty()) throw DataError("empty dev corpus");
  std::cerr << "vocabulary " << vocab.size() << ", train sentences " << train.size()
            << " (" << skipped << " longer than " << a.cfg.max_train_length
            << " skipped), L = " << L << '\n';

  const std::string log_path = a.log.empty() ? a.model + ".log" : a.log;
  std::ofstream log(log_path, a.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw DataError("cannot write " + log_path);

  auto make_trainer = [&]() -> DnceTrainer {
    if (!a.resume.empty())
      return DnceTrainer::resume(Archive::load(a.resume, "dnce-checkpoint"), a.cfg,
                                 train, dev);
    TrfModel m;
    m.vocab = vocab;
    m.classes = classes;
    m.prior = length_prior(train, L);
    m.features = build_feature_index(train, templates, cutoffs,
                                     classes ? &*classes : nullptr);
    m.lambda.assign(m.features.size(), 0.0);
    if (a.mode != "discrete")
      m.neural = init_neural_params(static_cast<int>(vocab.size()), a.dim, a.layers, a.cfg.seed);
    m.zeta = zeta_init(vocab.size(), L);
    NoiseModel n = init_noise_model(static_cast<int>(vocab.size()), a.noise_dim,
                                    a.noise_layers, m.prior, a.cfg.seed + 1);
    return DnceTrainer(a.cfg, train, dev, std::move(m), std::move(n));
  };
  DnceTrainer trainer = make_trainer();
  if (a.resume.empty()) {
    log << epoch_log_header() << '\n';
    write_epoch_log(log, trainer.history().front());
  }
  std::cout << epoch_log_header() << '\n';
  for (const auto& h : trainer.history()) write_epoch_log(std::cout, h);
  std::cerr << "features " << trainer.model().features.size() << ", theta "
            << (trainer.model().neural ? trainer.model().neural->size() : 0)
            << ", steps/epoch " << trainer.steps_per_epoch() << ", alpha "
            << a.cfg.alpha << ", threads " << a.cfg.threads << '\n';

  trainer.train(nullptr, [&](const DnceTrainer& t) {
    write_epoch_log(log, t.history().back());
    log.flush();
    write_epoch_log(std::cout, t.history().back());
    if (!a.checkpoint.empty()) t.checkpoint().save(a.checkpoint);
  });
  save_model(trainer.model(), a.model);
  save_noise_with_vocab(trainer.noise(), vocab, a.model + ".noise");
  std::cerr << "wrote " << a.model << " and " << a.model << ".noise\n";
  return kExitOk;
}

// ---------------------------------------------------------------- ppl

int cmd_ppl(const std::string& model_path, const std::string& corpus_path) {
  if (!exists(model_path)) throw UsageError("model not found: " + model_path);
  if (!exists(corpus_path)) throw UsageError("corpus not found: " + corpus_path);
  TrfModel m = load_model(model_path);
  auto corpus = encode_corpus(read_lines(corpus_path), m.vocab);
  PerplexityReport r = perplexity(m, corpus);
  std::cerr << "note: PPL = exp(-sum log p(l, x) / sum l); sentence length is "
               "priced by the length prior, there is no end-of-sentence token, "
               "so values are not comparable with conditional-LM perplexity\n";
  std::cout << std::setprecision(10) << "sentences\t" << r.sentences << "\ntokens\t"
            << r.tokens << "\nlog_prob\t" << r.total_log_prob << "\nppl\t"
            << r.perplexity << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- rescore

int cmd_rescore(const std::vector<std::string>& model_paths, const std::string& nbest_path,
                const std::string& refs_path, double lm_weight) {
  if (!exists(nbest_path)) throw UsageError("n-best file not found: " + nbest_path);
  if (!refs_path.empty() && !exists(refs_path))
    throw UsageError("reference file not found: " + refs_path);
  std::vector<TrfModel> models;
  for (const auto& p : model_paths) {
    if (!exists(p)) throw UsageError("model not found: " + p);
    models.push_back(load_model(p));
  }
  std::vector<SentenceScorer> scorers;
  for (const auto& m : models) scorers.push_back(model_scorer(m));
  const ScorerSet set = ScorerSet::equal(std::move(scorers));

  std::ifstream nb(nbest_path);
  const auto lists = read_nbest(nb);
  std::map<std::string, std::vector<std::string>> refs;
  if (!refs_path.empty()) {
    std::ifstream rf(refs_path);
    refs = read_references(rf);
  }
  std::vector<WerResult> results;
  std::cout << std::setprecision(10);
  for (const auto& list : lists) {
    const auto ranked = score_nbest(list, set, lm_weight);
    const auto& best = list.hypotheses[ranked.front().index];
    std::cout << list.utterance << '\t' << ranked.front().index << '\t'
              << ranked.front().combined << '\t';
    for (std::size_t i = 0; i < best.tokens.size(); ++i)
      std::cout << (i ? " " : "") << best.tokens[i];
    std::cout << '\n';
    if (!refs_path.empty()) {
      auto it = refs.find(list.utterance);
      if (it == refs.end()) throw DataError("no reference for utterance " + list.utterance);
      results.push_back(wer(it->second, best.tokens));
    }
  }
  if (!refs_path.empty()) {
    WerResult total = corpus_wer(results);
    std::cout << "WER\t" << total.errors << '\t' << total.ref_len << '\t' << total.rate << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- sample

int cmd_sample(const std::string& noise_path, std::size_t count, std::uint64_t seed) {
  if (!exists(noise_path)) throw UsageError("noise model not found: " + noise_path);
  Archive ar = Archive::load(noise_path, "noise-model");
  NoiseModel n = noise_from_archive(ar);
  std::optional<Vocabulary> vocab;
  if (ar.has_text("vocab")) vocab = vocab_from_text(ar.text("vocab"));
  Rng rng(seed);
  for (const auto& s : sample(n, count, rng)) {
    if (vocab) {
      std::cout << decode(s, *vocab) << '\n';
    } else {
      for (std::size_t i = 0; i < s.tokens.size(); ++i)
        std::cout << (i ? " " : "") << s.tokens[i];
      std::cout << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- oracle-check

struct OracleArgs {
  int vocab_size = 3, max_length = 3, dim = 2, models = 20;
  std::uint64_t seed = 1;
  std::string model;
};

struct CheckLine {
  std::string name;
  bool pass;
  std::string detail;
};

std::string sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << x;
  return os.str();
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) /
                                std::max({std::abs(a[i]), std::abs(b[i]), 1e-4}));
  return worst;
}

TrfModel random_model(int V, int L, int d, const std::string& spec, Rng& rng) {
  TrfModel m;
  std::vector<std::string> words{"<unk>"};
  for (int i = 1; i < V; ++i) words.push_back("w" + std::to_string(i));
  m.vocab = Vocabulary(words, "<unk>");
  std::vector<Sentence> all;
  EnumSpace(V, L).for_each([&](const Sentence& s) { all.push_back(s); });
  TemplateSet ts = compile_templates(spec, false);
  m.features = build_feature_index(all, ts, std::vector<int>(ts.max_order, 0));
  m.lambda.resize(m.features.size());
  for (double& x : m.lambda) x = uniform(rng, -0.5, 0.5);
  if (d > 0) {
    NeuralParams p({V, d, 1});
    for (double& x : p.values()) x = uniform(rng, -0.5, 0.5);
    m.neural = std::move(p);
  }
  std::vector<double> pi(L);
  double total = 0.0;
  for (double& x : pi) total += (x = 0.2 + uniform01(rng));
  for (double& x : pi) x /= total;
  m.prior = LengthPrior(pi);
  m.zeta = zeta_init(V, L);
  return m;
}

std::vector<CheckLine> oracle_suite(const OracleArgs& a) {
  std::vector<CheckLine> out;
  Rng rng(a.seed);
  const int V = a.vocab_size, L = a.max_length;
  EnumSpace space(V, L);
  std::ostringstream os;

  double worst = 0.0;
  for (int k = 0; k < a.models; ++k) {
    TrfModel m = random_model(V, L, a.dim, "w:2", rng);
    m.zeta = exact_log_z(m, space);
    std::vector<double> lp;
    space.for_each([&](const Sentence& s) { lp.push_back(log_prob(m, s)); });
    worst = std::max(worst, std::abs(std::exp(log_sum_exp(lp)) - 1.0));
  }
  os << std::setprecision(3) << "max |sum p - 1| = " << worst << " over " << a.models << " models";
  out.push_back({"normalization", worst < 1e-9, os.str()});

  const int gd = std::max(a.dim, 1);
  TrfModel m = random_model(V, std::min(L, 2), gd, "w:2", rng);
  {
    Sentence s;
    for (int i = 0; i < std::max(L, 2); ++i) s.tokens.push_back(static_cast<WordId>(i % V));
    auto [v, cache] = phi_forward(s, *m.neural);
    std::vector<double> g(m.neural->size(), 0.0);
    phi_backward(cache, *m.neural, 1.0, g);
    std::vector<double> theta(m.neural->values().begin(), m.neural->values().end());
    auto fd = finite_diff(
        [&](std::span<const double> x) {
          NeuralParams q(m.neural->shape());
          std::copy(x.begin(), x.end(), q.values().begin());
          return phi(s, q);
        },
        theta, 1e-6);
    const double e = max_rel(g, fd);
    out.push_back({"phi_gradient", e < 1e-4, "max rel err " + sci(e)});
  }
  NoiseModel n = init_noise_model(V, gd, 1, m.prior, a.seed + 7);
  for (double& x : n.values()) x *= 5.0;
  {
    std::vector<Sentence> batch;
    EnumSpace(V, std::min(L, 2)).for_each([&](const Sentence& s) { batch.push_back(s); });
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
    const double e = max_rel(g, fd);
    out.push_back({"noise_nll_gradient", e < 1e-4, "max rel err " + sci(e)});
  }
  EnumSpace small(V, std::min(L, 2));
  DnceTables t;
  t.log_pn = enumerate_noise_log_probs(n, small);
  {
    // Data: a different noise-shaped distribution with the same length prior.
    NoiseModel other = init_noise_model(V, gd, 1, m.prior, a.seed + 8);
    for (double& x : other.values()) x *= 5.0;
    t.log_pd = enumerate_noise_log_probs(other, small);
  }
  {
    const double alpha = 0.3, nu = 1.5;
    GradientBundle g = exact_dnce_gradient(m, small, t, alpha, nu);
    auto fd = finite_diff(
        [&](std::span<const double> x) {
          TrfModel q = m;
          q.unpack_parameters(x);
          return exact_dnce_objective(q, small, t, alpha, nu);
        },
        m.pack_parameters(), 1e-6);
    const double e = max_rel(g.flat(), fd);
    out.push_back({"dnce_gradient", e < 1e-4, "max rel err " + sci(e)});
  }
  {
    // Discrete bigram model set to q = alpha p_d + (1 - alpha) p_n.
    const double alpha = 0.25;
    TrfModel q = random_model(V, 2, 0, "w:2", rng);
    q.prior = m.prior;
    q.zeta.assign(2, 0.0);
    std::vector<double> uni(V);
    std::size_t i = 0;
    small.for_each([&](const Sentence& s) {
      const double lq = log_add_exp(std::log(alpha) + t.log_pd[i],
                                    std::log(1 - alpha) + t.log_pn[i]) -
                        std::log(q.prior.prob(s.length()));
      ++i;
      FeatureKey k;
      k.tmpl = s.length() - 1;
      for (int j = 0; j < s.length(); ++j) k.values[j] = s.tokens[j];
      double v = lq;
      if (s.length() == 1)
        uni[s.tokens[0]] = lq;
      else
        v -= uni[s.tokens[0]] + uni[s.tokens[1]];
      q.lambda[q.features.find(k)] = v;
    });
    const double g = exact_dnce_gradient(q, small, t, alpha, 1.0).max_abs();
    std::ostringstream gs;
    gs << std::setprecision(3) << "max |grad J| = " << g;
    out.push_back({"fixed_point", g < 1e-8, gs.str()});
  }
  return out;
}

int cmd_oracle_check(const OracleArgs& a) {
  if (!a.model.empty()) {
    if (!exists(a.model)) throw UsageError("model not found: " + a.model);
    TrfModel m = load_model(a.model);
    EnumSpace space(static_cast<int>(m.vocab.size()), m.max_length());
    const auto z = exact_log_z(m, space);
    double worst = 0.0;
    for (std::size_t l = 0; l < z.size(); ++l) {
      std::cout << "zeta\t" << l + 1 << '\t' << std::setprecision(10) << m.zeta[l]
                << '\t' << z[l] << '\n';
      worst = std::max(worst, std::abs(m.zeta[l] - z[l]));
    }
    std::cout << "max_zeta_gap\t" << worst << '\n';
    return kExitOk;
  }
  if (a.vocab_size < 2 || a.max_length < 1 || a.dim < 0 || a.models < 1)
    throw UsageError("oracle-check needs vocab_size >= 2, max_length >= 1, dim >= 0, models >= 1");
  bool ok = true;
  for (const auto& c : oracle_suite(a)) {
    std::cout << (c.pass ? "PASS" : "FAIL") << '\t' << c.name << '\t' << c.detail << '\n';
    ok = ok && c.pass;
  }
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trans-dimensional random field language models"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  ClusterArgs ca;
  auto* cluster = app.add_subcommand("cluster", "Exchange word clustering");
  cluster->add_option("--corpus", ca.corpus, "Training text, one sentence per line")->required();
  cluster->add_option("--out", ca.out, "Class map output (word<TAB>class)")->required();
  cluster->add_option("--classes", ca.classes, "Number of classes")->capture_default_str();
  cluster->add_option("--vocab-size,--vocab_size", ca.vocab_size,
                      "Vocabulary cap including <unk>")->capture_default_str();
  cluster->add_option("--iters", ca.iters, "Maximum exchange sweeps")->capture_default_str();
  cluster->add_option("--seed", ca.seed, "Visiting-order seed")->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a TRF model with DNCE");
  std::string train_config;
  train->add_option("--config", train_config, "key=value config file; flags override it");
  train->add_option("--train", ta.train, "Training text");
  train->add_option("--dev", ta.dev, "Development text");
  train->add_option("--model", ta.model, "Model output path (noise goes to <model>.noise)");
  train->add_option("--classes", ta.classes, "Class map from `trf cluster`");
  train->add_option("--mode", ta.mode, "mixed, discrete or neural")->capture_default_str();
  train->add_option("--features", ta.features, "Template spec, e.g. w+c+ws+cs:5");
  train->add_option("--cutoffs", ta.cutoffs, "Count cutoff per order, e.g. 00225");
  train->add_option("--vocab-size,--vocab_size", ta.vocab_size, "Vocabulary cap")->capture_default_str();
  train->add_option("--dim", ta.dim, "Embedding/hidden size of the potential network")->capture_default_str();
  train->add_option("--layers", ta.layers, "BLSTM layers")->capture_default_str();
  train->add_option("--noise-dim,--noise_dim", ta.noise_dim, "Noise LSTM size")->capture_default_str();
  train->add_option("--noise-layers,--noise_layers", ta.noise_layers, "Noise LSTM layers")->capture_default_str();
  train->add_option("--alpha", ta.alpha, "Interpolation factor (default 0.2 mixed, 0.25 otherwise)");
  train->add_option("--nu", ta.cfg.nu, "Noise-to-data ratio")->capture_default_str();
  train->add_option("--batch-size,--batch_size", ta.cfg.batch_size, "|D|")->capture_default_str();
  train->add_option("--lr-lambda,--lr_lambda", ta.cfg.lr_lambda)->capture_default_str();
  train->add_option("--lr-theta,--lr_theta", ta.cfg.lr_theta)->capture_default_str();
  train->add_option("--lr-zeta,--lr_zeta", ta.cfg.lr_zeta)->capture_default_str();
  train->add_option("--lr-noise,--lr_noise", ta.cfg.lr_noise)->capture_default_str();
  train->add_option("--noise-clip,--noise_clip", ta.cfg.noise_clip)->capture_default_str();
  train->add_option("--halving-threshold,--halving_threshold", ta.cfg.halving_threshold)->capture_default_str();
  train->add_option("--stop-ratio,--stop_ratio", ta.cfg.stop_ratio)->capture_default_str();
  train->add_option("--max-epochs,--max_epochs", ta.cfg.max_epochs)->capture_default_str();
  train->add_option("--seed", ta.cfg.seed)->capture_default_str();
  train->add_option("--max-train-length,--max_train_length", ta.cfg.max_train_length)->capture_default_str();
  train->add_option("--schedule", ta.schedule, "dev-halving or per-epoch-halving")->capture_default_str();
  train->add_option("--threads", ta.cfg.threads, "Worker threads (default: TRF_THREADS or 1)");
  train->add_option("--log", ta.log, "Epoch log path (default <model>.log)");
  train->add_option("--checkpoint", ta.checkpoint, "Write a resumable checkpoint after each epoch");
  train->add_option("--resume", ta.resume, "Resume from a checkpoint");

  std::string ppl_model, ppl_corpus;
  auto* ppl = app.add_subcommand("ppl", "Perplexity of a corpus");
  ppl->add_option("--model", ppl_model)->required();
  ppl->add_option("--corpus", ppl_corpus)->required();

  std::vector<std::string> rs_models;
  std::string rs_nbest, rs_refs;
  double rs_weight = 1.0;
  auto* rescore = app.add_subcommand("rescore", "Rescore N-best lists");
  rescore->add_option("--model", rs_models, "One or more models; several are equal-weight interpolated")->required();
  rescore->add_option("--nbest", rs_nbest, "utt<TAB>aux_score<TAB>words")->required();
  rescore->add_option("--refs", rs_refs, "utt<TAB>words; enables the WER report");
  rescore->add_option("--lm-weight,--lm_weight", rs_weight)->capture_default_str();

  std::string sm_noise;
  std::size_t sm_count = 10;
  std::uint64_t sm_seed = 1;
  auto* smp = app.add_subcommand("sample", "Sample sentences from a noise model");
  smp->add_option("--noise", sm_noise, "Noise model (<model>.noise)")->required();
  smp->add_option("--count", sm_count)->capture_default_str();
  smp->add_option("--seed", sm_seed)->capture_default_str();

  OracleArgs oa;
  auto* oracle = app.add_subcommand("oracle-check", "Exact-enumeration property checks");
  oracle->add_option("--vocab-size,--vocab_size", oa.vocab_size)->capture_default_str();
  oracle->add_option("--max-length,--max_length", oa.max_length)->capture_default_str();
  oracle->add_option("--dim", oa.dim)->capture_default_str();
  oracle->add_option("--models", oa.models, "Random models in the normalization check")->capture_default_str();
  oracle->add_option("--seed", oa.seed)->capture_default_str();
  oracle->add_option("--model", oa.model, "Compare a trained model's zeta with exact values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed() && !train_config.empty()) apply_config_file(train, train_config);
    if (train->parsed() && train->count("--threads") == 0) ta.cfg.threads = configured_threads();
    if (*cluster) return cmd_cluster(ca);
    if (*train) return cmd_train(ta);
    if (*ppl) return cmd_ppl(ppl_model, ppl_corpus);
    if (*rescore) return cmd_rescore(rs_models, rs_nbest, rs_refs, rs_weight);
    if (*smp) return cmd_sample(sm_noise, sm_count, sm_seed);
    if (*oracle) return cmd_oracle_check(oa);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const OracleGuardError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
