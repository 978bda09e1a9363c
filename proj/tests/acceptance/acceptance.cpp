// Acceptance checks: one PASS/FAIL line per criterion.
// usage: acceptance [--only N[,M...]] [--data DIR]

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "jtreekit/assembler.hpp"
#include "jtreekit/dataset.hpp"
#include "jtreekit/decoder.hpp"
#include "jtreekit/encoder.hpp"
#include "jtreekit/evalkit.hpp"
#include "jtreekit/latentdiff.hpp"
#include "jtreekit/model.hpp"
#include "jtreekit/pipeline.hpp"
#include "jtreekit/seqcodec.hpp"

using namespace jtk;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_data = JTK_TEST_DATA;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<mol::MolGraph> load(const std::string& file, std::size_t limit = SIZE_MAX) {
  std::vector<mol::MolGraph> out;
  for (const auto& s : mol::read_smiles_file(g_data + "/" + file)) {
    if (out.size() >= limit) break;
    out.push_back(mol::parse_smiles(s));
  }
  return out;
}

bool encodable(const jt::JunctionTree& t) {
  const std::vector<jt::JunctionTree> one{t};
  return seq::alphabet_coverage(one).fraction >= 1.0;
}

// ---------------------------------------------------------------- 1

Outcome validity() {
  const auto t0 = Clock::now();
  const fs::path dir = fs::temp_directory_path() / "jtk_acceptance_validity";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto smiles = mol::read_smiles_file(g_data + "/moses_sample.smi");
  const std::vector<std::string> train(smiles.begin(), smiles.begin() + std::min<std::size_t>(400, smiles.size()));
  mol::write_smiles_file((dir / "train.smi").string(), train);

  pipe::RunConfig c;
  c.dataset = (dir / "train.smi").string();
  c.vocab = (dir / "vocab.txt").string();
  c.checkpoint = (dir / "model.ckpt").string();
  c.latents = (dir / "latents.ckpt").string();
  c.diffusion = (dir / "diffusion.ckpt").string();
  c.hidden = 32;
  c.ffn = 64;
  c.epochs = 30;
  c.batch = 16;
  c.lr = 3e-3;
  c.decay = 1e-4;
  c.diff_hidden = 64;
  c.diff_depth = 4;
  c.diff_epochs = 100;
  c.diff_batch = 64;
  c.diff_lr = 2e-3;
  c.steps = 50;
  c.budget = 50;
  c.max_len = 64;
  c.seed = 11;
  c.validate();

  pipe::build_vocabulary(c).save(c.vocab);
  const auto vae = pipe::train_vae(c);
  diff::save_latents(c.latents, pipe::embed(c));
  pipe::train_diffusion(c);
  const auto samples = pipe::sample(c, 1000);
  fs::remove_all(dir);

  std::size_t valid = 0, partial = 0;
  std::set<std::string> unique;
  for (const auto& s : samples) {
    valid += s.valid;
    partial += s.partial;
    if (s.valid) unique.insert(s.smiles);
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = samples.size() == 1000 && valid == 1000 && secs <= 900.0;
  o.detail = std::to_string(valid) + "/1000 valence-valid, " + std::to_string(unique.size()) + " unique, " + std::to_string(partial) +
             " partial; train loss " + fmt("%.3g", vae.initial_loss) + " -> " + fmt("%.3g", vae.epoch_loss.back()) + "; " +
             fmt("%.0f", secs) + " s (limit 900 s)";
  return o;
}

// ---------------------------------------------------------------- 2

Outcome round_trip() {
  const auto gs = load("qm9_like.smi", 1000);
  const auto vocab = jt::build_vocab(gs);
  std::size_t tree_exact = 0, recovered = 0;
  for (const auto& g : gs) {
    const auto tree = jt::decompose(g);
    if (!encodable(tree)) continue;
    const auto back = seq::decode(seq::encode(tree, vocab), vocab);
    if (jt::tree_signature(back) == jt::tree_signature(tree)) ++tree_exact;
    assem::ScoreWeights w;
    w.match = 1.0;
    w.reference = g;
    if (assem::mcts_assemble(back, w).smiles == mol::canonical_smiles(g)) ++recovered;
  }
  const double n = static_cast<double>(gs.size());
  Outcome o;
  o.pass = gs.size() == 1000 && tree_exact == gs.size() && static_cast<double>(recovered) / n >= 0.90;
  o.detail = "tree level " + std::to_string(tree_exact) + "/" + std::to_string(gs.size()) + " exact; assembled " + std::to_string(recovered) +
             "/" + std::to_string(gs.size()) + " (" + fmt("%.1f", 100.0 * static_cast<double>(recovered) / n) + "%, need >= 90%)";
  return o;
}

// ---------------------------------------------------------------- 3

Outcome codec() {
  const auto corpus = load("qm9_like.smi");
  const auto vocab = jt::build_vocab(corpus);
  std::mt19937_64 rng(2024);
  int checked = 0, failures = 0, attempts = 0;
  while (checked < 10000) {
    ++attempts;
    const int n = 1 + static_cast<int>(rng() % 40);
    jt::JunctionTree t;
    for (int i = 0; i < n; ++i) t.nodes.push_back(vocab.junction(jt::Vocabulary::kReserved + static_cast<int>(rng() % static_cast<unsigned>(vocab.num_fragments()))));
    for (int i = 1; i < n; ++i) {
      // bias toward recent fathers so deep and wide trees both appear
      const int span = 1 + static_cast<int>(rng() % static_cast<unsigned>(std::min(i, 6)));
      t.edges.push_back({i - span + static_cast<int>(rng() % static_cast<unsigned>(span)), i, {}});
    }
    if (!encodable(t)) continue;
    ++checked;
    const auto s = seq::encode(t, vocab);
    const auto back = seq::decode(s, vocab);
    if (jt::tree_signature(back) != jt::tree_signature(t) || !(seq::encode(back, vocab) == s)) ++failures;
  }
  std::vector<jt::JunctionTree> trees;
  for (const auto& g : corpus) trees.push_back(jt::decompose(g));
  const auto cov = seq::alphabet_coverage(trees);
  Outcome o;
  o.pass = failures == 0 && cov.fraction >= 0.99;
  o.detail = std::to_string(failures) + " failures on " + std::to_string(checked) + " fuzzed encodable trees (" + std::to_string(attempts) +
             " generated); QM9-subset alphabet coverage " + fmt("%.4f", cov.fraction) + " (max advance " + std::to_string(cov.max_advance) + ")";
  return o;
}

// ---------------------------------------------------------------- 4

void perturb_biases(nd::ParamStore& store, nd::Rng& rng) {
  for (nd::Param* p : store.all()) {
    const auto& n = p->name;
    if (n.size() > 2 && n.compare(n.size() - 2, 2, ".b") == 0) {
      for (double& x : p->value.data) x = 0.1 * rng.normal();
    }
  }
}

nd::Matrix filled(int r, int c, nd::Rng& rng) {
  nd::Matrix m(r, c);
  for (double& x : m.data) x = rng.normal();
  return m;
}

Outcome gradients() {
  const auto gs = load("fixture32.smi");
  const auto vocab = jt::build_vocab(gs);
  const auto ex = model::make_example(gs[5], vocab);
  std::vector<std::pair<std::string, double>> errs;
  auto run = [&](const std::string& name, const std::function<nd::Var(nd::Tape&)>& f, nd::ParamStore& store, std::uint64_t seed) {
    errs.emplace_back(name, nd::grad_check(f, store, 1e-4, 256, seed));
  };

  {
    nd::ParamStore store;
    nd::Rng rng(1);
    enc::EncoderConfig ec;
    ec.layers = 2;
    ec.hidden = 8;
    ec.heads = 2;
    ec.ffn = 16;
    ec.vocab_size = vocab.size();
    enc::Encoder e(ec, store, rng);
    perturb_biases(store, rng);
    const auto& in = ex.encoder_input;
    const int rows = static_cast<int>(in.features.size()) + 1;
    const nd::Matrix wts = filled(rows, 8, rng);
    const nd::Matrix target = filled(1, 8, rng);
    auto weighted = [&](nd::Tape& t, nd::Var h) { return t.sum(t.mul(h, t.constant(wts))); };
    run("encoder attention", [&](nd::Tape& t) { return weighted(t, e.attn_block(t, e.embed(t, in.features), in.adjacency, 0)); }, store, 11);
    run("encoder gcn", [&](nd::Tape& t) { return weighted(t, e.gcn_block(t, e.embed(t, in.features), in.adjacency, 0)); }, store, 12);
    run("encoder layer", [&](nd::Tape& t) { return weighted(t, e.layer(t, e.embed(t, in.features), in.adjacency, 0)); }, store, 13);
    run("encoder readout", [&](nd::Tape& t) { return t.mse(e.encode(t, in), target); }, store, 14);
  }
  {
    nd::ParamStore store;
    nd::Rng rng(2);
    dec::DecoderConfig dc;
    dc.layers = 2;
    dc.hidden = 8;
    dc.heads = 2;
    dc.ffn = 16;
    dc.latent = 6;
    dc.vocab_size = vocab.size();
    dec::Decoder d(dc, store, rng);
    perturb_biases(store, rng);
    for (nd::Param* p : store.all()) {
      if (p->name.rfind("dec.emb.", 0) == 0) {
        for (double& x : p->value.data) x = rng.normal();
      }
    }
    nd::Param& z = store.create_normal("z", 1, 6, 1.0, rng);
    const auto& in = ex.decoder_input;
    const nd::Matrix wts = filled(in.rows(), 8, rng);
    const nd::Matrix aux_target = filled(1, 3, rng);
    auto weighted = [&](nd::Tape& t, nd::Var h) { return t.sum(t.mul(h, t.constant(wts))); };
    run("dagcn layer", [&](nd::Tape& t) { return weighted(t, d.dagcn_block(t, d.embed(t, t.param(z), in), in.laplacian, 0)); }, store, 21);
    run("masked attention", [&](nd::Tape& t) { return weighted(t, d.masked_attn_block(t, d.embed(t, t.param(z), in), 0)); }, store, 22);
    run("decoder layer", [&](nd::Tape& t) { return weighted(t, d.layer(t, d.embed(t, t.param(z), in), in.laplacian, 1)); }, store, 23);
    const nd::Matrix jw = filled(in.rows(), dec::num_junction_classes(vocab.size()), rng);
    const nd::Matrix pw = filled(in.rows(), dc.alphabet, rng);
    run("junction/position heads",
        [&](nd::Tape& t) {
          const auto out = d.forward(t, t.param(z), in);
          return t.add(t.sum(t.mul(out.junction_logits, t.constant(jw))), t.sum(t.mul(out.position_logits, t.constant(pw))));
        },
        store, 24);
    run("property head", [&](nd::Tape& t) { return t.mse(d.aux(t, t.param(z)), aux_target); }, store, 25);
    run("decoder loss", [&](nd::Tape& t) { return d.loss(t, t.param(z), in, aux_target).total; }, store, 26);
  }
  {
    auto mc = model::default_config(vocab.size());
    mc.encoder.layers = mc.decoder.layers = 1;
    mc.encoder.hidden = mc.decoder.hidden = mc.decoder.latent = 8;
    mc.encoder.heads = mc.decoder.heads = 2;
    mc.encoder.ffn = mc.decoder.ffn = 16;
    model::Model m(mc, 3);
    nd::Rng rng(3);
    perturb_biases(m.params(), rng);
    run("autoencoder loss", [&](nd::Tape& t) { return m.loss(t, ex).total; }, m.params(), 31);
  }
  {
    diff::DiffusionConfig cfg;
    cfg.net = {4, 8, 3};
    diff::Diffusion d(cfg, 4);
    nd::Rng rng(4);
    perturb_biases(d.params(), rng);
    const nd::Matrix h = filled(5, 4, rng);
    const nd::Matrix eps = filled(5, 4, rng);
    const std::vector<int> times{1, 10, 250, 600, 1000};
    const nd::Matrix target = filled(5, 4, rng);
    run("skip net", [&](nd::Tape& t) { return t.mse(d.net().forward(t, t.constant(h), times), target); }, d.params(), 41);
    run("noise loss (mse)", [&](nd::Tape& t) { return d.loss(t, h, times, eps, diff::NoiseLoss::Mse); }, d.params(), 42);
    run("noise loss (mae)", [&](nd::Tape& t) { return d.loss(t, h, times, eps, diff::NoiseLoss::Mae); }, d.params(), 43);
  }

  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, e] : errs) {
    const double v = std::isnan(e) ? INFINITY : e;
    if (worst_name.empty() || v > worst) worst = v, worst_name = name;
  }
  Outcome o;
  o.pass = worst <= 1e-4;
  std::ostringstream ss;
  ss << errs.size() << " blocks, max relative error " << fmt("%.2e", worst) << " (" << worst_name << ")";
  o.detail = ss.str();
  return o;
}

// ---------------------------------------------------------------- 5

Outcome causality() {
  nd::ParamStore store;
  nd::Rng rng(5);
  dec::DecoderConfig dc;
  dc.layers = 3;
  dc.hidden = 16;
  dc.heads = 4;
  dc.ffn = 32;
  dc.latent = 16;
  dc.vocab_size = 40;
  dec::Decoder d(dc, store, rng);
  perturb_biases(store, rng);
  auto random_token = [&](std::vector<int>& fathers, int k) {
    int pos = 0;
    if (k > 0) {
      const auto ok = seq::feasible_cases(fathers, dc.alphabet);
      do {
        pos = rng.below(dc.alphabet);
      } while (!ok[static_cast<std::size_t>(pos)]);
    }
    fathers.push_back(k == 0 ? -1 : seq::father_from_case(fathers, k, pos));
    return seq::Token{jt::Vocabulary::kReserved + rng.below(dc.vocab_size - jt::Vocabulary::kReserved), pos};
  };
  int bad = 0;
  long compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + rng.below(20);
    std::vector<seq::Token> items;
    std::vector<int> fathers;
    for (int k = 0; k < n; ++k) items.push_back(random_token(fathers, k));
    nd::Matrix z = filled(1, dc.latent, rng);
    const int i = rng.below(n);  // tokens after position i are replaced
    auto changed = items;
    std::vector<int> f2 = seq::decode_fathers(std::span(items).first(static_cast<std::size_t>(i + 1)));
    for (int k = i + 1; k < n; ++k) changed[static_cast<std::size_t>(k)] = random_token(f2, k);
    nd::Tape a, b;
    const auto oa = d.forward(a, a.constant(z), dec::decoder_input(items));
    const auto ob = d.forward(b, b.constant(z), dec::decoder_input(changed));
    // row r predicts item r from items < r, so rows 0..i+1 depend only on items 0..i
    const auto& ja = a.value(oa.junction_logits);
    const auto& jb = b.value(ob.junction_logits);
    const auto& pa = a.value(oa.position_logits);
    const auto& pb = b.value(ob.position_logits);
    for (int r = 0; r <= i + 1; ++r) {
      for (int c = 0; c < ja.cols; ++c, ++compared) bad += ja(r, c) != jb(r, c);
      for (int c = 0; c < pa.cols; ++c, ++compared) bad += pa(r, c) != pb(r, c);
    }
  }
  Outcome o;
  o.pass = bad == 0;
  o.detail = std::to_string(bad) + " differing logits of " + std::to_string(compared) + " compared over 100 random cases";
  return o;
}

// ---------------------------------------------------------------- 6

const std::array<std::array<double, 2>, 4> kMeans{{{2.0, 2.0}, {-2.0, 2.0}, {-2.0, -2.0}, {2.0, -2.0}}};

nd::Matrix four_gaussians(int n, std::uint64_t seed) {
  nd::Rng rng(seed);
  nd::Matrix m(n, 2);
  for (int r = 0; r < n; ++r) {
    const auto& mu = kMeans[static_cast<std::size_t>(r % 4)];
    m(r, 0) = mu[0] + 0.3 * rng.normal();
    m(r, 1) = mu[1] + 0.3 * rng.normal();
  }
  return m;
}

Outcome ddim() {
  const auto s = diff::make_schedule(1000);
  double worst_abs = 0.0, worst_rel = 0.0;
  for (int t = 1; t <= s.T; ++t) {
    const double sig = s.sigma(t, t - 1, 1.0);
    const double pv = s.posterior_variance(t);
    worst_abs = std::max(worst_abs, std::abs(sig * sig - pv));
    if (pv > 0.0) worst_rel = std::max(worst_rel, std::abs(sig * sig - pv) / pv);
  }

  diff::DiffusionConfig cfg;
  cfg.net = {2, 32, 6};
  diff::Diffusion d(cfg, 7);
  diff::DiffusionTrainConfig tc;
  tc.loss = diff::NoiseLoss::Mse;
  tc.epochs = 600;
  tc.batch = 128;
  tc.lr = {3e-3, 50, 2e-4};
  tc.seed = 3;
  d.train(four_gaussians(4000, 11), tc);

  const bool reproducible = d.sample(200, 50, 0.0, 9).data == d.sample(200, 50, 0.0, 9).data;

  // samples assigned to the nearest true mean, pooled over 10 sampling seeds
  std::array<std::array<double, 2>, 4> sum{};
  std::array<int, 4> count{};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto x = d.sample(400, 100, 0.0, seed);
    for (int r = 0; r < x.rows; ++r) {
      std::size_t best = 0;
      double bd = 1e300;
      for (std::size_t k = 0; k < 4; ++k) {
        const double dist = std::hypot(x(r, 0) - kMeans[k][0], x(r, 1) - kMeans[k][1]);
        if (dist < bd) bd = dist, best = k;
      }
      sum[best][0] += x(r, 0);
      sum[best][1] += x(r, 1);
      ++count[best];
    }
  }
  double worst_mean = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double e = count[k] == 0 ? INFINITY : std::hypot(sum[k][0] / count[k] - kMeans[k][0], sum[k][1] / count[k] - kMeans[k][1]);
    worst_mean = std::max(worst_mean, e);
  }

  const auto a = d.sample(400, 1000, 1.0, 101);
  const auto b = d.sample_ancestral(400, 202);
  double min_p = 1.0;
  for (int j = 0; j < 2; ++j) {
    std::vector<double> xa, xb;
    for (int r = 0; r < 400; ++r) xa.push_back(a(r, j)), xb.push_back(b(r, j));
    min_p = std::min(min_p, diff::ks_two_sample(xa, xb).p_value);
  }

  Outcome o;
  o.pass = worst_rel <= 1e-10 && worst_abs <= 1e-10 && reproducible && worst_mean < 0.1 && min_p > 0.01;
  o.detail = "sigma^2 vs posterior variance max abs " + fmt("%.1e", worst_abs) + " rel " + fmt("%.1e", worst_rel) + "; eta=0 " +
             (reproducible ? "bit-reproducible" : "NOT reproducible") + "; 4-Gaussian worst mean error " + fmt("%.3f", worst_mean) +
             " (10 seeds); KS eta=1 vs ancestral min p " + fmt("%.3f", min_p);
  return o;
}

// ---------------------------------------------------------------- 7

Outcome overfit() {
  const auto t0 = Clock::now();
  const auto gs = load("fixture32.smi");
  const auto vocab = jt::build_vocab(gs);
  std::vector<model::Example> examples;
  for (const auto& g : gs) examples.push_back(model::make_example(g, vocab));
  auto mc = model::default_config(vocab.size());
  mc.encoder.layers = mc.decoder.layers = 2;
  mc.encoder.hidden = mc.decoder.hidden = mc.decoder.latent = 32;
  mc.encoder.ffn = mc.decoder.ffn = 64;
  model::Model m(mc, 7);
  m.aux_stats = model::fit_aux_stats(examples);
  std::vector<const model::Example*> order;
  for (const auto& e : examples) order.push_back(&e);
  nd::Rng rng(8);
  const nd::LrSchedule sched{3e-3, 4, 1e-3};
  long step = 0;
  double acc = 0.0;
  int epoch = 0;
  while (seconds_since(t0) < 600.0 && epoch < 500) {
    ++epoch;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(static_cast<int>(i)))]);
    for (std::size_t b = 0; b < order.size(); b += 8) {
      nd::AdamConfig adam;
      adam.lr = sched.at(step++);
      m.train_step(std::span(order).subspan(b, std::min<std::size_t>(8, order.size() - b)), adam);
    }
    model::TokenAccuracy total;
    for (const auto& e : examples) {
      const auto a = m.teacher_accuracy(e);
      total.correct += a.correct;
      total.total += a.total;
    }
    acc = total.fraction();
    if (acc >= 0.95) break;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = acc >= 0.95 && secs <= 600.0;
  o.detail = "teacher-forced token accuracy " + fmt("%.3f", acc) + " after " + std::to_string(epoch) + " epochs in " + fmt("%.1f", secs) + " s";
  return o;
}

// ---------------------------------------------------------------- 8

Outcome metrics() {
  const auto k_same = eval::evaluate_smiles(std::vector<std::string>(7, "CC(=O)Nc1ccc(O)cc1"), {});
  const auto a = mol::parse_smiles("CCOc1ccccc1");
  const auto b = mol::parse_smiles("CCNC(=O)C1CCCC1");
  const double tau = mol::tanimoto(mol::fingerprint(a), mol::fingerprint(b));
  const std::vector<std::optional<mol::MolGraph>> pair{a, b};
  const double two = eval::evaluate(pair, {}).intdiv1;
  const double closed = 1.0 - (1.0 + tau) / 2.0;
  const std::vector<std::string> gen{"CCO", "c1ccccc1", "CC(=O)O", "OCC"};
  std::set<std::string> train;
  for (const char* s : {"CCO", "c1ccccc1", "CC(=O)O", "CCN"}) train.insert(mol::canonical_smiles(mol::parse_smiles(s)));
  const double novelty = eval::evaluate_smiles(gen, train).novelty_fraction;
  Outcome o;
  o.pass = k_same.intdiv1 == 0.0 && std::abs(two - closed) <= 1e-9 && novelty == 0.0;
  o.detail = "IntDiv1 of 7 identical = " + fmt("%.17g", k_same.intdiv1) + "; pair |IntDiv1 - closed form| = " + fmt("%.1e", std::abs(two - closed)) +
             " (tau " + fmt("%.4f", tau) + "); novelty with all samples in train = " + fmt("%g", novelty);
  return o;
}

// ---------------------------------------------------------------- 9

Outcome mcts_optimality() {
  assem::ScoreWeights w;
  w.targets.push_back({assem::Property::LogP, 0.5, 1.0});
  w.targets.push_back({assem::Property::Tpsa, 30.0, 20.0});
  assem::MctsOptions opts;
  opts.budget = 5000;
  std::set<std::string> seen;
  int trees = 0, mismatches = 0;
  for (const char* file : {"fixture10.smi", "fixture32.smi", "qm9_like.smi", "moses_sample.smi"}) {
    for (const auto& g : load(file)) {
      const auto t = jt::decompose(g);
      if (t.size() > 4 || !seen.insert(mol::canonical_smiles(g)).second) continue;
      ++trees;
      const auto all = assem::enumerate_assemblies(t, w);
      const auto m = assem::mcts_assemble(t, w, opts);
      if (all.empty() || m.smiles != all[0].smiles || std::abs(m.score - all[0].score) > 1e-12) ++mismatches;
    }
  }
  Outcome o;
  o.pass = trees > 0 && mismatches == 0;
  o.detail = std::to_string(mismatches) + " mismatches over " + std::to_string(trees) + " distinct trees of <= 4 nodes (budget 5000)";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else if (a == "--data" && i + 1 < argc) {
      g_data = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--only N[,M...]] [--data DIR]\n", argv[0]);
      return 2;
    }
  }
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"validity of 1000 sampled molecules", validity},
      {"round-trip reconstruction", round_trip},
      {"codec correctness", codec},
      {"gradient checks", gradients},
      {"decoder causality", causality},
      {"DDIM identities", ddim},
      {"training smoke (overfit 32)", overfit},
      {"metrics oracle", metrics},
      {"MCTS optimality at small scale", mcts_optimality},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("[%s] criterion %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
