#include "jtreekit/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "jtreekit/dataset.hpp"

namespace jtk::pipe {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) fail(ErrorCode::Config, "bad value for " + key + ": '" + v + "'");
  return out;
}

assem::Property parse_property(const std::string& name) {
  const std::string n = lower(name);
  if (n == "w" || n == "weight") return assem::Property::Weight;
  if (n == "logp") return assem::Property::LogP;
  if (n == "tpsa") return assem::Property::Tpsa;
  fail(ErrorCode::Config, "unknown property '" + name + "'");
}

std::vector<assem::PropertyTarget> parse_targets(const std::string& v) {
  std::vector<assem::PropertyTarget> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream is(item);
    std::string p;
    while (std::getline(is, p, ':')) parts.push_back(trim(p));
    if (parts.size() < 2 || parts.size() > 3) fail(ErrorCode::Config, "target must be property:value[:width], got '" + item + "'");
    assem::PropertyTarget t;
    t.property = parse_property(parts[0]);
    t.target = parse_number<double>("targets", parts[1]);
    if (parts.size() == 3) t.width = parse_number<double>("targets", parts[2]);
    out.push_back(t);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

template <class T>
Setter num(T RunConfig::*field) {
  return [field](RunConfig& c, const std::string& k, const std::string& v) { c.*field = parse_number<T>(k, v); };
}

Setter str(std::string RunConfig::*field) {
  return [field](RunConfig& c, const std::string&, const std::string& v) { c.*field = v; };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"paths.dataset", str(&RunConfig::dataset)},
      {"paths.vocab", str(&RunConfig::vocab)},
      {"paths.checkpoint", str(&RunConfig::checkpoint)},
      {"paths.latents", str(&RunConfig::latents)},
      {"paths.diffusion", str(&RunConfig::diffusion)},
      {"model.layers", num(&RunConfig::layers)},
      {"model.hidden", num(&RunConfig::hidden)},
      {"model.heads", num(&RunConfig::heads)},
      {"model.ffn", num(&RunConfig::ffn)},
      {"model.aux_weight", num(&RunConfig::aux_weight)},
      {"train.epochs", num(&RunConfig::epochs)},
      {"train.batch", num(&RunConfig::batch)},
      {"train.lr", num(&RunConfig::lr)},
      {"train.warmup", num(&RunConfig::warmup)},
      {"train.decay", num(&RunConfig::decay)},
      {"train.clip", num(&RunConfig::clip)},
      {"diffusion.T", num(&RunConfig::T)},
      {"diffusion.beta_start", num(&RunConfig::beta_start)},
      {"diffusion.beta_end", num(&RunConfig::beta_end)},
      {"diffusion.hidden", num(&RunConfig::diff_hidden)},
      {"diffusion.depth", num(&RunConfig::diff_depth)},
      {"diffusion.epochs", num(&RunConfig::diff_epochs)},
      {"diffusion.batch", num(&RunConfig::diff_batch)},
      {"diffusion.lr", num(&RunConfig::diff_lr)},
      {"diffusion.warmup", num(&RunConfig::diff_warmup)},
      {"diffusion.decay", num(&RunConfig::diff_decay)},
      {"diffusion.loss",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string l = lower(v);
         if (l == "mse") c.diff_loss = diff::NoiseLoss::Mse;
         else if (l == "mae") c.diff_loss = diff::NoiseLoss::Mae;
         else fail(ErrorCode::Config, "bad value for " + k + ": '" + v + "' (mse or mae)");
       }},
      {"diffusion.steps", num(&RunConfig::steps)},
      {"diffusion.eta", num(&RunConfig::eta)},
      {"sample.max_len", num(&RunConfig::max_len)},
      {"sample.temperature", num(&RunConfig::temperature)},
      {"assembly.budget", num(&RunConfig::budget)},
      {"assembly.lambda_likelihood", num(&RunConfig::lambda_likelihood)},
      {"assembly.lambda_property", num(&RunConfig::lambda_property)},
      {"assembly.targets", [](RunConfig& c, const std::string&, const std::string& v) { c.targets = parse_targets(v); }},
      {"run.seed", num(&RunConfig::seed)},
      {"run.workers", num(&RunConfig::workers)},
  };
  return table;
}

void positive(bool ok, const char* key) {
  if (!ok) fail(ErrorCode::Config, std::string(key) + " must be positive");
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t i) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void emit(const LogSink& log, const std::string& line) {
  if (log) log(line);
}

// Runs fn(i) for i in [0, n) across `workers` threads; each index is written by one thread.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

model::Model load_model(const RunConfig& cfg) {
  require_input(cfg.checkpoint, "checkpoint");
  return model::Model::from_checkpoint(nd::Checkpoint::load(cfg.checkpoint));
}

jt::Vocabulary load_vocab(const RunConfig& cfg) {
  require_input(cfg.vocab, "vocab");
  return jt::Vocabulary::load(cfg.vocab);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  positive(layers > 0, "model.layers");
  positive(hidden > 0, "model.hidden");
  positive(heads > 0, "model.heads");
  if (hidden % heads != 0) fail(ErrorCode::Config, "model.hidden must be a multiple of model.heads");
  positive(ffn > 0, "model.ffn");
  if (!(aux_weight >= 0.0)) fail(ErrorCode::Config, "model.aux_weight must be >= 0");
  positive(epochs > 0, "train.epochs");
  positive(batch > 0, "train.batch");
  positive(lr > 0.0, "train.lr");
  if (warmup < -1) fail(ErrorCode::Config, "train.warmup must be >= 0 (or -1 for one epoch)");
  if (!(decay >= 0.0)) fail(ErrorCode::Config, "train.decay must be >= 0");
  if (!(clip >= 0.0)) fail(ErrorCode::Config, "train.clip must be >= 0");
  positive(T > 1, "diffusion.T");
  positive(beta_start > 0.0 && beta_end >= beta_start && beta_end < 1.0, "diffusion.beta_start/beta_end");
  positive(diff_hidden > 0, "diffusion.hidden");
  positive(diff_depth > 0, "diffusion.depth");
  positive(diff_epochs > 0, "diffusion.epochs");
  positive(diff_batch > 0, "diffusion.batch");
  positive(diff_lr > 0.0, "diffusion.lr");
  if (diff_warmup < 0 || !(diff_decay >= 0.0)) fail(ErrorCode::Config, "diffusion.warmup and diffusion.decay must be >= 0");
  if (steps < 1 || steps > T) fail(ErrorCode::Config, "diffusion.steps must lie in [1, T]");
  if (!(eta >= 0.0 && eta <= 1.0)) fail(ErrorCode::Config, "diffusion.eta must lie in [0, 1]");
  positive(max_len > 0, "sample.max_len");
  if (!(temperature >= 0.0)) fail(ErrorCode::Config, "sample.temperature must be >= 0");
  positive(budget > 0, "assembly.budget");
  positive(workers > 0, "run.workers");
  assem::validate(score_weights());
}

assem::ScoreWeights RunConfig::score_weights() const {
  assem::ScoreWeights w;
  w.likelihood = lambda_likelihood;
  w.property = lambda_property;
  w.targets = targets;
  return w;
}

void set_option(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) fail(ErrorCode::Config, "unknown key '" + key + "'");
  it->second(cfg, key, value);
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::Config, where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Config, where + "expected key = value");
    const std::string key = (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
    try {
      set_option(cfg, key, trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(e.code(), where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_config(ss.str());
  // relative paths resolve against the config file's directory
  const auto base = std::filesystem::path(path).parent_path();
  for (std::string* p : {&cfg.dataset, &cfg.vocab, &cfg.checkpoint, &cfg.latents, &cfg.diffusion}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  return cfg;
}

void apply_environment(RunConfig& cfg) {
  const char* s = std::getenv("JTREEKIT_SEED");
  if (s == nullptr || *s == '\0') return;
  cfg.seed = parse_number<std::uint64_t>("JTREEKIT_SEED", trim(s));
}

void require_input(const std::string& path, const char* what) {
  if (path.empty()) fail(ErrorCode::MissingArtifact, std::string(what) + " path is not set");
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingArtifact, std::string(what) + " not found: " + path);
}

void require_output(const std::string& path, const char* what, bool overwrite) {
  if (path.empty()) fail(ErrorCode::Config, std::string(what) + " path is not set");
  if (!overwrite && std::filesystem::exists(path)) {
    fail(ErrorCode::Config, std::string(what) + " already exists (pass --overwrite): " + path);
  }
}

std::vector<mol::MolGraph> load_dataset(const std::string& path) {
  require_input(path, "dataset");
  std::vector<mol::MolGraph> out;
  for (const auto& s : mol::read_smiles_file(path)) out.push_back(mol::parse_smiles(s));
  if (out.empty()) fail(ErrorCode::EmptyDataset, "dataset has no molecules: " + path);
  return out;
}

jt::Vocabulary build_vocabulary(const RunConfig& cfg) { return jt::build_vocab(load_dataset(cfg.dataset)); }

VaeReport train_vae(const RunConfig& cfg, const LogSink& log) {
  const auto graphs = load_dataset(cfg.dataset);
  const auto vocab = load_vocab(cfg);
  VaeReport rep;
  std::vector<model::Example> examples;
  for (const auto& g : graphs) {
    try {
      examples.push_back(model::make_example(g, vocab));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::UnknownJunctionId) throw;
      ++rep.skipped;
    }
  }
  if (examples.empty()) fail(ErrorCode::EmptyDataset, "no encodable molecules in " + cfg.dataset);
  rep.examples = examples.size();
  if (rep.skipped > 0) emit(log, "skipped " + std::to_string(rep.skipped) + " molecules with unencodable trees");

  auto mc = model::default_config(vocab.size());
  mc.encoder.layers = mc.decoder.layers = cfg.layers;
  mc.encoder.hidden = mc.decoder.hidden = mc.decoder.latent = cfg.hidden;
  mc.encoder.heads = mc.decoder.heads = cfg.heads;
  mc.encoder.ffn = mc.decoder.ffn = cfg.ffn;
  mc.weights.aux = cfg.aux_weight;
  model::Model m(mc, cfg.seed);
  m.aux_stats = model::fit_aux_stats(examples);

  for (const auto& e : examples) {
    nd::Tape t;
    rep.initial_loss += t.value(m.loss(t, e).total).data[0];
  }
  rep.initial_loss /= static_cast<double>(examples.size());
  emit(log, "initial loss " + fmt(rep.initial_loss));

  const long per_epoch = static_cast<long>((examples.size() + static_cast<std::size_t>(cfg.batch) - 1) / static_cast<std::size_t>(cfg.batch));
  const nd::LrSchedule sched{cfg.lr, cfg.warmup < 0 ? per_epoch : cfg.warmup, cfg.decay};
  nd::Rng rng(mix(cfg.seed, 101));
  std::vector<const model::Example*> order;
  for (const auto& e : examples) order.push_back(&e);
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(static_cast<int>(i)))]);
    double sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t len = std::min(static_cast<std::size_t>(cfg.batch), order.size() - b);
      nd::AdamConfig adam;
      adam.lr = sched.at(step++);
      sum += m.train_step(std::span(order).subspan(b, len), adam, cfg.clip).loss * static_cast<double>(len);
    }
    rep.epoch_loss.push_back(sum / static_cast<double>(order.size()));
    m.checkpoint().save(cfg.checkpoint);
    emit(log, "epoch " + std::to_string(epoch + 1) + " loss " + fmt(rep.epoch_loss.back()));
  }
  model::TokenAccuracy acc;
  for (const auto& e : examples) {
    const auto a = m.teacher_accuracy(e);
    acc.correct += a.correct;
    acc.total += a.total;
  }
  rep.token_accuracy = acc.fraction();
  emit(log, "teacher-forced token accuracy " + fmt(rep.token_accuracy));
  return rep;
}

nd::Matrix embed(const RunConfig& cfg, const LogSink& log) {
  const auto graphs = load_dataset(cfg.dataset);
  const auto vocab = load_vocab(cfg);
  const auto m = load_model(cfg);
  std::vector<model::Example> examples;
  std::size_t skipped = 0;
  for (const auto& g : graphs) {
    try {
      examples.push_back(model::make_example(g, vocab));
    } catch (const Error&) {
      ++skipped;
    }
  }
  if (examples.empty()) fail(ErrorCode::EmptyDataset, "no encodable molecules in " + cfg.dataset);
  if (skipped > 0) emit(log, "skipped " + std::to_string(skipped) + " molecules");
  const int width = m.config().encoder.hidden;
  nd::Matrix out(static_cast<int>(examples.size()), width);
  parallel_for(out.rows, cfg.workers, [&](int i) {
    const auto z = m.latent(examples[static_cast<std::size_t>(i)]);
    std::copy(z.data.begin(), z.data.end(), out.row(i));
  });
  emit(log, "embedded " + std::to_string(out.rows) + " molecules");
  return out;
}

std::vector<double> train_diffusion(const RunConfig& cfg, const LogSink& log) {
  require_input(cfg.latents, "latents");
  const auto latents = diff::load_latents(cfg.latents);
  diff::DiffusionConfig dc;
  dc.net.width = latents.cols;
  dc.net.hidden = cfg.diff_hidden;
  dc.net.depth = cfg.diff_depth;
  dc.T = cfg.T;
  dc.beta_start = cfg.beta_start;
  dc.beta_end = cfg.beta_end;
  diff::Diffusion d(dc, cfg.seed);
  diff::DiffusionTrainConfig tc;
  tc.loss = cfg.diff_loss;
  tc.epochs = cfg.diff_epochs;
  tc.batch = cfg.diff_batch;
  tc.lr = {cfg.diff_lr, cfg.diff_warmup, cfg.diff_decay};
  tc.clip = cfg.clip;
  tc.seed = mix(cfg.seed, 202);
  const auto losses = d.train(latents, tc);
  for (std::size_t e = 0; e < losses.size(); ++e) {
    if ((e + 1) % 10 == 0 || e + 1 == losses.size()) emit(log, "epoch " + std::to_string(e + 1) + " loss " + fmt(losses[e]));
  }
  d.checkpoint().save(cfg.diffusion);
  return losses;
}

Decoded decode_latent(const model::Model& m, const jt::Vocabulary& vocab, const nd::Matrix& z, const RunConfig& cfg,
                      std::uint64_t seed) {
  // Generation keeps a greedy partial assembly of the prefix and refuses junctions
  // that cannot attach to it.
  jt::JunctionTree tree;
  assem::PartialAssembly state;
  auto grow = [&](std::span<const seq::Token> prefix, std::span<const int> fathers) {
    while (tree.size() < prefix.size()) {
      const int k = static_cast<int>(tree.size());
      tree.nodes.push_back(vocab.junction(prefix[static_cast<std::size_t>(k)].id));
      if (k == 0) {
        state = assem::PartialAssembly::start(tree, 0);
        continue;
      }
      const int f = fathers[static_cast<std::size_t>(k)];
      tree.edges.push_back({f, k, {}});
      state.atoms.emplace_back();
      state.dropped.push_back(0);
      if (state.dropped[static_cast<std::size_t>(f)] || !state.is_placed(f)) {
        state.dropped.back() = 1;
        continue;
      }
      auto next = assem::attachment_states(tree, state, f, k);
      if (next.empty()) state.dropped.back() = 1;
      else state = std::move(next.front());
    }
  };
  dec::GenerateOptions go;
  go.max_len = cfg.max_len;
  go.temperature = cfg.temperature;
  go.filter = [&](std::span<const seq::Token> prefix, std::span<const int> fathers, int father, int id) {
    if (father < 0) return true;
    grow(prefix, fathers);
    if (state.dropped[static_cast<std::size_t>(father)] || !state.is_placed(father)) return true;
    tree.nodes.push_back(vocab.junction(id));
    tree.edges.push_back({father, static_cast<int>(tree.size()) - 1, {}});
    state.atoms.emplace_back();
    state.dropped.push_back(0);
    const bool ok = assem::can_attach(tree, state, father, static_cast<int>(tree.size()) - 1);
    tree.nodes.pop_back();
    tree.edges.pop_back();
    state.atoms.pop_back();
    state.dropped.pop_back();
    return ok;
  };
  nd::Rng rng(mix(seed, 1));
  const auto g = m.decoder().generate(z, go, rng);
  Decoded out;
  out.truncated = g.truncated;
  out.nodes = static_cast<int>(g.seq.num_nodes());
  try {
    tree = seq::decode(g.seq, vocab);
  } catch (const Error&) {
    return out;
  }
  if (tree.size() == 0) return out;
  assem::MctsOptions mo;
  mo.budget = cfg.budget;
  mo.seed = mix(seed, 2);
  const auto r = assem::mcts_assemble(tree, cfg.score_weights(), mo);
  out.smiles = r.smiles;
  out.partial = r.partial;
  out.valid = r.mol.num_atoms() > 0 && mol::check_valence(r.mol).empty();
  return out;
}

std::vector<Decoded> sample(const RunConfig& cfg, int n, const LogSink& log) {
  if (n < 1) fail(ErrorCode::Config, "sample count must be positive");
  const auto vocab = load_vocab(cfg);
  const auto m = load_model(cfg);
  require_input(cfg.diffusion, "diffusion weights");
  const auto d = diff::Diffusion::from_checkpoint(nd::Checkpoint::load(cfg.diffusion));
  if (d.config().net.width != m.config().encoder.hidden) {
    fail(ErrorCode::WidthMismatch, "diffusion width " + std::to_string(d.config().net.width) + " does not match latent width " +
                                       std::to_string(m.config().encoder.hidden));
  }
  const auto latents = d.sample(n, cfg.steps, cfg.eta, mix(cfg.seed, 303));
  emit(log, "sampled " + std::to_string(n) + " latents with " + std::to_string(cfg.steps) + " steps");
  std::vector<Decoded> out(static_cast<std::size_t>(n));
  parallel_for(n, cfg.workers, [&](int i) {
    nd::Matrix z(1, latents.cols);
    std::copy(latents.row(i), latents.row(i) + latents.cols, z.data.begin());
    out[static_cast<std::size_t>(i)] = decode_latent(m, vocab, z, cfg, mix(cfg.seed, 1000 + static_cast<std::uint64_t>(i)));
  });
  return out;
}

std::vector<std::string> sample_summary(const std::vector<Decoded>& out) {
  std::size_t valid = 0, partial = 0, truncated = 0;
  std::set<std::string> unique;
  for (const auto& d : out) {
    valid += d.valid;
    partial += d.partial;
    truncated += d.truncated;
    if (d.valid) unique.insert(d.smiles);
  }
  const double n = static_cast<double>(out.size());
  return {"requested\t" + std::to_string(out.size()), "valid\t" + fmt(static_cast<double>(valid) / n),
          "unique\t" + fmt(valid == 0 ? 0.0 : static_cast<double>(unique.size()) / static_cast<double>(valid)),
          "partial\t" + std::to_string(partial), "truncated\t" + std::to_string(truncated)};
}

eval::GenerationReport evaluate_file(const RunConfig& cfg, const std::string& samples_path, std::size_t unique_at_k) {
  require_input(samples_path, "samples");
  const auto samples = mol::read_smiles_file(samples_path);
  std::set<std::string> train;
  for (const auto& g : load_dataset(cfg.dataset)) train.insert(mol::canonical_smiles(g));
  eval::EvalOptions o;
  o.unique_at_k = unique_at_k;
  return eval::evaluate_smiles(samples, train, o);
}

std::vector<Decoded> interpolate(const RunConfig& cfg, const std::string& smiles_a, const std::string& smiles_b, int k) {
  const auto vocab = load_vocab(cfg);
  const auto m = load_model(cfg);
  auto latent_of = [&](const std::string& s) {
    return m.latent(enc::encoder_input(jt::decompose(mol::parse_smiles(s)), vocab));
  };
  const auto za = latent_of(smiles_a);
  const auto zb = latent_of(smiles_b);
  const auto path = eval::interpolate(za.data, zb.data, k);
  std::vector<Decoded> out(static_cast<std::size_t>(path.rows));
  parallel_for(path.rows, cfg.workers, [&](int i) {
    nd::Matrix z(1, path.cols);
    std::copy(path.row(i), path.row(i) + path.cols, z.data.begin());
    out[static_cast<std::size_t>(i)] = decode_latent(m, vocab, z, cfg, mix(cfg.seed, 5000 + static_cast<std::uint64_t>(i)));
  });
  return out;
}

}  // namespace jtk::pipe
