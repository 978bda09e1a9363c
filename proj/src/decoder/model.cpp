#include "jtreekit/model.hpp"

#include <algorithm>
#include <cmath>

namespace jtk::model {

ModelConfig default_config(int vocab_size) {
  ModelConfig c;
  c.encoder.vocab_size = vocab_size;
  c.decoder.vocab_size = vocab_size;
  c.decoder.latent = c.encoder.hidden;
  return c;
}

nd::Matrix AuxStats::standardize(const mol::Properties& p) const {
  const double raw[3] = {p.weight, p.logp, p.tpsa};
  nd::Matrix m(1, 3);
  for (int i = 0; i < 3; ++i) m.data[static_cast<std::size_t>(i)] = (raw[i] - mean[static_cast<std::size_t>(i)]) / std[static_cast<std::size_t>(i)];
  return m;
}

mol::Properties AuxStats::restore(const nd::Matrix& s) const {
  mol::Properties p;
  p.weight = s.data[0] * std[0] + mean[0];
  p.logp = s.data[1] * std[1] + mean[1];
  p.tpsa = s.data[2] * std[2] + mean[2];
  return p;
}

Example make_example(const mol::MolGraph& g, const jt::Vocabulary& vocab, int alphabet) {
  Example ex;
  ex.smiles = mol::canonical_smiles(g);
  ex.tree = jt::decompose(g);
  ex.seq = seq::encode(ex.tree, vocab, alphabet);
  ex.encoder_input = enc::encoder_input(ex.tree, vocab);
  ex.decoder_input = dec::teacher_input(ex.seq);
  ex.props = mol::properties(g);
  return ex;
}

AuxStats fit_aux_stats(std::span<const Example> examples) {
  if (examples.empty()) fail(ErrorCode::EmptyDataset, "no examples to fit property statistics");
  AuxStats s;
  const double n = static_cast<double>(examples.size());
  std::array<double, 3> sum{}, sq{};
  for (const auto& ex : examples) {
    const double v[3] = {ex.props.weight, ex.props.logp, ex.props.tpsa};
    for (std::size_t i = 0; i < 3; ++i) {
      sum[i] += v[i];
      sq[i] += v[i] * v[i];
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    s.mean[i] = sum[i] / n;
    const double var = std::max(0.0, sq[i] / n - s.mean[i] * s.mean[i]);
    s.std[i] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Model::Model(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      store_(std::make_unique<nd::ParamStore>()),
      init_rng_(seed),
      encoder_(cfg.encoder, *store_, init_rng_),
      decoder_(cfg.decoder, *store_, init_rng_) {
  if (cfg.decoder.latent != cfg.encoder.hidden) fail(ErrorCode::Config, "decoder latent width must equal the encoder hidden width");
  if (cfg.decoder.vocab_size != cfg.encoder.vocab_size) fail(ErrorCode::Config, "encoder and decoder vocabulary sizes differ");
}

dec::LossParts Model::loss(nd::Tape& t, const Example& ex) const {
  const nd::Var z = encoder_.encode(t, ex.encoder_input);
  return decoder_.loss(t, z, ex.decoder_input, aux_stats.standardize(ex.props), cfg_.weights);
}

TrainStats Model::train_step(std::span<const Example* const> batch, const nd::AdamConfig& adam, double clip) {
  TrainStats s;
  if (batch.empty()) return s;
  store_->zero_grad();
  for (const Example* ex : batch) {
    nd::Tape t;
    const dec::LossParts parts = loss(t, *ex);
    s.loss += t.value(parts.total).data[0];
    s.position += parts.position;
    s.junction += parts.junction;
    s.aux += parts.aux;
    t.backward(parts.total);
  }
  const double n = static_cast<double>(batch.size());
  store_->scale_grad(1.0 / n);
  s.loss /= n;
  s.position /= n;
  s.junction /= n;
  s.aux /= n;
  s.grad_norm = store_->grad_norm();
  if (!std::isfinite(s.grad_norm)) fail(ErrorCode::NonFinite, "gradient norm is not finite");
  if (clip > 0.0 && s.grad_norm > clip) store_->scale_grad(clip / s.grad_norm);
  nd::adam_step(*store_, adam);
  return s;
}

TokenAccuracy Model::teacher_accuracy(const Example& ex) const {
  nd::Tape t;
  const nd::Var z = encoder_.encode(t, ex.encoder_input);
  const dec::DecoderOutput out = decoder_.forward(t, z, ex.decoder_input);
  const nd::Matrix& jl = t.value(out.junction_logits);
  const nd::Matrix& pl = t.value(out.position_logits);
  auto argmax = [](const nd::Matrix& m, int r) {
    const double* row = m.row(r);
    return static_cast<int>(std::max_element(row, row + m.cols) - row);
  };
  TokenAccuracy acc;
  const auto& in = ex.decoder_input;
  for (int r = 0; r < in.rows(); ++r) {
    const int jt = in.junction_target[static_cast<std::size_t>(r)];
    const int pt = in.position_target[static_cast<std::size_t>(r)];
    if (jt < 0) continue;
    bool ok = argmax(jl, r) == jt;
    if (pt >= 0) ok = ok && argmax(pl, r) == pt;
    acc.correct += ok ? 1 : 0;
    ++acc.total;
  }
  return acc;
}

nd::Matrix Model::latent(const Example& ex) const { return encoder_.latent(ex.encoder_input); }

nd::Matrix Model::latent(const enc::EncoderInput& in) const { return encoder_.latent(in); }

namespace {

void put(std::map<std::string, std::string>& m, const std::string& k, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  m[k] = buf;
}

int get_int(const nd::Checkpoint& c, const std::string& k) {
  const auto it = c.meta.find(k);
  if (it == c.meta.end()) fail(ErrorCode::Format, "checkpoint lacks metadata " + k);
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    fail(ErrorCode::Format, "bad metadata value for " + k);
  }
}

double get_double(const nd::Checkpoint& c, const std::string& k) {
  const auto it = c.meta.find(k);
  if (it == c.meta.end()) fail(ErrorCode::Format, "checkpoint lacks metadata " + k);
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    fail(ErrorCode::Format, "bad metadata value for " + k);
  }
}

}  // namespace

nd::Checkpoint Model::checkpoint() const {
  nd::Checkpoint c;
  c.meta["kind"] = "model";
  const auto& e = cfg_.encoder;
  const auto& d = cfg_.decoder;
  c.meta["enc.layers"] = std::to_string(e.layers);
  c.meta["enc.hidden"] = std::to_string(e.hidden);
  c.meta["enc.heads"] = std::to_string(e.heads);
  c.meta["enc.ffn"] = std::to_string(e.ffn);
  c.meta["enc.max_degree"] = std::to_string(e.max_degree);
  c.meta["enc.max_hydrogens"] = std::to_string(e.max_hydrogens);
  c.meta["enc.max_depth"] = std::to_string(e.max_depth);
  c.meta["vocab_size"] = std::to_string(e.vocab_size);
  c.meta["dec.layers"] = std::to_string(d.layers);
  c.meta["dec.hidden"] = std::to_string(d.hidden);
  c.meta["dec.heads"] = std::to_string(d.heads);
  c.meta["dec.ffn"] = std::to_string(d.ffn);
  c.meta["dec.alphabet"] = std::to_string(d.alphabet);
  c.meta["dec.max_degree"] = std::to_string(d.max_degree);
  c.meta["dec.max_depth"] = std::to_string(d.max_depth);
  put(c.meta, "dec.theta_init", d.theta_init);
  put(c.meta, "loss.position", cfg_.weights.position);
  put(c.meta, "loss.junction", cfg_.weights.junction);
  put(c.meta, "loss.aux", cfg_.weights.aux);
  c.meta["step"] = std::to_string(store_->step);
  c.add_params(*store_);
  nd::Matrix stats(2, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    stats.data[i] = aux_stats.mean[i];
    stats.data[3 + i] = aux_stats.std[i];
  }
  c.tensors["dec.aux.stats"] = stats;
  return c;
}

Model Model::from_checkpoint(const nd::Checkpoint& c) {
  const auto kind = c.meta.find("kind");
  if (kind == c.meta.end() || kind->second != "model") fail(ErrorCode::Format, "checkpoint does not hold an autoencoder");
  ModelConfig cfg;
  cfg.encoder.layers = get_int(c, "enc.layers");
  cfg.encoder.hidden = get_int(c, "enc.hidden");
  cfg.encoder.heads = get_int(c, "enc.heads");
  cfg.encoder.ffn = get_int(c, "enc.ffn");
  cfg.encoder.max_degree = get_int(c, "enc.max_degree");
  cfg.encoder.max_hydrogens = get_int(c, "enc.max_hydrogens");
  cfg.encoder.max_depth = get_int(c, "enc.max_depth");
  cfg.encoder.vocab_size = get_int(c, "vocab_size");
  cfg.decoder.vocab_size = cfg.encoder.vocab_size;
  cfg.decoder.latent = cfg.encoder.hidden;
  cfg.decoder.layers = get_int(c, "dec.layers");
  cfg.decoder.hidden = get_int(c, "dec.hidden");
  cfg.decoder.heads = get_int(c, "dec.heads");
  cfg.decoder.ffn = get_int(c, "dec.ffn");
  cfg.decoder.alphabet = get_int(c, "dec.alphabet");
  cfg.decoder.max_degree = get_int(c, "dec.max_degree");
  cfg.decoder.max_depth = get_int(c, "dec.max_depth");
  cfg.decoder.theta_init = get_double(c, "dec.theta_init");
  cfg.weights.position = get_double(c, "loss.position");
  cfg.weights.junction = get_double(c, "loss.junction");
  cfg.weights.aux = get_double(c, "loss.aux");
  Model m(cfg, 0);
  c.load_params(*m.store_);
  m.store_->step = get_int(c, "step");
  const nd::Matrix& stats = c.tensor("dec.aux.stats");
  if (stats.rows != 2 || stats.cols != 3) fail(ErrorCode::ShapeMismatch, "dec.aux.stats must be 2 x 3");
  for (std::size_t i = 0; i < 3; ++i) {
    m.aux_stats.mean[i] = stats.data[i];
    m.aux_stats.std[i] = stats.data[3 + i];
  }
  return m;
}

}  // namespace jtk::model
