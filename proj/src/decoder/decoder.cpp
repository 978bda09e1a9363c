#include "jtreekit/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "nn/blocks.hpp"

namespace jtk::dec {

int junction_class(int vocab_id) { return vocab_id == jt::Vocabulary::kEOS ? 0 : vocab_id - jt::Vocabulary::kReserved + 1; }

int vocab_id_of_class(int cls) { return cls == 0 ? jt::Vocabulary::kEOS : cls - 1 + jt::Vocabulary::kReserved; }

int num_junction_classes(int vocab_size) { return vocab_size - jt::Vocabulary::kReserved + 1; }

DecoderInput decoder_input(std::span<const seq::Token> nodes) {
  const auto fathers = seq::decode_fathers(nodes);
  const int n = static_cast<int>(nodes.size());
  DecoderInput in;
  in.father.push_back(-1);
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  std::vector<int> depth(static_cast<std::size_t>(n), 0);
  for (int k = 0; k < n; ++k) {
    const int f = fathers[static_cast<std::size_t>(k)];
    in.id.push_back(nodes[static_cast<std::size_t>(k)].id);
    in.pos.push_back(nodes[static_cast<std::size_t>(k)].pos);
    if (f >= 0) {
      ++degree[static_cast<std::size_t>(f)];
      degree[static_cast<std::size_t>(k)] = 1;
      depth[static_cast<std::size_t>(k)] = depth[static_cast<std::size_t>(f)] + 1;
    }
    in.depth.push_back(depth[static_cast<std::size_t>(k)]);
    in.father_degree.push_back(f >= 0 ? degree[static_cast<std::size_t>(f)] : 0);
    in.father.push_back(f >= 0 ? f + 1 : -1);
  }
  const int rows = n + 1;
  std::vector<double> deg(static_cast<std::size_t>(rows), 0.0);
  for (int r = 0; r < rows; ++r) deg[static_cast<std::size_t>(r)] = in.father[static_cast<std::size_t>(r)] >= 0 ? 1.0 : 0.0;
  auto inv_sqrt = [&](int r) { return deg[static_cast<std::size_t>(r)] > 0 ? 1.0 / std::sqrt(deg[static_cast<std::size_t>(r)]) : 0.0; };
  in.laplacian = nd::Matrix(rows, rows);
  for (int r = 0; r < rows; ++r) {
    const double dr = inv_sqrt(r);
    in.laplacian(r, r) = dr * deg[static_cast<std::size_t>(r)] * dr;
    const int f = in.father[static_cast<std::size_t>(r)];
    if (f >= 0) in.laplacian(r, f) = -dr * inv_sqrt(f);
  }
  in.junction_target.assign(static_cast<std::size_t>(rows), -1);
  in.position_target.assign(static_cast<std::size_t>(rows), -1);
  return in;
}

DecoderInput teacher_input(const seq::TokenSeq& s) {
  if (s.items.empty() || s.items.back().id != jt::Vocabulary::kEOS) fail(ErrorCode::MissingEOS, "sequence is not terminated by [EOS]");
  const std::span<const seq::Token> nodes(s.items.data(), s.items.size() - 1);
  DecoderInput in = decoder_input(nodes);
  for (std::size_t k = 0; k < s.items.size(); ++k) {
    in.junction_target[k] = junction_class(s.items[k].id);
    if (k >= 1 && k < nodes.size()) in.position_target[k] = s.items[k].pos;
  }
  return in;
}

struct Decoder::Weights {
  nn::Linear cond;
  nd::Param* id_table = nullptr;
  nd::Param* case_table = nullptr;
  nd::Param* depth_table = nullptr;
  nd::Param* degree_table = nullptr;
  struct Layer {
    nn::LayerNorm norm;
    nn::Attention attn;
    nd::Param* theta = nullptr;
    nd::Param* dagcn = nullptr;
    nn::Linear fuse;
    nn::Linear out;
  };
  std::vector<Layer> layers;
  nn::LayerNorm final_norm;
  nn::Linear junction_head;
  nn::Linear position_head;
  nn::Linear aux_head;
};

Decoder::Decoder(const DecoderConfig& cfg, nd::ParamStore& store, nd::Rng& rng) : cfg_(cfg), w_(std::make_unique<Weights>()) {
  if (cfg.layers < 0 || cfg.hidden < 1 || cfg.ffn < 1 || cfg.latent < 1 || cfg.vocab_size < jt::Vocabulary::kReserved) {
    fail(ErrorCode::Config, "invalid decoder dimensions");
  }
  if (cfg.heads < 1 || cfg.hidden % cfg.heads != 0) fail(ErrorCode::Config, "decoder hidden width must be divisible by heads");
  if (cfg.alphabet < 2) fail(ErrorCode::Config, "position alphabet needs at least 2 symbols");
  const int h = cfg.hidden;
  const double std = 0.02;
  w_->cond = nn::make_linear(store, "dec.cond", cfg.latent, h, rng);
  w_->id_table = &store.create_normal("dec.emb.id", cfg.vocab_size, h, std, rng);
  w_->case_table = &store.create_normal("dec.emb.case", cfg.alphabet, h, std, rng);
  w_->depth_table = &store.create_normal("dec.emb.depth", cfg.max_depth + 1, h, std, rng);
  w_->degree_table = &store.create_normal("dec.emb.degree", cfg.max_degree + 1, h, std, rng);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "dec.l" + std::to_string(l);
    Weights::Layer layer;
    layer.norm = nn::make_layer_norm(store, p + ".norm", h);
    layer.attn = nn::make_attention(store, p + ".attn", h, cfg.heads, rng);
    layer.theta = &store.create(p + ".dagcn.theta", 1, 1);
    layer.theta->value.data[0] = cfg.theta_init;
    layer.dagcn = &store.create_linear(p + ".dagcn.w", h, h, rng);
    layer.fuse = nn::make_linear(store, p + ".fuse", 2 * h, cfg.ffn, rng);
    layer.out = nn::make_linear(store, p + ".out", cfg.ffn, h, rng);
    w_->layers.push_back(layer);
  }
  w_->final_norm = nn::make_layer_norm(store, "dec.norm", h);
  w_->junction_head = nn::make_linear(store, "dec.head.junction", h, num_junction_classes(cfg.vocab_size), rng);
  w_->position_head = nn::make_linear(store, "dec.head.position", h, cfg.alphabet, rng);
  w_->aux_head = nn::make_linear(store, "dec.aux", cfg.latent, 3, rng);
}

Decoder::~Decoder() = default;
Decoder::Decoder(Decoder&&) noexcept = default;
Decoder& Decoder::operator=(Decoder&&) noexcept = default;

nd::Param& Decoder::theta(int layer) const { return *w_->layers.at(static_cast<std::size_t>(layer)).theta; }

nd::Var Decoder::embed(nd::Tape& t, nd::Var z, const DecoderInput& in) const {
  const nd::Var slot = w_->cond.apply(t, z);
  if (in.id.empty()) return slot;
  for (int id : in.id) {
    if (id < 0 || id >= cfg_.vocab_size) fail(ErrorCode::FeatureOutOfRange, "junction id " + std::to_string(id) + " outside the vocabulary");
  }
  for (int p : in.pos) {
    if (p < 0 || p >= cfg_.alphabet) fail(ErrorCode::FeatureOutOfRange, "position case " + std::to_string(p) + " outside the alphabet");
  }
  // depth and degree saturate at the table size
  std::vector<int> depth(in.depth), degree(in.father_degree);
  for (int& d : depth) d = std::min(d, cfg_.max_depth);
  for (int& d : degree) d = std::min(d, cfg_.max_degree);
  nd::Var rows = t.embedding(t.param(*w_->id_table), in.id);
  rows = t.add(rows, t.embedding(t.param(*w_->case_table), in.pos));
  rows = t.add(rows, t.embedding(t.param(*w_->depth_table), depth));
  rows = t.add(rows, t.embedding(t.param(*w_->degree_table), degree));
  const nd::Var parts[] = {slot, rows};
  return t.concat_rows(parts);
}

nd::Var Decoder::dagcn_block(nd::Tape& t, nd::Var h, const nd::Matrix& laplacian, int layer) const {
  const auto& L = w_->layers.at(static_cast<std::size_t>(layer));
  const nd::Var mixed = t.add(h, t.scale_by(t.matmul(t.constant(laplacian), h), t.param(*L.theta)));
  return t.gelu(t.matmul(mixed, t.param(*L.dagcn)));
}

nd::Var Decoder::masked_attn_block(nd::Tape& t, nd::Var h, int layer) const {
  const auto& L = w_->layers.at(static_cast<std::size_t>(layer));
  const auto mask = nn::causal_mask(t.value(h).rows);
  return L.attn.apply(t, h, nullptr, &mask);
}

nd::Var Decoder::layer(nd::Tape& t, nd::Var h, const nd::Matrix& laplacian, int layer) const {
  const auto& L = w_->layers.at(static_cast<std::size_t>(layer));
  const nd::Var x = L.norm.apply(t, h);
  const nd::Var parts[] = {dagcn_block(t, x, laplacian, layer), masked_attn_block(t, x, layer)};
  const nd::Var fused = t.gelu(L.fuse.apply(t, t.concat_cols(parts)));
  return t.add(h, L.out.apply(t, fused));
}

DecoderOutput Decoder::forward(nd::Tape& t, nd::Var z, const DecoderInput& in) const {
  if (in.laplacian.rows != in.rows()) fail(ErrorCode::ShapeMismatch, "decoder input rows disagree");
  nd::Var h = embed(t, z, in);
  for (int l = 0; l < cfg_.layers; ++l) h = layer(t, h, in.laplacian, l);
  h = w_->final_norm.apply(t, h);
  return {w_->junction_head.apply(t, h), w_->position_head.apply(t, h)};
}

nd::Var Decoder::aux(nd::Tape& t, nd::Var z) const { return w_->aux_head.apply(t, z); }

LossParts Decoder::loss(nd::Tape& t, nd::Var z, const DecoderInput& in, const nd::Matrix& aux_target, const LossWeights& weights) const {
  const DecoderOutput out = forward(t, z, in);
  const nd::Var pos = t.cross_entropy_rows(out.position_logits, in.position_target);
  const nd::Var junc = t.cross_entropy_rows(out.junction_logits, in.junction_target);
  const nd::Var auxl = t.mse(aux(t, z), aux_target);
  LossParts parts;
  parts.position = t.value(pos).data[0];
  parts.junction = t.value(junc).data[0];
  parts.aux = t.value(auxl).data[0];
  parts.total = t.add(t.add(t.scale(pos, weights.position), t.scale(junc, weights.junction)), t.scale(auxl, weights.aux));
  return parts;
}

namespace {

std::vector<double> softmax_row(const nd::Matrix& m, int row) {
  const double* r = m.row(row);
  const double mx = *std::max_element(r, r + m.cols);
  std::vector<double> p(static_cast<std::size_t>(m.cols));
  double s = 0.0;
  for (int j = 0; j < m.cols; ++j) s += (p[static_cast<std::size_t>(j)] = std::exp(r[j] - mx));
  for (double& x : p) x /= s;
  return p;
}

// Picks among allowed entries: argmax (lowest index on ties) when temperature <= 0.
int choose(const std::vector<double>& p, const std::vector<bool>& allowed, double temperature, nd::Rng& rng) {
  int best = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (allowed[i] && (best < 0 || p[i] > p[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
  }
  if (best < 0 || temperature <= 0.0) return best;
  std::vector<double> w(p.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!allowed[i] || p[i] <= 0.0) continue;
    w[i] = std::exp((std::log(p[i]) - std::log(p[static_cast<std::size_t>(best)])) / temperature);
    total += w[i];
  }
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    u -= w[i];
    if (u < 0.0) return static_cast<int>(i);
  }
  return best;
}

}  // namespace

StepDistribution Decoder::step(const nd::Matrix& z, std::span<const seq::Token> prefix) const {
  const DecoderInput in = decoder_input(prefix);
  nd::Tape t;
  const DecoderOutput out = forward(t, t.constant(z), in);
  const int last = in.rows() - 1;
  return {softmax_row(t.value(out.junction_logits), last), softmax_row(t.value(out.position_logits), last)};
}

Generated Decoder::generate(const nd::Matrix& z, const GenerateOptions& opts, nd::Rng& rng) const {
  Generated g;
  std::vector<seq::Token> prefix;
  std::vector<int> fathers;
  const int classes = num_junction_classes(cfg_.vocab_size);
  while (true) {
    if (static_cast<int>(prefix.size()) >= opts.max_len) {
      g.truncated = true;
      break;
    }
    const StepDistribution d = step(z, prefix);
    int pos = 0;
    int father = -1;
    if (!prefix.empty()) {
      const auto feasible = seq::feasible_cases(fathers, cfg_.alphabet);
      pos = choose(d.position, feasible, opts.temperature, rng);
      father = seq::father_from_case(fathers, static_cast<int>(prefix.size()), pos);
    }
    // The filter is consulted on the chosen candidate only; a rejection masks it and the
    // choice is repeated. When every junction is rejected the unfiltered choice stands.
    std::vector<bool> allowed(static_cast<std::size_t>(classes), true);
    allowed[0] = !prefix.empty();
    const std::vector<bool> unfiltered = allowed;
    int cls = -1;
    while (true) {
      cls = choose(d.junction, allowed, opts.temperature, rng);
      if (cls < 0) {
        cls = choose(d.junction, unfiltered, opts.temperature, rng);
        break;
      }
      if (cls == 0 || !opts.filter || opts.filter(prefix, fathers, father, vocab_id_of_class(cls))) break;
      allowed[static_cast<std::size_t>(cls)] = false;
    }
    if (cls == 0) break;
    prefix.push_back({vocab_id_of_class(cls), pos});
    fathers.push_back(father);
  }
  g.seq.items = prefix;
  g.seq.items.push_back({jt::Vocabulary::kEOS, 0});
  return g;
}

}  // namespace jtk::dec
