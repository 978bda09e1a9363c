#include "jtreekit/encoder.hpp"

#include <cmath>

#include "nn/blocks.hpp"

namespace jtk::enc {

namespace {

void check_range(const std::vector<int>& v, int max, const char* what) {
  for (int x : v) {
    if (x < 0 || x > max) {
      fail(ErrorCode::FeatureOutOfRange, std::string(what) + " " + std::to_string(x) + " outside [0, " + std::to_string(max) + "]");
    }
  }
}

}  // namespace

struct Encoder::Weights {
  nd::Param* jnode = nullptr;
  nd::Param* id_table = nullptr;
  nd::Param* degree_table = nullptr;
  nd::Param* hydrogen_table = nullptr;
  nd::Param* depth_table = nullptr;
  struct Layer {
    nn::LayerNorm norm;
    nn::Attention attn;
    nd::Param* edge_bias = nullptr;    // 1 x heads
    nd::Param* absent_bias = nullptr;  // 1 x heads
    nd::Param* gcn = nullptr;
    nn::Linear fuse;
    nn::Linear out;
  };
  std::vector<Layer> layers;
  nn::LayerNorm final_norm;
};

Encoder::Encoder(const EncoderConfig& cfg, nd::ParamStore& store, nd::Rng& rng) : cfg_(cfg), w_(std::make_unique<Weights>()) {
  if (cfg.layers < 0 || cfg.hidden < 1 || cfg.ffn < 1 || cfg.vocab_size < 1) fail(ErrorCode::Config, "invalid encoder dimensions");
  if (cfg.heads < 1 || cfg.hidden % cfg.heads != 0) fail(ErrorCode::Config, "encoder hidden width must be divisible by heads");
  const int h = cfg.hidden;
  const double std = 0.02;
  w_->jnode = &store.create_normal("enc.jnode", 1, h, std, rng);
  w_->id_table = &store.create_normal("enc.emb.id", cfg.vocab_size, h, std, rng);
  w_->degree_table = &store.create_normal("enc.emb.degree", cfg.max_degree + 1, h, std, rng);
  w_->hydrogen_table = &store.create_normal("enc.emb.hydrogens", cfg.max_hydrogens + 1, h, std, rng);
  w_->depth_table = &store.create_normal("enc.emb.depth", cfg.max_depth + 1, h, std, rng);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "enc.l" + std::to_string(l);
    Weights::Layer layer;
    layer.norm = nn::make_layer_norm(store, p + ".norm", h);
    layer.attn = nn::make_attention(store, p + ".attn", h, cfg.heads, rng);
    layer.edge_bias = &store.create(p + ".attn.edge_bias", 1, cfg.heads);
    layer.absent_bias = &store.create(p + ".attn.absent_bias", 1, cfg.heads);
    layer.gcn = &store.create_linear(p + ".gcn.w", h, h, rng);
    layer.fuse = nn::make_linear(store, p + ".fuse", 2 * h, cfg.ffn, rng);
    layer.out = nn::make_linear(store, p + ".out", cfg.ffn, h, rng);
    w_->layers.push_back(layer);
  }
  if (cfg.layers > 0) w_->final_norm = nn::make_layer_norm(store, "enc.norm", h);
}

Encoder::~Encoder() = default;
Encoder::Encoder(Encoder&&) noexcept = default;
Encoder& Encoder::operator=(Encoder&&) noexcept = default;

EncoderInput encoder_input(const jt::JunctionTree& tree, const jt::Vocabulary& vocab) {
  const auto perm = seq::bfs_order(tree);
  const int n = static_cast<int>(perm.order.size());
  const auto adj = tree.adjacency();
  std::vector<int> seq_of(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) seq_of[static_cast<std::size_t>(perm.order[static_cast<std::size_t>(k)])] = k;
  EncoderInput in;
  in.adjacency = nd::Matrix(n + 1, n + 1);
  for (int k = 0; k < n; ++k) {
    const int node = perm.order[static_cast<std::size_t>(k)];
    const auto& j = tree.nodes[static_cast<std::size_t>(node)];
    in.features.id.push_back(vocab.id(j.key));
    in.features.degree.push_back(static_cast<int>(adj[static_cast<std::size_t>(node)].size()));
    in.features.hydrogens.push_back(j.hydrogens);
    in.features.depth.push_back(perm.depth[static_cast<std::size_t>(k)]);
    in.adjacency(0, k + 1) = 1.0;
    in.adjacency(k + 1, 0) = 1.0;
  }
  for (const auto& e : tree.edges) {
    const int a = seq_of[static_cast<std::size_t>(e.a)] + 1;
    const int b = seq_of[static_cast<std::size_t>(e.b)] + 1;
    in.adjacency(a, b) = 1.0;
    in.adjacency(b, a) = 1.0;
  }
  return in;
}

nd::Matrix gcn_propagation(const nd::Matrix& adjacency) {
  const int n = adjacency.rows;
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double d = 1.0;
    for (int j = 0; j < n; ++j) d += adjacency(i, j);
    inv_sqrt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(d);
  }
  nd::Matrix p(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double a = adjacency(i, j) + (i == j ? 1.0 : 0.0);
      if (a != 0.0) p(i, j) = inv_sqrt[static_cast<std::size_t>(i)] * a * inv_sqrt[static_cast<std::size_t>(j)];
    }
  }
  return p;
}

nd::Var Encoder::embed(nd::Tape& t, const NodeFeatures& f) const {
  const std::size_t n = f.size();
  if (f.degree.size() != n || f.hydrogens.size() != n || f.depth.size() != n) fail(ErrorCode::ShapeMismatch, "feature vectors differ in length");
  check_range(f.id, cfg_.vocab_size - 1, "junction id");
  check_range(f.degree, cfg_.max_degree, "degree");
  check_range(f.hydrogens, cfg_.max_hydrogens, "hydrogen count");
  check_range(f.depth, cfg_.max_depth, "depth");
  const nd::Var jnode = t.param(*w_->jnode);
  if (n == 0) return jnode;
  nd::Var rows = t.embedding(t.param(*w_->id_table), f.id);
  rows = t.add(rows, t.embedding(t.param(*w_->degree_table), f.degree));
  rows = t.add(rows, t.embedding(t.param(*w_->hydrogen_table), f.hydrogens));
  rows = t.add(rows, t.embedding(t.param(*w_->depth_table), f.depth));
  const nd::Var parts[] = {jnode, rows};
  return t.concat_rows(parts);
}

nd::Var Encoder::attn_block(nd::Tape& t, nd::Var h, const nd::Matrix& adjacency, int layer) const {
  const auto& L = w_->layers.at(static_cast<std::size_t>(layer));
  nd::Matrix absent(adjacency.rows, adjacency.cols);
  for (std::size_t i = 0; i < absent.size(); ++i) absent.data[i] = 1.0 - adjacency.data[i];
  const nd::Var edge_m = t.constant(adjacency);
  const nd::Var absent_m = t.constant(std::move(absent));
  const nd::Var eb = t.param(*L.edge_bias);
  const nd::Var ab = t.param(*L.absent_bias);
  const nn::ScoreBias bias = [&](nd::Tape& tt, int head) {
    return tt.add(tt.scale_by(edge_m, tt.slice_cols(eb, head, 1)), tt.scale_by(absent_m, tt.slice_cols(ab, head, 1)));
  };
  return L.attn.apply(t, h, bias, nullptr);
}

nd::Var Encoder::gcn_block(nd::Tape& t, nd::Var h, const nd::Matrix& adjacency, int layer) const {
  const auto& L = w_->layers.at(static_cast<std::size_t>(layer));
  const nd::Var prop = t.constant(gcn_propagation(adjacency));
  return t.gelu(t.matmul(t.matmul(prop, h), t.param(*L.gcn)));
}

nd::Var Encoder::layer(nd::Tape& t, nd::Var h, const nd::Matrix& adjacency, int layer) const {
  const auto& L = w_->layers.at(static_cast<std::size_t>(layer));
  const nd::Var x = L.norm.apply(t, h);
  const nd::Var parts[] = {gcn_block(t, x, adjacency, layer), attn_block(t, x, adjacency, layer)};
  const nd::Var fused = t.gelu(L.fuse.apply(t, t.concat_cols(parts)));
  return t.add(h, L.out.apply(t, fused));
}

nd::Var Encoder::encode(nd::Tape& t, const EncoderInput& in) const {
  const int n = static_cast<int>(in.features.size()) + 1;
  if (in.adjacency.rows != n || in.adjacency.cols != n) fail(ErrorCode::ShapeMismatch, "adjacency does not match the node count");
  nd::Var h = embed(t, in.features);
  for (int l = 0; l < cfg_.layers; ++l) h = layer(t, h, in.adjacency, l);
  if (cfg_.layers > 0) h = w_->final_norm.apply(t, h);
  return t.slice_rows(h, 0, 1);
}

nd::Matrix Encoder::latent(const EncoderInput& in) const {
  nd::Tape t;
  return t.value(encode(t, in));
}

}  // namespace jtk::enc
