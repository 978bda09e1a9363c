#include "nn/blocks.hpp"

#include <cmath>

namespace jtk::nn {

nd::Var Linear::apply(nd::Tape& t, nd::Var x) const {
  nd::Var y = t.matmul(x, t.param(*weight));
  if (bias) y = t.add_row(y, t.param(*bias));
  return y;
}

Linear make_linear(nd::ParamStore& store, const std::string& name, int in, int out, nd::Rng& rng, bool bias) {
  Linear l;
  l.weight = &store.create_linear(name + ".w", in, out, rng);
  if (bias) l.bias = &store.create(name + ".b", 1, out);
  return l;
}

nd::Var LayerNorm::apply(nd::Tape& t, nd::Var x) const { return t.layer_norm(x, t.param(*gamma), t.param(*beta)); }

LayerNorm make_layer_norm(nd::ParamStore& store, const std::string& name, int width) {
  LayerNorm ln;
  ln.gamma = &store.create(name + ".gamma", 1, width);
  for (double& g : ln.gamma->value.data) g = 1.0;
  ln.beta = &store.create(name + ".beta", 1, width);
  return ln;
}

nd::Var Attention::apply(nd::Tape& t, nd::Var x, const ScoreBias& bias, const std::vector<std::uint8_t>* mask) const {
  const nd::Var q = query.apply(t, x);
  const nd::Var k = key.apply(t, x);
  const nd::Var v = value.apply(t, x);
  const int width = t.value(q).cols;
  const int d = width / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<nd::Var> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const nd::Var qh = t.slice_cols(q, h * d, d);
    const nd::Var kh = t.slice_cols(k, h * d, d);
    const nd::Var vh = t.slice_cols(v, h * d, d);
    nd::Var scores = t.scale(t.matmul_nt(qh, kh), scale);
    if (bias) scores = t.add(scores, bias(t, h));
    outs.push_back(t.matmul(t.softmax_rows(scores, mask), vh));
  }
  return heads == 1 ? outs[0] : t.concat_cols(outs);
}

Attention make_attention(nd::ParamStore& store, const std::string& name, int width, int heads, nd::Rng& rng) {
  if (heads < 1 || width % heads != 0) fail(ErrorCode::Config, "hidden width must be divisible by the number of heads");
  Attention a;
  a.query = make_linear(store, name + ".q", width, width, rng, false);
  a.key = make_linear(store, name + ".k", width, width, rng, false);
  a.value = make_linear(store, name + ".v", width, width, rng, false);
  a.heads = heads;
  return a;
}

std::vector<std::uint8_t> causal_mask(int n) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) m[static_cast<std::size_t>(i * n + j)] = 1;
  }
  return m;
}

}  // namespace jtk::nn
