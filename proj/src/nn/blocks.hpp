#pragma once

#include <string>
#include <vector>

#include "jtreekit/ndtensor.hpp"

namespace jtk::nn {

struct Linear {
  nd::Param* weight = nullptr;
  nd::Param* bias = nullptr;  // may be null

  nd::Var apply(nd::Tape& t, nd::Var x) const;
};

Linear make_linear(nd::ParamStore& store, const std::string& name, int in, int out, nd::Rng& rng, bool bias = true);

struct LayerNorm {
  nd::Param* gamma = nullptr;
  nd::Param* beta = nullptr;

  nd::Var apply(nd::Tape& t, nd::Var x) const;
};

LayerNorm make_layer_norm(nd::ParamStore& store, const std::string& name, int width);

// Per-head additive score term: returns a Var of shape (n x n), or a null Var.
using ScoreBias = std::function<nd::Var(nd::Tape&, int head)>;

struct Attention {
  Linear query;
  Linear key;
  Linear value;
  int heads = 1;

  // softmax(Q_h K_h^T / sqrt(d) + bias_h) V_h for every head, heads concatenated.
  nd::Var apply(nd::Tape& t, nd::Var x, const ScoreBias& bias, const std::vector<std::uint8_t>* mask) const;
};

Attention make_attention(nd::ParamStore& store, const std::string& name, int width, int heads, nd::Rng& rng);

// Lower-triangular-inclusive mask for n positions.
std::vector<std::uint8_t> causal_mask(int n);

}  // namespace jtk::nn
