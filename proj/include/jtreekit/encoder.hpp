#pragma once

#include <vector>

#include "jtreekit/jtree.hpp"
#include "jtreekit/ndtensor.hpp"
#include "jtreekit/seqcodec.hpp"

namespace jtk::enc {

struct EncoderConfig {
  int layers = 4;
  int hidden = 128;
  int heads = 4;
  int ffn = 256;
  int vocab_size = 0;  // junction-id table rows, reserved ids included
  int max_degree = 20;
  int max_hydrogens = 50;
  int max_depth = 50;
};

// One entry per tree node, in BFS sequence order.
struct NodeFeatures {
  std::vector<int> id;
  std::vector<int> degree;
  std::vector<int> hydrogens;
  std::vector<int> depth;

  std::size_t size() const noexcept { return id.size(); }
};

struct EncoderInput {
  NodeFeatures features;
  // (n+1) x (n+1); row/column 0 is the [JNode], adjacent to every node. Zero diagonal.
  nd::Matrix adjacency;
};

EncoderInput encoder_input(const jt::JunctionTree& tree, const jt::Vocabulary& vocab);

class Encoder {
 public:
  // Registers parameters named enc.* in `store`.
  Encoder(const EncoderConfig& cfg, nd::ParamStore& store, nd::Rng& rng);
  ~Encoder();
  Encoder(Encoder&&) noexcept;
  Encoder& operator=(Encoder&&) noexcept;

  const EncoderConfig& config() const noexcept { return cfg_; }

  // (n+1) x hidden; row 0 is the [JNode] vector, row i+1 sums the id, degree,
  // hydrogen and depth embeddings of node i. Throws FeatureOutOfRange.
  nd::Var embed(nd::Tape& t, const NodeFeatures& f) const;
  nd::Var attn_block(nd::Tape& t, nd::Var h, const nd::Matrix& adjacency, int layer) const;
  nd::Var gcn_block(nd::Tape& t, nd::Var h, const nd::Matrix& adjacency, int layer) const;
  nd::Var layer(nd::Tape& t, nd::Var h, const nd::Matrix& adjacency, int layer) const;
  // 1 x hidden latent read from the [JNode] row.
  nd::Var encode(nd::Tape& t, const EncoderInput& in) const;
  nd::Matrix latent(const EncoderInput& in) const;

 private:
  struct Weights;
  EncoderConfig cfg_;
  std::unique_ptr<Weights> w_;
};

// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I.
nd::Matrix gcn_propagation(const nd::Matrix& adjacency);

}  // namespace jtk::enc
