#pragma once

#include <functional>
#include <span>
#include <vector>

#include "jtreekit/jtree.hpp"
#include "jtreekit/ndtensor.hpp"
#include "jtreekit/seqcodec.hpp"

namespace jtk::dec {

struct DecoderConfig {
  int layers = 4;
  int hidden = 128;
  int heads = 4;
  int ffn = 256;
  int latent = 128;    // width of the conditioning vector
  int vocab_size = 0;  // junction ids, reserved ids included
  int alphabet = seq::kStandardAlphabet;
  double theta_init = 0.5;
  int max_degree = 20;
  int max_depth = 50;
};

// Junction classes: 0 is [EOS], class c >= 1 is vocabulary id c - 1 + kReserved.
int junction_class(int vocab_id);
int vocab_id_of_class(int cls);
int num_junction_classes(int vocab_size);

// Row 0 is the conditioning slot; row k >= 1 carries node k-1 of the prefix.
struct DecoderInput {
  std::vector<int> id;
  std::vector<int> pos;
  std::vector<int> depth;
  std::vector<int> father_degree;  // degree of the node's father in the prefix tree, 0 for the root
  std::vector<int> father;         // row index of the father, -1 when none
  // D^-1/2 (D - M) D^-1/2 over the rows, M[k][father(k)] = 1, zero-degree rows left empty.
  nd::Matrix laplacian;
  // One entry per row: row k predicts item k (node or [EOS]). -1 = not scored.
  std::vector<int> junction_target;
  std::vector<int> position_target;

  int rows() const noexcept { return static_cast<int>(id.size()) + 1; }
};

// Features for the node prefix `nodes` (no [EOS]). Throws DanglingPosition.
DecoderInput decoder_input(std::span<const seq::Token> nodes);
// Teacher-forcing input with targets for a full sequence ending in [EOS].
DecoderInput teacher_input(const seq::TokenSeq& seq);

struct DecoderOutput {
  nd::Var junction_logits;  // rows x classes
  nd::Var position_logits;  // rows x alphabet
};

struct LossParts {
  nd::Var total;
  double position = 0.0;
  double junction = 0.0;
  double aux = 0.0;
};

struct LossWeights {
  double position = 1.0;
  double junction = 1.0;
  double aux = 0.2;
};

struct StepDistribution {
  std::vector<double> junction;  // over classes, [EOS] at 0
  std::vector<double> position;  // over the alphabet
};

// Optional restriction applied during generation: may the junction `vocab_id`
// become a child of prefix node `father` (-1 for the root)? Asked only about the
// candidate the decoder would pick; a refusal masks it and the pick is repeated.
using JunctionFilter = std::function<bool(std::span<const seq::Token> prefix, std::span<const int> fathers, int father, int vocab_id)>;

struct GenerateOptions {
  int max_len = 64;
  double temperature = 0.0;  // <= 0 selects greedily
  JunctionFilter filter;
};

struct Generated {
  seq::TokenSeq seq;
  bool truncated = false;  // max_len reached before [EOS]
};

class Decoder {
 public:
  // Registers parameters named dec.* in `store`.
  Decoder(const DecoderConfig& cfg, nd::ParamStore& store, nd::Rng& rng);
  ~Decoder();
  Decoder(Decoder&&) noexcept;
  Decoder& operator=(Decoder&&) noexcept;

  const DecoderConfig& config() const noexcept { return cfg_; }

  nd::Var embed(nd::Tape& t, nd::Var z, const DecoderInput& in) const;
  // gelu(K H W) with K = I + theta * laplacian.
  nd::Var dagcn_block(nd::Tape& t, nd::Var h, const nd::Matrix& laplacian, int layer) const;
  nd::Var masked_attn_block(nd::Tape& t, nd::Var h, int layer) const;
  nd::Var layer(nd::Tape& t, nd::Var h, const nd::Matrix& laplacian, int layer) const;
  DecoderOutput forward(nd::Tape& t, nd::Var z, const DecoderInput& in) const;
  // 1 x 3 standardized (weight, logP, TPSA) prediction.
  nd::Var aux(nd::Tape& t, nd::Var z) const;

  // position CE + junction CE + aux MSE, each weighted; root and padding positions unscored.
  LossParts loss(nd::Tape& t, nd::Var z, const DecoderInput& in, const nd::Matrix& aux_target,
                 const LossWeights& weights = {}) const;

  StepDistribution step(const nd::Matrix& z, std::span<const seq::Token> prefix) const;
  Generated generate(const nd::Matrix& z, const GenerateOptions& opts, nd::Rng& rng) const;

  nd::Param& theta(int layer) const;

 private:
  struct Weights;
  DecoderConfig cfg_;
  std::unique_ptr<Weights> w_;
};

}  // namespace jtk::dec
