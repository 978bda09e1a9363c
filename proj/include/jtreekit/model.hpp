#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jtreekit/decoder.hpp"
#include "jtreekit/encoder.hpp"
#include "jtreekit/molgraph.hpp"
#include "jtreekit/properties.hpp"

namespace jtk::model {

struct ModelConfig {
  enc::EncoderConfig encoder;
  dec::DecoderConfig decoder;
  dec::LossWeights weights;
};

// Sets vocabulary sizes and the decoder latent width from the encoder.
ModelConfig default_config(int vocab_size);

// Per-property standardization for the auxiliary targets (weight, logP, TPSA).
struct AuxStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};

  nd::Matrix standardize(const mol::Properties& p) const;
  mol::Properties restore(const nd::Matrix& standardized) const;
};

// One training molecule with everything the model needs precomputed.
struct Example {
  std::string smiles;  // canonical
  jt::JunctionTree tree;
  seq::TokenSeq seq;
  enc::EncoderInput encoder_input;
  dec::DecoderInput decoder_input;
  mol::Properties props;
};

Example make_example(const mol::MolGraph& g, const jt::Vocabulary& vocab, int alphabet = seq::kStandardAlphabet);
AuxStats fit_aux_stats(std::span<const Example> examples);

struct TokenAccuracy {
  int correct = 0;
  int total = 0;
  double fraction() const noexcept { return total == 0 ? 1.0 : static_cast<double>(correct) / total; }
};

struct TrainStats {
  double loss = 0.0;
  double position = 0.0;
  double junction = 0.0;
  double aux = 0.0;
  double grad_norm = 0.0;
};

class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelConfig& config() const noexcept { return cfg_; }
  nd::ParamStore& params() noexcept { return *store_; }
  const enc::Encoder& encoder() const noexcept { return encoder_; }
  const dec::Decoder& decoder() const noexcept { return decoder_; }

  AuxStats aux_stats;

  dec::LossParts loss(nd::Tape& t, const Example& ex) const;
  // Accumulates gradients over the batch, averages, clips to `clip` (<= 0 disables) and takes one Adam step.
  TrainStats train_step(std::span<const Example* const> batch, const nd::AdamConfig& adam, double clip = 1.0);
  // A token (junction id plus position case where scored) counts when every
  // scored prediction for it is the argmax under teacher forcing.
  TokenAccuracy teacher_accuracy(const Example& ex) const;

  nd::Matrix latent(const Example& ex) const;
  nd::Matrix latent(const enc::EncoderInput& in) const;

  nd::Checkpoint checkpoint() const;
  static Model from_checkpoint(const nd::Checkpoint& c);

 private:
  ModelConfig cfg_;
  std::unique_ptr<nd::ParamStore> store_;
  nd::Rng init_rng_;
  enc::Encoder encoder_;
  dec::Decoder decoder_;
};

}  // namespace jtk::model
