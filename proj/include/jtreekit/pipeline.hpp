#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "jtreekit/assembler.hpp"
#include "jtreekit/evalkit.hpp"
#include "jtreekit/latentdiff.hpp"
#include "jtreekit/model.hpp"

namespace jtk::pipe {

// Flat `key = value` text grouped under `[section]` headers; `#` starts a comment.
// Keys are listed in README.md. Unknown sections or keys are rejected.
struct RunConfig {
  // [paths]
  std::string dataset;
  std::string vocab;
  std::string checkpoint;
  std::string latents;
  std::string diffusion;

  // [model]
  int layers = 2;
  int hidden = 64;
  int heads = 4;
  int ffn = 128;
  double aux_weight = 0.2;

  // [train]
  int epochs = 10;
  int batch = 16;
  double lr = 1e-3;
  long warmup = -1;  // steps; -1 warms up over the first epoch
  double decay = 1e-4;
  double clip = 1.0;

  // [diffusion]
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int diff_hidden = 128;
  int diff_depth = 6;
  int diff_epochs = 200;
  int diff_batch = 64;
  double diff_lr = 1e-3;
  long diff_warmup = 100;
  double diff_decay = 0.0;
  diff::NoiseLoss diff_loss = diff::NoiseLoss::Mse;
  int steps = 50;
  double eta = 0.0;

  // [sample]
  int max_len = 64;
  double temperature = 0.0;

  // [assembly]
  int budget = 200;
  double lambda_likelihood = 1.0;
  double lambda_property = 1.0;
  std::vector<assem::PropertyTarget> targets;  // `targets = logp:2.5:1, tpsa:40:10`

  std::uint64_t seed = 1;
  int workers = 1;

  // Throws Config for invalid values.
  void validate() const;
  assem::ScoreWeights score_weights() const;
};

RunConfig parse_config(std::string_view text);
// `section.key` as in the file, e.g. "train.epochs". Does not re-validate.
void set_option(RunConfig& cfg, const std::string& key, const std::string& value);
// Missing or unreadable file is a Config error.
RunConfig load_config(const std::string& path);
// JTREEKIT_SEED, when set, replaces the configured seed.
void apply_environment(RunConfig& cfg);

using LogSink = std::function<void(const std::string&)>;

// Throws MissingArtifact when the path is unset or absent.
void require_input(const std::string& path, const char* what);
// Throws Config when the output exists and `overwrite` is false, or the path is unset.
void require_output(const std::string& path, const char* what, bool overwrite);

std::vector<mol::MolGraph> load_dataset(const std::string& path);

jt::Vocabulary build_vocabulary(const RunConfig& cfg);

struct VaeReport {
  std::vector<double> epoch_loss;  // mean per-example loss per epoch
  double initial_loss = 0.0;       // before any update
  double token_accuracy = 0.0;     // teacher-forced, after the last epoch
  std::size_t examples = 0;
  std::size_t skipped = 0;  // molecules whose tree could not be encoded
};

// Teacher-forced training; writes the checkpoint after every epoch.
VaeReport train_vae(const RunConfig& cfg, const LogSink& log = {});

// Latents for every encodable dataset molecule, in file order.
nd::Matrix embed(const RunConfig& cfg, const LogSink& log = {});

std::vector<double> train_diffusion(const RunConfig& cfg, const LogSink& log = {});

struct Decoded {
  std::string smiles;
  bool valid = false;
  bool partial = false;    // assembler dropped junctions
  bool truncated = false;  // decoder hit max_len
  int nodes = 0;
};

// Latent -> token sequence -> junction tree -> assembled molecule.
Decoded decode_latent(const model::Model& m, const jt::Vocabulary& vocab, const nd::Matrix& z, const RunConfig& cfg,
                      std::uint64_t seed);

// n molecules from diffusion latents. Sample i uses seed-derived streams, so the
// output does not depend on `workers`.
std::vector<Decoded> sample(const RunConfig& cfg, int n, const LogSink& log = {});

// Comment lines summarizing a sample run.
std::vector<std::string> sample_summary(const std::vector<Decoded>& out);

eval::GenerationReport evaluate_file(const RunConfig& cfg, const std::string& samples_path, std::size_t unique_at_k = 0);

// k decoded molecules on the segment between the latents of two molecules.
std::vector<Decoded> interpolate(const RunConfig& cfg, const std::string& smiles_a, const std::string& smiles_b, int k);

}  // namespace jtk::pipe
