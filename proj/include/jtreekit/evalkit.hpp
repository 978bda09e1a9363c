#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "jtreekit/fingerprint.hpp"
#include "jtreekit/ndtensor.hpp"
#include "jtreekit/properties.hpp"

namespace jtk::eval {

struct MoleculeRecord {
  std::string input;
  std::string smiles;  // canonical; empty when invalid
  bool valid = false;
  mol::Properties props;
};

struct GenerationReport {
  std::size_t n_requested = 0;
  std::size_t n_valid = 0;
  double valid_fraction = 0.0;
  double unique_fraction = 0.0;
  double novelty_fraction = 0.0;
  double intdiv1 = 0.0;
  double intdiv2 = 0.0;
  std::optional<double> unique_at_k;
  std::size_t k = 0;
  std::vector<MoleculeRecord> records;
};

struct EvalOptions {
  int fp_radius = 2;
  std::size_t fp_bits = 2048;
  std::size_t unique_at_k = 0;  // 0 disables Unique@k
};

// `generated` holds one entry per requested molecule; nullopt marks a failure.
// `train` holds canonical strings. Throws EmptySet when nothing was requested.
GenerationReport evaluate(std::span<const std::optional<mol::MolGraph>> generated, const std::set<std::string>& train,
                          const EvalOptions& opts = {});

// Parses each string; unparsable or valence-invalid entries count as invalid.
GenerationReport evaluate_smiles(std::span<const std::string> generated, const std::set<std::string>& train,
                                 const EvalOptions& opts = {});

// 1 - (mean over all ordered pairs, self-pairs included, of T^p)^(1/p). Throws EmptySet.
double internal_diversity(std::span<const mol::Fingerprint> fps, int p);

// `metric<TAB>value` lines.
void write_report(const std::string& path, const GenerationReport& report);
// index,input,smiles,valid,W,logP,TPSA
void write_records_csv(const std::string& path, const GenerationReport& report);

struct Projection {
  nd::Matrix coords;      // n x 2
  nd::Matrix components;  // 2 x d, orthonormal rows
  std::vector<double> mean;
  double explained = 0.0;  // share of total variance on the two axes
  bool one_dimensional = false;
};

// Top-2 principal axes by orthogonal power iteration. Throws DegenerateData for
// fewer than 3 rows or zero variance; rank 1 falls back to one axis (flagged).
Projection pca2d(const nd::Matrix& latents, std::uint64_t seed = 1);

// x,y,label
void write_projection_csv(const std::string& path, const Projection& p, std::span<const std::string> labels);

// k rows at weights i / (k + 1), i = 1..k. Throws WidthMismatch, BadRange.
nd::Matrix interpolate(std::span<const double> z_a, std::span<const double> z_b, int k = 4);

}  // namespace jtk::eval
