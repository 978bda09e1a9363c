#pragma once

#include "jtreekit/molgraph.hpp"

namespace jtk::mol {

struct Properties {
  double weight = 0.0;  // g/mol, implicit hydrogens included
  double logp = 0.0;    // Wildman-Crippen estimate
  double tpsa = 0.0;    // Å², Ertl fragment contributions
};

struct PropertyOptions {
  // Ertl's S and P polar contributions; off by default (the common TPSA convention).
  bool tpsa_include_s_p = false;
};

Properties properties(const MolGraph& g, const PropertyOptions& opts = {});

double molecular_weight(const MolGraph& g);
// Per-atom Crippen contribution, hydrogens folded into their heavy atom.
std::vector<double> crippen_contributions(const MolGraph& g);
std::vector<double> tpsa_contributions(const MolGraph& g, bool include_s_p = false);

}  // namespace jtk::mol
