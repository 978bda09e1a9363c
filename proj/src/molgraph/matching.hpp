#pragma once

#include <optional>
#include <span>
#include <vector>

#include "jtreekit/molgraph.hpp"

namespace jtk::mol::detail {

// Perfect matching over the atoms flagged in `node`, using only bonds flagged in
// `edge`. Atoms are processed in `order` (ties in the search resolve toward
// earlier atoms) so the result is deterministic for a fixed order.
// Returns, per atom, the matched bond index (-1 for atoms outside `node`).
std::optional<std::vector<int>> perfect_matching(const MolGraph& g, const std::vector<bool>& node,
                                                 const std::vector<bool>& edge, std::span<const int> order,
                                                 int forced_bond = -1, int forbidden_bond = -1);

// Atoms whose single double bond is a ring bond, and ring bonds joining two such
// atoms: the alternating systems whose Kekulé structure may vary.
struct PiSystem {
  std::vector<bool> atom;
  std::vector<bool> bond;
};
PiSystem pi_system(const MolGraph& g, const std::vector<bool>& in_ring);

}  // namespace jtk::mol::detail
