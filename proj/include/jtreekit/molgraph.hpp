#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jtreekit/error.hpp"

namespace jtk::mol {

enum class Element : std::uint8_t { H, C, N, O, F, P, S, Cl, Br, I };

std::string_view element_symbol(Element e) noexcept;
std::optional<Element> element_from_symbol(std::string_view sym) noexcept;
double atomic_mass(Element e) noexcept;

enum class BondOrder : std::uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

struct Atom {
  Element element = Element::C;
  int formal_charge = 0;
  // Hydrogen count written in a bracket atom. Organic-subset atoms (bracket ==
  // false) carry implicit hydrogens derived from the valence table instead.
  int explicit_h = 0;
  bool bracket = false;
  // Aromatic as written in the input; bond orders are always kept in Kekulé form.
  bool aromatic = false;

  bool operator==(const Atom&) const = default;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::Single;
  int kekule = 1;  // 1, 2 or 3

  int other(int atom) const noexcept { return atom == a ? b : a; }
  bool operator==(const Bond&) const = default;
};

struct Neighbor {
  int atom;
  int bond;
  bool operator==(const Neighbor&) const = default;
};

// Allowed valences for (element, charge); empty when the state is unsupported.
std::span<const int> allowed_valences(Element e, int charge) noexcept;

class MolGraph {
 public:
  MolGraph() = default;

  int add_atom(const Atom& atom);
  // Adds an undirected bond; kekule defaults to the order for non-aromatic bonds.
  int add_bond(int a, int b, BondOrder order, int kekule = 0);

  std::size_t num_atoms() const noexcept { return atoms_.size(); }
  std::size_t num_bonds() const noexcept { return bonds_.size(); }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const std::vector<Bond>& bonds() const noexcept { return bonds_; }
  const Atom& atom(int i) const { return atoms_.at(static_cast<std::size_t>(i)); }
  Atom& atom(int i) { return atoms_.at(static_cast<std::size_t>(i)); }
  const Bond& bond(int i) const { return bonds_.at(static_cast<std::size_t>(i)); }
  Bond& bond(int i) { return bonds_.at(static_cast<std::size_t>(i)); }
  std::span<const Neighbor> neighbors(int i) const { return adjacency_.at(static_cast<std::size_t>(i)); }
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
  std::optional<int> bond_between(int a, int b) const;

  // Sum of Kekulé bond orders around an atom.
  int bond_order_sum(int i) const;
  // Total hydrogens: bracket count, or the implicit count from the valence table
  // (smallest allowed valence that fits the bond-order sum).
  int hydrogen_count(int i) const;
  int total_hydrogens() const;

  bool is_connected() const;

  // Copy of the subgraph induced by `atom_ids` (in the given order) keeping only
  // bonds whose both endpoints are listed. Hydrogens become implicit.
  MolGraph induced_subgraph(std::span<const int> atom_ids) const;

  // Graph with atoms permuted so new index perm[i] holds old atom i.
  MolGraph permuted(std::span<const int> perm) const;

  bool operator==(const MolGraph&) const = default;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

// Parsing / writing -----------------------------------------------------------

// Parses the supported SMILES subset (organic subset, bracket atoms with charge
// and H count, ring closures 1-9 and %nn, branches, bond symbols - = # :,
// lowercase aromatic atoms). Aromatic systems are kekulized; the Kekulé
// structure is then normalized so it does not depend on the input atom order.
MolGraph parse_smiles(std::string_view text);

// Same grammar, but an explicitly written Kekulé structure is kept as is.
MolGraph parse_kekule_smiles(std::string_view text);

// Canonical SMILES. Bonds that alternate between Kekulé structures are written
// in aromatic (lowercase) form, so the string is invariant under both atom
// relabeling and the choice of Kekulé structure.
std::string canonical_smiles(const MolGraph& g);

// Canonical SMILES of the exact Kekulé structure (no aromatic notation).
// Used for fragment vocabularies, where the Kekulé pattern must survive.
std::string kekule_smiles(const MolGraph& g);

// Canonical atom ranks (0 = first) under the aromatic-form labeling.
std::vector<int> canonical_ranks(const MolGraph& g);

// Valence ---------------------------------------------------------------------

struct ValenceViolation {
  int atom;
  int used;     // bond-order sum + hydrogens
  int allowed;  // maximum allowed valence (0 for unsupported charge states)
};

// Empty when every atom is within its allowed valence.
std::vector<ValenceViolation> check_valence(const MolGraph& g);

// Ring / aromatic structure helpers --------------------------------------------

// Per bond: true when the bond lies on a cycle.
std::vector<bool> ring_bonds(const MolGraph& g);

// Per bond: true when the bond is single in some Kekulé structure and double in
// another (the Kekulé-invariant notion of aromaticity used for canonical forms).
std::vector<bool> mobile_bonds(const MolGraph& g);

// Hückel-style aromaticity over smallest rings, used by property estimators.
struct AromaticPerception {
  std::vector<bool> atom;
  std::vector<bool> bond;
};
AromaticPerception perceive_aromaticity(const MolGraph& g);

// Minimum cycle basis as atom cycles (each cycle listed in ring order).
std::vector<std::vector<int>> minimum_cycle_basis(const MolGraph& g);

// Re-derives the Kekulé structure of alternating systems in canonical atom
// order so that equivalent inputs yield isomorphic Kekulé graphs.
void normalize_kekule(MolGraph& g);

}  // namespace jtk::mol
