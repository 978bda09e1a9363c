#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jtreekit/molgraph.hpp"

namespace jtk::jt {

enum class JunctionKind : std::uint8_t { Ring, Bond, Singleton };

struct Junction {
  JunctionKind kind = JunctionKind::Singleton;
  mol::MolGraph fragment;
  // Kekulé canonical SMILES of the fragment; the vocabulary key.
  std::string key;
  // fragment atom i is molecule atom atom_map[i]; empty when not derived from a molecule.
  std::vector<int> atom_map;
  // Hydrogens carried by the junction's atoms (molecule context when available).
  int hydrogens = 0;
  // Smallest canonical rank among the junction's molecule atoms; -1 without a molecule.
  int min_rank = -1;
};

struct TreeEdge {
  int a = 0;
  int b = 0;
  std::vector<int> shared;  // molecule atom indices; empty for trees decoded from tokens
};

struct JunctionTree {
  std::vector<Junction> nodes;
  std::vector<TreeEdge> edges;

  std::size_t size() const noexcept { return nodes.size(); }
  std::vector<std::vector<int>> adjacency() const;
};

JunctionKind kind_of(const mol::MolGraph& fragment);
Junction make_junction(mol::MolGraph fragment);

// Cliques are the non-ring bonds plus the rings of a minimum cycle basis (rings
// sharing more than two atoms merged); atoms in three or more cliques get a
// singleton junction. The tree is a maximum-weight spanning tree over shared
// atom counts. Node order follows canonical atom ranks, so relabeling the
// molecule yields an isomorphic tree with the same node order.
JunctionTree decompose(const mol::MolGraph& g);

struct TreeDefect {
  enum class Kind { UncoveredAtom, UncoveredBond, EmptyShared, SharedMismatch, EdgeCount, Cycle, Disconnected, BadIndex };
  Kind kind;
  int index;  // atom, bond, edge or node index depending on kind
};

std::vector<TreeDefect> tree_cover_check(const JunctionTree& jt, const mol::MolGraph& g);

// Canonical string of the labeled, unrooted tree (labels = fragment keys).
std::string tree_signature(const JunctionTree& jt);

class Vocabulary {
 public:
  static constexpr int kJNode = 0;
  static constexpr int kEOS = 1;
  static constexpr int kPad = 2;
  static constexpr int kReserved = 3;

  Vocabulary();

  // Entries sorted by key; ids assigned after the reserved tokens.
  static Vocabulary from_counts(const std::map<std::string, std::uint64_t>& counts);

  int size() const noexcept { return static_cast<int>(tokens_.size()); }
  int num_fragments() const noexcept { return size() - kReserved; }
  std::optional<int> find(const std::string& key) const;
  int id(const std::string& key) const;  // throws UnknownJunctionId
  const std::string& token(int id) const;
  std::uint64_t count(int id) const;
  const mol::MolGraph& fragment(int id) const;
  const Junction& junction(int id) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_ && counts_ == o.counts_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::vector<Junction> junctions_;  // parsed fragments, index = id (reserved entries empty)
  std::map<std::string, int> index_;
};

Vocabulary build_vocab(std::span<const mol::MolGraph> dataset);

}  // namespace jtk::jt
