#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jtreekit/jtree.hpp"

namespace jtk::assem {

enum class Property { Weight, LogP, Tpsa };

struct PropertyTarget {
  Property property = Property::LogP;
  double target = 0.0;
  double width = 1.0;  // Gaussian kernel width
};

struct ScoreWeights {
  double likelihood = 1.0;
  double property = 1.0;
  std::vector<PropertyTarget> targets;
  // Match-to-reference term: 1 for the same canonical molecule, else half the fingerprint Tanimoto.
  double match = 0.0;
  std::optional<mol::MolGraph> reference;
};

// Throws Config for negative weights, all-zero weights or non-positive kernel widths.
void validate(const ScoreWeights& w);

// Attachment steps in DFS order from the root: (parent junction, child junction).
struct AssemblyPlan {
  int root = 0;
  std::vector<std::pair<int, int>> steps;
};

// Root is the first node of the BFS order; children are visited in BFS order.
AssemblyPlan plan_assembly(const jt::JunctionTree& jt);

struct PartialAssembly {
  mol::MolGraph mol;
  // Per junction: fragment atom -> molecule atom; empty until placed.
  std::vector<std::vector<int>> atoms;
  // Per molecule atom: number of placed junctions holding it.
  std::vector<int> owners;
  // Junctions whose attachment was abandoned (including their subtrees).
  std::vector<char> dropped;
  int placed = 0;

  static PartialAssembly start(const jt::JunctionTree& jt, int root);
  bool is_placed(int j) const { return !atoms[static_cast<std::size_t>(j)].empty(); }
};

// Valence-valid ways to merge `child` into the placed `parent`, one state per distinct
// Kekulé structure, in canonical-string order.
std::vector<PartialAssembly> attachment_states(const jt::JunctionTree& jt, const PartialAssembly& s, int parent, int child);

// True when attachment_states would be non-empty.
bool can_attach(const jt::JunctionTree& jt, const PartialAssembly& s, int parent, int child);

// Distinct merged molecules (by canonical string) for the same attachment. Throws NoValidAttachment.
std::vector<mol::MolGraph> enumerate_attachments(const jt::JunctionTree& jt, const PartialAssembly& s, int parent, int child);

struct AssemblyResult {
  mol::MolGraph mol;
  std::string smiles;    // canonical
  bool partial = false;  // some junctions could not be attached
  int placed = 0;
  double score = 0.0;
};

using TraceSink = std::function<void(const std::string&)>;

struct MctsOptions {
  int budget = 200;  // simulations
  std::uint64_t seed = 1;
  double exploration = 1.4142135623730951;
  TraceSink trace;  // receives "step, action, score" lines when set
};

// UCT search over attachment choices; returns the best-scoring terminal found
// (ties broken by the smaller canonical string). Throws EmptyTree.
AssemblyResult mcts_assemble(const jt::JunctionTree& jt, const ScoreWeights& w, const MctsOptions& opts = {});

// First attachment in canonical order at every step; unattachable subtrees are dropped
// and the result flagged partial. Throws EmptyTree.
AssemblyResult greedy_assemble(const jt::JunctionTree& jt, const ScoreWeights& w = {}, const TraceSink& trace = {});

// Every distinct terminal molecule, best first (score, then canonical string).
// Throws BadRange when more than `max_states` search states would be visited.
std::vector<AssemblyResult> enumerate_assemblies(const jt::JunctionTree& jt, const ScoreWeights& w, std::size_t max_states = 1000000);

// Score of a terminal assembly with `placed` of `total` junctions attached.
double assembly_score(const mol::MolGraph& g, int placed, int total, const ScoreWeights& w);

}  // namespace jtk::assem
