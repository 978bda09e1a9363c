#pragma once

#include <span>
#include <string>
#include <vector>

#include "jtreekit/jtree.hpp"

namespace jtk::seq {

// Position cases locate a node's father relative to its precursor p (the node
// emitted just before it):
//   0  father = p
//   c  father = father(p) + (c - 1), for c >= 1
// The standard alphabet has 4 symbols (advance 0..2); larger alphabets extend
// the advance range.
inline constexpr int kStandardAlphabet = 4;

struct Token {
  int id = 0;
  int pos = 0;
  bool operator==(const Token&) const = default;
};

// Items in BFS order followed by one [EOS] token. The root's case is 0.
struct TokenSeq {
  std::vector<Token> items;
  std::size_t num_nodes() const noexcept { return items.empty() ? 0 : items.size() - 1; }
  bool operator==(const TokenSeq&) const = default;
};

struct BfsPermutation {
  std::vector<int> order;   // tree node index per sequence position
  std::vector<int> father;  // sequence index of the father, -1 for the root
  std::vector<int> depth;   // BFS layer per sequence position
};

// Root: junction holding the molecule atom of smallest canonical rank (ties by
// fragment key, then node index); node 0 for trees without molecule context.
// Children are visited in ascending fragment-key order.
BfsPermutation bfs_order(const jt::JunctionTree& jt);

// Position case for sequence index k given fathers of earlier positions; -1 if
// the advance does not fit the alphabet.
int position_case(std::span<const int> father, int k, int alphabet = kStandardAlphabet);

// Father index implied by case `pos` at sequence index k, or -1 when the case
// points past the precursor (dangling).
int father_from_case(std::span<const int> father, int k, int pos);

// Cases that yield a valid father for the next node after `father.size()` nodes.
std::vector<bool> feasible_cases(std::span<const int> father, int alphabet = kStandardAlphabet);

TokenSeq encode(const jt::JunctionTree& jt, const jt::Vocabulary& vocab, int alphabet = kStandardAlphabet);

// Fathers of the node items (EOS excluded). Throws DanglingPosition.
std::vector<int> decode_fathers(std::span<const Token> items);

jt::JunctionTree decode(const TokenSeq& seq, const jt::Vocabulary& vocab);

struct Coverage {
  double fraction = 1.0;
  int max_advance = 0;
  std::size_t encodable = 0;
  std::size_t total = 0;
};

// Fraction of trees encodable with `alphabet`, plus the largest father advance seen.
Coverage alphabet_coverage(std::span<const jt::JunctionTree> trees, int alphabet = kStandardAlphabet);

// `junction_id:case` per line, then `EOS`.
std::string dump(const TokenSeq& seq);
TokenSeq parse_dump(const std::string& text);

}  // namespace jtk::seq
