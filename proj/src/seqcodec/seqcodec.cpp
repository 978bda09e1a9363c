#include "jtreekit/seqcodec.hpp"

#include <algorithm>
#include <sstream>

namespace jtk::seq {

BfsPermutation bfs_order(const jt::JunctionTree& jt) {
  BfsPermutation p;
  const int m = static_cast<int>(jt.nodes.size());
  if (m == 0) fail(ErrorCode::EmptyTree, "empty junction tree");
  auto key_less = [&](int x, int y) {
    const auto& a = jt.nodes[static_cast<std::size_t>(x)];
    const auto& b = jt.nodes[static_cast<std::size_t>(y)];
    if (a.key != b.key) return a.key < b.key;
    if (a.min_rank != b.min_rank) return a.min_rank < b.min_rank;
    return x < y;
  };
  int root = 0;
  for (int i = 1; i < m; ++i) {
    const auto& a = jt.nodes[static_cast<std::size_t>(i)];
    const auto& r = jt.nodes[static_cast<std::size_t>(root)];
    if (a.min_rank < 0) break;
    if (a.min_rank < r.min_rank || (a.min_rank == r.min_rank && key_less(i, root))) root = i;
  }
  const auto adj = jt.adjacency();
  std::vector<int> seq_of(static_cast<std::size_t>(m), -1);
  p.order.push_back(root);
  p.father.push_back(-1);
  p.depth.push_back(0);
  seq_of[static_cast<std::size_t>(root)] = 0;
  for (std::size_t i = 0; i < p.order.size(); ++i) {
    const int u = p.order[i];
    std::vector<int> kids;
    for (int w : adj[static_cast<std::size_t>(u)]) {
      if (seq_of[static_cast<std::size_t>(w)] < 0) kids.push_back(w);
    }
    std::sort(kids.begin(), kids.end(), key_less);
    for (int w : kids) {
      seq_of[static_cast<std::size_t>(w)] = static_cast<int>(p.order.size());
      p.order.push_back(w);
      p.father.push_back(static_cast<int>(i));
      p.depth.push_back(p.depth[i] + 1);
    }
  }
  if (static_cast<int>(p.order.size()) != m) fail(ErrorCode::EmptyTree, "junction tree is not connected");
  return p;
}

int position_case(std::span<const int> father, int k, int alphabet) {
  const int f = father[static_cast<std::size_t>(k)];
  if (k == 0) return 0;
  if (f == k - 1) return 0;
  const int prev = father[static_cast<std::size_t>(k - 1)];
  if (prev < 0) return -1;
  const int advance = f - prev;
  if (advance < 0 || advance + 1 >= alphabet) return -1;
  return advance + 1;
}

int father_from_case(std::span<const int> father, int k, int pos) {
  if (k == 0) return -1;
  if (pos == 0) return k - 1;
  const int prev = father[static_cast<std::size_t>(k - 1)];
  if (prev < 0 || pos < 0) return -1;
  const int f = prev + (pos - 1);
  return f < k ? f : -1;
}

std::vector<bool> feasible_cases(std::span<const int> father, int alphabet) {
  std::vector<bool> ok(static_cast<std::size_t>(alphabet), false);
  const int k = static_cast<int>(father.size());
  if (k == 0) {
    ok[0] = true;
    return ok;
  }
  for (int c = 0; c < alphabet; ++c) ok[static_cast<std::size_t>(c)] = father_from_case(father, k, c) >= 0;
  return ok;
}

TokenSeq encode(const jt::JunctionTree& jt, const jt::Vocabulary& vocab, int alphabet) {
  const auto p = bfs_order(jt);
  TokenSeq s;
  for (std::size_t k = 0; k < p.order.size(); ++k) {
    const int c = position_case(p.father, static_cast<int>(k), alphabet);
    if (c < 0) {
      fail(ErrorCode::UnencodableTree, "father advance at position " + std::to_string(k) + " exceeds the " +
                                           std::to_string(alphabet) + "-symbol alphabet");
    }
    s.items.push_back({vocab.id(jt.nodes[static_cast<std::size_t>(p.order[k])].key), c});
  }
  s.items.push_back({jt::Vocabulary::kEOS, 0});
  return s;
}

std::vector<int> decode_fathers(std::span<const Token> items) {
  std::vector<int> father;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (k == 0) {
      father.push_back(-1);
      continue;
    }
    const int f = father_from_case(father, static_cast<int>(k), items[k].pos);
    if (f < 0) {
      fail(ErrorCode::DanglingPosition, "position case " + std::to_string(items[k].pos) + " at index " + std::to_string(k) +
                                            " refers to a node that does not exist");
    }
    father.push_back(f);
  }
  return father;
}

jt::JunctionTree decode(const TokenSeq& seq, const jt::Vocabulary& vocab) {
  if (seq.items.empty() || seq.items.back().id != jt::Vocabulary::kEOS) fail(ErrorCode::MissingEOS, "sequence is not terminated by [EOS]");
  const std::span<const Token> nodes(seq.items.data(), seq.items.size() - 1);
  if (nodes.empty()) fail(ErrorCode::EmptyTree, "sequence has no root");
  for (const auto& t : nodes) {
    if (t.id < jt::Vocabulary::kReserved || t.id >= vocab.size()) {
      if (t.id == jt::Vocabulary::kEOS) fail(ErrorCode::MissingEOS, "[EOS] before the end of the sequence");
      fail(ErrorCode::UnknownJunctionId, "junction id " + std::to_string(t.id) + " is not a fragment");
    }
  }
  const auto father = decode_fathers(nodes);
  jt::JunctionTree tree;
  for (const auto& t : nodes) tree.nodes.push_back(vocab.junction(t.id));
  for (std::size_t k = 1; k < nodes.size(); ++k) tree.edges.push_back({father[k], static_cast<int>(k), {}});
  return tree;
}

Coverage alphabet_coverage(std::span<const jt::JunctionTree> trees, int alphabet) {
  Coverage c;
  c.total = trees.size();
  for (const auto& t : trees) {
    const auto p = bfs_order(t);
    bool ok = true;
    for (std::size_t k = 1; k < p.order.size(); ++k) {
      if (p.father[k] == static_cast<int>(k) - 1) continue;
      const int adv = p.father[k] - p.father[k - 1];
      c.max_advance = std::max(c.max_advance, adv);
      if (adv + 1 >= alphabet) ok = false;
    }
    c.encodable += ok ? 1 : 0;
  }
  c.fraction = c.total == 0 ? 1.0 : static_cast<double>(c.encodable) / static_cast<double>(c.total);
  return c;
}

std::string dump(const TokenSeq& seq) {
  std::string out;
  for (std::size_t i = 0; i + 1 < seq.items.size(); ++i) {
    out += std::to_string(seq.items[i].id) + ":" + std::to_string(seq.items[i].pos) + "\n";
  }
  if (!seq.items.empty() && seq.items.back().id == jt::Vocabulary::kEOS) out += "EOS\n";
  return out;
}

TokenSeq parse_dump(const std::string& text) {
  TokenSeq s;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "EOS") {
      s.items.push_back({jt::Vocabulary::kEOS, 0});
      break;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos) fail(ErrorCode::Format, "token line must be id:case: " + line);
    try {
      s.items.push_back({std::stoi(line.substr(0, colon)), std::stoi(line.substr(colon + 1))});
    } catch (const std::exception&) {
      fail(ErrorCode::Format, "bad token line: " + line);
    }
  }
  return s;
}

}  // namespace jtk::seq
