#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include "jtreekit/jtree.hpp"

namespace jtk::jt {

using mol::MolGraph;

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    return true;
  }
};

std::vector<int> intersect(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<std::vector<int>> ring_cliques(const MolGraph& g) {
  std::vector<std::vector<int>> rings;
  for (auto r : mol::minimum_cycle_basis(g)) {
    std::sort(r.begin(), r.end());
    rings.push_back(std::move(r));
  }
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < rings.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < rings.size(); ++j) {
        if (intersect(rings[i], rings[j]).size() > 2) {
          std::vector<int> u;
          std::set_union(rings[i].begin(), rings[i].end(), rings[j].begin(), rings[j].end(), std::back_inserter(u));
          rings[i] = std::move(u);
          rings.erase(rings.begin() + static_cast<std::ptrdiff_t>(j));
          merged = true;
          break;
        }
      }
    }
  }
  return rings;
}

}  // namespace

std::vector<std::vector<int>> JunctionTree::adjacency() const {
  std::vector<std::vector<int>> adj(nodes.size());
  for (const auto& e : edges) {
    adj[static_cast<std::size_t>(e.a)].push_back(e.b);
    adj[static_cast<std::size_t>(e.b)].push_back(e.a);
  }
  return adj;
}

JunctionKind kind_of(const MolGraph& fragment) {
  if (fragment.num_atoms() == 1) return JunctionKind::Singleton;
  if (fragment.num_atoms() == 2 && fragment.num_bonds() == 1) return JunctionKind::Bond;
  return JunctionKind::Ring;
}

Junction make_junction(MolGraph fragment) {
  Junction j;
  j.kind = kind_of(fragment);
  j.key = mol::kekule_smiles(fragment);
  j.hydrogens = fragment.total_hydrogens();
  j.fragment = std::move(fragment);
  return j;
}

JunctionTree decompose(const MolGraph& g) {
  JunctionTree jt;
  const int n = static_cast<int>(g.num_atoms());
  if (n == 0) return jt;
  const auto rank = mol::canonical_ranks(g);
  const auto in_ring = mol::ring_bonds(g);

  std::vector<std::vector<int>> cliques;
  for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b) {
    if (in_ring[static_cast<std::size_t>(b)]) continue;
    const auto& bd = g.bond(b);
    cliques.push_back({std::min(bd.a, bd.b), std::max(bd.a, bd.b)});
  }
  for (auto& r : ring_cliques(g)) cliques.push_back(std::move(r));
  if (cliques.empty()) cliques.push_back({0});

  std::vector<std::vector<int>> member(static_cast<std::size_t>(n));
  for (int c = 0; c < static_cast<int>(cliques.size()); ++c) {
    for (int a : cliques[static_cast<std::size_t>(c)]) member[static_cast<std::size_t>(a)].push_back(c);
  }
  std::vector<bool> hub(static_cast<std::size_t>(n), false);
  for (int a = 0; a < n; ++a) {
    if (member[static_cast<std::size_t>(a)].size() >= 3) {
      hub[static_cast<std::size_t>(a)] = true;
      cliques.push_back({a});
    }
  }

  // Node order by sorted canonical ranks of the clique atoms.
  std::vector<std::vector<int>> sig(cliques.size());
  for (std::size_t c = 0; c < cliques.size(); ++c) {
    for (int a : cliques[c]) sig[c].push_back(rank[static_cast<std::size_t>(a)]);
    std::sort(sig[c].begin(), sig[c].end());
  }
  std::vector<int> order(cliques.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return sig[static_cast<std::size_t>(x)] < sig[static_cast<std::size_t>(y)]; });

  for (int c : order) {
    const auto& atoms = cliques[static_cast<std::size_t>(c)];
    Junction j = make_junction(g.induced_subgraph(atoms));
    j.atom_map = atoms;
    j.hydrogens = 0;
    for (int a : atoms) j.hydrogens += g.hydrogen_count(a);
    j.min_rank = sig[static_cast<std::size_t>(c)].front();
    jt.nodes.push_back(std::move(j));
  }
  std::vector<std::vector<int>> node_sig(jt.nodes.size());
  for (std::size_t i = 0; i < jt.nodes.size(); ++i) node_sig[i] = sig[static_cast<std::size_t>(order[i])];

  struct Candidate {
    int weight;
    int a, b;
    std::vector<int> shared;
  };
  std::vector<Candidate> cand;
  const int m = static_cast<int>(jt.nodes.size());
  for (int i = 0; i < m; ++i) {
    for (int k = i + 1; k < m; ++k) {
      auto& ai = jt.nodes[static_cast<std::size_t>(i)].atom_map;
      auto& ak = jt.nodes[static_cast<std::size_t>(k)].atom_map;
      auto shared = intersect(ai, ak);
      if (shared.empty()) continue;
      const bool single_i = ai.size() == 1, single_k = ak.size() == 1;
      if (!single_i && !single_k &&
          std::all_of(shared.begin(), shared.end(), [&](int a) { return hub[static_cast<std::size_t>(a)]; })) {
        continue;  // linked through the singleton junction instead
      }
      const int w = (single_i || single_k) ? 1 : static_cast<int>(shared.size());
      cand.push_back({w, i, k, std::move(shared)});
    }
  }
  auto tie_key = [&](const Candidate& c) {
    const auto& ka = jt.nodes[static_cast<std::size_t>(c.a)].key;
    const auto& kb = jt.nodes[static_cast<std::size_t>(c.b)].key;
    const bool swap = kb < ka;
    return std::make_tuple(-c.weight, swap ? kb : ka, swap ? ka : kb, node_sig[static_cast<std::size_t>(swap ? c.b : c.a)],
                           node_sig[static_cast<std::size_t>(swap ? c.a : c.b)]);
  };
  std::sort(cand.begin(), cand.end(), [&](const Candidate& x, const Candidate& y) { return tie_key(x) < tie_key(y); });
  UnionFind uf(static_cast<std::size_t>(m));
  for (auto& c : cand) {
    if (uf.unite(c.a, c.b)) jt.edges.push_back({c.a, c.b, std::move(c.shared)});
  }
  std::sort(jt.edges.begin(), jt.edges.end(), [](const TreeEdge& x, const TreeEdge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  return jt;
}

std::vector<TreeDefect> tree_cover_check(const JunctionTree& jt, const MolGraph& g) {
  using K = TreeDefect::Kind;
  std::vector<TreeDefect> out;
  const int n = static_cast<int>(g.num_atoms());
  std::vector<std::vector<int>> holders(static_cast<std::size_t>(n));
  for (int j = 0; j < static_cast<int>(jt.nodes.size()); ++j) {
    const auto& node = jt.nodes[static_cast<std::size_t>(j)];
    for (int a : node.atom_map) {
      if (a < 0 || a >= n) {
        out.push_back({K::BadIndex, j});
        continue;
      }
      holders[static_cast<std::size_t>(a)].push_back(j);
    }
  }
  for (int a = 0; a < n; ++a) {
    if (holders[static_cast<std::size_t>(a)].empty()) out.push_back({K::UncoveredAtom, a});
  }
  for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b) {
    const auto& bd = g.bond(b);
    bool covered = false;
    for (int j : holders[static_cast<std::size_t>(bd.a)]) {
      const auto& am = jt.nodes[static_cast<std::size_t>(j)].atom_map;
      if (am.size() >= 2 && std::find(am.begin(), am.end(), bd.b) != am.end()) covered = true;
    }
    if (!covered) out.push_back({K::UncoveredBond, b});
  }
  const int m = static_cast<int>(jt.nodes.size());
  if (m > 0 && static_cast<int>(jt.edges.size()) != m - 1) out.push_back({K::EdgeCount, static_cast<int>(jt.edges.size())});
  UnionFind uf(static_cast<std::size_t>(m));
  for (int e = 0; e < static_cast<int>(jt.edges.size()); ++e) {
    const auto& ed = jt.edges[static_cast<std::size_t>(e)];
    if (ed.a < 0 || ed.b < 0 || ed.a >= m || ed.b >= m || ed.a == ed.b) {
      out.push_back({K::BadIndex, e});
      continue;
    }
    if (!uf.unite(ed.a, ed.b)) out.push_back({K::Cycle, e});
    if (ed.shared.empty()) {
      out.push_back({K::EmptyShared, e});
    } else {
      auto x = jt.nodes[static_cast<std::size_t>(ed.a)].atom_map;
      auto y = jt.nodes[static_cast<std::size_t>(ed.b)].atom_map;
      std::sort(x.begin(), x.end());
      std::sort(y.begin(), y.end());
      auto s = ed.shared;
      std::sort(s.begin(), s.end());
      const auto inter = intersect(x, y);
      if (!std::includes(inter.begin(), inter.end(), s.begin(), s.end())) out.push_back({K::SharedMismatch, e});
    }
  }
  for (int j = 1; j < m; ++j) {
    if (uf.find(j) != uf.find(0)) {
      out.push_back({K::Disconnected, j});
      break;
    }
  }
  return out;
}

std::string tree_signature(const JunctionTree& jt) {
  const int m = static_cast<int>(jt.nodes.size());
  if (m == 0) return "";
  const auto adj = jt.adjacency();
  // Rooted canonical form from every root; the unrooted signature is the minimum.
  std::string best;
  for (int root = 0; root < m; ++root) {
    std::vector<int> parent(static_cast<std::size_t>(m), -2), order;
    parent[static_cast<std::size_t>(root)] = -1;
    order.push_back(root);
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (int w : adj[static_cast<std::size_t>(order[i])]) {
        if (parent[static_cast<std::size_t>(w)] == -2) {
          parent[static_cast<std::size_t>(w)] = order[i];
          order.push_back(w);
        }
      }
    }
    std::vector<std::vector<std::string>> kids(static_cast<std::size_t>(m));
    std::vector<std::string> form(static_cast<std::size_t>(m));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      auto& k = kids[static_cast<std::size_t>(*it)];
      std::sort(k.begin(), k.end());
      std::string s = "(" + jt.nodes[static_cast<std::size_t>(*it)].key;
      for (const auto& c : k) s += c;
      s += ")";
      form[static_cast<std::size_t>(*it)] = s;
      if (parent[static_cast<std::size_t>(*it)] >= 0) kids[static_cast<std::size_t>(parent[static_cast<std::size_t>(*it)])].push_back(std::move(s));
    }
    if (root == 0 || form[static_cast<std::size_t>(root)] < best) best = form[static_cast<std::size_t>(root)];
  }
  return best;
}

}  // namespace jtk::jt
