#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <set>

#include "jtreekit/molgraph.hpp"

namespace jtk::mol {

std::vector<bool> ring_bonds(const MolGraph& g) {
  const int n = static_cast<int>(g.num_atoms());
  std::vector<bool> in_ring(g.num_bonds(), true);
  std::vector<int> disc(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  int timer = 0;
  // Iterative Tarjan bridge search.
  struct Frame {
    int atom;
    int parent_bond;
    std::size_t next;
  };
  for (int root = 0; root < n; ++root) {
    if (disc[static_cast<std::size_t>(root)] >= 0) continue;
    std::vector<Frame> stack{{root, -1, 0}};
    disc[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      const auto nbs = g.neighbors(f.atom);
      if (f.next < nbs.size()) {
        const Neighbor nb = nbs[f.next++];
        if (nb.bond == f.parent_bond) continue;
        const auto v = static_cast<std::size_t>(nb.atom);
        if (disc[v] < 0) {
          disc[v] = low[v] = timer++;
          stack.push_back({nb.atom, nb.bond, 0});
        } else {
          low[static_cast<std::size_t>(f.atom)] = std::min(low[static_cast<std::size_t>(f.atom)], disc[v]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          const auto p = static_cast<std::size_t>(stack.back().atom);
          const auto c = static_cast<std::size_t>(done.atom);
          low[p] = std::min(low[p], low[c]);
          if (low[c] > disc[p]) in_ring[static_cast<std::size_t>(done.parent_bond)] = false;
        }
      }
    }
  }
  return in_ring;
}

namespace {

using BitRow = std::vector<std::uint64_t>;

void flip_bit(BitRow& r, int i) { r[static_cast<std::size_t>(i) >> 6] ^= (std::uint64_t{1} << (i & 63)); }

int highest_bit(const BitRow& r) {
  for (std::size_t w = r.size(); w-- > 0;) {
    if (r[w] != 0) return static_cast<int>(w * 64 + 63 - static_cast<std::size_t>(__builtin_clzll(r[w])));
  }
  return -1;
}

struct Candidate {
  std::vector<int> atoms;  // ring order
  BitRow edges;
  std::vector<int> key;  // sorted canonical ranks, for tie-breaking
};

}  // namespace

std::vector<std::vector<int>> minimum_cycle_basis(const MolGraph& g) {
  const int n = static_cast<int>(g.num_atoms());
  const int m = static_cast<int>(g.num_bonds());
  const auto in_ring = ring_bonds(g);
  int ring_edge_count = 0;
  std::vector<char> ring_atom(static_cast<std::size_t>(n), 0);
  for (int b = 0; b < m; ++b) {
    if (!in_ring[static_cast<std::size_t>(b)]) continue;
    ++ring_edge_count;
    ring_atom[static_cast<std::size_t>(g.bond(b).a)] = 1;
    ring_atom[static_cast<std::size_t>(g.bond(b).b)] = 1;
  }
  if (ring_edge_count == 0) return {};

  // Cyclomatic number of the ring subgraph.
  int ring_atoms = 0;
  for (char c : ring_atom) ring_atoms += c;
  int components = 0;
  {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < n; ++s) {
      if (!ring_atom[static_cast<std::size_t>(s)] || seen[static_cast<std::size_t>(s)]) continue;
      ++components;
      std::vector<int> st{s};
      seen[static_cast<std::size_t>(s)] = 1;
      while (!st.empty()) {
        const int u = st.back();
        st.pop_back();
        for (const auto& nb : g.neighbors(u)) {
          if (in_ring[static_cast<std::size_t>(nb.bond)] && !seen[static_cast<std::size_t>(nb.atom)]) {
            seen[static_cast<std::size_t>(nb.atom)] = 1;
            st.push_back(nb.atom);
          }
        }
      }
    }
  }
  const int cyclomatic = ring_edge_count - ring_atoms + components;

  const auto ranks = canonical_ranks(g);
  const std::size_t words = (static_cast<std::size_t>(m) + 63) / 64;

  // Horton candidates: shortest path v->x, edge (x,y), shortest path y->v.
  std::vector<Candidate> cands;
  std::set<BitRow> seen_sets;
  for (int v = 0; v < n; ++v) {
    if (!ring_atom[static_cast<std::size_t>(v)]) continue;
    std::vector<int> parent(static_cast<std::size_t>(n), -2), parent_bond(static_cast<std::size_t>(n), -1), depth(static_cast<std::size_t>(n), -1);
    std::queue<int> q;
    q.push(v);
    parent[static_cast<std::size_t>(v)] = -1;
    depth[static_cast<std::size_t>(v)] = 0;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      std::vector<Neighbor> nbs(g.neighbors(u).begin(), g.neighbors(u).end());
      std::sort(nbs.begin(), nbs.end(), [&](const Neighbor& a, const Neighbor& b) {
        return ranks[static_cast<std::size_t>(a.atom)] < ranks[static_cast<std::size_t>(b.atom)];
      });
      for (const auto& nb : nbs) {
        if (!in_ring[static_cast<std::size_t>(nb.bond)]) continue;
        if (depth[static_cast<std::size_t>(nb.atom)] >= 0) continue;
        depth[static_cast<std::size_t>(nb.atom)] = depth[static_cast<std::size_t>(u)] + 1;
        parent[static_cast<std::size_t>(nb.atom)] = u;
        parent_bond[static_cast<std::size_t>(nb.atom)] = nb.bond;
        q.push(nb.atom);
      }
    }
    auto path_to_root = [&](int x) {
      std::vector<int> p;
      for (int c = x; c != -1; c = parent[static_cast<std::size_t>(c)]) p.push_back(c);
      return p;  // x ... v
    };
    for (int b = 0; b < m; ++b) {
      if (!in_ring[static_cast<std::size_t>(b)]) continue;
      const int x = g.bond(b).a;
      const int y = g.bond(b).b;
      if (depth[static_cast<std::size_t>(x)] < 0 || depth[static_cast<std::size_t>(y)] < 0) continue;
      if (parent_bond[static_cast<std::size_t>(x)] == b || parent_bond[static_cast<std::size_t>(y)] == b) continue;
      auto px = path_to_root(x);
      auto py = path_to_root(y);
      std::set<int> sx(px.begin(), px.end());
      bool disjoint = true;
      for (int a : py) {
        if (a != v && sx.count(a)) {
          disjoint = false;
          break;
        }
      }
      if (!disjoint) continue;
      Candidate c;
      c.edges.assign(words, 0);
      // ring order: v ... x (reverse of px), then y ... up to before v.
      std::vector<int> ring(px.rbegin(), px.rend());
      for (std::size_t i = 0; i + 1 < py.size(); ++i) ring.push_back(py[i]);
      for (std::size_t i = 0; i < ring.size(); ++i) {
        const int a = ring[i];
        const int bb = ring[(i + 1) % ring.size()];
        flip_bit(c.edges, *g.bond_between(a, bb));
      }
      if (!seen_sets.insert(c.edges).second) continue;
      c.atoms = std::move(ring);
      for (int a : c.atoms) c.key.push_back(ranks[static_cast<std::size_t>(a)]);
      std::sort(c.key.begin(), c.key.end());
      cands.push_back(std::move(c));
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.atoms.size() != b.atoms.size()) return a.atoms.size() < b.atoms.size();
    return a.key < b.key;
  });

  // Greedy selection of GF(2)-independent cycles.
  std::map<int, BitRow> pivots;  // pivot bit -> reduced row
  std::vector<std::vector<int>> basis;
  for (const auto& c : cands) {
    if (static_cast<int>(basis.size()) == cyclomatic) break;
    BitRow row = c.edges;
    for (int hb = highest_bit(row); hb >= 0; hb = highest_bit(row)) {
      auto it = pivots.find(hb);
      if (it == pivots.end()) break;
      for (std::size_t w = 0; w < words; ++w) row[w] ^= it->second[w];
    }
    const int hb = highest_bit(row);
    if (hb < 0) continue;
    pivots.emplace(hb, std::move(row));
    // Rotate so the lowest-ranked atom comes first, keeping ring order.
    std::vector<int> atoms = c.atoms;
    const auto first = std::min_element(atoms.begin(), atoms.end(), [&](int a, int b) {
      return ranks[static_cast<std::size_t>(a)] < ranks[static_cast<std::size_t>(b)];
    });
    std::rotate(atoms.begin(), first, atoms.end());
    basis.push_back(std::move(atoms));
  }
  return basis;
}

AromaticPerception perceive_aromaticity(const MolGraph& g) {
  AromaticPerception out;
  out.atom.assign(g.num_atoms(), false);
  out.bond.assign(g.num_bonds(), false);
  const auto rings = minimum_cycle_basis(g);
  if (rings.empty()) return out;
  const auto in_ring = ring_bonds(g);

  // Pi-electron contribution of an atom to a ring; -1 disqualifies the ring.
  auto electrons = [&](int a) -> int {
    const Atom& at = g.atom(a);
    int ring_double = 0, exo_double_hetero = 0, exo_double_carbon = 0, triple = 0;
    for (const auto& nb : g.neighbors(a)) {
      const Bond& b = g.bond(nb.bond);
      if (b.kekule == 3) ++triple;
      if (b.kekule != 2) continue;
      if (in_ring[static_cast<std::size_t>(nb.bond)]) {
        ++ring_double;
      } else if (g.atom(nb.atom).element == Element::C) {
        ++exo_double_carbon;
      } else {
        ++exo_double_hetero;
      }
    }
    if (triple > 0 || exo_double_carbon > 0) return -1;
    if (ring_double == 1) return 1;
    if (ring_double > 1) return -1;
    switch (at.element) {
      case Element::C:
        if (exo_double_hetero == 1) return 0;
        if (at.formal_charge == -1) return 2;
        if (at.formal_charge == 1) return 0;
        return -1;
      case Element::N:
      case Element::P:
        if (at.formal_charge == 1) return -1;
        return 2;
      case Element::O:
      case Element::S:
        if (exo_double_hetero > 0) return -1;
        return 2;
      default:
        return -1;
    }
  };

  auto mark = [&](const std::vector<int>& atoms) {
    std::set<int> members(atoms.begin(), atoms.end());
    for (int a : atoms) out.atom[static_cast<std::size_t>(a)] = true;
    for (int a : atoms) {
      for (const auto& nb : g.neighbors(a)) {
        if (members.count(nb.atom) && in_ring[static_cast<std::size_t>(nb.bond)]) out.bond[static_cast<std::size_t>(nb.bond)] = true;
      }
    }
  };
  auto huckel = [&](const std::set<int>& atoms) {
    int total = 0;
    for (int a : atoms) {
      const int e = electrons(a);
      if (e < 0) return false;
      total += e;
    }
    return total % 4 == 2;
  };

  std::vector<bool> ring_ok(rings.size(), false);
  for (std::size_t r = 0; r < rings.size(); ++r) {
    std::set<int> s(rings[r].begin(), rings[r].end());
    if (huckel(s)) {
      ring_ok[r] = true;
      mark(rings[r]);
    }
  }
  // Fused pairs that are aromatic only as a system (e.g. azulene-like cases).
  for (std::size_t r1 = 0; r1 < rings.size(); ++r1) {
    for (std::size_t r2 = r1 + 1; r2 < rings.size(); ++r2) {
      if (ring_ok[r1] && ring_ok[r2]) continue;
      std::set<int> s1(rings[r1].begin(), rings[r1].end());
      int shared = 0;
      for (int a : rings[r2]) shared += static_cast<int>(s1.count(a));
      if (shared != 2) continue;
      std::set<int> uni = s1;
      uni.insert(rings[r2].begin(), rings[r2].end());
      if (huckel(uni)) {
        mark(rings[r1]);
        mark(rings[r2]);
      }
    }
  }
  return out;
}

}  // namespace jtk::mol
