#include <algorithm>
#include <numeric>

#include "matching.hpp"

namespace jtk::mol {
namespace detail {

namespace {

struct Matcher {
  const MolGraph& g;
  const std::vector<bool>& edge;
  std::vector<int> position;  // atom -> position in order
  std::vector<int> nodes;     // atoms in order
  std::vector<int> match;     // atom -> bond
  int forbidden;

  bool available(int atom, const Neighbor& nb) const {
    return nb.bond != forbidden && edge[static_cast<std::size_t>(nb.bond)] &&
           position[static_cast<std::size_t>(nb.atom)] >= 0 && match[static_cast<std::size_t>(nb.atom)] < 0 &&
           nb.atom != atom;
  }

  std::vector<Neighbor> options(int atom) const {
    std::vector<Neighbor> out;
    for (const auto& nb : g.neighbors(atom)) {
      if (available(atom, nb)) out.push_back(nb);
    }
    std::sort(out.begin(), out.end(), [&](const Neighbor& a, const Neighbor& b) {
      return position[static_cast<std::size_t>(a.atom)] < position[static_cast<std::size_t>(b.atom)];
    });
    return out;
  }

  bool solve() {
    // Most constrained unmatched atom first; ties by order.
    int pick = -1;
    std::size_t best = 0;
    for (int a : nodes) {
      if (match[static_cast<std::size_t>(a)] >= 0) continue;
      std::size_t cnt = 0;
      for (const auto& nb : g.neighbors(a)) cnt += available(a, nb) ? 1 : 0;
      if (cnt == 0) return false;
      if (pick < 0 || cnt < best) {
        pick = a;
        best = cnt;
        if (cnt == 1) break;
      }
    }
    if (pick < 0) return true;
    for (const auto& nb : options(pick)) {
      match[static_cast<std::size_t>(pick)] = nb.bond;
      match[static_cast<std::size_t>(nb.atom)] = nb.bond;
      if (solve()) return true;
      match[static_cast<std::size_t>(pick)] = -1;
      match[static_cast<std::size_t>(nb.atom)] = -1;
    }
    return false;
  }
};

}  // namespace

std::optional<std::vector<int>> perfect_matching(const MolGraph& g, const std::vector<bool>& node,
                                                 const std::vector<bool>& edge, std::span<const int> order,
                                                 int forced_bond, int forbidden_bond) {
  Matcher m{g, edge, std::vector<int>(g.num_atoms(), -1), {}, std::vector<int>(g.num_atoms(), -1), forbidden_bond};
  for (int a : order) {
    if (node[static_cast<std::size_t>(a)]) {
      m.position[static_cast<std::size_t>(a)] = static_cast<int>(m.nodes.size());
      m.nodes.push_back(a);
    }
  }
  if (m.nodes.size() % 2 != 0) return std::nullopt;
  if (forced_bond >= 0) {
    const Bond& b = g.bond(forced_bond);
    if (!node[static_cast<std::size_t>(b.a)] || !node[static_cast<std::size_t>(b.b)]) return std::nullopt;
    m.match[static_cast<std::size_t>(b.a)] = forced_bond;
    m.match[static_cast<std::size_t>(b.b)] = forced_bond;
  }
  if (!m.solve()) return std::nullopt;
  return m.match;
}

PiSystem pi_system(const MolGraph& g, const std::vector<bool>& in_ring) {
  PiSystem pi{std::vector<bool>(g.num_atoms(), false), std::vector<bool>(g.num_bonds(), false)};
  for (int a = 0; a < static_cast<int>(g.num_atoms()); ++a) {
    int doubles = 0, ring_doubles = 0;
    for (const auto& nb : g.neighbors(a)) {
      const Bond& b = g.bond(nb.bond);
      if (b.kekule == 2) {
        ++doubles;
        if (in_ring[static_cast<std::size_t>(nb.bond)]) ++ring_doubles;
      } else if (b.kekule == 3) {
        doubles += 2;
      }
    }
    pi.atom[static_cast<std::size_t>(a)] = doubles == 1 && ring_doubles == 1;
  }
  for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b) {
    const Bond& bd = g.bond(b);
    pi.bond[static_cast<std::size_t>(b)] = in_ring[static_cast<std::size_t>(b)] && bd.kekule <= 2 &&
                                           pi.atom[static_cast<std::size_t>(bd.a)] && pi.atom[static_cast<std::size_t>(bd.b)];
  }
  return pi;
}

}  // namespace detail

std::vector<bool> mobile_bonds(const MolGraph& g) {
  const auto in_ring = ring_bonds(g);
  const auto pi = detail::pi_system(g, in_ring);
  std::vector<bool> mobile(g.num_bonds(), false);
  std::vector<bool> decided(g.num_bonds(), false);
  std::vector<int> order(g.num_atoms());
  std::iota(order.begin(), order.end(), 0);
  for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b) {
    if (!pi.bond[static_cast<std::size_t>(b)] || decided[static_cast<std::size_t>(b)]) continue;
    const bool is_double = g.bond(b).kekule == 2;
    const auto alt = is_double ? detail::perfect_matching(g, pi.atom, pi.bond, order, -1, b)
                               : detail::perfect_matching(g, pi.atom, pi.bond, order, b, -1);
    decided[static_cast<std::size_t>(b)] = true;
    if (!alt) continue;
    // Every bond whose state differs between the two matchings is mobile.
    for (int e = 0; e < static_cast<int>(g.num_bonds()); ++e) {
      if (!pi.bond[static_cast<std::size_t>(e)]) continue;
      const Bond& bd = g.bond(e);
      const bool in_alt = (*alt)[static_cast<std::size_t>(bd.a)] == e;
      if (in_alt != (bd.kekule == 2)) {
        mobile[static_cast<std::size_t>(e)] = true;
        decided[static_cast<std::size_t>(e)] = true;
      }
    }
  }
  return mobile;
}

void normalize_kekule(MolGraph& g) {
  const auto mobile = mobile_bonds(g);
  if (std::none_of(mobile.begin(), mobile.end(), [](bool b) { return b; })) return;
  std::vector<bool> node(g.num_atoms(), false);
  for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b) {
    if (!mobile[static_cast<std::size_t>(b)]) continue;
    node[static_cast<std::size_t>(g.bond(b).a)] = true;
    node[static_cast<std::size_t>(g.bond(b).b)] = true;
  }
  const auto ranks = canonical_ranks(g);
  std::vector<int> order(g.num_atoms());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return ranks[static_cast<std::size_t>(a)] < ranks[static_cast<std::size_t>(b)]; });
  const auto match = detail::perfect_matching(g, node, mobile, order);
  if (!match) return;  // cannot happen: the current structure is a witness
  for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b) {
    if (!mobile[static_cast<std::size_t>(b)]) continue;
    g.bond(b).kekule = (*match)[static_cast<std::size_t>(g.bond(b).a)] == b ? 2 : 1;
  }
}

}  // namespace jtk::mol
