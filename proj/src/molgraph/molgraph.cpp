#include "jtreekit/molgraph.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace jtk::mol {

namespace {

struct ElementInfo {
  Element element;
  std::string_view symbol;
  double mass;
};

constexpr std::array<ElementInfo, 10> kElements{{
    {Element::H, "H", 1.008},
    {Element::C, "C", 12.011},
    {Element::N, "N", 14.007},
    {Element::O, "O", 15.999},
    {Element::F, "F", 18.998},
    {Element::P, "P", 30.974},
    {Element::S, "S", 32.067},
    {Element::Cl, "Cl", 35.453},
    {Element::Br, "Br", 79.904},
    {Element::I, "I", 126.904},
}};

struct ValenceEntry {
  Element element;
  int charge;
  std::array<int, 3> valences;
  int count;
};

// Organic valence table. Neutral entries follow the usual organic subset;
// the charged states cover ammonium/nitro/oxide/carbanion style atoms.
constexpr std::array<ValenceEntry, 20> kValences{{
    {Element::H, 0, {1, 0, 0}, 1},
    {Element::H, 1, {0, 0, 0}, 1},
    {Element::C, 0, {4, 0, 0}, 1},
    {Element::C, 1, {3, 0, 0}, 1},
    {Element::C, -1, {3, 0, 0}, 1},
    {Element::N, 0, {3, 0, 0}, 1},
    {Element::N, 1, {4, 0, 0}, 1},
    {Element::N, -1, {2, 0, 0}, 1},
    {Element::O, 0, {2, 0, 0}, 1},
    {Element::O, -1, {1, 0, 0}, 1},
    {Element::O, 1, {3, 0, 0}, 1},
    {Element::F, 0, {1, 0, 0}, 1},
    {Element::Cl, 0, {1, 0, 0}, 1},
    {Element::Br, 0, {1, 0, 0}, 1},
    {Element::I, 0, {1, 0, 0}, 1},
    {Element::S, 0, {2, 4, 6}, 3},
    {Element::S, 1, {3, 0, 0}, 1},
    {Element::S, -1, {1, 0, 0}, 1},
    {Element::P, 0, {3, 5, 0}, 2},
    {Element::P, 1, {4, 0, 0}, 1},
}};

}  // namespace

std::string_view element_symbol(Element e) noexcept {
  return kElements[static_cast<std::size_t>(e)].symbol;
}

std::optional<Element> element_from_symbol(std::string_view sym) noexcept {
  for (const auto& info : kElements) {
    if (info.symbol == sym) return info.element;
  }
  return std::nullopt;
}

double atomic_mass(Element e) noexcept { return kElements[static_cast<std::size_t>(e)].mass; }

std::span<const int> allowed_valences(Element e, int charge) noexcept {
  for (const auto& v : kValences) {
    if (v.element == e && v.charge == charge) {
      return {v.valences.data(), static_cast<std::size_t>(v.count)};
    }
  }
  return {};
}

int MolGraph::add_atom(const Atom& atom) {
  atoms_.push_back(atom);
  adjacency_.emplace_back();
  return static_cast<int>(atoms_.size()) - 1;
}

int MolGraph::add_bond(int a, int b, BondOrder order, int kekule) {
  const int n = static_cast<int>(atoms_.size());
  if (a == b || a < 0 || b < 0 || a >= n || b >= n) {
    fail(ErrorCode::Syntax, "bond endpoints invalid");
  }
  if (bond_between(a, b)) fail(ErrorCode::Syntax, "duplicate bond");
  if (kekule == 0) kekule = order == BondOrder::Aromatic ? 1 : static_cast<int>(order);
  bonds_.push_back(Bond{a, b, order, kekule});
  const int id = static_cast<int>(bonds_.size()) - 1;
  adjacency_[static_cast<std::size_t>(a)].push_back({b, id});
  adjacency_[static_cast<std::size_t>(b)].push_back({a, id});
  return id;
}

std::optional<int> MolGraph::bond_between(int a, int b) const {
  for (const auto& nb : neighbors(a)) {
    if (nb.atom == b) return nb.bond;
  }
  return std::nullopt;
}

int MolGraph::bond_order_sum(int i) const {
  int sum = 0;
  for (const auto& nb : neighbors(i)) sum += bonds_[static_cast<std::size_t>(nb.bond)].kekule;
  return sum;
}

int MolGraph::hydrogen_count(int i) const {
  const Atom& a = atom(i);
  if (a.bracket) return a.explicit_h;
  const int used = bond_order_sum(i);
  for (int v : allowed_valences(a.element, a.formal_charge)) {
    if (v >= used) return v - used;
  }
  return 0;
}

int MolGraph::total_hydrogens() const {
  int total = 0;
  for (int i = 0; i < static_cast<int>(atoms_.size()); ++i) total += hydrogen_count(i);
  return total;
}

bool MolGraph::is_connected() const {
  if (atoms_.empty()) return true;
  std::vector<char> seen(atoms_.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (const auto& nb : neighbors(u)) {
      if (!seen[static_cast<std::size_t>(nb.atom)]) {
        seen[static_cast<std::size_t>(nb.atom)] = 1;
        ++count;
        stack.push_back(nb.atom);
      }
    }
  }
  return count == atoms_.size();
}

MolGraph MolGraph::induced_subgraph(std::span<const int> atom_ids) const {
  MolGraph sub;
  std::vector<int> local(atoms_.size(), -1);
  for (int id : atom_ids) {
    Atom a = atom(id);
    a.bracket = false;
    a.explicit_h = 0;
    local[static_cast<std::size_t>(id)] = sub.add_atom(a);
  }
  for (const auto& b : bonds_) {
    const int la = local[static_cast<std::size_t>(b.a)];
    const int lb = local[static_cast<std::size_t>(b.b)];
    if (la >= 0 && lb >= 0) sub.add_bond(la, lb, b.order, b.kekule);
  }
  return sub;
}

MolGraph MolGraph::permuted(std::span<const int> perm) const {
  std::vector<int> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  MolGraph out;
  for (std::size_t k = 0; k < inv.size(); ++k) out.add_atom(atoms_[static_cast<std::size_t>(inv[k])]);
  for (const auto& b : bonds_) out.add_bond(perm[static_cast<std::size_t>(b.a)], perm[static_cast<std::size_t>(b.b)], b.order, b.kekule);
  return out;
}

std::vector<ValenceViolation> check_valence(const MolGraph& g) {
  std::vector<ValenceViolation> out;
  for (int i = 0; i < static_cast<int>(g.num_atoms()); ++i) {
    const Atom& a = g.atom(i);
    const auto allowed = allowed_valences(a.element, a.formal_charge);
    const int max_allowed = allowed.empty() ? 0 : *std::max_element(allowed.begin(), allowed.end());
    const int used = g.bond_order_sum(i) + g.hydrogen_count(i);
    if (allowed.empty() || used > max_allowed) out.push_back({i, used, max_allowed});
  }
  return out;
}

}  // namespace jtk::mol
