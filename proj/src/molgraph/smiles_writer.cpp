#include <algorithm>
#include <array>
#include <numeric>
#include <tuple>

#include "jtreekit/molgraph.hpp"

namespace jtk::mol {

namespace {

struct Labeling {
  std::vector<int> bond_label;  // 1..3 Kekulé order, 4 = alternating
  std::vector<bool> lowercase;  // atom written in aromatic form
};

Labeling make_labeling(const MolGraph& g, bool aromatic_form) {
  Labeling lab;
  lab.bond_label.resize(g.num_bonds());
  lab.lowercase.assign(g.num_atoms(), false);
  std::vector<bool> mobile;
  if (aromatic_form) mobile = mobile_bonds(g);
  for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b) {
    const Bond& bd = g.bond(b);
    if (aromatic_form && mobile[static_cast<std::size_t>(b)]) {
      lab.bond_label[static_cast<std::size_t>(b)] = 4;
      lab.lowercase[static_cast<std::size_t>(bd.a)] = true;
      lab.lowercase[static_cast<std::size_t>(bd.b)] = true;
    } else {
      lab.bond_label[static_cast<std::size_t>(b)] = bd.kekule;
    }
  }
  return lab;
}

// Partition refinement; `rank` holds dense class ids and is refined in place.
// Returns the number of classes.
int refine(const MolGraph& g, const Labeling& lab, std::vector<int>& rank) {
  const int n = static_cast<int>(g.num_atoms());
  using Key = std::pair<int, std::vector<std::pair<int, int>>>;
  int classes = n == 0 ? 0 : *std::max_element(rank.begin(), rank.end()) + 1;
  while (true) {
    std::vector<Key> keys(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
      auto& k = keys[static_cast<std::size_t>(a)];
      k.first = rank[static_cast<std::size_t>(a)];
      for (const auto& nb : g.neighbors(a)) {
        k.second.emplace_back(lab.bond_label[static_cast<std::size_t>(nb.bond)], rank[static_cast<std::size_t>(nb.atom)]);
      }
      std::sort(k.second.begin(), k.second.end());
    }
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(b)]; });
    int next = 0;
    for (int i = 0; i < n; ++i) {
      if (i > 0 && keys[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] != keys[static_cast<std::size_t>(idx[static_cast<std::size_t>(i - 1)])]) ++next;
      rank[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = next;
    }
    const int now = n == 0 ? 0 : next + 1;
    if (now == classes) return now;
    classes = now;
  }
}

std::vector<int> rank_atoms(const MolGraph& g, const Labeling& lab) {
  const int n = static_cast<int>(g.num_atoms());
  const auto in_ring = ring_bonds(g);
  std::vector<bool> ring_atom(static_cast<std::size_t>(n), false);
  for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b) {
    if (in_ring[static_cast<std::size_t>(b)]) {
      ring_atom[static_cast<std::size_t>(g.bond(b).a)] = true;
      ring_atom[static_cast<std::size_t>(g.bond(b).b)] = true;
    }
  }
  // Initial invariant: (element, degree, charge, hydrogens, aromatic form, ring).
  using Inv = std::array<int, 6>;
  std::vector<Inv> inv(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    const Atom& at = g.atom(a);
    inv[static_cast<std::size_t>(a)] = {static_cast<int>(at.element), g.degree(a), at.formal_charge, g.hydrogen_count(a),
                                        lab.lowercase[static_cast<std::size_t>(a)] ? 1 : 0,
                                        ring_atom[static_cast<std::size_t>(a)] ? 1 : 0};
  }
  std::vector<Inv> uniq = inv;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<int> rank(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    rank[static_cast<std::size_t>(a)] =
        static_cast<int>(std::lower_bound(uniq.begin(), uniq.end(), inv[static_cast<std::size_t>(a)]) - uniq.begin());
  }
  int classes = refine(g, lab, rank);
  while (classes < n) {
    // Break the lowest tied class: promote its first member and refine again.
    std::vector<int> count(static_cast<std::size_t>(classes), 0);
    for (int r : rank) ++count[static_cast<std::size_t>(r)];
    int tied = 0;
    while (count[static_cast<std::size_t>(tied)] < 2) ++tied;
    int chosen = -1;
    for (int a = 0; a < n; ++a) {
      if (rank[static_cast<std::size_t>(a)] == tied) {
        chosen = a;
        break;
      }
    }
    for (int a = 0; a < n; ++a) {
      rank[static_cast<std::size_t>(a)] = 2 * rank[static_cast<std::size_t>(a)] + ((rank[static_cast<std::size_t>(a)] == tied && a != chosen) ? 1 : 0);
    }
    // Re-densify before refining.
    std::vector<int> vals = rank;
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (auto& r : rank) r = static_cast<int>(std::lower_bound(vals.begin(), vals.end(), r) - vals.begin());
    classes = refine(g, lab, rank);
  }
  return rank;
}

int smallest_valence_at_least(const Atom& a, int used) {
  for (int v : allowed_valences(a.element, a.formal_charge)) {
    if (v >= used) return v;
  }
  return -1;
}

bool organic_subset(Element e) { return e != Element::H; }

class Writer {
 public:
  Writer(const MolGraph& g, const Labeling& lab, const std::vector<int>& rank) : g_(g), lab_(lab), rank_(rank) {}

  std::string write() {
    const int n = static_cast<int>(g_.num_atoms());
    if (n == 0) return {};
    visited_.assign(static_cast<std::size_t>(n), false);
    order_pos_.assign(static_cast<std::size_t>(n), -1);
    children_.assign(static_cast<std::size_t>(n), {});
    closures_.assign(static_cast<std::size_t>(n), {});
    tree_bond_.assign(g_.num_bonds(), false);
    int start = 0;
    for (int a = 1; a < n; ++a) {
      if (rank_[static_cast<std::size_t>(a)] < rank_[static_cast<std::size_t>(start)]) start = a;
    }
    plan(start, -1);
    for (int b = 0; b < static_cast<int>(g_.num_bonds()); ++b) {
      if (tree_bond_[static_cast<std::size_t>(b)]) continue;
      closures_[static_cast<std::size_t>(g_.bond(b).a)].push_back(b);
      closures_[static_cast<std::size_t>(g_.bond(b).b)].push_back(b);
    }
    ring_digit_.assign(g_.num_bonds(), -1);
    emit(start, -1);
    return out_;
  }

 private:
  std::vector<Neighbor> sorted_neighbors(int a) const {
    std::vector<Neighbor> nbs(g_.neighbors(a).begin(), g_.neighbors(a).end());
    std::sort(nbs.begin(), nbs.end(), [&](const Neighbor& x, const Neighbor& y) {
      return rank_[static_cast<std::size_t>(x.atom)] < rank_[static_cast<std::size_t>(y.atom)];
    });
    return nbs;
  }

  void plan(int a, int parent_bond) {
    visited_[static_cast<std::size_t>(a)] = true;
    order_pos_[static_cast<std::size_t>(a)] = counter_++;
    for (const auto& nb : sorted_neighbors(a)) {
      if (nb.bond == parent_bond || visited_[static_cast<std::size_t>(nb.atom)]) continue;
      tree_bond_[static_cast<std::size_t>(nb.bond)] = true;
      children_[static_cast<std::size_t>(a)].push_back(nb);
      plan(nb.atom, nb.bond);
    }
  }

  std::string bond_symbol(int b) const {
    const int label = lab_.bond_label[static_cast<std::size_t>(b)];
    if (label == 4) return "";
    if (label == 2) return "=";
    if (label == 3) return "#";
    const Bond& bd = g_.bond(b);
    if (lab_.lowercase[static_cast<std::size_t>(bd.a)] && lab_.lowercase[static_cast<std::size_t>(bd.b)]) return "-";
    return "";
  }

  std::string atom_token(int a) const {
    const Atom& at = g_.atom(a);
    const bool lower = lab_.lowercase[static_cast<std::size_t>(a)];
    const int hydrogens = g_.hydrogen_count(a);
    int inferred = -1;
    if (organic_subset(at.element) && at.formal_charge == 0) {
      int sigma = 0;
      for (const auto& nb : g_.neighbors(a)) {
        const int label = lab_.bond_label[static_cast<std::size_t>(nb.bond)];
        sigma += label == 4 ? 1 : label;
      }
      const int v = smallest_valence_at_least(at, sigma);
      if (v >= 0) {
        const int spare = v - sigma;
        inferred = lower ? (spare >= 1 ? spare - 1 : -1) : spare;
      }
    }
    std::string sym(element_symbol(at.element));
    if (lower) sym[0] = static_cast<char>(sym[0] - 'A' + 'a');
    if (inferred == hydrogens) return sym;
    std::string tok = "[" + sym;
    if (hydrogens > 0) tok += "H";
    if (hydrogens > 1) tok += std::to_string(hydrogens);
    if (at.formal_charge > 0) tok += "+";
    if (at.formal_charge < 0) tok += "-";
    if (std::abs(at.formal_charge) > 1) tok += std::to_string(std::abs(at.formal_charge));
    tok += "]";
    return tok;
  }

  int allocate_digit() {
    for (int d = 1; d < 100; ++d) {
      if (std::find(in_use_.begin(), in_use_.end(), d) == in_use_.end()) {
        in_use_.push_back(d);
        return d;
      }
    }
    fail(ErrorCode::Format, "too many open rings");
  }

  static std::string digit_text(int d) { return d < 10 ? std::to_string(d) : "%" + std::to_string(d); }

  void emit(int a, int parent_bond) {
    out_ += atom_token(a);
    // Closings (partner already written) first, then openings; both by partner rank.
    auto ring_bonds = closures_[static_cast<std::size_t>(a)];
    std::sort(ring_bonds.begin(), ring_bonds.end(), [&](int x, int y) {
      const int px = g_.bond(x).other(a), py = g_.bond(y).other(a);
      const bool cx = order_pos_[static_cast<std::size_t>(px)] < order_pos_[static_cast<std::size_t>(a)];
      const bool cy = order_pos_[static_cast<std::size_t>(py)] < order_pos_[static_cast<std::size_t>(a)];
      if (cx != cy) return cx;
      return rank_[static_cast<std::size_t>(px)] < rank_[static_cast<std::size_t>(py)];
    });
    for (int b : ring_bonds) {
      const int partner = g_.bond(b).other(a);
      if (order_pos_[static_cast<std::size_t>(partner)] < order_pos_[static_cast<std::size_t>(a)]) {
        const int d = ring_digit_[static_cast<std::size_t>(b)];
        out_ += digit_text(d);
        in_use_.erase(std::find(in_use_.begin(), in_use_.end(), d));
      } else {
        const int d = allocate_digit();
        ring_digit_[static_cast<std::size_t>(b)] = d;
        out_ += bond_symbol(b) + digit_text(d);
      }
    }
    const auto& kids = children_[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const bool last = i + 1 == kids.size();
      if (!last) out_ += "(";
      out_ += bond_symbol(kids[i].bond);
      emit(kids[i].atom, kids[i].bond);
      if (!last) out_ += ")";
    }
    (void)parent_bond;
  }

  const MolGraph& g_;
  const Labeling& lab_;
  const std::vector<int>& rank_;
  std::vector<bool> visited_;
  std::vector<int> order_pos_;
  std::vector<std::vector<Neighbor>> children_;
  std::vector<std::vector<int>> closures_;
  std::vector<bool> tree_bond_;
  std::vector<int> ring_digit_;
  std::vector<int> in_use_;
  int counter_ = 0;
  std::string out_;
};

}  // namespace

std::vector<int> canonical_ranks(const MolGraph& g) {
  const auto lab = make_labeling(g, true);
  return rank_atoms(g, lab);
}

std::string canonical_smiles(const MolGraph& g) {
  const auto lab = make_labeling(g, true);
  const auto rank = rank_atoms(g, lab);
  return Writer(g, lab, rank).write();
}

std::string kekule_smiles(const MolGraph& g) {
  const auto lab = make_labeling(g, false);
  const auto rank = rank_atoms(g, lab);
  return Writer(g, lab, rank).write();
}

}  // namespace jtk::mol
