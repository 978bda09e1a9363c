#include "jtreekit/properties.hpp"

#include <numeric>

namespace jtk::mol {

namespace {

// Neighbor view used by the atom typers.
struct Nb {
  Element el;
  bool arom;       // aromatic atom
  bool arom_bond;  // aromatic bond
  int order;       // Kekulé order (meaningful when !arom_bond)
  int atom;
  int charge;

  bool single_or_arom() const { return arom_bond || order == 1; }
  bool single() const { return !arom_bond && order == 1; }
  bool dbl() const { return !arom_bond && order == 2; }
  bool triple() const { return !arom_bond && order == 3; }
  bool aliphatic_c() const { return el == Element::C && !arom; }
  bool aliphatic() const { return !arom; }
};

struct AtomView {
  const MolGraph& g;
  const AromaticPerception& ar;
  std::vector<std::vector<Nb>> nbs;

  AtomView(const MolGraph& graph, const AromaticPerception& perception) : g(graph), ar(perception) {
    nbs.resize(g.num_atoms());
    for (int a = 0; a < static_cast<int>(g.num_atoms()); ++a) {
      for (const auto& nb : g.neighbors(a)) {
        const Atom& o = g.atom(nb.atom);
        nbs[static_cast<std::size_t>(a)].push_back(Nb{o.element, ar.atom[static_cast<std::size_t>(nb.atom)],
                                                      ar.bond[static_cast<std::size_t>(nb.bond)], g.bond(nb.bond).kekule,
                                                      nb.atom, o.formal_charge});
      }
    }
  }
  bool arom(int a) const { return ar.atom[static_cast<std::size_t>(a)]; }
  const std::vector<Nb>& of(int a) const { return nbs[static_cast<std::size_t>(a)]; }
};

bool is_aliphatic_hetero(const Nb& n) {
  if (n.arom) return false;
  switch (n.el) {
    case Element::N: case Element::O: case Element::P: case Element::S:
    case Element::F: case Element::Cl: case Element::Br: case Element::I:
      return true;
    default:
      return false;
  }
}

template <class Pred>
int count_if_nb(const std::vector<Nb>& v, Pred p) {
  int c = 0;
  for (const auto& n : v) c += p(n) ? 1 : 0;
  return c;
}

double crippen_aliphatic_carbon(const AtomView& v, int a, int h) {
  const auto& n = v.of(a);
  const int deg = static_cast<int>(n.size());
  const int x = deg + h;
  const int single_c = count_if_nb(n, [](const Nb& b) { return b.single_or_arom() && b.aliphatic_c(); });
  const int hetero = count_if_nb(n, [](const Nb& b) { return b.single_or_arom() && is_aliphatic_hetero(b); });
  const int aliph_heavy = count_if_nb(n, [](const Nb& b) { return b.single_or_arom() && b.aliphatic(); });
  const bool any_arom_nb = count_if_nb(n, [](const Nb& b) { return b.arom; }) > 0;
  // C1
  if (h == 4) return 0.1441;
  if (h == 3 && single_c >= 1) return 0.1441;
  if (h == 2 && single_c >= 2) return 0.1441;
  // C2
  if (h == 1 && single_c >= 3) return 0.0;
  if (h == 0 && single_c >= 4) return 0.0;
  // C3
  if (h == 3 && hetero >= 1) return -0.2035;
  if (h == 2 && x == 4 && hetero >= 1 && aliph_heavy >= 2) return -0.2035;
  // C4
  if (h == 1 && x == 4 && hetero >= 1 && aliph_heavy >= 3) return -0.2051;
  if (h == 0 && x == 4 && hetero >= 1 && aliph_heavy >= 4) return -0.2051;
  // C5: double bond to an aliphatic non-carbon
  for (const auto& b : n) {
    if (b.dbl() && b.aliphatic() && b.el != Element::C) return -0.2783;
  }
  // C6
  const int dbl_c = count_if_nb(n, [](const Nb& b) { return b.dbl() && b.aliphatic_c(); });
  if (dbl_c >= 1) {
    const int others = count_if_nb(n, [](const Nb& b) { return !b.dbl() && b.single_or_arom() && b.aliphatic(); });
    if (h == 2) return 0.1551;
    if (h == 1 && others >= 1) return 0.1551;
    if (h == 0 && others >= 2) return 0.1551;
    if (dbl_c >= 2) return 0.1551;
  }
  // C7
  if (x == 2 && count_if_nb(n, [](const Nb& b) { return b.triple() && b.aliphatic(); }) >= 1) return 0.0017;
  // C8 / C9
  if (h == 3) {
    for (const auto& b : n) {
      if (b.arom && b.el == Element::C) return 0.08452;
    }
    if (any_arom_nb) return -0.1444;
  }
  // C10-C12
  if (x == 4 && any_arom_nb) {
    if (h == 2) return -0.0516;
    if (h == 1) return 0.1193;
    if (h == 0) return -0.0967;
  }
  // C26
  if (dbl_c >= 1 && any_arom_nb) return 0.264;
  for (const auto& b : n) {
    if (!b.arom_bond && b.order == 2 && b.arom && b.el == Element::C) return 0.264;
  }
  return 0.08129;
}

double crippen_aromatic_carbon(const AtomView& v, int a, int h) {
  const auto& n = v.of(a);
  for (const auto& b : n) {
    if (h == 0 && b.single() && b.aliphatic() && b.el == Element::P) return -0.5443;  // C13
  }
  for (const auto& b : n) {
    if (b.el == Element::F) return 0.0;
    if (b.el == Element::Cl) return 0.245;
    if (b.el == Element::Br) return 0.198;
    if (b.el == Element::I) return 0.0;
  }
  if (h == 1) return 0.1581;  // C18
  const int arom_bonds = count_if_nb(n, [](const Nb& b) { return b.arom_bond; });
  if (arom_bonds >= 3) return 0.2955;  // C19
  if (arom_bonds >= 2) {
    for (const auto& b : n) {
      if (b.arom_bond) continue;
      if (b.single() && b.arom) return 0.2713;  // C20
    }
    for (const auto& b : n) {
      if (b.arom_bond || !b.single() || b.arom) continue;
      if (b.el == Element::C) return 0.136;    // C21
      if (b.el == Element::N) return 0.4619;   // C22
      if (b.el == Element::O) return 0.5437;   // C23
      if (b.el == Element::S) return 0.1893;   // C24
    }
    for (const auto& b : n) {
      if (b.dbl() && !b.arom && (b.el == Element::C || b.el == Element::N || b.el == Element::O)) return -0.8186;  // C25
    }
  }
  return 0.08129;
}

double crippen_hydrogen(const AtomView& v, int a) {
  const Atom& at = v.g.atom(a);
  if (at.element == Element::C) return 0.123;  // H1
  const auto& n = v.of(a);
  if (at.element == Element::O && !v.arom(a)) {
    for (const auto& b : n) {
      const int bx = v.g.degree(b.atom) + v.g.hydrogen_count(b.atom);
      if ((b.el == Element::C && !b.arom && bx == 4) || (b.el == Element::C && b.arom)) return -0.2677;
    }
    for (const auto& b : n) {
      const bool excluded = b.el == Element::C || b.el == Element::N || b.el == Element::O || b.el == Element::S;
      if (!excluded) return -0.2677;
    }
    for (const auto& b : n) {
      if (b.el == Element::N) return 0.2142;  // H3: H-O-N
    }
    for (const auto& b : n) {
      if (b.el == Element::C && !b.arom) {
        for (const auto& c : v.of(b.atom)) {
          if (c.atom == a || !c.dbl()) continue;
          if (c.el == Element::C || c.el == Element::N || (!c.arom && (c.el == Element::O || c.el == Element::S))) return 0.298;
        }
      }
      if (!b.arom && (b.el == Element::O || b.el == Element::S)) return 0.298;
    }
    return 0.1125;
  }
  if (at.element == Element::N) return 0.2142;  // H3
  return -0.2677;  // H2: [#1][!C;!N;!O]
}

double crippen_nitrogen(const AtomView& v, int a, int h) {
  const Atom& at = v.g.atom(a);
  const auto& n = v.of(a);
  if (v.arom(a)) return at.formal_charge == 0 ? -0.3239 : -1.119;  // N11 / N12
  const int aliph = count_if_nb(n, [](const Nb& b) { return b.aliphatic(); });
  const int arom = count_if_nb(n, [](const Nb& b) { return b.arom; });
  const int dbl = count_if_nb(n, [](const Nb& b) { return b.dbl(); });
  const int deg = static_cast<int>(n.size());
  if (at.formal_charge == 0) {
    if (h == 2 && aliph >= 1) return -1.019;                    // N1
    if (h == 1 && aliph >= 2) return -0.7096;                   // N2
    if (h == 2 && arom >= 1) return -1.027;                     // N3
    if (h == 1 && arom >= 1 && deg >= 2) return -0.5188;        // N4
    if (h == 1 && dbl >= 1) return 0.08387;                     // N5
    if (h == 0 && dbl >= 1 && deg >= 2) return 0.1836;          // N6
    if (h == 0 && aliph >= 3) return -0.3187;                   // N7
    if (h == 0 && arom >= 1 && deg >= 3 && aliph >= 1) return -0.4458;  // N8
    if (h == 0 && arom >= 3) return -0.4458;                    // N8
    for (const auto& b : n) {
      if (b.triple()) return 0.01508;  // N9
    }
    return -0.4806;
  }
  if (at.formal_charge > 0) {
    if (h >= 1) return -1.95;  // N10
    if (deg == 4 && aliph == 4) return -0.3396;  // N13
    if (dbl >= 1 && deg == 3) return -0.3396;    // N13
    if (dbl >= 2) return -0.3396;                 // N13 (=C)=N
    for (const auto& b : n) {
      if (b.triple()) return 0.2887;  // N14
    }
    return -0.4806;
  }
  return 0.2887;  // N14: anionic nitrogen
}

double crippen_oxygen(const AtomView& v, int a, int h) {
  const Atom& at = v.g.atom(a);
  const auto& n = v.of(a);
  if (v.arom(a)) return 0.1552;                      // O1
  if (h >= 1) return -0.2893;                        // O2
  if (n.size() == 2 && n[0].aliphatic() && n[1].aliphatic()) return -0.0684;  // O3
  if (n.size() == 2 && (n[0].arom || n[1].arom)) return -0.4195;              // O4
  if (n.size() != 1) return -0.1188;
  const Nb& p = n[0];
  if (p.dbl() && (p.el == Element::N || p.el == Element::O)) return 0.0335;        // O5
  if (at.formal_charge < 0 && p.el == Element::N) return 0.0335;                    // O5
  if (at.formal_charge < 0 && p.el == Element::S) return -0.3339;                   // O6
  if (p.dbl() && p.el == Element::S && p.charge == 0) return -0.3339;               // O6
  if (at.formal_charge < 0 && p.el == Element::C && !p.arom) {
    for (const auto& c : v.of(p.atom)) {
      if (c.atom != a && c.dbl() && c.el == Element::O) return -1.326;  // O12
    }
  }
  if (at.formal_charge < 0) return -1.189;  // O7
  if (p.dbl() && p.el == Element::C && p.arom) return 0.1788;  // O8
  if (p.dbl() && p.el == Element::C) {
    std::vector<Nb> others;
    for (const auto& c : v.of(p.atom)) {
      if (c.atom != a) others.push_back(c);
    }
    const int ph = v.g.hydrogen_count(p.atom);
    auto any = [&](auto pred) {
      for (const auto& c : others) {
        if (pred(c)) return true;
      }
      return false;
    };
    const bool has_aliph_c = any([](const Nb& c) { return c.aliphatic_c(); });
    // O9
    if (ph == 1 && has_aliph_c) return -0.1526;
    if (others.size() == 2 && has_aliph_c && others[0].aliphatic() && others[1].aliphatic()) return -0.1526;
    if (ph == 1 && any([](const Nb& c) { return !c.arom && (c.el == Element::N || c.el == Element::O); })) return -0.1526;
    if (ph == 2) return -0.1526;
    // O10
    if (ph == 1 && any([](const Nb& c) { return c.arom && c.el == Element::C; })) return 0.1129;
    if (others.size() == 2) {
      const Nb& x = others[0];
      const Nb& y = others[1];
      auto ok10a = [](const Nb& c1, const Nb& c2) { return c1.el == Element::C && c2.arom; };
      auto ok10b = [](const Nb& c1, const Nb& c2) { return c1.el == Element::C && c1.arom && c2.aliphatic(); };
      if (ok10a(x, y) || ok10a(y, x) || ok10b(x, y) || ok10b(y, x)) return 0.1129;
      if (x.el != Element::C && y.el != Element::C) return 0.4833;  // O11
    }
  }
  return -0.1188;
}

double crippen_heavy(const AtomView& v, int a) {
  const Atom& at = v.g.atom(a);
  const int h = v.g.hydrogen_count(a);
  switch (at.element) {
    case Element::C:
      return v.arom(a) ? crippen_aromatic_carbon(v, a, h) : crippen_aliphatic_carbon(v, a, h);
    case Element::N:
      return crippen_nitrogen(v, a, h);
    case Element::O:
      return crippen_oxygen(v, a, h);
    case Element::F:
      return at.formal_charge == 0 ? 0.4202 : -2.996;
    case Element::Cl:
      return at.formal_charge == 0 ? 0.6895 : -2.996;
    case Element::Br:
      return at.formal_charge == 0 ? 0.8456 : -2.996;
    case Element::I:
      return at.formal_charge == 0 ? 0.8857 : -2.996;
    case Element::P:
      return 0.8612;
    case Element::S: {
      if (v.arom(a)) return 0.6237;
      if (at.formal_charge != 0) return -0.0024;
      for (const auto& b : v.of(a)) {
        if (b.dbl() && !b.arom && (b.el == Element::N || b.el == Element::O || b.el == Element::P || b.el == Element::S)) return -0.0024;
      }
      return 0.6482;
    }
    case Element::H:
      return 0.123;
  }
  return 0.0;
}

}  // namespace

double molecular_weight(const MolGraph& g) {
  double w = 0.0;
  for (int a = 0; a < static_cast<int>(g.num_atoms()); ++a) {
    w += atomic_mass(g.atom(a).element) + g.hydrogen_count(a) * atomic_mass(Element::H);
  }
  return w;
}

std::vector<double> crippen_contributions(const MolGraph& g) {
  const auto ar = perceive_aromaticity(g);
  const AtomView v(g, ar);
  std::vector<double> out(g.num_atoms(), 0.0);
  for (int a = 0; a < static_cast<int>(g.num_atoms()); ++a) {
    out[static_cast<std::size_t>(a)] = crippen_heavy(v, a) + g.hydrogen_count(a) * crippen_hydrogen(v, a);
  }
  return out;
}

std::vector<double> tpsa_contributions(const MolGraph& g, bool include_s_p) {
  const auto ar = perceive_aromaticity(g);
  const auto rings = minimum_cycle_basis(g);
  std::vector<bool> in3(g.num_atoms(), false);
  for (const auto& r : rings) {
    if (r.size() == 3) {
      for (int a : r) in3[static_cast<std::size_t>(a)] = true;
    }
  }
  std::vector<double> out(g.num_atoms(), 0.0);
  for (int a = 0; a < static_cast<int>(g.num_atoms()); ++a) {
    const Atom& at = g.atom(a);
    const int hs = g.hydrogen_count(a);
    const int nbrs = g.degree(a);
    const int chg = at.formal_charge;
    int s = 0, d = 0, t = 0, ar_n = 0;
    for (const auto& nb : g.neighbors(a)) {
      if (ar.bond[static_cast<std::size_t>(nb.bond)]) {
        ++ar_n;
        continue;
      }
      const int k = g.bond(nb.bond).kekule;
      s += k == 1;
      d += k == 2;
      t += k == 3;
    }
    const bool ring3 = in3[static_cast<std::size_t>(a)];
    double c = -1.0;
    if (at.element == Element::N) {
      if (nbrs == 1) {
        if (hs == 0 && chg == 0 && t == 1) c = 23.79;
        else if (hs == 1 && chg == 0 && d == 1) c = 23.85;
        else if (hs == 2 && chg == 0 && s == 1) c = 26.02;
        else if (hs == 2 && chg == 1 && d == 1) c = 25.59;
        else if (hs == 3 && chg == 1 && s == 1) c = 27.64;
      } else if (nbrs == 2) {
        if (hs == 0 && chg == 0 && s == 1 && d == 1) c = 12.36;
        else if (hs == 0 && chg == 0 && t == 1 && d == 1) c = 13.60;
        else if (hs == 1 && chg == 0 && s == 2 && ring3) c = 21.94;
        else if (hs == 1 && chg == 0 && s == 2) c = 12.03;
        else if (hs == 0 && chg == 1 && t == 1 && s == 1) c = 4.36;
        else if (hs == 1 && chg == 1 && d == 1 && s == 1) c = 13.97;
        else if (hs == 2 && chg == 1 && s == 2) c = 16.61;
        else if (hs == 0 && chg == 0 && ar_n == 2) c = 12.89;
        else if (hs == 1 && chg == 0 && ar_n == 2) c = 15.79;
        else if (hs == 1 && chg == 1 && ar_n == 2) c = 14.14;
      } else if (nbrs == 3) {
        if (hs == 0 && chg == 0 && s == 3 && ring3) c = 3.01;
        else if (hs == 0 && chg == 0 && s == 3) c = 3.24;
        else if (hs == 0 && chg == 0 && s == 1 && d == 2) c = 11.68;
        else if (hs == 0 && chg == 1 && s == 2 && d == 1) c = 3.01;
        else if (hs == 1 && chg == 1 && s == 3) c = 4.44;
        else if (hs == 0 && chg == 0 && ar_n == 3) c = 4.41;
        else if (hs == 0 && chg == 0 && s == 1 && ar_n == 2) c = 4.93;
        else if (hs == 0 && chg == 0 && d == 1 && ar_n == 2) c = 8.39;
        else if (hs == 0 && chg == 1 && ar_n == 3) c = 4.10;
        else if (hs == 0 && chg == 1 && s == 1 && ar_n == 2) c = 3.88;
      } else if (nbrs == 4) {
        if (hs == 0 && s == 4 && chg == 1) c = 0.0;
      }
      if (c < 0.0) c = std::max(0.0, 30.5 - nbrs * 8.2 + hs * 1.5);
    } else if (at.element == Element::O) {
      if (nbrs == 1) {
        if (hs == 0 && chg == 0 && d == 1) c = 17.07;
        else if (hs == 1 && chg == 0 && s == 1) c = 20.23;
        else if (hs == 0 && chg == -1 && s == 1) c = 23.06;
      } else if (nbrs == 2) {
        if (hs == 0 && chg == 0 && s == 2 && ring3) c = 12.53;
        else if (hs == 0 && chg == 0 && s == 2) c = 9.23;
        else if (hs == 0 && chg == 0 && ar_n == 2) c = 13.14;
      }
      if (c < 0.0) c = std::max(0.0, 28.5 - nbrs * 8.6 + hs * 1.5);
    } else if (include_s_p && at.element == Element::S) {
      if (nbrs == 1) {
        if (hs == 0 && chg == 0 && d == 1) c = 32.09;
        else if (hs == 1 && chg == 0 && s == 1) c = 38.80;
      } else if (nbrs == 2) {
        if (hs == 0 && chg == 0 && s == 2) c = 25.30;
        else if (hs == 0 && chg == 0 && ar_n == 2) c = 28.24;
      } else if (nbrs == 3) {
        if (hs == 0 && chg == 0 && ar_n == 2 && d == 1) c = 21.70;
        else if (hs == 0 && chg == 0 && s == 2 && d == 1) c = 19.21;
      } else if (nbrs == 4) {
        if (hs == 0 && chg == 0 && s == 2 && d == 2) c = 8.38;
      }
      if (c < 0.0) c = 0.0;
    } else if (include_s_p && at.element == Element::P) {
      if (nbrs == 2) {
        if (hs == 0 && chg == 0 && s == 1 && d == 1) c = 34.14;
      } else if (nbrs == 3) {
        if (hs == 0 && chg == 0 && s == 3) c = 13.59;
        else if (hs == 1 && chg == 0 && s == 2 && d == 1) c = 23.47;
      } else if (nbrs == 4) {
        if (hs == 0 && chg == 0 && s == 3 && d == 1) c = 9.81;
      }
      if (c < 0.0) c = 0.0;
    }
    out[static_cast<std::size_t>(a)] = std::max(c, 0.0);
  }
  return out;
}

Properties properties(const MolGraph& g, const PropertyOptions& opts) {
  Properties p;
  p.weight = molecular_weight(g);
  const auto lp = crippen_contributions(g);
  p.logp = std::accumulate(lp.begin(), lp.end(), 0.0);
  const auto tp = tpsa_contributions(g, opts.tpsa_include_s_p);
  p.tpsa = std::accumulate(tp.begin(), tp.end(), 0.0);
  return p;
}

}  // namespace jtk::mol
