#include "jtreekit/assembler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "jtreekit/fingerprint.hpp"
#include "jtreekit/ndtensor.hpp"
#include "jtreekit/properties.hpp"
#include "jtreekit/seqcodec.hpp"

namespace jtk::assem {

namespace {

using jt::JunctionKind;

int max_valence(const mol::Atom& a) {
  const auto v = mol::allowed_valences(a.element, a.formal_charge);
  return v.empty() ? -1 : *std::max_element(v.begin(), v.end());
}

bool same_kind(const mol::Atom& a, const mol::Atom& b) { return a.element == b.element && a.formal_charge == b.formal_charge; }

// (child fragment atom, molecule atom) identifications.
using Share = std::vector<std::pair<int, int>>;

std::vector<Share> candidate_shares(const jt::JunctionTree& jt, const PartialAssembly& s, int parent, int child) {
  const jt::Junction& P = jt.nodes[static_cast<std::size_t>(parent)];
  const jt::Junction& C = jt.nodes[static_cast<std::size_t>(child)];
  const auto& pm = s.atoms[static_cast<std::size_t>(parent)];
  const bool parent_singleton = P.kind == JunctionKind::Singleton;
  // An atom already shared with another junction can only be reused through a singleton.
  auto is_free = [&](int u) { return parent_singleton || s.owners[static_cast<std::size_t>(u)] == 1; };
  const int child_atoms = C.kind == JunctionKind::Singleton ? 1 : static_cast<int>(C.fragment.num_atoms());

  std::vector<Share> out;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    const int u = pm[i];
    if (!is_free(u)) continue;
    for (int x = 0; x < child_atoms; ++x) {
      if (same_kind(C.fragment.atom(x), s.mol.atom(u))) out.push_back({{x, u}});
    }
  }
  if (P.kind == JunctionKind::Ring && C.kind == JunctionKind::Ring) {
    for (const auto& pb : P.fragment.bonds()) {
      const int u = pm[static_cast<std::size_t>(pb.a)];
      const int v = pm[static_cast<std::size_t>(pb.b)];
      if (!is_free(u) || !is_free(v)) continue;
      for (const auto& cb : C.fragment.bonds()) {
        if (cb.kekule != pb.kekule) continue;
        for (const auto& [x, y] : {std::pair{cb.a, cb.b}, std::pair{cb.b, cb.a}}) {
          if (same_kind(C.fragment.atom(x), s.mol.atom(u)) && same_kind(C.fragment.atom(y), s.mol.atom(v))) out.push_back({{x, u}, {y, v}});
        }
      }
    }
  }
  return out;
}

std::optional<PartialAssembly> merge(const jt::JunctionTree& jt, const PartialAssembly& s, int child, const Share& share) {
  const mol::MolGraph& F = jt.nodes[static_cast<std::size_t>(child)].fragment;
  PartialAssembly n = s;
  std::vector<int> map(F.num_atoms(), -1);
  for (const auto& [x, u] : share) map[static_cast<std::size_t>(x)] = u;
  for (std::size_t x = 0; x < F.num_atoms(); ++x) {
    if (map[x] >= 0) continue;
    mol::Atom a = F.atom(static_cast<int>(x));
    a.bracket = false;
    a.explicit_h = 0;
    map[x] = n.mol.add_atom(a);
    n.owners.push_back(0);
  }
  for (const auto& b : F.bonds()) {
    const int u = map[static_cast<std::size_t>(b.a)];
    const int v = map[static_cast<std::size_t>(b.b)];
    if (const auto existing = n.mol.bond_between(u, v)) {
      if (n.mol.bond(*existing).kekule != b.kekule) return std::nullopt;
      continue;
    }
    n.mol.add_bond(u, v, b.order, b.kekule);
  }
  for (const auto& [x, u] : share) {
    (void)x;
    if (n.mol.bond_order_sum(u) > max_valence(n.mol.atom(u))) return std::nullopt;
  }
  for (int u : map) ++n.owners[static_cast<std::size_t>(u)];
  n.atoms[static_cast<std::size_t>(child)] = std::move(map);
  ++n.placed;
  return n;
}

// First step index >= k whose parent is still alive; children of dropped junctions are dropped.
std::size_t advance(const AssemblyPlan& plan, PartialAssembly& s, std::size_t k) {
  while (k < plan.steps.size()) {
    const auto [p, c] = plan.steps[k];
    if (!s.dropped[static_cast<std::size_t>(p)]) break;
    s.dropped[static_cast<std::size_t>(c)] = 1;
    ++k;
  }
  return k;
}

PartialAssembly dropping(const PartialAssembly& s, int child) {
  PartialAssembly n = s;
  n.dropped[static_cast<std::size_t>(child)] = 1;
  return n;
}

bool any_dropped(const PartialAssembly& s) {
  return std::any_of(s.dropped.begin(), s.dropped.end(), [](char d) { return d != 0; });
}

double property_value(const mol::Properties& p, Property which) {
  switch (which) {
    case Property::Weight: return p.weight;
    case Property::LogP: return p.logp;
    case Property::Tpsa: return p.tpsa;
  }
  return 0.0;
}

class Scorer {
 public:
  Scorer(const ScoreWeights& w, int total) : w_(w), total_(total) {
    validate(w);
    if (w.match > 0.0 && w.reference) {
      ref_smiles_ = mol::canonical_smiles(*w.reference);
      ref_fp_ = mol::fingerprint(*w.reference);
    }
  }

  // Upper bound of the score, used to normalize values in the search.
  double scale() const {
    double s = w_.likelihood;
    if (!w_.targets.empty()) s += w_.property;
    if (ref_fp_) s += w_.match;
    return s > 0.0 ? s : 1.0;
  }

  double operator()(const std::string& smiles, int placed) {
    double molecule_terms = 0.0;
    if (const auto it = cache_.find(smiles); it != cache_.end()) {
      molecule_terms = it->second;
    } else {
      // Re-reading the canonical string makes the terms independent of atom order.
      const mol::MolGraph canonical = mol::parse_smiles(smiles);
      if (!w_.targets.empty() && w_.property > 0.0) {
        const auto props = mol::properties(canonical);
        double k = 1.0;
        for (const auto& t : w_.targets) {
          const double d = property_value(props, t.property) - t.target;
          k *= std::exp(-d * d / (2.0 * t.width * t.width));
        }
        molecule_terms += w_.property * k;
      }
      if (ref_fp_) {
        const double m = smiles == *ref_smiles_ ? 1.0 : 0.5 * mol::tanimoto(mol::fingerprint(canonical), *ref_fp_);
        molecule_terms += w_.match * m;
      }
      cache_.emplace(smiles, molecule_terms);
    }
    return w_.likelihood * static_cast<double>(placed) / static_cast<double>(total_) + molecule_terms;
  }

 private:
  const ScoreWeights& w_;
  int total_;
  std::optional<std::string> ref_smiles_;
  std::optional<mol::Fingerprint> ref_fp_;
  std::unordered_map<std::string, double> cache_;
};

AssemblyResult finish(const PartialAssembly& s, Scorer& scorer) {
  AssemblyResult r;
  r.mol = s.mol;
  r.smiles = mol::canonical_smiles(s.mol);
  r.placed = s.placed;
  r.partial = any_dropped(s);
  r.score = scorer(r.smiles, r.placed);
  return r;
}

bool better(const AssemblyResult& a, const AssemblyResult& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.smiles < b.smiles;
}

void require_tree(const jt::JunctionTree& jt) {
  if (jt.nodes.empty()) fail(ErrorCode::EmptyTree, "junction tree has no nodes");
}

std::string describe(const jt::JunctionTree& jt, int parent, int child) {
  return std::to_string(parent) + "(" + jt.nodes[static_cast<std::size_t>(parent)].key + ")->" + std::to_string(child) + "(" +
         jt.nodes[static_cast<std::size_t>(child)].key + ")";
}

}  // namespace

void validate(const ScoreWeights& w) {
  if (w.likelihood < 0.0 || w.property < 0.0 || w.match < 0.0) fail(ErrorCode::Config, "score weights must be non-negative");
  if (w.likelihood == 0.0 && w.property == 0.0 && w.match == 0.0) fail(ErrorCode::Config, "score weights cannot all be zero");
  for (const auto& t : w.targets) {
    if (!(t.width > 0.0)) fail(ErrorCode::Config, "property kernel width must be positive");
  }
  if (w.match > 0.0 && !w.reference) fail(ErrorCode::Config, "match weight set without a reference molecule");
}

AssemblyPlan plan_assembly(const jt::JunctionTree& jt) {
  require_tree(jt);
  const auto bfs = seq::bfs_order(jt);
  std::vector<std::vector<int>> kids(bfs.order.size());
  for (std::size_t k = 1; k < bfs.order.size(); ++k) kids[static_cast<std::size_t>(bfs.father[k])].push_back(static_cast<int>(k));
  AssemblyPlan plan;
  plan.root = bfs.order[0];
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    if (k != 0) plan.steps.emplace_back(bfs.order[static_cast<std::size_t>(bfs.father[static_cast<std::size_t>(k)])], bfs.order[static_cast<std::size_t>(k)]);
    const auto& ch = kids[static_cast<std::size_t>(k)];
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return plan;
}

PartialAssembly PartialAssembly::start(const jt::JunctionTree& jt, int root) {
  require_tree(jt);
  PartialAssembly s;
  const mol::MolGraph& F = jt.nodes.at(static_cast<std::size_t>(root)).fragment;
  s.atoms.resize(jt.nodes.size());
  s.dropped.assign(jt.nodes.size(), 0);
  auto& map = s.atoms[static_cast<std::size_t>(root)];
  for (std::size_t x = 0; x < F.num_atoms(); ++x) {
    mol::Atom a = F.atom(static_cast<int>(x));
    a.bracket = false;
    a.explicit_h = 0;
    map.push_back(s.mol.add_atom(a));
    s.owners.push_back(1);
  }
  for (const auto& b : F.bonds()) s.mol.add_bond(b.a, b.b, b.order, b.kekule);
  s.placed = 1;
  return s;
}

std::vector<PartialAssembly> attachment_states(const jt::JunctionTree& jt, const PartialAssembly& s, int parent, int child) {
  std::map<std::string, PartialAssembly> distinct;
  for (const auto& share : candidate_shares(jt, s, parent, child)) {
    auto n = merge(jt, s, child, share);
    if (!n) continue;
    distinct.try_emplace(mol::kekule_smiles(n->mol), std::move(*n));
  }
  std::vector<PartialAssembly> out;
  out.reserve(distinct.size());
  for (auto& [_, n] : distinct) out.push_back(std::move(n));
  return out;
}

bool can_attach(const jt::JunctionTree& jt, const PartialAssembly& s, int parent, int child) {
  for (const auto& share : candidate_shares(jt, s, parent, child)) {
    if (merge(jt, s, child, share)) return true;
  }
  return false;
}

std::vector<mol::MolGraph> enumerate_attachments(const jt::JunctionTree& jt, const PartialAssembly& s, int parent, int child) {
  if (!s.is_placed(parent)) fail(ErrorCode::BadRange, "parent junction is not placed");
  if (s.is_placed(child)) fail(ErrorCode::BadRange, "child junction is already placed");
  std::map<std::string, mol::MolGraph> distinct;
  for (auto& n : attachment_states(jt, s, parent, child)) distinct.try_emplace(mol::canonical_smiles(n.mol), std::move(n.mol));
  if (distinct.empty()) fail(ErrorCode::NoValidAttachment, "no valid attachment for " + describe(jt, parent, child));
  std::vector<mol::MolGraph> out;
  for (auto& [_, g] : distinct) out.push_back(std::move(g));
  return out;
}

double assembly_score(const mol::MolGraph& g, int placed, int total, const ScoreWeights& w) {
  if (total <= 0) fail(ErrorCode::EmptyTree, "junction tree has no nodes");
  Scorer scorer(w, total);
  return scorer(mol::canonical_smiles(g), placed);
}

AssemblyResult greedy_assemble(const jt::JunctionTree& jt, const ScoreWeights& w, const TraceSink& trace) {
  const AssemblyPlan plan = plan_assembly(jt);
  Scorer scorer(w, static_cast<int>(jt.size()));
  PartialAssembly s = PartialAssembly::start(jt, plan.root);
  for (std::size_t k = advance(plan, s, 0); k < plan.steps.size(); k = advance(plan, s, k + 1)) {
    const auto [p, c] = plan.steps[k];
    auto options = attachment_states(jt, s, p, c);
    const bool ok = !options.empty();
    s = ok ? std::move(options.front()) : dropping(s, c);
    if (trace) {
      std::ostringstream line;
      line << "step " << k << ", " << (ok ? "attach " : "drop ") << describe(jt, p, c) << ", "
           << scorer(mol::canonical_smiles(s.mol), s.placed);
      trace(line.str());
    }
  }
  return finish(s, scorer);
}

namespace {

struct SearchNode {
  PartialAssembly state;
  std::size_t step = 0;  // next plan step (after advance)
  bool terminal = false;
  bool exhausted = false;
  std::vector<PartialAssembly> actions;
  std::size_t next_action = 0;
  std::vector<int> children;
  int parent = -1;
  int visits = 0;
  double total = 0.0;
};

class Search {
 public:
  Search(const jt::JunctionTree& jt, const ScoreWeights& w, const MctsOptions& opts)
      : jt_(jt), plan_(plan_assembly(jt)), scorer_(w, static_cast<int>(jt.size())), opts_(opts), rng_(opts.seed) {}

  AssemblyResult run() {
    nodes_.push_back(make_node(PartialAssembly::start(jt_, plan_.root), 0, -1));
    for (int sim = 0; sim < opts_.budget && !nodes_[0].exhausted; ++sim) simulate(sim);
    return *best_;
  }

 private:
  SearchNode make_node(PartialAssembly s, std::size_t step, int parent) {
    SearchNode n;
    n.step = advance(plan_, s, step);
    n.parent = parent;
    n.terminal = n.step >= plan_.steps.size();
    if (!n.terminal) {
      const auto [p, c] = plan_.steps[n.step];
      n.actions = attachment_states(jt_, s, p, c);
      if (n.actions.empty()) n.actions.push_back(dropping(s, c));
    }
    n.state = std::move(s);
    return n;
  }

  double ucb(const SearchNode& child, int parent_visits) const {
    const double mean = child.total / child.visits / scorer_.scale();
    return mean + opts_.exploration * std::sqrt(std::log(static_cast<double>(parent_visits)) / child.visits);
  }

  void simulate(int sim) {
    int cur = 0;
    // selection over fully expanded nodes, skipping exhausted subtrees
    while (!nodes_[static_cast<std::size_t>(cur)].terminal &&
           nodes_[static_cast<std::size_t>(cur)].next_action >= nodes_[static_cast<std::size_t>(cur)].actions.size()) {
      const SearchNode& n = nodes_[static_cast<std::size_t>(cur)];
      int pick = -1;
      double best = -1e300;
      for (int c : n.children) {
        const SearchNode& ch = nodes_[static_cast<std::size_t>(c)];
        if (ch.exhausted) continue;
        const double v = ucb(ch, n.visits);
        if (v > best) best = v, pick = c;
      }
      if (pick < 0) break;
      cur = pick;
    }
    SearchNode& n = nodes_[static_cast<std::size_t>(cur)];
    int leaf = cur;
    if (!n.terminal && n.next_action < n.actions.size()) {
      PartialAssembly s = std::move(n.actions[n.next_action++]);
      const std::size_t step = n.step + 1;
      const int id = static_cast<int>(nodes_.size());
      nodes_.push_back(make_node(std::move(s), step, cur));
      nodes_[static_cast<std::size_t>(cur)].children.push_back(id);
      leaf = id;
    }
    const AssemblyResult r = rollout(nodes_[static_cast<std::size_t>(leaf)]);
    if (opts_.trace) {
      std::ostringstream line;
      line << "simulation " << sim << ", node " << leaf << " depth " << nodes_[static_cast<std::size_t>(leaf)].step << ", " << r.score;
      opts_.trace(line.str());
    }
    for (int v = leaf; v >= 0; v = nodes_[static_cast<std::size_t>(v)].parent) {
      SearchNode& u = nodes_[static_cast<std::size_t>(v)];
      ++u.visits;
      u.total += r.score;
      if (u.terminal) {
        u.exhausted = true;
      } else if (u.next_action >= u.actions.size()) {
        u.exhausted = std::all_of(u.children.begin(), u.children.end(), [&](int c) { return nodes_[static_cast<std::size_t>(c)].exhausted; });
      }
    }
  }

  AssemblyResult rollout(const SearchNode& from) {
    PartialAssembly s = from.state;
    for (std::size_t k = from.step; (k = advance(plan_, s, k)) < plan_.steps.size(); ++k) {
      const auto [p, c] = plan_.steps[k];
      auto shares = candidate_shares(jt_, s, p, c);
      for (std::size_t i = shares.size(); i > 1; --i) std::swap(shares[i - 1], shares[static_cast<std::size_t>(rng_.below(static_cast<int>(i)))]);
      std::optional<PartialAssembly> next;
      for (const auto& sh : shares) {
        if ((next = merge(jt_, s, c, sh))) break;
      }
      s = next ? std::move(*next) : dropping(s, c);
    }
    AssemblyResult r = finish(s, scorer_);
    if (!best_ || better(r, *best_)) best_ = r;
    return r;
  }

  const jt::JunctionTree& jt_;
  AssemblyPlan plan_;
  Scorer scorer_;
  MctsOptions opts_;
  nd::Rng rng_;
  std::vector<SearchNode> nodes_;
  std::optional<AssemblyResult> best_;
};

}  // namespace

AssemblyResult mcts_assemble(const jt::JunctionTree& jt, const ScoreWeights& w, const MctsOptions& opts) {
  require_tree(jt);
  if (opts.budget < 1) fail(ErrorCode::Config, "search budget must be at least one simulation");
  if (jt.size() == 1) {
    Scorer scorer(w, 1);
    return finish(PartialAssembly::start(jt, 0), scorer);
  }
  Search search(jt, w, opts);
  return search.run();
}

std::vector<AssemblyResult> enumerate_assemblies(const jt::JunctionTree& jt, const ScoreWeights& w, std::size_t max_states) {
  const AssemblyPlan plan = plan_assembly(jt);
  Scorer scorer(w, static_cast<int>(jt.size()));
  std::map<std::string, AssemblyResult> found;
  std::size_t visited = 0;
  std::function<void(PartialAssembly, std::size_t)> walk = [&](PartialAssembly s, std::size_t k) {
    if (++visited > max_states) fail(ErrorCode::BadRange, "exhaustive enumeration exceeds the state limit");
    k = advance(plan, s, k);
    if (k >= plan.steps.size()) {
      AssemblyResult r = finish(s, scorer);
      auto it = found.find(r.smiles);
      if (it == found.end()) {
        found.emplace(r.smiles, std::move(r));
      } else if (r.score > it->second.score) {
        it->second = std::move(r);
      }
      return;
    }
    const auto [p, c] = plan.steps[k];
    auto options = attachment_states(jt, s, p, c);
    if (options.empty()) {
      walk(dropping(s, c), k + 1);
      return;
    }
    for (auto& n : options) walk(std::move(n), k + 1);
  };
  walk(PartialAssembly::start(jt, plan.root), 0);
  std::vector<AssemblyResult> out;
  for (auto& [_, r] : found) out.push_back(std::move(r));
  std::sort(out.begin(), out.end(), better);
  return out;
}

}  // namespace jtk::assem
