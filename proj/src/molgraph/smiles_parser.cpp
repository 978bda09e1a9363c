#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>

#include "jtreekit/molgraph.hpp"
#include "matching.hpp"

namespace jtk::mol {

namespace {

struct PendingRing {
  int atom;
  int order;  // 0 = unspecified
  std::size_t pos;
};

class Parser {
 public:
  Parser(std::string_view text, bool normalize) : s_(text), normalize_(normalize) {}

  MolGraph run() {
    if (s_.empty()) fail(ErrorCode::Syntax, "empty SMILES");
    for (unsigned char c : s_) {
      if (c > 127 || std::isspace(c)) fail(ErrorCode::Syntax, "non-ASCII or whitespace in SMILES");
    }
    std::vector<int> branch_stack;
    int prev = -1;
    int pending_bond = 0;  // 0 none, 1..3 orders, 4 aromatic
    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == '(') {
        if (prev < 0) error("branch before any atom");
        branch_stack.push_back(prev);
        ++i_;
      } else if (c == ')') {
        if (branch_stack.empty()) error("unbalanced ')'");
        if (pending_bond) error("bond symbol before ')'");
        prev = branch_stack.back();
        branch_stack.pop_back();
        ++i_;
      } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\') {
        if (pending_bond) error("consecutive bond symbols");
        pending_bond = c == '=' ? 2 : c == '#' ? 3 : c == ':' ? 4 : 1;
        ++i_;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        if (prev < 0) error("ring closure before any atom");
        int label = 0;
        if (c == '%') {
          if (i_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_ + 1])) ||
              !std::isdigit(static_cast<unsigned char>(s_[i_ + 2]))) {
            error("malformed %nn ring label");
          }
          label = (s_[i_ + 1] - '0') * 10 + (s_[i_ + 2] - '0');
          i_ += 3;
        } else {
          label = c - '0';
          ++i_;
        }
        ring_closure(prev, label, pending_bond);
        pending_bond = 0;
      } else if (c == '.') {
        error("disconnected structures ('.') are not supported");
      } else {
        const int atom = parse_atom();
        if (prev >= 0) connect(prev, atom, pending_bond);
        else if (pending_bond) error("bond symbol before first atom");
        pending_bond = 0;
        prev = atom;
      }
    }
    if (!branch_stack.empty()) fail(ErrorCode::Syntax, "unbalanced '('");
    if (pending_bond) fail(ErrorCode::Syntax, "dangling bond symbol");
    if (!rings_.empty()) fail(ErrorCode::Syntax, "unclosed ring closure " + std::to_string(rings_.begin()->first));
    fold_hydrogens();
    kekulize();
    validate();
    if (normalize_) normalize_kekule(g_);
    return std::move(g_);
  }

 private:
  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorCode::Syntax, msg + " at position " + std::to_string(i_));
  }

  bool aromatic(int a) const { return g_.atom(a).aromatic; }

  void connect(int a, int b, int symbol) {
    if (g_.bond_between(a, b)) error("duplicate bond");
    BondOrder order = BondOrder::Single;
    if (symbol == 0) order = aromatic(a) && aromatic(b) ? BondOrder::Aromatic : BondOrder::Single;
    else order = static_cast<BondOrder>(symbol);
    g_.add_bond(a, b, order);
  }

  void ring_closure(int atom, int label, int symbol) {
    auto it = rings_.find(label);
    if (it == rings_.end()) {
      rings_[label] = PendingRing{atom, symbol, i_};
      return;
    }
    const PendingRing open = it->second;
    rings_.erase(it);
    if (open.atom == atom) error("ring closure to self");
    if (open.order && symbol && open.order != symbol) error("conflicting ring-closure bond symbols");
    connect(open.atom, atom, symbol ? symbol : open.order);
  }

  int parse_atom() {
    Atom a;
    const char c = s_[i_];
    if (c == '[') return parse_bracket();
    auto two = s_.substr(i_, 2);
    if (two == "Cl" || two == "Br") {
      a.element = two == "Cl" ? Element::Cl : Element::Br;
      i_ += 2;
      return g_.add_atom(a);
    }
    switch (c) {
      case 'C': a.element = Element::C; break;
      case 'N': a.element = Element::N; break;
      case 'O': a.element = Element::O; break;
      case 'P': a.element = Element::P; break;
      case 'S': a.element = Element::S; break;
      case 'F': a.element = Element::F; break;
      case 'I': a.element = Element::I; break;
      case 'c': a.element = Element::C; a.aromatic = true; break;
      case 'n': a.element = Element::N; a.aromatic = true; break;
      case 'o': a.element = Element::O; a.aromatic = true; break;
      case 'p': a.element = Element::P; a.aromatic = true; break;
      case 's': a.element = Element::S; a.aromatic = true; break;
      default:
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '*') {
          fail(ErrorCode::UnsupportedAtom, std::string("unsupported atom '") + c + "'");
        }
        error(std::string("unexpected character '") + c + "'");
    }
    ++i_;
    return g_.add_atom(a);
  }

  int parse_bracket() {
    const std::size_t close = s_.find(']', i_);
    if (close == std::string_view::npos) error("unbalanced '['");
    const std::string_view body = s_.substr(i_ + 1, close - i_ - 1);
    std::size_t k = 0;
    if (k < body.size() && std::isdigit(static_cast<unsigned char>(body[k]))) {
      fail(ErrorCode::Syntax, "isotopes are not supported");
    }
    Atom a;
    a.bracket = true;
    std::size_t len = 0;
    if (k + 1 < body.size() && std::isupper(static_cast<unsigned char>(body[k])) &&
        std::islower(static_cast<unsigned char>(body[k + 1])) && element_from_symbol(body.substr(k, 2))) {
      len = 2;
    } else if (k < body.size() && std::isalpha(static_cast<unsigned char>(body[k]))) {
      len = 1;
      if (k + 1 < body.size() && std::islower(static_cast<unsigned char>(body[k + 1])) && body[k + 1] != 'H') {
        // two-letter symbol we do not support, e.g. [Na+] or [Si]
        fail(ErrorCode::UnsupportedAtom, "unsupported atom '" + std::string(body.substr(k, 2)) + "'");
      }
    } else {
      error("bracket atom without element");
    }
    std::string sym(body.substr(k, len));
    if (std::islower(static_cast<unsigned char>(sym[0]))) {
      a.aromatic = true;
      sym[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sym[0])));
      if (sym != "C" && sym != "N" && sym != "O" && sym != "S" && sym != "P") {
        fail(ErrorCode::UnsupportedAtom, "unsupported aromatic atom '" + sym + "'");
      }
    }
    const auto el = element_from_symbol(sym);
    if (!el) fail(ErrorCode::UnsupportedAtom, "unsupported atom '" + sym + "'");
    a.element = *el;
    k += len;
    while (k < body.size() && body[k] == '@') ++k;  // stereo markers are ignored
    if (k < body.size() && body[k] == 'H') {
      ++k;
      a.explicit_h = 1;
      if (k < body.size() && std::isdigit(static_cast<unsigned char>(body[k]))) {
        a.explicit_h = body[k] - '0';
        ++k;
      }
    }
    if (k < body.size() && (body[k] == '+' || body[k] == '-')) {
      const int sign = body[k] == '+' ? 1 : -1;
      ++k;
      int mag = 1;
      if (k < body.size() && std::isdigit(static_cast<unsigned char>(body[k]))) {
        mag = body[k] - '0';
        ++k;
      } else {
        while (k < body.size() && body[k] == (sign > 0 ? '+' : '-')) {
          ++mag;
          ++k;
        }
      }
      a.formal_charge = sign * mag;
    }
    if (k != body.size()) error("unsupported bracket atom content '" + std::string(body) + "'");
    if (std::abs(a.formal_charge) > 2) fail(ErrorCode::UnsupportedAtom, "formal charge out of range");
    i_ = close + 1;
    return g_.add_atom(a);
  }

  // Explicit [H] atoms attached to one heavy atom become hydrogen counts.
  void fold_hydrogens() {
    std::vector<int> keep;
    bool any = false;
    for (int a = 0; a < static_cast<int>(g_.num_atoms()); ++a) {
      const Atom& at = g_.atom(a);
      const bool foldable = at.element == Element::H && at.formal_charge == 0 && at.explicit_h == 0 &&
                            g_.degree(a) == 1 && g_.atom(g_.neighbors(a)[0].atom).element != Element::H &&
                            g_.bond(g_.neighbors(a)[0].bond).order == BondOrder::Single;
      if (foldable) any = true;
      else keep.push_back(a);
    }
    if (!any) return;
    MolGraph out;
    std::vector<int> local(g_.num_atoms(), -1);
    for (int a : keep) local[static_cast<std::size_t>(a)] = out.add_atom(g_.atom(a));
    for (const auto& b : g_.bonds()) {
      const int la = local[static_cast<std::size_t>(b.a)];
      const int lb = local[static_cast<std::size_t>(b.b)];
      if (la >= 0 && lb >= 0) {
        out.add_bond(la, lb, b.order, b.kekule);
      } else {
        const int heavy = la >= 0 ? la : lb;
        Atom& h = out.atom(heavy);
        if (h.bracket) ++h.explicit_h;
      }
    }
    g_ = std::move(out);
  }

  void kekulize() {
    const int n = static_cast<int>(g_.num_atoms());
    std::vector<bool> need(static_cast<std::size_t>(n), false);
    std::vector<bool> edge(g_.num_bonds(), false);
    bool any = false;
    for (int b = 0; b < static_cast<int>(g_.num_bonds()); ++b) {
      if (g_.bond(b).order == BondOrder::Aromatic) {
        edge[static_cast<std::size_t>(b)] = true;
        any = true;
      }
    }
    if (!any && std::none_of(g_.atoms().begin(), g_.atoms().end(), [](const Atom& a) { return a.aromatic; })) return;
    for (int a = 0; a < n; ++a) {
      const Atom& at = g_.atom(a);
      if (!at.aromatic) continue;
      int sigma = at.bracket ? at.explicit_h : 0;
      for (const auto& nb : g_.neighbors(a)) sigma += g_.bond(nb.bond).kekule;
      const auto allowed = allowed_valences(at.element, at.formal_charge);
      int v = -1;
      for (int x : allowed) {
        if (x >= sigma) {
          v = x;
          break;
        }
      }
      if (v < 0) fail(ErrorCode::Valence, "aromatic atom " + std::to_string(a) + " exceeds its valence");
      need[static_cast<std::size_t>(a)] = v - sigma >= 1;
    }
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const auto match = detail::perfect_matching(g_, need, edge, order);
    if (!match) fail(ErrorCode::Kekulization, "cannot kekulize aromatic system");
    for (int b = 0; b < static_cast<int>(g_.num_bonds()); ++b) {
      if (!edge[static_cast<std::size_t>(b)]) continue;
      g_.bond(b).kekule = (*match)[static_cast<std::size_t>(g_.bond(b).a)] == b ? 2 : 1;
    }
  }

  void validate() const {
    const auto bad = check_valence(g_);
    if (!bad.empty()) {
      const auto& v = bad.front();
      fail(ErrorCode::Valence, "atom " + std::to_string(v.atom) + " (" + std::string(element_symbol(g_.atom(v.atom).element)) +
                                   ") uses valence " + std::to_string(v.used) + " > " + std::to_string(v.allowed));
    }
  }

  std::string_view s_;
  bool normalize_ = true;
  std::size_t i_ = 0;
  MolGraph g_;
  std::map<int, PendingRing> rings_;
};

}  // namespace

MolGraph parse_smiles(std::string_view text) { return Parser(text, true).run(); }

MolGraph parse_kekule_smiles(std::string_view text) { return Parser(text, false).run(); }

}  // namespace jtk::mol
