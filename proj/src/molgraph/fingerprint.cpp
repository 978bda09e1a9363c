#include "jtreekit/fingerprint.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>

namespace jtk::mol {

Fingerprint::Fingerprint(std::size_t width, int radius) : width_(width), radius_(radius) {
  if (width == 0 || !std::has_single_bit(width)) fail(ErrorCode::BadRange, "fingerprint width must be a power of two");
  if (radius < 0) fail(ErrorCode::BadRange, "fingerprint radius must be non-negative");
  words_.assign((width + 63) / 64, 0);
}

std::size_t Fingerprint::count() const noexcept {
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::size_t fold(std::uint64_t h, std::size_t nbits) {
  h ^= h >> 32;
  return static_cast<std::size_t>(h) & (nbits - 1);
}

}  // namespace

Fingerprint fingerprint(const MolGraph& g, int radius, std::size_t nbits) {
  Fingerprint fp(nbits, radius);
  const int n = static_cast<int>(g.num_atoms());
  const auto mobile = mobile_bonds(g);
  const auto in_ring = ring_bonds(g);
  std::vector<bool> lower(static_cast<std::size_t>(n), false), ring_atom(static_cast<std::size_t>(n), false);
  for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b) {
    const auto& bd = g.bond(b);
    if (mobile[static_cast<std::size_t>(b)]) lower[static_cast<std::size_t>(bd.a)] = lower[static_cast<std::size_t>(bd.b)] = true;
    if (in_ring[static_cast<std::size_t>(b)]) ring_atom[static_cast<std::size_t>(bd.a)] = ring_atom[static_cast<std::size_t>(bd.b)] = true;
  }
  std::vector<std::uint64_t> ids(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    const Atom& at = g.atom(a);
    std::string env = std::string(element_symbol(at.element)) + ";d" + std::to_string(g.degree(a)) + ";h" +
                      std::to_string(g.hydrogen_count(a)) + ";q" + std::to_string(at.formal_charge) +
                      (lower[static_cast<std::size_t>(a)] ? ";ar" : "") + (ring_atom[static_cast<std::size_t>(a)] ? ";r" : "");
    ids[static_cast<std::size_t>(a)] = fnv1a64(env);
    fp.set(fold(ids[static_cast<std::size_t>(a)], nbits));
  }
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
      std::vector<std::string> parts;
      for (const auto& nb : g.neighbors(a)) {
        const int label = mobile[static_cast<std::size_t>(nb.bond)] ? 4 : g.bond(nb.bond).kekule;
        parts.push_back(std::to_string(label) + ":" + hex(ids[static_cast<std::size_t>(nb.atom)]));
      }
      std::sort(parts.begin(), parts.end());
      std::string env = "r" + std::to_string(r) + ":" + hex(ids[static_cast<std::size_t>(a)]) + "(";
      for (const auto& p : parts) env += p + ",";
      env += ")";
      next[static_cast<std::size_t>(a)] = fnv1a64(env);
      fp.set(fold(next[static_cast<std::size_t>(a)], nbits));
    }
    ids = std::move(next);
  }
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.width() != b.width()) fail(ErrorCode::WidthMismatch, "fingerprint widths differ");
  std::size_t both = 0, either = 0;
  for (std::size_t i = 0; i < a.words().size(); ++i) {
    both += static_cast<std::size_t>(std::popcount(a.words()[i] & b.words()[i]));
    either += static_cast<std::size_t>(std::popcount(a.words()[i] | b.words()[i]));
  }
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace jtk::mol
