#pragma once

#include <cstdint>
#include <vector>

#include "jtreekit/molgraph.hpp"

namespace jtk::mol {

// Hashed circular fingerprint: bit vector of `width` bits (a power of two).
class Fingerprint {
 public:
  Fingerprint(std::size_t width, int radius);

  std::size_t width() const noexcept { return width_; }
  int radius() const noexcept { return radius_; }
  bool test(std::size_t bit) const { return (words_.at(bit >> 6) >> (bit & 63)) & 1U; }
  void set(std::size_t bit) { words_.at(bit >> 6) |= std::uint64_t{1} << (bit & 63); }
  std::size_t count() const noexcept;
  const std::vector<std::uint64_t>& words() const noexcept { return words_; }

  bool operator==(const Fingerprint&) const = default;

 private:
  std::size_t width_;
  int radius_;
  std::vector<std::uint64_t> words_;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Each atom environment at radius 0..radius is hashed (FNV-1a over its
// canonical environment string) and folded onto `nbits`.
Fingerprint fingerprint(const MolGraph& g, int radius = 2, std::size_t nbits = 2048);

// |a & b| / |a | b|; 1.0 when both are empty. Throws WidthMismatch.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

}  // namespace jtk::mol
