#include <fstream>
#include <sstream>

#include "jtreekit/jtree.hpp"

namespace jtk::jt {

namespace {
constexpr const char* kReservedTokens[Vocabulary::kReserved] = {"[JNode]", "[EOS]", "[PAD]"};
}

Vocabulary::Vocabulary() {
  for (int i = 0; i < kReserved; ++i) {
    tokens_.emplace_back(kReservedTokens[i]);
    counts_.push_back(0);
    junctions_.emplace_back();
    index_[tokens_.back()] = i;
  }
}

Vocabulary Vocabulary::from_counts(const std::map<std::string, std::uint64_t>& counts) {
  Vocabulary v;
  for (const auto& [key, count] : counts) {
    if (v.index_.count(key)) fail(ErrorCode::Format, "fragment collides with a reserved token: " + key);
    v.index_[key] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(key);
    v.counts_.push_back(count);
    v.junctions_.push_back(make_junction(mol::parse_kekule_smiles(key)));
    if (v.junctions_.back().key != key) fail(ErrorCode::Format, "fragment key is not canonical: " + key);
  }
  return v;
}

std::optional<int> Vocabulary::find(const std::string& key) const {
  const auto it = index_.find(key);
  if (it == index_.end() || it->second < kReserved) return std::nullopt;
  return it->second;
}

int Vocabulary::id(const std::string& key) const {
  const auto f = find(key);
  if (!f) fail(ErrorCode::UnknownJunctionId, "fragment not in vocabulary: " + key);
  return *f;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) fail(ErrorCode::UnknownJunctionId, "junction id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocabulary::count(int id) const {
  token(id);
  return counts_[static_cast<std::size_t>(id)];
}

const Junction& Vocabulary::junction(int id) const {
  if (id < kReserved || id >= size()) fail(ErrorCode::UnknownJunctionId, "not a fragment id: " + std::to_string(id));
  return junctions_[static_cast<std::size_t>(id)];
}

const mol::MolGraph& Vocabulary::fragment(int id) const { return junction(id).fragment; }

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  for (int i = 0; i < size(); ++i) out << i << '\t' << tokens_[static_cast<std::size_t>(i)] << '\t' << counts_[static_cast<std::size_t>(i)] << '\n';
  if (!out) fail(ErrorCode::Io, "write failed: " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingArtifact, "cannot open vocabulary " + path);
  std::map<std::string, std::uint64_t> counts;
  std::string line;
  int expect = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, token, count;
    if (!std::getline(ss, id, '\t') || !std::getline(ss, token, '\t') || !std::getline(ss, count)) {
      fail(ErrorCode::Format, "vocabulary line must be id<TAB>fragment<TAB>count: " + line);
    }
    if (id != std::to_string(expect)) fail(ErrorCode::Format, "vocabulary ids must be consecutive from 0");
    if (expect < kReserved) {
      if (token != kReservedTokens[expect]) fail(ErrorCode::Format, "reserved token mismatch at id " + id);
    } else {
      if (!counts.empty() && token <= counts.rbegin()->first) fail(ErrorCode::Format, "vocabulary entries must be sorted");
      try {
        counts[token] = std::stoull(count);
      } catch (const std::exception&) {
        fail(ErrorCode::Format, "bad count in vocabulary line: " + line);
      }
    }
    ++expect;
  }
  if (expect < kReserved) fail(ErrorCode::Format, "vocabulary is missing reserved tokens");
  return from_counts(counts);
}

Vocabulary build_vocab(std::span<const mol::MolGraph> dataset) {
  if (dataset.empty()) fail(ErrorCode::EmptyDataset, "cannot build a vocabulary from an empty dataset");
  std::map<std::string, std::uint64_t> counts;
  for (const auto& g : dataset) {
    for (const auto& node : decompose(g).nodes) ++counts[node.key];
  }
  return Vocabulary::from_counts(counts);
}

}  // namespace jtk::jt
