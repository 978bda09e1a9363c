#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "jtreekit/dataset.hpp"
#include "jtreekit/jtree.hpp"

using namespace jtk;
using namespace jtk::jt;
using jtk::mol::parse_smiles;

namespace {
std::vector<std::string> corpus(const char* name) { return mol::read_smiles_file(std::string(JTK_TEST_DATA) + "/" + name); }
}  // namespace

TEST_CASE("decompose: small examples") {
  const auto ethane = decompose(parse_smiles("CC"));
  REQUIRE(ethane.size() == 1);
  CHECK(ethane.nodes[0].kind == JunctionKind::Bond);
  CHECK(ethane.edges.empty());

  const auto bz = decompose(parse_smiles("c1ccccc1"));
  REQUIRE(bz.size() == 1);
  CHECK(bz.nodes[0].kind == JunctionKind::Ring);
  CHECK(bz.nodes[0].fragment.num_atoms() == 6);

  const auto propane = decompose(parse_smiles("CCC"));
  REQUIRE(propane.size() == 2);
  REQUIRE(propane.edges.size() == 1);
  REQUIRE(propane.edges[0].shared.size() == 1);
  const int mid = propane.edges[0].shared[0];
  CHECK(parse_smiles("CCC").degree(mid) == 2);

  const auto methane = decompose(parse_smiles("C"));
  REQUIRE(methane.size() == 1);
  CHECK(methane.nodes[0].kind == JunctionKind::Singleton);
}

TEST_CASE("decompose: branching atom gets a singleton") {
  const auto g = parse_smiles("CC(C)C");
  const auto jt = decompose(g);
  CHECK(jt.size() == 4);
  CHECK(std::count_if(jt.nodes.begin(), jt.nodes.end(), [](const Junction& j) { return j.kind == JunctionKind::Singleton; }) == 1);
  CHECK(jt.edges.size() == 3);
  CHECK(tree_cover_check(jt, g).empty());
}

TEST_CASE("decompose: fused and bridged rings") {
  const auto nap = decompose(parse_smiles("c1ccc2ccccc2c1"));
  REQUIRE(nap.size() == 2);
  REQUIRE(nap.edges.size() == 1);
  CHECK(nap.edges[0].shared.size() == 2);
  // norbornane: two 5-rings share 3 atoms and merge into one bridged junction
  const auto nb = decompose(parse_smiles("C1CC2CCC1C2"));
  REQUIRE(nb.size() == 1);
  CHECK(nb.nodes[0].kind == JunctionKind::Ring);
  CHECK(nb.nodes[0].fragment.num_atoms() == 7);
}

TEST_CASE("tree_cover_check: detects a deleted node") {
  const auto g = parse_smiles("CCC");
  auto jt = decompose(g);
  CHECK(tree_cover_check(jt, g).empty());
  jt.nodes.erase(jt.nodes.begin());
  jt.edges.clear();
  const auto defects = tree_cover_check(jt, g);
  CHECK(std::any_of(defects.begin(), defects.end(), [](const TreeDefect& d) { return d.kind == TreeDefect::Kind::UncoveredAtom; }));
}

TEST_CASE("decompose: corpus sweep covers, is a tree and is relabel invariant") {
  auto smiles = corpus("moses_sample.smi");
  const auto qm9 = corpus("qm9_like.smi");
  smiles.resize(600);
  smiles.insert(smiles.end(), qm9.begin(), qm9.begin() + 400);
  std::mt19937 rng(3);
  int ok = 0;
  for (std::size_t i = 0; i < smiles.size(); ++i) {
    const auto g = parse_smiles(smiles[i]);
    const auto jt = decompose(g);
    const bool clean = tree_cover_check(jt, g).empty();
    CHECK_MESSAGE(clean, smiles[i]);
    ok += clean;
    // each bond lies in one junction, except bonds shared by fused rings
    for (int b = 0; b < static_cast<int>(g.num_bonds()); ++b) {
      int holders = 0, ring_holders = 0;
      for (const auto& node : jt.nodes) {
        const auto& am = node.atom_map;
        if (am.size() < 2) continue;
        const bool has = std::find(am.begin(), am.end(), g.bond(b).a) != am.end() &&
                         std::find(am.begin(), am.end(), g.bond(b).b) != am.end();
        holders += has;
        ring_holders += has && node.kind == JunctionKind::Ring;
      }
      CHECK((holders == 1 || holders == ring_holders));
    }
    for (const auto& node : jt.nodes) {
      // fragment keys parse back to the same Kekulé fragment
      CHECK(mol::kekule_smiles(mol::parse_kekule_smiles(node.key)) == node.key);
    }
    if (i % 10 == 0) {
      std::vector<int> perm(g.num_atoms());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      CHECK(tree_signature(decompose(g.permuted(perm))) == tree_signature(jt));
    }
  }
  CHECK(ok == 1000);
}

TEST_CASE("vocabulary: construction, ids and file round trip") {
  const std::vector<mol::MolGraph> ethane{parse_smiles("CC")};
  const auto v1 = build_vocab(ethane);
  CHECK(v1.size() == 4);
  CHECK(v1.num_fragments() == 1);
  CHECK(v1.token(Vocabulary::kJNode) == "[JNode]");
  CHECK(v1.token(Vocabulary::kEOS) == "[EOS]");
  CHECK(v1.token(Vocabulary::kPad) == "[PAD]");

  const std::vector<mol::MolGraph> bt{parse_smiles("c1ccccc1"), parse_smiles("Cc1ccccc1")};
  const auto v2 = build_vocab(bt);
  REQUIRE(v2.num_fragments() == 2);
  CHECK(v2.find(mol::kekule_smiles(parse_smiles("CC"))).has_value());
  CHECK(v2.count(v2.id(mol::kekule_smiles(parse_smiles("C1=CC=CC=C1")))) == 2);

  const std::vector<mol::MolGraph> empty;
  CHECK_THROWS_AS(build_vocab(empty), Error);

  std::vector<mol::MolGraph> data;
  for (const auto& s : corpus("fixture10.smi")) data.push_back(parse_smiles(s));
  const auto v = build_vocab(data);
  std::vector<mol::MolGraph> rev(data.rbegin(), data.rend());
  CHECK(build_vocab(rev) == v);
  const std::string path = "/tmp/jtk_vocab_test.tsv";
  v.save(path);
  CHECK(Vocabulary::load(path) == v);
  CHECK_THROWS_AS(v.id("C1CCCCCCCCCCCCC1"), Error);
}
