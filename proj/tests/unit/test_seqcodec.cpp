#include <random>

#include "doctest.h"
#include "jtreekit/dataset.hpp"
#include "jtreekit/seqcodec.hpp"

using namespace jtk;
using namespace jtk::seq;
using jt::Vocabulary;

namespace {

Vocabulary small_vocab() {
  std::map<std::string, std::uint64_t> counts;
  for (const char* smi : {"C", "c1ccccc1", "CC", "CO", "C=O"}) counts[mol::kekule_smiles(mol::parse_smiles(smi))] = 1;
  return Vocabulary::from_counts(counts);
}

jt::JunctionTree tree_from(const Vocabulary& v, const std::vector<int>& ids, const std::vector<int>& fathers) {
  jt::JunctionTree t;
  for (int id : ids) t.nodes.push_back(v.junction(id));
  for (std::size_t i = 1; i < fathers.size(); ++i) t.edges.push_back({fathers[i], static_cast<int>(i), {}});
  return t;
}

ErrorCode decode_error(const TokenSeq& s, const Vocabulary& v) {
  try {
    decode(s, v);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_CASE("bfs_order: single node, path, star") {
  const auto v = small_vocab();
  const int c = v.id("C"), cc = v.id("CC"), co = v.id("CO"), cdo = v.id("C=O");
  const auto one = bfs_order(tree_from(v, {c}, {-1}));
  CHECK(one.order == std::vector<int>{0});

  const auto path = bfs_order(tree_from(v, {cc, cc, cc}, {-1, 0, 1}));
  CHECK(path.order == std::vector<int>{0, 1, 2});
  CHECK(path.father == std::vector<int>{-1, 0, 1});

  // star: children listed out of key order come back sorted by key
  const auto star = tree_from(v, {c, co, cc, cdo}, {-1, 0, 0, 0});
  const auto p = bfs_order(star);
  CHECK(p.order == std::vector<int>{0, 3, 2, 1});  // "C=O" < "CC" < "CO"
}

TEST_CASE("encode: cases for path and star") {
  const auto v = small_vocab();
  const int cc = v.id("CC"), c = v.id("C");
  const auto path = encode(tree_from(v, {cc, cc, cc}, {-1, 0, 1}), v);
  REQUIRE(path.items.size() == 4);
  CHECK(path.items[0].pos == 0);
  CHECK(path.items[1].pos == 0);
  CHECK(path.items[2].pos == 0);
  CHECK(path.items[3].id == Vocabulary::kEOS);

  const auto star = encode(tree_from(v, {c, cc, cc, cc}, {-1, 0, 0, 0}), v);
  REQUIRE(star.items.size() == 5);
  CHECK(star.items[0].pos == 0);
  CHECK(star.items[1].pos == 0);
  CHECK(star.items[2].pos == 1);
  CHECK(star.items[3].pos == 1);

  const auto single = encode(tree_from(v, {c}, {-1}), v);
  REQUIRE(single.items.size() == 2);
  CHECK(single.items[0] == Token{c, 0});
  CHECK(single.items[1].id == Vocabulary::kEOS);
}

TEST_CASE("decode: case table and errors") {
  const auto v = small_vocab();
  const int r = v.id("C"), a = v.id("CC"), b = v.id("CO");
  const auto t = decode(TokenSeq{{{r, 0}, {a, 0}, {b, 1}, {Vocabulary::kEOS, 0}}}, v);
  REQUIRE(t.size() == 3);
  REQUIRE(t.edges.size() == 2);
  CHECK(t.edges[0].a == 0);
  CHECK(t.edges[1].a == 0);

  CHECK(decode(TokenSeq{{{r, 0}, {Vocabulary::kEOS, 0}}}, v).size() == 1);
  CHECK(decode_error(TokenSeq{{{r, 0}, {a, 0}, {b, 3}, {Vocabulary::kEOS, 0}}}, v) == ErrorCode::DanglingPosition);
  CHECK(decode_error(TokenSeq{{{r, 0}, {a, 0}}}, v) == ErrorCode::MissingEOS);
  CHECK(decode_error(TokenSeq{{{r, 0}, {999, 0}, {Vocabulary::kEOS, 0}}}, v) == ErrorCode::UnknownJunctionId);
  CHECK(decode_error(TokenSeq{{{r, 0}, {a, 2}, {Vocabulary::kEOS, 0}}}, v) == ErrorCode::DanglingPosition);
}

TEST_CASE("advance beyond the alphabet is unencodable; extended alphabet handles it") {
  const auto v = small_vocab();
  const int cc = v.id("CC");
  // root with children 1..4; child 1 has child 5, child 4 has child 6 -> advance 3
  const auto t = tree_from(v, {cc, cc, cc, cc, cc, cc, cc}, {-1, 0, 0, 0, 0, 1, 4});
  CHECK_THROWS_AS(encode(t, v), Error);
  const std::vector<jt::JunctionTree> ts{t};
  const auto cov = alphabet_coverage(ts);
  CHECK(cov.fraction == 0.0);
  CHECK(cov.max_advance == 3);
  const auto s = encode(t, v, 5);
  CHECK(s.items[6].pos == 4);
  CHECK(jt::tree_signature(decode(s, v)) == jt::tree_signature(t));
}

TEST_CASE("round trip on random trees and prediction count") {
  std::vector<mol::MolGraph> data;
  for (const auto& s : mol::read_smiles_file(std::string(JTK_TEST_DATA) + "/fixture32.smi")) data.push_back(mol::parse_smiles(s));
  const auto v = jt::build_vocab(data);
  std::mt19937 rng(5);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 30);
    std::vector<int> ids, fathers{-1};
    for (int i = 0; i < n; ++i) ids.push_back(Vocabulary::kReserved + static_cast<int>(rng() % static_cast<unsigned>(v.num_fragments())));
    for (int i = 1; i < n; ++i) fathers.push_back(static_cast<int>(rng() % static_cast<unsigned>(i)));
    const auto t = tree_from(v, ids, fathers);
    const std::vector<jt::JunctionTree> one{t};
    if (alphabet_coverage(one).fraction < 1.0) continue;
    const auto s = encode(t, v);
    const auto back = decode(s, v);
    const auto p = bfs_order(t);
    REQUIRE(back.size() == t.size());
    for (std::size_t k = 0; k < p.order.size(); ++k) CHECK(back.nodes[k].key == t.nodes[static_cast<std::size_t>(p.order[k])].key);
    CHECK(decode_fathers(std::span(s.items.data(), s.items.size() - 1)) == p.father);
    CHECK(encode(back, v) == s);
    // N junction predictions + (N-1) position predictions
    CHECK(s.num_nodes() + (s.num_nodes() - 1) == 2 * t.size() - 1);
    for (std::size_t k = 1; k < p.father.size(); ++k) CHECK(p.father[k] >= p.father[k - 1]);
    ++checked;
  }
  CHECK(checked > 500);
}

TEST_CASE("corpus trees round trip exactly") {
  std::vector<mol::MolGraph> data;
  for (const auto& s : mol::read_smiles_file(std::string(JTK_TEST_DATA) + "/qm9_like.smi")) data.push_back(mol::parse_smiles(s));
  const auto v = jt::build_vocab(data);
  std::vector<jt::JunctionTree> trees;
  for (const auto& g : data) trees.push_back(jt::decompose(g));
  const auto cov = alphabet_coverage(trees);
  MESSAGE("qm9-like coverage " << cov.fraction << " max advance " << cov.max_advance);
  CHECK(cov.fraction >= 0.99);
  for (const auto& t : trees) {
    const std::vector<jt::JunctionTree> one{t};
    if (alphabet_coverage(one).fraction < 1.0) continue;
    const auto s = encode(t, v);
    CHECK(jt::tree_signature(decode(s, v)) == jt::tree_signature(t));
  }
}

TEST_CASE("dump format") {
  const TokenSeq s{{{5, 0}, {7, 0}, {9, 1}, {Vocabulary::kEOS, 0}}};
  CHECK(dump(s) == "5:0\n7:0\n9:1\nEOS\n");
  CHECK(parse_dump(dump(s)) == s);
  CHECK(feasible_cases(std::vector<int>{}) == std::vector<bool>{true, false, false, false});
  CHECK(feasible_cases(std::vector<int>{-1}) == std::vector<bool>{true, false, false, false});
  CHECK(feasible_cases(std::vector<int>{-1, 0}) == std::vector<bool>{true, true, true, false});
}
