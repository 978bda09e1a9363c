#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "jtreekit/evalkit.hpp"

using namespace jtk;
using namespace jtk::eval;
using nd::Matrix;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

std::string canon(const char* s) { return mol::canonical_smiles(mol::parse_smiles(s)); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double pair_distance(const Matrix& m, int a, int b) {
  double s = 0.0;
  for (int j = 0; j < m.cols; ++j) s += (m(a, j) - m(b, j)) * (m(a, j) - m(b, j));
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("evaluate: k identical molecules") {
  const std::vector<std::string> gen(5, "c1ccccc1O");
  const auto r = evaluate_smiles(gen, {});
  CHECK(r.valid_fraction == 1.0);
  CHECK(r.unique_fraction == doctest::Approx(0.2));
  CHECK(r.intdiv1 == 0.0);
  CHECK(r.intdiv2 == 0.0);
  CHECK(r.novelty_fraction == 1.0);
}

TEST_CASE("evaluate: novelty is zero when every sample is in the training set") {
  const std::vector<std::string> gen{"CCO", "OCC", "c1ccccc1", "CC(=O)O"};
  const std::set<std::string> train{canon("CCO"), canon("c1ccccc1"), canon("CC(=O)O"), canon("CCN")};
  const auto r = evaluate_smiles(gen, train);
  CHECK(r.novelty_fraction == 0.0);
  CHECK(r.unique_fraction == doctest::Approx(0.75));
}

TEST_CASE("evaluate: two-molecule IntDiv matches the closed form") {
  const auto a = mol::parse_smiles("CCOc1ccccc1");
  const auto b = mol::parse_smiles("CCNC(=O)C1CCCC1");
  const double tau = mol::tanimoto(mol::fingerprint(a), mol::fingerprint(b));
  REQUIRE(tau > 0.0);
  REQUIRE(tau < 1.0);
  const std::vector<std::optional<mol::MolGraph>> gen{a, b};
  const auto r = evaluate(gen, {});
  CHECK(std::abs(r.intdiv1 - (1.0 - (1.0 + tau) / 2.0)) <= 1e-9);
  CHECK(std::abs(r.intdiv2 - (1.0 - std::sqrt((2.0 + 2.0 * tau * tau) / 4.0))) <= 1e-9);
}

TEST_CASE("evaluate: invalid entries, fractions, ordering invariance") {
  const std::vector<std::string> gen{"CCO", "C(C)(C)(C)(C)C", "not a smiles", "c1ccccc1", "CCN", "CCO"};
  const auto r = evaluate_smiles(gen, {canon("CCN")});
  CHECK(r.n_requested == 6);
  CHECK(r.n_valid == 4);
  CHECK(r.valid_fraction == doctest::Approx(4.0 / 6.0));
  CHECK(r.unique_fraction == doctest::Approx(0.75));
  CHECK(r.novelty_fraction == doctest::Approx(2.0 / 3.0));
  CHECK(!r.records[1].valid);
  CHECK(!r.records[2].valid);
  CHECK(r.records[2].input == "not a smiles");
  for (double f : {r.valid_fraction, r.unique_fraction, r.novelty_fraction, r.intdiv1, r.intdiv2}) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
  std::vector<std::string> rev(gen.rbegin(), gen.rend());
  const auto q = evaluate_smiles(rev, {canon("CCN")});
  CHECK(q.intdiv1 == r.intdiv1);
  CHECK(q.intdiv2 == r.intdiv2);
  CHECK(q.unique_fraction == r.unique_fraction);
  CHECK(q.novelty_fraction == r.novelty_fraction);

  EvalOptions o;
  o.unique_at_k = 2;
  const auto k = evaluate_smiles(std::vector<std::string>{"CCO", "OCC", "CCN"}, {}, o);
  REQUIRE(k.unique_at_k);
  CHECK(*k.unique_at_k == doctest::Approx(0.5));
  CHECK(code_of([] { evaluate_smiles(std::vector<std::string>{}, {}); }) == ErrorCode::EmptySet);
}

TEST_CASE("evaluate: report files") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto r = evaluate_smiles(std::vector<std::string>{"CCO", "bad", "CC,O"}, {});
  write_report((dir / "jtk_report.tsv").string(), r);
  write_records_csv((dir / "jtk_records.csv").string(), r);
  const auto rep = slurp((dir / "jtk_report.tsv").string());
  CHECK(rep.find("valid\t0.3333333333\n") != std::string::npos);
  CHECK(rep.find("intdiv1\t0\n") != std::string::npos);
  const auto csv = slurp((dir / "jtk_records.csv").string());
  CHECK(csv.rfind("index,input,smiles,valid,W,logP,TPSA\n", 0) == 0);
  CHECK(csv.find("2,\"CC,O\",,0,,,") != std::string::npos);
  std::filesystem::remove(dir / "jtk_report.tsv");
  std::filesystem::remove(dir / "jtk_records.csv");
}

TEST_CASE("pca2d: planar data") {
  nd::Rng rng(4);
  const int d = 16;
  std::vector<double> u(d), v(d), off(d);
  for (auto* w : {&u, &v, &off}) {
    for (auto& e : *w) e = rng.normal();
  }
  Matrix x(60, d);
  for (int r = 0; r < 60; ++r) {
    const double a = 3.0 * rng.normal(), b = rng.normal();
    for (int j = 0; j < d; ++j) x(r, j) = off[static_cast<std::size_t>(j)] + a * u[static_cast<std::size_t>(j)] + b * v[static_cast<std::size_t>(j)];
  }
  const auto p = pca2d(x);
  CHECK(p.explained == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(!p.one_dimensional);
  double worst = 0.0;
  for (int a = 0; a < 60; ++a) {
    for (int b = a + 1; b < 60; ++b) worst = std::max(worst, std::abs(pair_distance(x, a, b) - pair_distance(p.coords, a, b)));
  }
  CHECK(worst < 1e-6);

  SUBCASE("duplicated dataset gives the same projection up to sign") {
    Matrix xx(120, d);
    std::copy(x.data.begin(), x.data.end(), xx.data.begin());
    std::copy(x.data.begin(), x.data.end(), xx.data.begin() + static_cast<std::ptrdiff_t>(x.size()));
    const auto q = pca2d(xx);
    for (int axis = 0; axis < 2; ++axis) {
      const double sign = q.coords(0, axis) * p.coords(0, axis) < 0 ? -1.0 : 1.0;
      for (int r = 0; r < 60; ++r) {
        CHECK(q.coords(r, axis) * sign == doctest::Approx(p.coords(r, axis)).epsilon(1e-8));
        CHECK(q.coords(r + 60, axis) * sign == doctest::Approx(p.coords(r, axis)).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("pca2d: isotropic Gaussian explains about 2/d") {
  nd::Rng rng(9);
  const int d = 20, n = 20000;
  Matrix x(n, d);
  for (double& e : x.data) e = rng.normal();
  const auto p = pca2d(x);
  // top two sample eigenvalues sit slightly above 1 for finite n
  CHECK(p.explained == doctest::Approx(2.0 / d).epsilon(0.1));
}

TEST_CASE("pca2d: degenerate inputs") {
  CHECK(code_of([] { pca2d(Matrix(2, 4)); }) == ErrorCode::DegenerateData);
  CHECK(code_of([] { pca2d(Matrix(5, 4, 1.0)); }) == ErrorCode::DegenerateData);
  Matrix line(5, 3);
  for (int r = 0; r < 5; ++r) line(r, 0) = r, line(r, 1) = 2 * r, line(r, 2) = -r;
  const auto p = pca2d(line);
  CHECK(p.one_dimensional);
  CHECK(p.explained == doctest::Approx(1.0));
  for (int r = 0; r < 5; ++r) CHECK(p.coords(r, 1) == 0.0);
  CHECK(pca2d(line, 3).coords.data == pca2d(line, 3).coords.data);
}

TEST_CASE("interpolate") {
  const std::vector<double> a{0.0, 2.0}, b{4.0, -2.0};
  const auto mid = interpolate(a, b, 1);
  REQUIRE(mid.rows == 1);
  CHECK(mid(0, 0) == doctest::Approx(2.0));
  CHECK(mid(0, 1) == doctest::Approx(0.0));
  const auto four = interpolate(a, b);
  REQUIRE(four.rows == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(four(i, 0) == doctest::Approx(4.0 * (i + 1) / 5.0));
    CHECK(four(i, 0) != a[0]);
    CHECK(four(i, 0) != b[0]);
  }
  CHECK(code_of([&] { interpolate(a, std::vector<double>{1.0}); }) == ErrorCode::WidthMismatch);
  CHECK(code_of([&] { interpolate(a, b, 0); }) == ErrorCode::BadRange);
}
