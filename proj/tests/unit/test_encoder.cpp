#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "jtreekit/encoder.hpp"
#include "jtreekit/molgraph.hpp"

using namespace jtk;
using namespace jtk::enc;

namespace {

EncoderConfig tiny_config(int hidden = 8, int heads = 2, int layers = 1) {
  EncoderConfig c;
  c.layers = layers;
  c.hidden = hidden;
  c.heads = heads;
  c.ffn = 2 * hidden;
  c.vocab_size = 9;
  return c;
}

// Star: node 0 is the centre, 1..3 the leaves.
EncoderInput star_input(const std::vector<int>& leaf_ids) {
  EncoderInput in;
  const int n = 1 + static_cast<int>(leaf_ids.size());
  in.features.id = {3};
  in.features.degree = {n - 1};
  in.features.hydrogens = {0};
  in.features.depth = {0};
  for (int id : leaf_ids) {
    in.features.id.push_back(id);
    in.features.degree.push_back(1);
    in.features.hydrogens.push_back(3);
    in.features.depth.push_back(1);
  }
  in.adjacency = nd::Matrix(n + 1, n + 1);
  for (int i = 1; i <= n; ++i) {
    in.adjacency(0, i) = in.adjacency(i, 0) = 1.0;
  }
  for (int i = 2; i <= n; ++i) in.adjacency(1, i) = in.adjacency(i, 1) = 1.0;
  return in;
}

EncoderInput path_input(int n) {
  EncoderInput in;
  for (int i = 0; i < n; ++i) {
    in.features.id.push_back(3 + i % 4);
    in.features.degree.push_back((i == 0 || i == n - 1) ? 1 : 2);
    in.features.hydrogens.push_back(i % 3);
    in.features.depth.push_back(i);
  }
  in.adjacency = nd::Matrix(n + 1, n + 1);
  for (int i = 1; i <= n; ++i) in.adjacency(0, i) = in.adjacency(i, 0) = 1.0;
  for (int i = 1; i < n; ++i) in.adjacency(i, i + 1) = in.adjacency(i + 1, i) = 1.0;
  return in;
}

double max_abs_diff(const nd::Matrix& a, const nd::Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace

TEST_CASE("identical node features give identical embedding rows") {
  nd::ParamStore store;
  nd::Rng rng(1);
  Encoder e(tiny_config(), store, rng);
  const auto in = star_input({4, 4, 5});
  nd::Tape t;
  const nd::Matrix& h = t.value(e.embed(t, in.features));
  CHECK(h.rows == 5);
  for (int j = 0; j < h.cols; ++j) CHECK(h(2, j) == h(3, j));
  bool differs = false;
  for (int j = 0; j < h.cols; ++j) differs = differs || h(2, j) != h(4, j);
  CHECK(differs);
}

TEST_CASE("zeroed embedding tables give an all-zero input matrix") {
  nd::ParamStore store;
  nd::Rng rng(1);
  Encoder e(tiny_config(), store, rng);
  for (const char* name : {"enc.jnode", "enc.emb.id", "enc.emb.degree", "enc.emb.hydrogens", "enc.emb.depth"}) {
    for (double& x : store.get(name).value.data) x = 0.0;
  }
  nd::Tape t;
  for (double x : t.value(e.embed(t, star_input({4, 5, 6}).features)).data) CHECK(x == 0.0);
}

TEST_CASE("a depth change alters only the depth component of that row") {
  nd::ParamStore store;
  nd::Rng rng(2);
  Encoder e(tiny_config(), store, rng);
  auto in = path_input(4);
  nd::Tape t1, t2;
  const nd::Matrix a = t1.value(e.embed(t1, in.features));
  in.features.depth[2] = 7;
  const nd::Matrix b = t2.value(e.embed(t2, in.features));
  const nd::Matrix& depth = store.get("enc.emb.depth").value;
  for (int r = 0; r < a.rows; ++r) {
    for (int j = 0; j < a.cols; ++j) {
      const double expected = r == 3 ? depth(7, j) - depth(2, j) : 0.0;
      CHECK(b(r, j) - a(r, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("features outside their tables are rejected") {
  nd::ParamStore store;
  nd::Rng rng(3);
  Encoder e(tiny_config(), store, rng);
  auto check = [&](EncoderInput in) {
    nd::Tape t;
    try {
      e.embed(t, in.features);
    } catch (const Error& err) {
      return err.code() == ErrorCode::FeatureOutOfRange;
    }
    return false;
  };
  auto in = path_input(3);
  in.features.degree[0] = 21;
  CHECK(check(in));
  in = path_input(3);
  in.features.hydrogens[1] = 51;
  CHECK(check(in));
  in = path_input(3);
  in.features.depth[2] = 51;
  CHECK(check(in));
  in = path_input(3);
  in.features.id[0] = 9;
  CHECK(check(in));
}

TEST_CASE("attention over equal rows yields equal rows") {
  nd::ParamStore store;
  nd::Rng rng(4);
  Encoder e(tiny_config(), store, rng);
  for (double& x : store.get("enc.l0.attn.edge_bias").value.data) x = 0.7;
  const auto in = path_input(4);
  nd::Tape t;
  nd::Matrix rows(5, 8);
  for (int r = 0; r < 5; ++r) {
    for (int j = 0; j < 8; ++j) rows(r, j) = 0.1 * j - 0.3;
  }
  const nd::Matrix& out = t.value(e.attn_block(t, t.constant(rows), in.adjacency, 0));
  for (int r = 1; r < 5; ++r) {
    for (int j = 0; j < 8; ++j) CHECK(out(r, j) == doctest::Approx(out(0, j)).epsilon(1e-14));
  }
}

TEST_CASE("a very negative non-edge bias recovers attention masked by adjacency") {
  nd::ParamStore store;
  nd::Rng rng(5);
  Encoder e(tiny_config(8, 1), store, rng);
  for (double& x : store.get("enc.l0.attn.absent_bias").value.data) x = -1e4;
  const auto in = path_input(4);
  nd::Rng xr(6);
  nd::Matrix h(5, 8);
  for (double& x : h.data) x = xr.normal();
  nd::Tape t;
  const nd::Matrix got = t.value(e.attn_block(t, t.constant(h), in.adjacency, 0));

  nd::Tape m;
  const auto hv = m.constant(h);
  const auto q = m.matmul(hv, m.param(store.get("enc.l0.attn.q.w")));
  const auto k = m.matmul(hv, m.param(store.get("enc.l0.attn.k.w")));
  const auto v = m.matmul(hv, m.param(store.get("enc.l0.attn.v.w")));
  std::vector<std::uint8_t> mask(in.adjacency.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = in.adjacency.data[i] != 0.0;
  const auto scores = m.scale(m.matmul_nt(q, k), 1.0 / std::sqrt(8.0));
  const nd::Matrix want = m.value(m.matmul(m.softmax_rows(scores, &mask), v));
  CHECK(max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("single-head attention on a three-node path matches a hand computation") {
  nd::ParamStore store;
  nd::Rng rng(7);
  Encoder e(tiny_config(2, 1), store, rng);
  store.get("enc.l0.attn.q.w").value = nd::Matrix::from_rows({{1.0, 0.5}, {-0.5, 1.0}});
  store.get("enc.l0.attn.k.w").value = nd::Matrix::from_rows({{0.2, 0.0}, {0.3, -1.0}});
  store.get("enc.l0.attn.v.w").value = nd::Matrix::from_rows({{1.0, 2.0}, {0.0, -1.0}});
  store.get("enc.l0.attn.edge_bias").value.data[0] = 0.25;
  store.get("enc.l0.attn.absent_bias").value.data[0] = -0.75;
  const auto in = path_input(3);
  const nd::Matrix h = nd::Matrix::from_rows({{0.1, 0.2}, {1.0, -1.0}, {0.5, 0.5}, {-0.3, 0.8}});
  nd::Tape t;
  const nd::Matrix got = t.value(e.attn_block(t, t.constant(h), in.adjacency, 0));

  // plain loops, no tape
  const double wq[2][2] = {{1.0, 0.5}, {-0.5, 1.0}};
  const double wk[2][2] = {{0.2, 0.0}, {0.3, -1.0}};
  const double wv[2][2] = {{1.0, 2.0}, {0.0, -1.0}};
  double q[4][2], k[4][2], v[4][2];
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 2; ++c) {
      q[r][c] = h(r, 0) * wq[0][c] + h(r, 1) * wq[1][c];
      k[r][c] = h(r, 0) * wk[0][c] + h(r, 1) * wk[1][c];
      v[r][c] = h(r, 0) * wv[0][c] + h(r, 1) * wv[1][c];
    }
  }
  const int adj[4][4] = {{0, 1, 1, 1}, {1, 0, 1, 0}, {1, 1, 0, 1}, {1, 0, 1, 0}};
  for (int r = 0; r < 4; ++r) {
    double s[4], z = 0.0;
    for (int c = 0; c < 4; ++c) {
      s[c] = std::exp((q[r][0] * k[c][0] + q[r][1] * k[c][1]) / std::sqrt(2.0) + (adj[r][c] ? 0.25 : -0.75));
      z += s[c];
    }
    for (int j = 0; j < 2; ++j) {
      double o = 0.0;
      for (int c = 0; c < 4; ++c) o += s[c] / z * v[c][j];
      CHECK(got(r, j) == doctest::Approx(o).epsilon(1e-6));
    }
  }
}

TEST_CASE("gcn normalization") {
  SUBCASE("single node reduces to gelu(HW)") {
    nd::ParamStore store;
    nd::Rng rng(8);
    Encoder e(tiny_config(4, 1), store, rng);
    const nd::Matrix a(1, 1);
    const nd::Matrix h = nd::Matrix::from_rows({{0.3, -0.2, 1.0, 0.5}});
    nd::Tape t;
    const nd::Matrix got = t.value(e.gcn_block(t, t.constant(h), a, 0));
    nd::Tape u;
    const nd::Matrix want = u.value(u.gelu(u.constant(nd::matmul(h, store.get("enc.l0.gcn.w").value))));
    CHECK(max_abs_diff(got, want) == 0.0);
  }
  SUBCASE("two connected equal rows stay equal") {
    nd::ParamStore store;
    nd::Rng rng(9);
    Encoder e(tiny_config(4, 1), store, rng);
    const nd::Matrix a = nd::Matrix::from_rows({{0, 1}, {1, 0}});
    const nd::Matrix h = nd::Matrix::from_rows({{0.3, -0.2, 1.0, 0.5}, {0.3, -0.2, 1.0, 0.5}});
    nd::Tape t;
    const nd::Matrix got = t.value(e.gcn_block(t, t.constant(h), a, 0));
    for (int j = 0; j < 4; ++j) CHECK(got(0, j) == got(1, j));
  }
  SUBCASE("four-node star coefficients") {
    const nd::Matrix a = nd::Matrix::from_rows({{0, 1, 1, 1}, {1, 0, 0, 0}, {1, 0, 0, 0}, {1, 0, 0, 0}});
    const nd::Matrix p = gcn_propagation(a);
    CHECK(p(0, 0) == doctest::Approx(1.0 / 4.0));
    for (int i = 1; i < 4; ++i) {
      CHECK(p(0, i) == doctest::Approx(1.0 / std::sqrt(4.0 * 2.0)));
      CHECK(p(i, 0) == doctest::Approx(1.0 / std::sqrt(4.0 * 2.0)));
      CHECK(p(i, i) == doctest::Approx(0.5));
      for (int j = 1; j < 4; ++j) {
        if (j != i) CHECK(p(i, j) == 0.0);
      }
    }
  }
}

TEST_CASE("zero layers returns the embedded [JNode] row") {
  nd::ParamStore store;
  nd::Rng rng(10);
  Encoder e(tiny_config(8, 2, 0), store, rng);
  const nd::Matrix z = e.latent(path_input(3));
  CHECK(z == store.get("enc.jnode").value);
}

TEST_CASE("permuting sibling rows leaves the readout unchanged") {
  nd::ParamStore store;
  nd::Rng rng(11);
  Encoder e(tiny_config(8, 2, 2), store, rng);
  const nd::Matrix a = e.latent(star_input({4, 5, 6}));
  const nd::Matrix b = e.latent(star_input({6, 4, 5}));
  const nd::Matrix c = e.latent(star_input({5, 6, 4}));
  CHECK(max_abs_diff(a, b) < 1e-12);
  CHECK(max_abs_diff(a, c) < 1e-12);
  const nd::Matrix d = e.latent(star_input({4, 5, 7}));
  CHECK(max_abs_diff(a, d) > 1e-6);
}

TEST_CASE("encoder layer passes a gradient check on a five-node tree") {
  nd::ParamStore store;
  nd::Rng rng(12);
  Encoder e(tiny_config(8, 2, 1), store, rng);
  for (nd::Param* p : store.all()) {
    if (p->name.find("bias") != std::string::npos || p->name.find(".b") != std::string::npos) {
      for (double& x : p->value.data) x = 0.1 * rng.normal();
    }
  }
  const auto in = star_input({4, 5, 6, 7});
  nd::Rng tr(13);
  nd::Matrix target(1, 8);
  for (double& x : target.data) x = tr.normal();
  const double err = nd::grad_check(
      [&](nd::Tape& t) {
        nd::Var h = e.embed(t, in.features);
        h = e.layer(t, h, in.adjacency, 0);
        return t.sum(t.mul(h, t.constant(nd::Matrix(6, 8, 0.5))));
      },
      store, 1e-4, 256, 3);
  CHECK(err <= 1e-4);
  const double err_full = nd::grad_check(
      [&](nd::Tape& t) { return t.mse(e.encode(t, in), target); }, store, 1e-4, 256, 4);
  CHECK(err_full <= 1e-4);
}

TEST_CASE("encoder input from a molecule") {
  const auto g = mol::parse_smiles("CC(=O)Nc1ccc(O)cc1");
  const auto tree = jt::decompose(g);
  const auto vocab = jt::build_vocab(std::vector<mol::MolGraph>{g});
  const auto in = encoder_input(tree, vocab);
  const int n = static_cast<int>(tree.size());
  CHECK(static_cast<int>(in.features.size()) == n);
  CHECK(in.adjacency.rows == n + 1);
  double edges = 0.0;
  for (int i = 1; i <= n; ++i) {
    CHECK(in.adjacency(0, i) == 1.0);
    CHECK(in.adjacency(i, i) == 0.0);
    for (int j = 1; j <= n; ++j) {
      CHECK(in.adjacency(i, j) == in.adjacency(j, i));
      edges += in.adjacency(i, j);
    }
  }
  CHECK(edges == 2.0 * (n - 1));
  CHECK(in.features.depth[0] == 0);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 1; j <= n; ++j) deg += in.adjacency(i + 1, j);
    CHECK(in.features.degree[static_cast<std::size_t>(i)] == static_cast<int>(deg));
  }
}

TEST_CASE("encoding is deterministic for a fixed seed") {
  nd::ParamStore s1, s2;
  nd::Rng r1(99), r2(99);
  Encoder a(tiny_config(8, 2, 2), s1, r1);
  Encoder b(tiny_config(8, 2, 2), s2, r2);
  const auto in = path_input(5);
  CHECK(a.latent(in) == b.latent(in));
  for (double x : a.latent(in).data) CHECK(std::isfinite(x));
}
