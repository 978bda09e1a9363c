#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "jtreekit/latentdiff.hpp"

using namespace jtk;
using namespace jtk::diff;
using nd::Matrix;

namespace {

Matrix random_matrix(int r, int c, nd::Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& x : m.data) x = scale * rng.normal();
  return m;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

const std::array<std::array<double, 2>, 4> kMeans{{{2.0, 2.0}, {-2.0, 2.0}, {-2.0, -2.0}, {2.0, -2.0}}};

Matrix four_gaussians(int n, std::uint64_t seed) {
  nd::Rng rng(seed);
  Matrix m(n, 2);
  for (int r = 0; r < n; ++r) {
    const auto& mu = kMeans[static_cast<std::size_t>(r % 4)];
    m(r, 0) = mu[0] + 0.3 * rng.normal();
    m(r, 1) = mu[1] + 0.3 * rng.normal();
  }
  return m;
}

DiffusionConfig toy_config(int hidden, int depth) {
  DiffusionConfig cfg;
  cfg.net.width = 2;
  cfg.net.hidden = hidden;
  cfg.net.depth = depth;
  return cfg;
}

const Diffusion& trained_toy() {
  static const Diffusion model = [] {
    Diffusion d(toy_config(32, 6), 7);
    DiffusionTrainConfig tc;
    tc.loss = NoiseLoss::Mse;
    tc.epochs = 600;
    tc.batch = 128;
    tc.lr = {3e-3, 50, 2e-4};
    tc.seed = 3;
    d.train(four_gaussians(4000, 11), tc);
    return d;
  }();
  return model;
}

// Per component |sample mean - true mean|, samples assigned to the nearest true mean.
std::array<double, 4> component_errors(const Matrix& s) {
  std::array<std::array<double, 2>, 4> sum{};
  std::array<int, 4> count{};
  for (int r = 0; r < s.rows; ++r) {
    std::size_t best = 0;
    double bd = 1e300;
    for (std::size_t k = 0; k < 4; ++k) {
      const double d = std::hypot(s(r, 0) - kMeans[k][0], s(r, 1) - kMeans[k][1]);
      if (d < bd) bd = d, best = k;
    }
    sum[best][0] += s(r, 0);
    sum[best][1] += s(r, 1);
    ++count[best];
  }
  std::array<double, 4> err{};
  for (std::size_t k = 0; k < 4; ++k) {
    err[k] = count[k] == 0 ? 1e300 : std::hypot(sum[k][0] / count[k] - kMeans[k][0], sum[k][1] / count[k] - kMeans[k][1]);
  }
  return err;
}

double recovery_error(const Matrix& s) {
  const auto e = component_errors(s);
  return (e[0] + e[1] + e[2] + e[3]) / 4.0;
}

// Exact posterior-mean noise predictor for the standardized mixture. Each coordinate is an
// equal-weight two-component mixture at +-mu with spread sd, independent across coordinates.
struct MixtureOracle {
  const Schedule& s;
  double mu = 2.0 / std::sqrt(4.09);
  double sd = 0.3 / std::sqrt(4.09);

  Matrix predict(const Matrix& h, int t) const {
    const double a = s.alpha_bar[static_cast<std::size_t>(t)];
    const double var_h = a * sd * sd + (1.0 - a);
    const double pv = 1.0 / (1.0 / (sd * sd) + a / (1.0 - a));
    Matrix eps(h.rows, h.cols);
    for (std::size_t i = 0; i < h.size(); ++i) {
      const double x = h.data[i];
      double wsum = 0.0, msum = 0.0;
      for (double c : {mu, -mu}) {
        const double z = (x - std::sqrt(a) * c) / std::sqrt(var_h);
        const double w = std::exp(-0.5 * z * z);
        wsum += w;
        msum += w * pv * (c / (sd * sd) + std::sqrt(a) * x / (1.0 - a));
      }
      const double x0 = wsum > 0.0 ? msum / wsum : 0.0;
      eps.data[i] = (x - std::sqrt(a) * x0) / std::sqrt(1.0 - a);
    }
    return eps;
  }

  Matrix run_ddim(int n, int steps, double eta, std::uint64_t seed) const {
    nd::Rng rng(seed);
    Matrix h = random_matrix(n, 2, rng);
    const auto times = step_times(s.T, steps);
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
      const Matrix noise = random_matrix(n, 2, rng);
      h = ddim_step(s, h, predict(h, times[k]), times[k], times[k + 1], eta, &noise);
    }
    for (double& x : h.data) x *= std::sqrt(4.09);
    return h;
  }

  Matrix run_ancestral(int n, std::uint64_t seed) const {
    nd::Rng rng(seed);
    Matrix h = random_matrix(n, 2, rng);
    for (int t = s.T; t >= 1; --t) h = ancestral_step(s, h, predict(h, t), t, random_matrix(n, 2, rng));
    for (double& x : h.data) x *= std::sqrt(4.09);
    return h;
  }
};

}  // namespace

TEST_CASE("schedule: eta 0 gives zero sigma everywhere") {
  const auto s = make_schedule();
  for (int t = 1; t <= s.T; ++t) CHECK(s.sigma(t, t - 1, 0.0) == 0.0);
}

TEST_CASE("schedule: T=2 by hand") {
  const auto s = make_schedule(2, 0.1, 0.3);
  CHECK(s.alpha_bar[0] == 1.0);
  CHECK(s.alpha_bar[1] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(s.alpha_bar[2] == doctest::Approx(0.9 * 0.7).epsilon(1e-15));
  CHECK(code_of([] { make_schedule(1); }) == ErrorCode::BadRange);
  CHECK(code_of([] { make_schedule(10, 0.0, 0.02); }) == ErrorCode::BadRange);
}

TEST_CASE("schedule: alpha_bar strictly decreasing and betas in range") {
  const auto s = make_schedule();
  for (int t = 1; t <= s.T; ++t) {
    CHECK(s.beta[static_cast<std::size_t>(t)] > 0.0);
    CHECK(s.beta[static_cast<std::size_t>(t)] < 1.0);
    CHECK(s.alpha_bar[static_cast<std::size_t>(t)] < s.alpha_bar[static_cast<std::size_t>(t - 1)]);
  }
}

TEST_CASE("schedule: eta 1 sigma squared equals the posterior variance") {
  const auto s = make_schedule();
  double worst = 0.0;
  for (int t = 1; t <= s.T; ++t) {
    const double sig = s.sigma(t, t - 1, 1.0);
    const double pv = s.posterior_variance(t);
    worst = std::max(worst, std::abs(sig * sig - pv) / std::max(pv, 1e-300));
    if (t == 1) CHECK(pv == 0.0);
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("q_sample cases") {
  const auto s = make_schedule();
  nd::Rng rng(1);
  const Matrix h0 = random_matrix(3, 4, rng);
  const Matrix eps = random_matrix(3, 4, rng);
  const Matrix same = q_sample(s, h0, 0, eps);
  for (std::size_t i = 0; i < h0.size(); ++i) CHECK(same.data[i] == h0.data[i]);
  const Matrix scaled = q_sample(s, h0, 400, Matrix(3, 4));
  for (std::size_t i = 0; i < h0.size(); ++i) CHECK(scaled.data[i] == doctest::Approx(std::sqrt(s.alpha_bar[400]) * h0.data[i]));
  CHECK(code_of([&] { q_sample(s, h0, 1, Matrix(2, 4)); }) == ErrorCode::ShapeMismatch);

  SUBCASE("Monte Carlo variance") {
    for (int t : {10, 300, 1000}) {
      const Matrix ht = q_sample(s, Matrix(10000, 1), t, random_matrix(10000, 1, rng));
      double m = 0.0, v = 0.0;
      for (double x : ht.data) m += x;
      m /= 10000.0;
      for (double x : ht.data) v += (x - m) * (x - m);
      v /= 10000.0;
      const double want = 1.0 - s.alpha_bar[static_cast<std::size_t>(t)];
      CHECK(std::abs(v - want) / want < 0.05);
    }
  }
}

TEST_CASE("step_times evenly spaced from T to 0") {
  CHECK(step_times(1000, 4) == std::vector<int>{1000, 750, 500, 250, 0});
  CHECK(step_times(10, 3) == std::vector<int>{10, 6, 3, 0});
  CHECK(step_times(5, 5) == std::vector<int>{5, 4, 3, 2, 1, 0});
  CHECK(code_of([] { step_times(10, 11); }) == ErrorCode::BadRange);
  CHECK(code_of([] { step_times(10, 0); }) == ErrorCode::BadRange);
}

TEST_CASE("skipnet: zero weights, time sensitivity, gradients") {
  nd::ParamStore store;
  nd::Rng rng(5);
  SkipNetConfig cfg{3, 8, 2};
  SkipNet net(cfg, store, rng);
  const Matrix h = random_matrix(4, 3, rng);
  const std::vector<int> t1{1, 50, 500, 1000};
  const std::vector<int> t2{2, 51, 501, 999};

  SUBCASE("time embedding is live") {
    const Matrix a = net.predict(h, t1);
    const Matrix b = net.predict(h, t2);
    for (int r = 0; r < 4; ++r) {
      double diff = 0.0;
      for (int j = 0; j < 3; ++j) diff += std::abs(a(r, j) - b(r, j));
      CHECK(diff > 1e-6);
    }
    CHECK(code_of([&] { net.predict(h, std::vector<int>{1, 2}); }) == ErrorCode::ShapeMismatch);
  }
  SUBCASE("gradient check") {
    const Matrix target = random_matrix(4, 3, rng);
    const double err = nd::grad_check([&](nd::Tape& t) { return t.mse(net.forward(t, t.constant(h), t1), target); }, store);
    CHECK(err <= 1e-4);
  }
  SUBCASE("zero weights") {
    for (nd::Param* p : store.all()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
    const Matrix out = net.predict(h, t1);
    for (double x : out.data) CHECK(x == 0.0);
  }
}

TEST_CASE("skipnet: parameter names and layer pairing") {
  nd::ParamStore store;
  nd::Rng rng(1);
  SkipNet net({5, 16, 6}, store, rng);
  CHECK(store.get("diff.net.in.w").value.rows == 5);
  CHECK(store.get("diff.net.down6.w").value.rows == 16);
  CHECK(store.get("diff.net.up1.w").value.rows == 32);
  CHECK(store.get("diff.net.out.w").value.cols == 5);
  CHECK(code_of([&] { store.get("diff.net.down7.w"); }) == ErrorCode::MissingArtifact);
}

TEST_CASE("ddim_step closed forms") {
  const auto s = make_schedule();
  nd::Rng rng(9);
  const Matrix h = random_matrix(3, 2, rng);
  const Matrix zero(3, 2);

  SUBCASE("zero prediction is a pure rescale") {
    const Matrix out = ddim_step(s, h, zero, 700, 300, 0.0);
    const double c = std::sqrt(s.alpha_bar[300] / s.alpha_bar[700]);
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(out.data[i] == doctest::Approx(c * h.data[i]).epsilon(1e-12));
  }
  SUBCASE("equal alpha_bar is the identity") {
    Schedule flat = s;
    flat.alpha_bar[5] = flat.alpha_bar[6];
    const Matrix out = ddim_step(flat, h, zero, 6, 5, 0.0);
    for (std::size_t i = 0; i < h.size(); ++i) CHECK(out.data[i] == doctest::Approx(h.data[i]).epsilon(1e-14));
  }
  SUBCASE("linear in h_t with prediction and noise fixed") {
    const Matrix h2 = random_matrix(3, 2, rng);
    const Matrix eps = random_matrix(3, 2, rng);
    const Matrix noise = random_matrix(3, 2, rng);
    const double a = 0.7, b = -1.3;
    Matrix mix(3, 2);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.data[i] = a * h.data[i] + b * h2.data[i];
    const Matrix f_mix = ddim_step(s, mix, eps, 500, 400, 0.5, &noise);
    const Matrix f1 = ddim_step(s, h, eps, 500, 400, 0.5, &noise);
    const Matrix f2 = ddim_step(s, h2, eps, 500, 400, 0.5, &noise);
    const Matrix f0 = ddim_step(s, zero, eps, 500, 400, 0.5, &noise);
    for (std::size_t i = 0; i < mix.size(); ++i) {
      CHECK(f_mix.data[i] == doctest::Approx(a * f1.data[i] + b * f2.data[i] + (1 - a - b) * f0.data[i]).epsilon(1e-12));
    }
  }
  SUBCASE("single step with eta 1 matches the ancestral update") {
    const Matrix eps = random_matrix(3, 2, rng);
    const Matrix noise = random_matrix(3, 2, rng);
    for (int t : {2, 17, 500, 1000}) {
      const Matrix a = ddim_step(s, h, eps, t, t - 1, 1.0, &noise);
      const Matrix b = ancestral_step(s, h, eps, t, noise);
      for (std::size_t i = 0; i < h.size(); ++i) CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-9));
    }
  }
  SUBCASE("errors") {
    CHECK(code_of([&] { ddim_step(s, h, zero, 5, 5, 0.0); }) == ErrorCode::BadRange);
    CHECK(code_of([&] { ddim_step(s, h, zero, 5, 4, 1.0); }) == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("standardizer round trip and constant columns") {
  Matrix m(3, 2);
  m(0, 0) = 1, m(1, 0) = 2, m(2, 0) = 3;
  m(0, 1) = m(1, 1) = m(2, 1) = 4;
  const auto st = Standardizer::fit(m);
  CHECK(st.mean[0] == doctest::Approx(2.0));
  CHECK(st.std[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(st.std[1] == 1.0);
  const Matrix back = st.invert(st.apply(m));
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(back.data[i] == doctest::Approx(m.data[i]));
  CHECK(code_of([] { Standardizer::fit(Matrix(0, 2)); }) == ErrorCode::EmptyDataset);
  CHECK(code_of([&] { st.apply(Matrix(1, 3)); }) == ErrorCode::WidthMismatch);
}

TEST_CASE("training: empty data and width checks") {
  Diffusion d(toy_config(8, 1), 1);
  CHECK(code_of([&] { d.train(Matrix(0, 2), {}); }) == ErrorCode::EmptyDataset);
  CHECK(code_of([&] { d.train(Matrix(4, 3), {}); }) == ErrorCode::WidthMismatch);
}

TEST_CASE("training: one epoch beats the untrained baseline") {
  const Matrix data = four_gaussians(1024, 2);
  Diffusion d(toy_config(32, 2), 4);
  d.stats = Standardizer::fit(data);
  const Matrix eval = d.stats.apply(data);
  nd::Rng rng(77);
  std::vector<int> times(static_cast<std::size_t>(eval.rows));
  for (int& t : times) t = 1 + rng.below(1000);
  const Matrix eps = random_matrix(eval.rows, 2, rng);
  auto eval_loss = [&] {
    nd::Tape t;
    return t.value(d.loss(t, eval, times, eps)).data[0];
  };
  const double before = eval_loss();
  DiffusionTrainConfig tc;
  tc.epochs = 1;
  tc.batch = 32;
  tc.lr = {1e-3, 0, 0.0};
  d.train(data, tc);
  CHECK(eval_loss() < before);
}

TEST_CASE("training and sampling are deterministic") {
  const Matrix data = four_gaussians(256, 5);
  DiffusionTrainConfig tc;
  tc.epochs = 2;
  tc.batch = 32;
  Diffusion a(toy_config(16, 2), 3), b(toy_config(16, 2), 3);
  const auto la = a.train(data, tc);
  const auto lb = b.train(data, tc);
  CHECK(la == lb);
  const Matrix sa = a.sample(20, 25, 0.0, 42);
  const Matrix sb = b.sample(20, 25, 0.0, 42);
  CHECK(sa.data == sb.data);
  CHECK(a.sample(20, 25, 0.0, 42).data == sa.data);
  CHECK(a.sample(20, 25, 1.0, 42).data == a.sample(20, 25, 1.0, 42).data);
  CHECK(a.sample(20, 25, 0.0, 43).data != sa.data);
}

TEST_CASE("checkpoint round trip preserves samples") {
  const Matrix data = four_gaussians(128, 6);
  DiffusionTrainConfig tc;
  tc.epochs = 1;
  tc.batch = 32;
  Diffusion a(toy_config(16, 2), 3);
  a.train(data, tc);
  const auto path = (std::filesystem::temp_directory_path() / "jtk_diff_ckpt.bin").string();
  a.checkpoint().save(path);
  const Diffusion b = Diffusion::from_checkpoint(nd::Checkpoint::load(path));
  std::filesystem::remove(path);
  CHECK(b.config().net.hidden == 16);
  CHECK(b.config().T == 1000);
  const Matrix sa = a.sample(10, 20, 0.0, 1);
  const Matrix sb = b.sample(10, 20, 0.0, 1);
  // weights round-trip through float32
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sb.data[i] == doctest::Approx(sa.data[i]).epsilon(1e-4));
  nd::Checkpoint wrong;
  wrong.meta["kind"] = "model";
  CHECK(code_of([&] { Diffusion::from_checkpoint(wrong); }) == ErrorCode::Format);
}

TEST_CASE("latent dump round trip") {
  nd::Rng rng(3);
  const Matrix m = random_matrix(5, 4, rng);
  const auto path = (std::filesystem::temp_directory_path() / "jtk_latents.bin").string();
  save_latents(path, m);
  const Matrix back = load_latents(path);
  std::filesystem::remove(path);
  REQUIRE(back.same_shape(m));
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(back.data[i] == doctest::Approx(m.data[i]).epsilon(1e-6));
  CHECK(code_of([] { load_latents("/nonexistent/latents.bin"); }) == ErrorCode::MissingArtifact);
}

TEST_CASE("ks_two_sample") {
  nd::Rng rng(12);
  std::vector<double> a(500), b(500), c(500);
  for (double& x : a) x = rng.normal();
  for (double& x : b) x = rng.normal();
  for (double& x : c) x = rng.normal() + 0.5;
  CHECK(ks_two_sample(a, b).p_value > 0.01);
  CHECK(ks_two_sample(a, c).p_value < 1e-6);
  const auto same = ks_two_sample(a, a);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  // D for disjoint supports is 1
  CHECK(ks_two_sample({1, 2, 3}, {4, 5}).statistic == 1.0);
  // hand-computed: ECDF gap peaks at 0.5 after x = 2
  CHECK(ks_two_sample({1, 2, 5, 6}, {3, 4, 7, 8}).statistic == doctest::Approx(0.5));
  CHECK(code_of([] { ks_two_sample({}, {1.0}); }) == ErrorCode::EmptySet);
}

TEST_CASE("sampler with the exact posterior-mean predictor") {
  const auto s = make_schedule();
  const MixtureOracle oracle{s};

  SUBCASE("mixture means recovered; more steps never worse") {
    double previous = 1e300;
    for (int steps : {5, 20, 100, 1000}) {
      double err = 0.0;
      for (std::uint64_t seed = 1; seed <= 10; ++seed) err += recovery_error(oracle.run_ddim(400, steps, 0.0, seed));
      err /= 10.0;
      CHECK(err <= previous);
      previous = err;
    }
    CHECK(previous < 0.1);
  }
  SUBCASE("eta=1 full chain matches ancestral sampling (KS)") {
    const Matrix a = oracle.run_ddim(1000, 1000, 1.0, 5);
    const Matrix b = oracle.run_ancestral(1000, 6);
    for (int j = 0; j < 2; ++j) {
      std::vector<double> xa, xb;
      for (int r = 0; r < a.rows; ++r) xa.push_back(a(r, j)), xb.push_back(b(r, j));
      CHECK(ks_two_sample(xa, xb).p_value > 0.01);
    }
  }
}

TEST_CASE("sampling: a constant latent point is recovered") {
  Matrix data(256, 2);
  for (int r = 0; r < data.rows; ++r) data(r, 0) = 3.0, data(r, 1) = -2.0;
  Diffusion d(toy_config(32, 2), 8);
  DiffusionTrainConfig tc;
  tc.epochs = 400;
  tc.batch = 64;
  tc.lr = {2e-3, 20, 1e-3};
  d.train(data, tc);
  const Matrix s = d.sample(200, 50, 0.0, 9);
  double m0 = 0.0, m1 = 0.0, spread = 0.0;
  for (int r = 0; r < s.rows; ++r) m0 += s(r, 0), m1 += s(r, 1);
  m0 /= s.rows, m1 /= s.rows;
  for (int r = 0; r < s.rows; ++r) spread = std::max(spread, std::hypot(s(r, 0) - 3.0, s(r, 1) + 2.0));
  CHECK(std::abs(m0 - 3.0) < 0.1);
  CHECK(std::abs(m1 + 2.0) < 0.1);
  CHECK(spread < 0.5);
}

TEST_CASE("sampling: 4-Gaussian mixture means are recovered") {
  const Diffusion& d = trained_toy();
  Matrix pooled(0, 2);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Matrix s = d.sample(400, 100, 0.0, seed);
    pooled.data.insert(pooled.data.end(), s.data.begin(), s.data.end());
    pooled.rows += s.rows;
  }
  for (double e : component_errors(pooled)) CHECK(e < 0.1);
}

TEST_CASE("sampling: more steps never increase the mean-recovery error") {
  const Diffusion& d = trained_toy();
  double previous = 1e300;
  for (int steps : {5, 20, 100}) {
    double err = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) err += recovery_error(d.sample(400, steps, 0.0, seed));
    err /= 10.0;
    MESSAGE("steps " << steps << " error " << err);
    CHECK(err <= previous);
    previous = err;
  }
}

TEST_CASE("sampling: full eta=1 DDIM chain matches ancestral sampling (KS)") {
  const Diffusion& d = trained_toy();
  const Matrix a = d.sample(400, 1000, 1.0, 101);
  const Matrix b = d.sample_ancestral(400, 202);
  for (int j = 0; j < 2; ++j) {
    std::vector<double> xa, xb;
    for (int r = 0; r < 400; ++r) xa.push_back(a(r, j)), xb.push_back(b(r, j));
    const auto ks = ks_two_sample(xa, xb);
    MESSAGE("dim " << j << " D " << ks.statistic << " p " << ks.p_value);
    CHECK(ks.p_value > 0.01);
  }
}
