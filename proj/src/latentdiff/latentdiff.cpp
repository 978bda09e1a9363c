#include "jtreekit/latentdiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "nn/blocks.hpp"

namespace jtk::diff {

Schedule make_schedule(int T, double beta_start, double beta_end) {
  if (T < 2) fail(ErrorCode::BadRange, "diffusion needs at least 2 steps");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) fail(ErrorCode::BadRange, "betas must satisfy 0 < start <= end < 1");
  Schedule s;
  s.T = T;
  s.beta.assign(static_cast<std::size_t>(T) + 1, 0.0);
  s.alpha_bar.assign(static_cast<std::size_t>(T) + 1, 1.0);
  for (int t = 1; t <= T; ++t) {
    const double b = beta_start + (beta_end - beta_start) * static_cast<double>(t - 1) / static_cast<double>(T - 1);
    s.beta[static_cast<std::size_t>(t)] = b;
    s.alpha_bar[static_cast<std::size_t>(t)] = s.alpha_bar[static_cast<std::size_t>(t - 1)] * (1.0 - b);
  }
  return s;
}

double Schedule::sigma(int t, int t_prev, double eta) const {
  const double a = alpha_bar.at(static_cast<std::size_t>(t));
  const double ap = alpha_bar.at(static_cast<std::size_t>(t_prev));
  return eta * std::sqrt((1.0 - ap) / (1.0 - a)) * std::sqrt(std::max(0.0, 1.0 - a / ap));
}

double Schedule::posterior_variance(int t) const {
  const double a = alpha_bar.at(static_cast<std::size_t>(t));
  const double ap = alpha_bar.at(static_cast<std::size_t>(t - 1));
  return (1.0 - ap) / (1.0 - a) * beta.at(static_cast<std::size_t>(t));
}

nd::Matrix q_sample(const Schedule& s, const nd::Matrix& h0, int t, const nd::Matrix& eps) {
  if (!h0.same_shape(eps)) fail(ErrorCode::ShapeMismatch, "q_sample: noise shape differs");
  const double a = s.alpha_bar.at(static_cast<std::size_t>(t));
  const double sa = std::sqrt(a), sn = std::sqrt(1.0 - a);
  nd::Matrix out(h0.rows, h0.cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = sa * h0.data[i] + sn * eps.data[i];
  return out;
}

std::vector<int> step_times(int T, int num_steps) {
  if (num_steps < 1 || num_steps > T) fail(ErrorCode::BadRange, "number of sampling steps must be in [1, T]");
  std::vector<int> times;
  for (int k = num_steps; k >= 0; --k) {
    times.push_back(static_cast<int>(static_cast<long long>(k) * T / num_steps));
  }
  return times;
}

nd::Matrix ddim_step(const Schedule& s, const nd::Matrix& h_t, const nd::Matrix& eps_hat, int t, int t_prev, double eta,
                     const nd::Matrix* noise) {
  if (t_prev >= t) fail(ErrorCode::BadRange, "ddim_step needs t_prev < t");
  if (!h_t.same_shape(eps_hat)) fail(ErrorCode::ShapeMismatch, "ddim_step: prediction shape differs");
  const double a = s.alpha_bar.at(static_cast<std::size_t>(t));
  const double ap = s.alpha_bar.at(static_cast<std::size_t>(t_prev));
  const double sig = s.sigma(t, t_prev, eta);
  const double dir = std::sqrt(std::max(0.0, 1.0 - ap - sig * sig));
  const bool noisy = eta > 0.0 && sig > 0.0;
  if (noisy && (!noise || !noise->same_shape(h_t))) fail(ErrorCode::ShapeMismatch, "ddim_step: eta > 0 needs noise of the same shape");
  nd::Matrix out(h_t.rows, h_t.cols);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x0 = (h_t.data[i] - std::sqrt(1.0 - a) * eps_hat.data[i]) / std::sqrt(a);
    out.data[i] = std::sqrt(ap) * x0 + dir * eps_hat.data[i] + (noisy ? sig * noise->data[i] : 0.0);
  }
  return out;
}

nd::Matrix ancestral_step(const Schedule& s, const nd::Matrix& h_t, const nd::Matrix& eps_hat, int t, const nd::Matrix& noise) {
  const double b = s.beta.at(static_cast<std::size_t>(t));
  const double a = s.alpha_bar.at(static_cast<std::size_t>(t));
  const double sd = t > 1 ? std::sqrt(s.posterior_variance(t)) : 0.0;
  nd::Matrix out(h_t.rows, h_t.cols);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data[i] = (h_t.data[i] - b / std::sqrt(1.0 - a) * eps_hat.data[i]) / std::sqrt(1.0 - b) + sd * noise.data[i];
  }
  return out;
}

nd::Matrix time_embedding(std::span<const int> t, int width) {
  nd::Matrix e(static_cast<int>(t.size()), width);
  const int half = width / 2;
  for (std::size_t r = 0; r < t.size(); ++r) {
    for (int i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(std::max(1, half)));
      e(static_cast<int>(r), i) = std::sin(t[r] * freq);
      e(static_cast<int>(r), half + i) = std::cos(t[r] * freq);
    }
  }
  return e;
}

struct SkipNet::Weights {
  nn::Linear in;
  std::vector<nn::Linear> down;
  std::vector<nn::Linear> up;
  nn::Linear out;
};

SkipNet::SkipNet(const SkipNetConfig& cfg, nd::ParamStore& store, nd::Rng& rng) : cfg_(cfg), w_(std::make_unique<Weights>()) {
  if (cfg.width < 1 || cfg.hidden < 2 || cfg.depth < 1) fail(ErrorCode::Config, "invalid skip network dimensions");
  w_->in = nn::make_linear(store, "diff.net.in", cfg.width, cfg.hidden, rng);
  for (int i = 1; i <= cfg.depth; ++i) {
    w_->down.push_back(nn::make_linear(store, "diff.net.down" + std::to_string(i), cfg.hidden, cfg.hidden, rng));
  }
  for (int i = 1; i <= cfg.depth; ++i) {
    w_->up.push_back(nn::make_linear(store, "diff.net.up" + std::to_string(i), 2 * cfg.hidden, cfg.hidden, rng));
  }
  w_->out = nn::make_linear(store, "diff.net.out", cfg.hidden, cfg.width, rng);
}

SkipNet::~SkipNet() = default;
SkipNet::SkipNet(SkipNet&&) noexcept = default;
SkipNet& SkipNet::operator=(SkipNet&&) noexcept = default;

nd::Var SkipNet::forward(nd::Tape& t, nd::Var h, std::span<const int> times) const {
  if (static_cast<int>(times.size()) != t.value(h).rows) fail(ErrorCode::ShapeMismatch, "one diffusion time per row");
  const nd::Var e = t.constant(time_embedding(times, cfg_.hidden));
  std::vector<nd::Var> d{t.add(w_->in.apply(t, h), e)};
  for (int i = 0; i < cfg_.depth; ++i) {
    d.push_back(t.gelu(w_->down[static_cast<std::size_t>(i)].apply(t, t.add(d.back(), e))));
  }
  nd::Var u = d.back();
  for (int i = 1; i <= cfg_.depth; ++i) {
    const nd::Var parts[] = {u, d[static_cast<std::size_t>(cfg_.depth - i)]};
    u = t.gelu(w_->up[static_cast<std::size_t>(i - 1)].apply(t, t.concat_cols(parts)));
  }
  return w_->out.apply(t, u);
}

nd::Matrix SkipNet::predict(const nd::Matrix& h, std::span<const int> times) const {
  nd::Tape t;
  return t.value(forward(t, t.constant(h), times));
}

Standardizer Standardizer::fit(const nd::Matrix& data) {
  if (data.rows == 0) fail(ErrorCode::EmptyDataset, "no latents to standardize");
  Standardizer s;
  s.mean.assign(static_cast<std::size_t>(data.cols), 0.0);
  s.std.assign(static_cast<std::size_t>(data.cols), 1.0);
  for (int j = 0; j < data.cols; ++j) {
    double m = 0.0;
    for (int r = 0; r < data.rows; ++r) m += data(r, j);
    m /= data.rows;
    double v = 0.0;
    for (int r = 0; r < data.rows; ++r) v += (data(r, j) - m) * (data(r, j) - m);
    v /= data.rows;
    s.mean[static_cast<std::size_t>(j)] = m;
    s.std[static_cast<std::size_t>(j)] = v > 1e-12 ? std::sqrt(v) : 1.0;
  }
  return s;
}

nd::Matrix Standardizer::apply(const nd::Matrix& data) const {
  if (static_cast<std::size_t>(data.cols) != mean.size()) fail(ErrorCode::WidthMismatch, "latent width differs from the fitted statistics");
  nd::Matrix out(data.rows, data.cols);
  for (int r = 0; r < data.rows; ++r) {
    for (int j = 0; j < data.cols; ++j) out(r, j) = (data(r, j) - mean[static_cast<std::size_t>(j)]) / std[static_cast<std::size_t>(j)];
  }
  return out;
}

nd::Matrix Standardizer::invert(const nd::Matrix& data) const {
  if (static_cast<std::size_t>(data.cols) != mean.size()) fail(ErrorCode::WidthMismatch, "latent width differs from the fitted statistics");
  nd::Matrix out(data.rows, data.cols);
  for (int r = 0; r < data.rows; ++r) {
    for (int j = 0; j < data.cols; ++j) out(r, j) = data(r, j) * std[static_cast<std::size_t>(j)] + mean[static_cast<std::size_t>(j)];
  }
  return out;
}

Diffusion::Diffusion(const DiffusionConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      schedule_(make_schedule(cfg.T, cfg.beta_start, cfg.beta_end)),
      store_(std::make_unique<nd::ParamStore>()),
      init_rng_(seed),
      net_(cfg.net, *store_, init_rng_) {
  stats.mean.assign(static_cast<std::size_t>(cfg.net.width), 0.0);
  stats.std.assign(static_cast<std::size_t>(cfg.net.width), 1.0);
}

nd::Var Diffusion::loss(nd::Tape& t, const nd::Matrix& h0, std::span<const int> times, const nd::Matrix& eps,
                        NoiseLoss kind) const {
  if (!h0.same_shape(eps)) fail(ErrorCode::ShapeMismatch, "noise shape differs from the batch");
  nd::Matrix ht(h0.rows, h0.cols);
  for (int r = 0; r < h0.rows; ++r) {
    const double a = schedule_.alpha_bar.at(static_cast<std::size_t>(times[static_cast<std::size_t>(r)]));
    for (int j = 0; j < h0.cols; ++j) ht(r, j) = std::sqrt(a) * h0(r, j) + std::sqrt(1.0 - a) * eps(r, j);
  }
  const nd::Var eps_hat = net_.forward(t, t.constant(std::move(ht)), times);
  return kind == NoiseLoss::Mse ? t.mse(eps_hat, eps) : t.mae(eps_hat, eps);
}

std::vector<double> Diffusion::train(const nd::Matrix& latents, const DiffusionTrainConfig& cfg) {
  if (latents.rows == 0) fail(ErrorCode::EmptyDataset, "no latents to train on");
  if (latents.cols != cfg_.net.width) fail(ErrorCode::WidthMismatch, "latent width differs from the network width");
  if (cfg.batch < 1 || cfg.epochs < 0) fail(ErrorCode::Config, "batch and epochs must be positive");
  stats = Standardizer::fit(latents);
  const nd::Matrix data = stats.apply(latents);
  nd::Rng rng(cfg.seed);
  std::vector<int> order(static_cast<std::size_t>(data.rows));
  std::vector<double> history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(static_cast<int>(i)))]);
    double total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const int n = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.batch), order.size() - start));
      nd::Matrix h0(n, data.cols), eps(n, data.cols);
      std::vector<int> times(static_cast<std::size_t>(n));
      for (int r = 0; r < n; ++r) {
        std::copy(data.row(order[start + static_cast<std::size_t>(r)]), data.row(order[start + static_cast<std::size_t>(r)]) + data.cols, h0.row(r));
        times[static_cast<std::size_t>(r)] = 1 + rng.below(cfg_.T);
        for (int j = 0; j < data.cols; ++j) eps(r, j) = rng.normal();
      }
      store_->zero_grad();
      nd::Tape t;
      const nd::Var l = loss(t, h0, times, eps, cfg.loss);
      total += t.value(l).data[0];
      ++batches;
      t.backward(l);
      const double norm = store_->grad_norm();
      if (cfg.clip > 0.0 && norm > cfg.clip) store_->scale_grad(cfg.clip / norm);
      nd::AdamConfig adam;
      adam.lr = cfg.lr.at(store_->step);
      nd::adam_step(*store_, adam);
    }
    history.push_back(total / batches);
  }
  return history;
}

nd::Matrix Diffusion::sample(int n, int num_steps, double eta, std::uint64_t seed) const {
  const auto times = step_times(cfg_.T, num_steps);
  nd::Rng rng(seed);
  nd::Matrix h(n, cfg_.net.width);
  for (double& x : h.data) x = rng.normal();
  nd::Matrix noise(n, cfg_.net.width);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const int t = times[k];
    const std::vector<int> tv(static_cast<std::size_t>(n), t);
    const nd::Matrix eps_hat = net_.predict(h, tv);
    if (eta > 0.0) {
      for (double& x : noise.data) x = rng.normal();
    }
    h = ddim_step(schedule_, h, eps_hat, t, times[k + 1], eta, &noise);
  }
  return stats.invert(h);
}

nd::Matrix Diffusion::sample_ancestral(int n, std::uint64_t seed) const {
  nd::Rng rng(seed);
  nd::Matrix h(n, cfg_.net.width);
  for (double& x : h.data) x = rng.normal();
  nd::Matrix noise(n, cfg_.net.width);
  for (int t = cfg_.T; t >= 1; --t) {
    const std::vector<int> tv(static_cast<std::size_t>(n), t);
    const nd::Matrix eps_hat = net_.predict(h, tv);
    for (double& x : noise.data) x = rng.normal();
    h = ancestral_step(schedule_, h, eps_hat, t, noise);
  }
  return stats.invert(h);
}

nd::Checkpoint Diffusion::checkpoint() const {
  nd::Checkpoint c;
  c.meta["kind"] = "diffusion";
  c.meta["width"] = std::to_string(cfg_.net.width);
  c.meta["hidden"] = std::to_string(cfg_.net.hidden);
  c.meta["depth"] = std::to_string(cfg_.net.depth);
  c.meta["T"] = std::to_string(cfg_.T);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", cfg_.beta_start);
  c.meta["beta_start"] = buf;
  std::snprintf(buf, sizeof buf, "%.17g", cfg_.beta_end);
  c.meta["beta_end"] = buf;
  c.add_params(*store_);
  nd::Matrix st(2, cfg_.net.width);
  for (int j = 0; j < cfg_.net.width; ++j) {
    st(0, j) = stats.mean[static_cast<std::size_t>(j)];
    st(1, j) = stats.std[static_cast<std::size_t>(j)];
  }
  c.tensors["diff.stats"] = st;
  return c;
}

Diffusion Diffusion::from_checkpoint(const nd::Checkpoint& c) {
  auto meta = [&](const std::string& k) -> const std::string& {
    const auto it = c.meta.find(k);
    if (it == c.meta.end()) fail(ErrorCode::Format, "checkpoint lacks metadata " + k);
    return it->second;
  };
  if (meta("kind") != "diffusion") fail(ErrorCode::Format, "checkpoint does not hold a diffusion model");
  DiffusionConfig cfg;
  try {
    cfg.net.width = std::stoi(meta("width"));
    cfg.net.hidden = std::stoi(meta("hidden"));
    cfg.net.depth = std::stoi(meta("depth"));
    cfg.T = std::stoi(meta("T"));
    cfg.beta_start = std::stod(meta("beta_start"));
    cfg.beta_end = std::stod(meta("beta_end"));
  } catch (const std::logic_error&) {
    fail(ErrorCode::Format, "bad diffusion metadata");
  }
  Diffusion d(cfg, 0);
  c.load_params(*d.store_);
  const nd::Matrix& st = c.tensor("diff.stats");
  if (st.rows != 2 || st.cols != cfg.net.width) fail(ErrorCode::ShapeMismatch, "diff.stats must be 2 x width");
  for (int j = 0; j < cfg.net.width; ++j) {
    d.stats.mean[static_cast<std::size_t>(j)] = st(0, j);
    d.stats.std[static_cast<std::size_t>(j)] = st(1, j);
  }
  return d;
}

void save_latents(const std::string& path, const nd::Matrix& latents) {
  nd::Checkpoint c;
  c.meta["kind"] = "latents";
  c.tensors["latents"] = latents;
  c.save(path);
}

nd::Matrix load_latents(const std::string& path) {
  const auto c = nd::Checkpoint::load(path);
  const auto it = c.meta.find("kind");
  if (it == c.meta.end() || it->second != "latents") fail(ErrorCode::Format, path + " is not a latent dump");
  return c.tensor("latents");
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) fail(ErrorCode::EmptySet, "KS test needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  // Kolmogorov survival function
  double p = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-12) break;
    sign = -sign;
  }
  if (lambda < 0.3) p = 1.0;
  return {d, std::clamp(p, 0.0, 1.0)};
}

}  // namespace jtk::diff
