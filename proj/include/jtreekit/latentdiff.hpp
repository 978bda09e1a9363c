#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "jtreekit/ndtensor.hpp"

namespace jtk::diff {

// Index t runs 1..T; alpha_bar[0] = 1 is the clean boundary.
struct Schedule {
  int T = 0;
  std::vector<double> beta;       // size T + 1, beta[0] = 0
  std::vector<double> alpha_bar;  // size T + 1

  // DDIM noise scale for the jump t -> t_prev.
  double sigma(int t, int t_prev, double eta) const;
  // Ancestral posterior variance (1 - abar_{t-1}) / (1 - abar_t) * beta_t.
  double posterior_variance(int t) const;
};

Schedule make_schedule(int T = 1000, double beta_start = 1e-4, double beta_end = 0.02);

// sqrt(abar_t) h0 + sqrt(1 - abar_t) eps, row-wise for a single t.
nd::Matrix q_sample(const Schedule& s, const nd::Matrix& h0, int t, const nd::Matrix& eps);

// Decreasing times T = t_S > ... > t_0 = 0, evenly spaced, S = num_steps.
std::vector<int> step_times(int T, int num_steps);

// One DDIM update. `noise` (standard normal, same shape) is used only when eta > 0.
nd::Matrix ddim_step(const Schedule& s, const nd::Matrix& h_t, const nd::Matrix& eps_hat, int t, int t_prev, double eta,
                     const nd::Matrix* noise = nullptr);
// One ancestral (DDPM) update t -> t-1.
nd::Matrix ancestral_step(const Schedule& s, const nd::Matrix& h_t, const nd::Matrix& eps_hat, int t, const nd::Matrix& noise);

// Sinusoidal embedding of each time in `t`, one row per entry.
nd::Matrix time_embedding(std::span<const int> t, int width);

struct SkipNetConfig {
  int width = 128;   // latent width
  int hidden = 256;
  int depth = 6;     // paired down/up layers
};

// d_0 = in(h) + e(t); d_i = gelu(down_i(d_{i-1} + e(t)));
// u_0 = d_N; u_i = gelu(up_i([u_{i-1}, d_{N-i}])); eps_hat = out(u_N).
class SkipNet {
 public:
  // Registers parameters named diff.net.* in `store`.
  SkipNet(const SkipNetConfig& cfg, nd::ParamStore& store, nd::Rng& rng);
  ~SkipNet();
  SkipNet(SkipNet&&) noexcept;
  SkipNet& operator=(SkipNet&&) noexcept;

  const SkipNetConfig& config() const noexcept { return cfg_; }
  nd::Var forward(nd::Tape& t, nd::Var h, std::span<const int> times) const;
  nd::Matrix predict(const nd::Matrix& h, std::span<const int> times) const;

 private:
  struct Weights;
  SkipNetConfig cfg_;
  std::unique_ptr<Weights> w_;
};

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;

  static Standardizer fit(const nd::Matrix& data);
  nd::Matrix apply(const nd::Matrix& data) const;
  nd::Matrix invert(const nd::Matrix& data) const;
};

struct DiffusionConfig {
  SkipNetConfig net;
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
};

// Mae matches the reference training; Mse regresses the posterior mean that DDIM assumes.
enum class NoiseLoss { Mae, Mse };

struct DiffusionTrainConfig {
  NoiseLoss loss = NoiseLoss::Mae;
  int epochs = 50;
  int batch = 64;
  nd::LrSchedule lr{1e-3, 100, 0.0};
  double clip = 1.0;
  std::uint64_t seed = 1;
};

class Diffusion {
 public:
  Diffusion(const DiffusionConfig& cfg, std::uint64_t seed);
  Diffusion(Diffusion&&) noexcept = default;
  Diffusion& operator=(Diffusion&&) noexcept = default;

  const DiffusionConfig& config() const noexcept { return cfg_; }
  const Schedule& schedule() const noexcept { return schedule_; }
  const SkipNet& net() const noexcept { return net_; }
  nd::ParamStore& params() noexcept { return *store_; }

  Standardizer stats;

  // Noise-prediction error on a batch of standardized rows with per-row times and noise.
  nd::Var loss(nd::Tape& t, const nd::Matrix& h0, std::span<const int> times, const nd::Matrix& eps,
               NoiseLoss kind = NoiseLoss::Mae) const;

  // Fits `stats`, then minimizes the noise-prediction MAE. Returns the mean loss per epoch.
  std::vector<double> train(const nd::Matrix& latents, const DiffusionTrainConfig& cfg);

  // n latents in the original (de-standardized) scale.
  nd::Matrix sample(int n, int num_steps, double eta, std::uint64_t seed) const;
  nd::Matrix sample_ancestral(int n, std::uint64_t seed) const;

  nd::Checkpoint checkpoint() const;
  static Diffusion from_checkpoint(const nd::Checkpoint& c);

 private:
  DiffusionConfig cfg_;
  Schedule schedule_;
  std::unique_ptr<nd::ParamStore> store_;
  nd::Rng init_rng_;
  SkipNet net_;
};

// Latent dump: a checkpoint container holding one tensor named "latents".
void save_latents(const std::string& path, const nd::Matrix& latents);
nd::Matrix load_latents(const std::string& path);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace jtk::diff
