#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "jtreekit/ndtensor.hpp"

namespace jtk::nd {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

int Rng::below(int n) {
  if (n <= 0) fail(ErrorCode::BadRange, "Rng::below needs n > 0");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<int>(x % un);
}

Param& ParamStore::create(const std::string& name, int rows, int cols) {
  if (params_.count(name)) fail(ErrorCode::Config, "duplicate parameter name " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value = Matrix(rows, cols);
  p->grad = Matrix(rows, cols);
  p->m = Matrix(rows, cols);
  p->v = Matrix(rows, cols);
  Param& ref = *p;
  params_[name] = std::move(p);
  return ref;
}

Param& ParamStore::create_normal(const std::string& name, int rows, int cols, double std, Rng& rng) {
  Param& p = create(name, rows, cols);
  for (double& x : p.value.data) x = std * rng.normal();
  return p;
}

Param& ParamStore::create_linear(const std::string& name, int fan_in, int fan_out, Rng& rng) {
  Param& p = create(name, fan_in, fan_out);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& x : p.value.data) x = bound * (2.0 * rng.uniform() - 1.0);
  return p;
}

Param& ParamStore::get(const std::string& name) {
  const auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorCode::MissingArtifact, "unknown parameter " + name);
  return *it->second;
}

const Param& ParamStore::get(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorCode::MissingArtifact, "unknown parameter " + name);
  return *it->second;
}

std::vector<Param*> ParamStore::all() {
  std::vector<Param*> out;
  for (auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

std::vector<const Param*> ParamStore::all() const {
  std::vector<const Param*> out;
  for (const auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

std::size_t ParamStore::num_values() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p->value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : params_) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const auto& [_, p] : params_) {
    for (double g : p->grad.data) s += g * g;
  }
  return std::sqrt(s);
}

void ParamStore::scale_grad(double factor) {
  for (auto& [_, p] : params_) {
    for (double& g : p->grad.data) g *= factor;
  }
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  ++store.step;
  const double t = static_cast<double>(store.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (Param* p : store.all()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad.data[i];
      double& m = p->m.data[i];
      double& v = p->v.data[i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
      p->value.data[i] -= cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.eps);
    }
  }
}

double LrSchedule::at(long step) const {
  if (warmup > 0 && step < warmup) return base * static_cast<double>(step + 1) / static_cast<double>(warmup);
  return base * std::exp(-decay * static_cast<double>(step - warmup));
}

double grad_check(const std::function<Var(Tape&)>& f, ParamStore& store, double eps, int coords, std::uint64_t seed,
                  double floor) {
  store.zero_grad();
  {
    Tape t;
    const Var out = f(t);
    t.backward(out);
  }
  auto params = store.all();
  std::vector<std::pair<std::size_t, std::size_t>> all;
  std::size_t total = 0;
  for (std::size_t p = 0; p < params.size(); ++p) total += params[p]->value.size();
  Rng rng(seed);
  std::set<std::pair<std::size_t, std::size_t>> chosen;
  if (total <= static_cast<std::size_t>(coords)) {
    for (std::size_t p = 0; p < params.size(); ++p) {
      for (std::size_t i = 0; i < params[p]->value.size(); ++i) chosen.insert({p, i});
    }
  } else {
    // at least one coordinate per parameter, the rest uniformly at random
    for (std::size_t p = 0; p < params.size(); ++p) {
      if (params[p]->value.size() > 0) chosen.insert({p, static_cast<std::size_t>(rng.below(static_cast<int>(params[p]->value.size())))});
    }
    while (chosen.size() < std::max<std::size_t>(static_cast<std::size_t>(coords), params.size())) {
      std::size_t k = static_cast<std::size_t>(rng.next_u64() % total);
      std::size_t p = 0;
      while (k >= params[p]->value.size()) {
        k -= params[p]->value.size();
        ++p;
      }
      chosen.insert({p, k});
    }
  }
  auto eval = [&]() {
    Tape t;
    return t.value(f(t)).data[0];
  };
  double worst = 0.0;
  for (const auto& [p, i] : chosen) {
    double& x = params[p]->value.data[i];
    const double saved = x;
    x = saved + eps;
    const double fp = eval();
    x = saved - eps;
    const double fm = eval();
    x = saved;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double analytic = params[p]->grad.data[i];
    if (!std::isfinite(numeric)) fail(ErrorCode::NonFinite, "non-finite finite difference");
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace jtk::nd
