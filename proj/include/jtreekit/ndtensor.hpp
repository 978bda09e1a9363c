#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "jtreekit/error.hpp"

namespace jtk::nd {

// Row-major dense matrix. Compute is carried out in double precision;
// checkpoints store 32-bit floats.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  static Matrix identity(int n);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t size() const noexcept { return data.size(); }
  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
  const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols); }
  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols); }
  bool same_shape(const Matrix& o) const noexcept { return rows == o.rows && cols == o.cols; }
  bool operator==(const Matrix&) const = default;
};

Matrix matmul(const Matrix& a, const Matrix& b);

// Deterministic, platform-independent random numbers (mt19937_64 + Box-Muller).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double normal();
  int below(int n);  // [0, n)

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix m;  // Adam first moment
  Matrix v;  // Adam second moment
};

class ParamStore {
 public:
  Param& create(const std::string& name, int rows, int cols);
  // Normal(0, std) initialization.
  Param& create_normal(const std::string& name, int rows, int cols, double std, Rng& rng);
  // Glorot-uniform style scaling for a (fan_in x fan_out) weight.
  Param& create_linear(const std::string& name, int fan_in, int fan_out, Rng& rng);

  bool has(const std::string& name) const { return params_.count(name) != 0; }
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  std::vector<Param*> all();
  std::vector<const Param*> all() const;
  std::size_t num_values() const;

  void zero_grad();
  double grad_norm() const;
  void scale_grad(double factor);

  long step = 0;

 private:
  std::map<std::string, std::unique_ptr<Param>> params_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One Adam update over every parameter; increments store.step.
void adam_step(ParamStore& store, const AdamConfig& cfg);

// Linear warmup to `base` over `warmup` steps, then per-step exponential decay.
struct LrSchedule {
  double base = 1e-3;
  long warmup = 0;
  double decay = 0.0;  // lr *= exp(-decay) per step after warmup

  double at(long step) const;
};

struct Var {
  int id = -1;
};

// Reverse-mode compute tape over 2-D matrices. Every op checks its output for
// NaN/Inf and throws NonFinite.
class Tape {
 public:
  Var constant(Matrix m);
  Var param(Param& p);

  const Matrix& value(Var v) const;
  const Matrix& grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Seeds d(out)/d(out) = 1 for a 1x1 output and accumulates into params.
  void backward(Var out);

  Var matmul(Var a, Var b);
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_row(Var a, Var bias);  // bias is 1 x cols, broadcast over rows
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var scale_by(Var a, Var s);  // s is 1 x 1
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var slice_cols(Var a, int begin, int count);
  Var slice_rows(Var a, int begin, int count);
  // Row softmax; where mask (rows*cols, nonzero = keep) is zero the probability is exactly 0.
  Var softmax_rows(Var a, const std::vector<std::uint8_t>* mask = nullptr);
  Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5);
  Var gelu(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var embedding(Var table, std::span<const int> index);
  Var sum(Var a);
  Var mean(Var a);
  Var mse(Var a, const Matrix& target);
  Var mae(Var a, const Matrix& target);
  // Mean cross-entropy over rows whose target is >= 0; rows with -1 are ignored.
  Var cross_entropy_rows(Var logits, std::span<const int> targets);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Param* param = nullptr;
    bool needs_grad = false;
    std::function<void(Tape&)> backward;
  };
  Node& node(Var v) { return nodes_.at(static_cast<std::size_t>(v.id)); }
  const Node& node(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)); }
  Matrix& g(Var v);  // gradient buffer, allocated on demand
  Var push(Matrix value, bool needs_grad, std::function<void(Tape&)> backward);
  bool needs(Var v) const { return node(v).needs_grad; }

  std::vector<Node> nodes_;
};

// Central-difference gradient check over a random subset of parameter
// coordinates (all of them when fewer than `coords`). `f` builds the scalar
// output on the given tape. Returns the maximum relative error
// |a - n| / max(|a|, |n|, floor).
double grad_check(const std::function<Var(Tape&)>& f, ParamStore& store, double eps = 1e-4, int coords = 64,
                  std::uint64_t seed = 1, double floor = 1e-6);

// Checkpoint container: text manifest (format version, metadata, tensor list with
// name/shape/dtype) followed by little-endian float32 payloads in manifest order.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::map<std::string, Matrix> tensors;

  void add_params(const ParamStore& store, const std::string& prefix = "");
  // Copies tensors named `prefix*` into same-named params; shape mismatches throw.
  void load_params(ParamStore& store, const std::string& prefix = "") const;
  const Matrix& tensor(const std::string& name) const;

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& bytes);
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace jtk::nd
