#include <algorithm>
#include <cmath>

#include "jtreekit/ndtensor.hpp"

namespace jtk::nd {

namespace {

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::ShapeMismatch, what);
}

void check_finite(const Matrix& m, const char* op) {
  for (double x : m.data) {
    if (!std::isfinite(x)) fail(ErrorCode::NonFinite, std::string("non-finite value produced by ") + op);
  }
}

// c += a * b
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  for (int i = 0; i < a.rows; ++i) {
    double* cr = c.row(i);
    const double* ar = a.row(i);
    for (int k = 0; k < a.cols; ++k) {
      const double av = ar[k];
      if (av == 0.0) continue;
      const double* br = b.row(k);
      for (int j = 0; j < b.cols; ++j) cr[j] += av * br[j];
    }
  }
}

// c += a * b^T
void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  for (int i = 0; i < a.rows; ++i) {
    const double* ar = a.row(i);
    double* cr = c.row(i);
    for (int j = 0; j < b.rows; ++j) {
      const double* br = b.row(j);
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += ar[k] * br[k];
      cr[j] += s;
    }
  }
}

// c += a^T * b
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  for (int k = 0; k < a.rows; ++k) {
    const double* ar = a.row(k);
    const double* br = b.row(k);
    for (int i = 0; i < a.cols; ++i) {
      const double av = ar[i];
      if (av == 0.0) continue;
      double* cr = c.row(i);
      for (int j = 0; j < b.cols; ++j) cr[j] += av * br[j];
    }
  }
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(static_cast<int>(rows.size()), rows.empty() ? 0 : static_cast<int>(rows[0].size()));
  for (int r = 0; r < m.rows; ++r) {
    require(static_cast<int>(rows[static_cast<std::size_t>(r)].size()) == m.cols, "ragged rows");
    std::copy(rows[static_cast<std::size_t>(r)].begin(), rows[static_cast<std::size_t>(r)].end(), m.row(r));
  }
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, "matmul: inner dimensions differ");
  Matrix c(a.rows, b.cols);
  gemm_acc(a, b, c);
  return c;
}

Var Tape::push(Matrix value, bool needs_grad, std::function<void(Tape&)> backward) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::g(Var v) {
  Node& n = node(v);
  if (n.grad.size() != n.value.size() || !n.grad.same_shape(n.value)) n.grad = Matrix(n.value.rows, n.value.cols);
  return n.grad;
}

Var Tape::constant(Matrix m) {
  check_finite(m, "constant");
  return push(std::move(m), false, nullptr);
}

Var Tape::param(Param& p) {
  check_finite(p.value, "param");
  Var v = push(p.value, true, nullptr);
  node(v).param = &p;
  return v;
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

const Matrix& Tape::grad(Var v) const { return node(v).grad; }

void Tape::backward(Var out) {
  require(value(out).rows == 1 && value(out).cols == 1, "backward needs a 1x1 output");
  for (auto& n : nodes_) n.grad = Matrix();
  g(out).data[0] = 1.0;
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this);
    Node& m = nodes_[static_cast<std::size_t>(i)];
    if (m.param) {
      Param& p = *m.param;
      if (!p.grad.same_shape(p.value)) p.grad = Matrix(p.value.rows, p.value.cols);
      for (std::size_t k = 0; k < p.grad.size(); ++k) p.grad.data[k] += m.grad.data[k];
    }
  }
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  require(A.cols == B.rows, "matmul: inner dimensions differ");
  Matrix c(A.rows, B.cols);
  gemm_acc(A, B, c);
  check_finite(c, "matmul");
  const Var out = push(std::move(c), needs(a) || needs(b), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    if (t.needs(a)) gemm_nt_acc(go, t.value(b), t.g(a));
    if (t.needs(b)) gemm_tn_acc(t.value(a), go, t.g(b));
  });
  return out;
}

Var Tape::matmul_nt(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  require(A.cols == B.cols, "matmul_nt: inner dimensions differ");
  Matrix c(A.rows, B.rows);
  gemm_nt_acc(A, B, c);
  check_finite(c, "matmul_nt");
  return push(std::move(c), needs(a) || needs(b), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    if (t.needs(a)) gemm_acc(go, t.value(b), t.g(a));
    if (t.needs(b)) gemm_tn_acc(go, t.value(a), t.g(b));
  });
}

Var Tape::add(Var a, Var b) {
  require(value(a).same_shape(value(b)), "add: shapes differ");
  Matrix c = value(a);
  const Matrix& B = value(b);
  for (std::size_t i = 0; i < c.size(); ++i) c.data[i] += B.data[i];
  check_finite(c, "add");
  return push(std::move(c), needs(a) || needs(b), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    for (Var v : {a, b}) {
      if (!t.needs(v)) continue;
      Matrix& gv = t.g(v);
      for (std::size_t i = 0; i < gv.size(); ++i) gv.data[i] += go.data[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  require(value(a).same_shape(value(b)), "sub: shapes differ");
  Matrix c = value(a);
  const Matrix& B = value(b);
  for (std::size_t i = 0; i < c.size(); ++i) c.data[i] -= B.data[i];
  check_finite(c, "sub");
  return push(std::move(c), needs(a) || needs(b), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    if (t.needs(a)) {
      Matrix& ga = t.g(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += go.data[i];
    }
    if (t.needs(b)) {
      Matrix& gb = t.g(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] -= go.data[i];
    }
  });
}

Var Tape::add_row(Var a, Var bias) {
  const Matrix& B = value(bias);
  require(B.rows == 1 && B.cols == value(a).cols, "add_row: bias must be 1 x cols");
  Matrix c = value(a);
  for (int r = 0; r < c.rows; ++r) {
    double* cr = c.row(r);
    for (int j = 0; j < c.cols; ++j) cr[j] += B.data[static_cast<std::size_t>(j)];
  }
  check_finite(c, "add_row");
  return push(std::move(c), needs(a) || needs(bias), [a, bias, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    if (t.needs(a)) {
      Matrix& ga = t.g(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += go.data[i];
    }
    if (t.needs(bias)) {
      Matrix& gb = t.g(bias);
      for (int r = 0; r < go.rows; ++r) {
        const double* gr = go.row(r);
        for (int j = 0; j < go.cols; ++j) gb.data[static_cast<std::size_t>(j)] += gr[j];
      }
    }
  });
}

Var Tape::mul(Var a, Var b) {
  require(value(a).same_shape(value(b)), "mul: shapes differ");
  Matrix c = value(a);
  const Matrix& B = value(b);
  for (std::size_t i = 0; i < c.size(); ++i) c.data[i] *= B.data[i];
  check_finite(c, "mul");
  return push(std::move(c), needs(a) || needs(b), [a, b, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    if (t.needs(a)) {
      Matrix& ga = t.g(a);
      const Matrix& B = t.value(b);
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += go.data[i] * B.data[i];
    }
    if (t.needs(b)) {
      Matrix& gb = t.g(b);
      const Matrix& A = t.value(a);
      for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] += go.data[i] * A.data[i];
    }
  });
}

Var Tape::scale(Var a, double s) {
  Matrix c = value(a);
  for (double& x : c.data) x *= s;
  check_finite(c, "scale");
  return push(std::move(c), needs(a), [a, s, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    Matrix& ga = t.g(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += s * go.data[i];
  });
}

Var Tape::scale_by(Var a, Var s) {
  require(value(s).rows == 1 && value(s).cols == 1, "scale_by: scale must be 1x1");
  const double k = value(s).data[0];
  Matrix c = value(a);
  for (double& x : c.data) x *= k;
  check_finite(c, "scale_by");
  return push(std::move(c), needs(a) || needs(s), [a, s, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    if (t.needs(a)) {
      const double k2 = t.value(s).data[0];
      Matrix& ga = t.g(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += k2 * go.data[i];
    }
    if (t.needs(s)) {
      const Matrix& A = t.value(a);
      double acc = 0.0;
      for (std::size_t i = 0; i < A.size(); ++i) acc += A.data[i] * go.data[i];
      t.g(s).data[0] += acc;
    }
  });
}

Var Tape::concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const int rows = value(parts[0]).rows;
  int cols = 0;
  bool ng = false;
  for (Var p : parts) {
    require(value(p).rows == rows, "concat_cols: row counts differ");
    cols += value(p).cols;
    ng = ng || needs(p);
  }
  Matrix c(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Matrix& P = value(p);
    for (int r = 0; r < rows; ++r) std::copy(P.row(r), P.row(r) + P.cols, c.row(r) + off);
    off += P.cols;
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return push(std::move(c), ng, [saved, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    int o = 0;
    for (Var p : saved) {
      const int pc = t.value(p).cols;
      if (t.needs(p)) {
        Matrix& gp = t.g(p);
        for (int r = 0; r < gp.rows; ++r) {
          const double* src = go.row(r) + o;
          double* dst = gp.row(r);
          for (int j = 0; j < pc; ++j) dst[j] += src[j];
        }
      }
      o += pc;
    }
  });
}

Var Tape::concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const int cols = value(parts[0]).cols;
  int rows = 0;
  bool ng = false;
  for (Var p : parts) {
    require(value(p).cols == cols, "concat_rows: column counts differ");
    rows += value(p).rows;
    ng = ng || needs(p);
  }
  Matrix c(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Matrix& P = value(p);
    std::copy(P.data.begin(), P.data.end(), c.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += P.size();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return push(std::move(c), ng, [saved, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    std::size_t o = 0;
    for (Var p : saved) {
      const std::size_t n = t.value(p).size();
      if (t.needs(p)) {
        Matrix& gp = t.g(p);
        for (std::size_t i = 0; i < n; ++i) gp.data[i] += go.data[o + i];
      }
      o += n;
    }
  });
}

Var Tape::slice_cols(Var a, int begin, int count) {
  const Matrix& A = value(a);
  require(begin >= 0 && count >= 0 && begin + count <= A.cols, "slice_cols: out of range");
  Matrix c(A.rows, count);
  for (int r = 0; r < A.rows; ++r) std::copy(A.row(r) + begin, A.row(r) + begin + count, c.row(r));
  return push(std::move(c), needs(a), [a, begin, count, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    Matrix& ga = t.g(a);
    for (int r = 0; r < ga.rows; ++r) {
      for (int j = 0; j < count; ++j) ga.row(r)[begin + j] += go.row(r)[j];
    }
  });
}

Var Tape::slice_rows(Var a, int begin, int count) {
  const Matrix& A = value(a);
  require(begin >= 0 && count >= 0 && begin + count <= A.rows, "slice_rows: out of range");
  Matrix c(count, A.cols);
  std::copy(A.row(begin), A.row(begin) + static_cast<std::ptrdiff_t>(count) * A.cols, c.data.begin());
  return push(std::move(c), needs(a), [a, begin, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    Matrix& ga = t.g(a);
    double* dst = ga.row(begin);
    for (std::size_t i = 0; i < go.size(); ++i) dst[i] += go.data[i];
  });
}

Var Tape::softmax_rows(Var a, const std::vector<std::uint8_t>* mask) {
  const Matrix& A = value(a);
  if (mask) require(mask->size() == A.size(), "softmax_rows: mask size differs");
  Matrix c(A.rows, A.cols);
  for (int r = 0; r < A.rows; ++r) {
    const double* ar = A.row(r);
    double* cr = c.row(r);
    const std::uint8_t* mr = mask ? mask->data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(A.cols) : nullptr;
    double mx = -INFINITY;
    for (int j = 0; j < A.cols; ++j) {
      if (!mr || mr[j]) mx = std::max(mx, ar[j]);
    }
    if (mx == -INFINITY) continue;  // fully masked row stays zero
    double s = 0.0;
    for (int j = 0; j < A.cols; ++j) {
      if (mr && !mr[j]) continue;
      cr[j] = std::exp(ar[j] - mx);
      s += cr[j];
    }
    for (int j = 0; j < A.cols; ++j) cr[j] /= s;
  }
  check_finite(c, "softmax_rows");
  return push(std::move(c), needs(a), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    const Matrix& y = t.nodes_[static_cast<std::size_t>(self)].value;
    Matrix& ga = t.g(a);
    for (int r = 0; r < y.rows; ++r) {
      const double* yr = y.row(r);
      const double* gr = go.row(r);
      double dot = 0.0;
      for (int j = 0; j < y.cols; ++j) dot += yr[j] * gr[j];
      double* dr = ga.row(r);
      for (int j = 0; j < y.cols; ++j) dr[j] += yr[j] * (gr[j] - dot);
    }
  });
}

Var Tape::layer_norm(Var a, Var gamma, Var beta, double eps) {
  const Matrix& A = value(a);
  require(value(gamma).rows == 1 && value(gamma).cols == A.cols, "layer_norm: gamma must be 1 x cols");
  require(value(beta).rows == 1 && value(beta).cols == A.cols, "layer_norm: beta must be 1 x cols");
  const Matrix& G = value(gamma);
  const Matrix& B = value(beta);
  Matrix c(A.rows, A.cols);
  Matrix xhat(A.rows, A.cols);
  std::vector<double> inv_std(static_cast<std::size_t>(A.rows));
  for (int r = 0; r < A.rows; ++r) {
    const double* ar = A.row(r);
    double mu = 0.0;
    for (int j = 0; j < A.cols; ++j) mu += ar[j];
    mu /= A.cols;
    double var = 0.0;
    for (int j = 0; j < A.cols; ++j) var += (ar[j] - mu) * (ar[j] - mu);
    var /= A.cols;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(r)] = is;
    for (int j = 0; j < A.cols; ++j) {
      xhat(r, j) = (ar[j] - mu) * is;
      c(r, j) = xhat(r, j) * G.data[static_cast<std::size_t>(j)] + B.data[static_cast<std::size_t>(j)];
    }
  }
  check_finite(c, "layer_norm");
  return push(std::move(c), needs(a) || needs(gamma) || needs(beta),
              [a, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), self = static_cast<int>(nodes_.size())](Tape& t) {
                const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
                const Matrix& G2 = t.value(gamma);
                const int n = go.cols;
                if (t.needs(gamma) || t.needs(beta)) {
                  for (int r = 0; r < go.rows; ++r) {
                    for (int j = 0; j < n; ++j) {
                      if (t.needs(gamma)) t.g(gamma).data[static_cast<std::size_t>(j)] += go(r, j) * xhat(r, j);
                      if (t.needs(beta)) t.g(beta).data[static_cast<std::size_t>(j)] += go(r, j);
                    }
                  }
                }
                if (t.needs(a)) {
                  Matrix& ga = t.g(a);
                  std::vector<double> dx(static_cast<std::size_t>(n));
                  for (int r = 0; r < go.rows; ++r) {
                    double s1 = 0.0, s2 = 0.0;
                    for (int j = 0; j < n; ++j) {
                      dx[static_cast<std::size_t>(j)] = go(r, j) * G2.data[static_cast<std::size_t>(j)];
                      s1 += dx[static_cast<std::size_t>(j)];
                      s2 += dx[static_cast<std::size_t>(j)] * xhat(r, j);
                    }
                    const double is = inv_std[static_cast<std::size_t>(r)];
                    for (int j = 0; j < n; ++j) {
                      ga(r, j) += is * (dx[static_cast<std::size_t>(j)] - s1 / n - xhat(r, j) * s2 / n);
                    }
                  }
                }
              });
}

Var Tape::gelu(Var a) {
  Matrix c = value(a);
  for (double& x : c.data) x = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  check_finite(c, "gelu");
  return push(std::move(c), needs(a), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    const Matrix& X = t.value(a);
    Matrix& ga = t.g(a);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double x = X.data[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      ga.data[i] += go.data[i] * (cdf + x * pdf);
    }
  });
}

Var Tape::sigmoid(Var a) {
  Matrix c = value(a);
  for (double& x : c.data) x = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  check_finite(c, "sigmoid");
  return push(std::move(c), needs(a), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    const Matrix& y = t.nodes_[static_cast<std::size_t>(self)].value;
    Matrix& ga = t.g(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += go.data[i] * y.data[i] * (1.0 - y.data[i]);
  });
}

Var Tape::tanh(Var a) {
  Matrix c = value(a);
  for (double& x : c.data) x = std::tanh(x);
  check_finite(c, "tanh");
  return push(std::move(c), needs(a), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    const Matrix& y = t.nodes_[static_cast<std::size_t>(self)].value;
    Matrix& ga = t.g(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += go.data[i] * (1.0 - y.data[i] * y.data[i]);
  });
}

Var Tape::embedding(Var table, std::span<const int> index) {
  const Matrix& T = value(table);
  Matrix c(static_cast<int>(index.size()), T.cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    const int k = index[i];
    if (k < 0 || k >= T.rows) fail(ErrorCode::FeatureOutOfRange, "embedding index " + std::to_string(k) + " outside table of " + std::to_string(T.rows));
    std::copy(T.row(k), T.row(k) + T.cols, c.row(static_cast<int>(i)));
  }
  std::vector<int> idx(index.begin(), index.end());
  return push(std::move(c), needs(table), [table, idx = std::move(idx), self = static_cast<int>(nodes_.size())](Tape& t) {
    const Matrix& go = t.nodes_[static_cast<std::size_t>(self)].grad;
    Matrix& gt = t.g(table);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      double* dst = gt.row(idx[i]);
      const double* src = go.row(static_cast<int>(i));
      for (int j = 0; j < go.cols; ++j) dst[j] += src[j];
    }
  });
}

Var Tape::sum(Var a) {
  double s = 0.0;
  for (double x : value(a).data) s += x;
  Matrix c(1, 1, s);
  check_finite(c, "sum");
  return push(std::move(c), needs(a), [a, self = static_cast<int>(nodes_.size())](Tape& t) {
    const double go = t.nodes_[static_cast<std::size_t>(self)].grad.data[0];
    Matrix& ga = t.g(a);
    for (double& x : ga.data) x += go;
  });
}

Var Tape::mean(Var a) {
  const double n = static_cast<double>(value(a).size());
  require(n > 0, "mean of an empty matrix");
  return scale(sum(a), 1.0 / n);
}

Var Tape::mse(Var a, const Matrix& target) {
  const Matrix& A = value(a);
  require(A.same_shape(target), "mse: target shape differs");
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) s += (A.data[i] - target.data[i]) * (A.data[i] - target.data[i]);
  const double n = static_cast<double>(A.size());
  Matrix c(1, 1, s / n);
  check_finite(c, "mse");
  return push(std::move(c), needs(a), [a, target, n, self = static_cast<int>(nodes_.size())](Tape& t) {
    const double go = t.nodes_[static_cast<std::size_t>(self)].grad.data[0];
    const Matrix& X = t.value(a);
    Matrix& ga = t.g(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += go * 2.0 * (X.data[i] - target.data[i]) / n;
  });
}

Var Tape::mae(Var a, const Matrix& target) {
  const Matrix& A = value(a);
  require(A.same_shape(target), "mae: target shape differs");
  double s = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) s += std::abs(A.data[i] - target.data[i]);
  const double n = static_cast<double>(A.size());
  Matrix c(1, 1, s / n);
  check_finite(c, "mae");
  return push(std::move(c), needs(a), [a, target, n, self = static_cast<int>(nodes_.size())](Tape& t) {
    const double go = t.nodes_[static_cast<std::size_t>(self)].grad.data[0];
    const Matrix& X = t.value(a);
    Matrix& ga = t.g(a);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double d = X.data[i] - target.data[i];
      ga.data[i] += go * (d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0) / n;
    }
  });
}

Var Tape::cross_entropy_rows(Var logits, std::span<const int> targets) {
  const Matrix& L = value(logits);
  require(static_cast<int>(targets.size()) == L.rows, "cross_entropy_rows: one target per row");
  Matrix prob(L.rows, L.cols);
  double total = 0.0;
  int counted = 0;
  for (int r = 0; r < L.rows; ++r) {
    const int y = targets[static_cast<std::size_t>(r)];
    if (y < 0) continue;
    if (y >= L.cols) fail(ErrorCode::FeatureOutOfRange, "cross-entropy target outside the class range");
    const double* lr = L.row(r);
    const double mx = *std::max_element(lr, lr + L.cols);
    double s = 0.0;
    for (int j = 0; j < L.cols; ++j) s += std::exp(lr[j] - mx);
    const double lse = mx + std::log(s);
    for (int j = 0; j < L.cols; ++j) prob(r, j) = std::exp(lr[j] - lse);
    total += lse - lr[y];
    ++counted;
  }
  const double n = counted > 0 ? counted : 1;
  Matrix c(1, 1, total / n);
  check_finite(c, "cross_entropy_rows");
  std::vector<int> ys(targets.begin(), targets.end());
  return push(std::move(c), needs(logits), [logits, prob = std::move(prob), ys = std::move(ys), n, self = static_cast<int>(nodes_.size())](Tape& t) {
    const double go = t.nodes_[static_cast<std::size_t>(self)].grad.data[0];
    Matrix& gl = t.g(logits);
    for (int r = 0; r < gl.rows; ++r) {
      const int y = ys[static_cast<std::size_t>(r)];
      if (y < 0) continue;
      for (int j = 0; j < gl.cols; ++j) gl(r, j) += go * (prob(r, j) - (j == y ? 1.0 : 0.0)) / n;
    }
  });
}

}  // namespace jtk::nd
