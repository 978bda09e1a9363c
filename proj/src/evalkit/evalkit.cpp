#include "jtreekit/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace jtk::eval {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  return out;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

double internal_diversity(std::span<const mol::Fingerprint> fps, int p) {
  if (fps.empty()) fail(ErrorCode::EmptySet, "internal diversity of an empty set");
  if (p < 1) fail(ErrorCode::BadRange, "IntDiv power must be >= 1");
  const std::size_t n = fps.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += 1.0;  // T(m, m)
    for (std::size_t j = i + 1; j < n; ++j) sum += 2.0 * std::pow(mol::tanimoto(fps[i], fps[j]), p);
  }
  const double mean = sum / (static_cast<double>(n) * static_cast<double>(n));
  return std::clamp(1.0 - std::pow(mean, 1.0 / p), 0.0, 1.0);
}

GenerationReport evaluate(std::span<const std::optional<mol::MolGraph>> generated, const std::set<std::string>& train,
                          const EvalOptions& opts) {
  if (generated.empty()) fail(ErrorCode::EmptySet, "no generated molecules to evaluate");
  GenerationReport r;
  r.n_requested = generated.size();
  std::vector<std::string> valid_smiles;
  std::map<std::string, const mol::MolGraph*> first_graph;
  for (const auto& g : generated) {
    MoleculeRecord rec;
    if (g && g->num_atoms() > 0 && mol::check_valence(*g).empty()) {
      rec.valid = true;
      rec.smiles = mol::canonical_smiles(*g);
      rec.input = rec.smiles;
      rec.props = mol::properties(*g);
      valid_smiles.push_back(rec.smiles);
      first_graph.try_emplace(rec.smiles, &*g);
    }
    r.records.push_back(std::move(rec));
  }
  r.n_valid = valid_smiles.size();
  r.valid_fraction = static_cast<double>(r.n_valid) / static_cast<double>(r.n_requested);
  if (r.n_valid == 0) return r;

  const std::set<std::string> unique(valid_smiles.begin(), valid_smiles.end());
  r.unique_fraction = static_cast<double>(unique.size()) / static_cast<double>(r.n_valid);
  std::size_t novel = 0;
  for (const auto& s : unique) novel += train.count(s) ? 0 : 1;
  r.novelty_fraction = static_cast<double>(novel) / static_cast<double>(unique.size());
  if (opts.unique_at_k > 0) {
    r.k = opts.unique_at_k;
    const std::size_t take = std::min(opts.unique_at_k, valid_smiles.size());
    const std::set<std::string> head(valid_smiles.begin(), valid_smiles.begin() + static_cast<std::ptrdiff_t>(take));
    r.unique_at_k = static_cast<double>(head.size()) / static_cast<double>(take);
  }

  // Fingerprints in canonical-string order keep the sums independent of input order.
  std::vector<std::string> ordered = valid_smiles;
  std::sort(ordered.begin(), ordered.end());
  std::map<std::string, mol::Fingerprint> fp_of;
  for (const auto& [s, g] : first_graph) fp_of.emplace(s, mol::fingerprint(*g, opts.fp_radius, opts.fp_bits));
  std::vector<mol::Fingerprint> fps;
  fps.reserve(ordered.size());
  for (const auto& s : ordered) fps.push_back(fp_of.at(s));
  r.intdiv1 = internal_diversity(fps, 1);
  r.intdiv2 = internal_diversity(fps, 2);
  return r;
}

GenerationReport evaluate_smiles(std::span<const std::string> generated, const std::set<std::string>& train, const EvalOptions& opts) {
  std::vector<std::optional<mol::MolGraph>> graphs;
  graphs.reserve(generated.size());
  for (const auto& s : generated) {
    try {
      graphs.emplace_back(mol::parse_smiles(s));
    } catch (const Error&) {
      graphs.emplace_back(std::nullopt);
    }
  }
  GenerationReport r = evaluate(graphs, train, opts);
  for (std::size_t i = 0; i < generated.size(); ++i) r.records[i].input = generated[i];
  return r;
}

void write_report(const std::string& path, const GenerationReport& r) {
  auto out = open_out(path);
  out << "requested\t" << r.n_requested << "\n";
  out << "valid_count\t" << r.n_valid << "\n";
  out << "valid\t" << fmt(r.valid_fraction) << "\n";
  out << "unique\t" << fmt(r.unique_fraction) << "\n";
  if (r.unique_at_k) out << "unique@" << r.k << "\t" << fmt(*r.unique_at_k) << "\n";
  out << "novelty\t" << fmt(r.novelty_fraction) << "\n";
  out << "intdiv1\t" << fmt(r.intdiv1) << "\n";
  out << "intdiv2\t" << fmt(r.intdiv2) << "\n";
  if (!out) fail(ErrorCode::Io, "failed writing " + path);
}

void write_records_csv(const std::string& path, const GenerationReport& r) {
  auto out = open_out(path);
  out << "index,input,smiles,valid,W,logP,TPSA\n";
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& m = r.records[i];
    out << i << "," << csv_field(m.input) << "," << csv_field(m.smiles) << "," << (m.valid ? 1 : 0) << ",";
    if (m.valid) out << fmt(m.props.weight) << "," << fmt(m.props.logp) << "," << fmt(m.props.tpsa);
    else out << ",,";
    out << "\n";
  }
  if (!out) fail(ErrorCode::Io, "failed writing " + path);
}

Projection pca2d(const nd::Matrix& x, std::uint64_t seed) {
  const int n = x.rows, d = x.cols;
  if (n < 3) fail(ErrorCode::DegenerateData, "PCA needs at least 3 latent vectors");
  if (d < 1) fail(ErrorCode::DegenerateData, "PCA needs at least one dimension");
  Projection p;
  p.mean.assign(static_cast<std::size_t>(d), 0.0);
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < d; ++j) p.mean[static_cast<std::size_t>(j)] += x(r, j);
  }
  for (double& m : p.mean) m /= n;
  nd::Matrix c(n, d);
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < d; ++j) c(r, j) = x(r, j) - p.mean[static_cast<std::size_t>(j)];
  }
  nd::Matrix cov(d, d);
  for (int r = 0; r < n; ++r) {
    const double* row = c.row(r);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) cov(i, j) += row[i] * row[j];
    }
  }
  double total = 0.0;
  for (double& v : cov.data) v /= n;
  for (int i = 0; i < d; ++i) total += cov(i, i);
  if (!(total > 0.0)) fail(ErrorCode::DegenerateData, "latents have zero variance");

  // Orthogonal iteration on a 2-column block.
  nd::Rng rng(seed);
  std::vector<double> v0(static_cast<std::size_t>(d)), v1(static_cast<std::size_t>(d));
  for (auto& e : v0) e = rng.normal();
  for (auto& e : v1) e = rng.normal();
  auto apply = [&](const std::vector<double>& v) {
    std::vector<double> out(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += cov(i, j) * v[static_cast<std::size_t>(j)];
      out[static_cast<std::size_t>(i)] = s;
    }
    return out;
  };
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };
  auto normalize = [&](std::vector<double>& v) {
    const double nv = std::sqrt(dot(v, v));
    if (nv > 0.0) {
      for (auto& e : v) e /= nv;
    }
    return nv;
  };
  const double tiny = 1e-12 * total;
  normalize(v0);
  bool rank_one = false;
  double prev = -1.0;
  for (int it = 0; it < 5000; ++it) {
    auto w0 = apply(v0);
    auto w1 = apply(v1);
    normalize(w0);
    const double proj = dot(w1, w0);
    for (int i = 0; i < d; ++i) w1[static_cast<std::size_t>(i)] -= proj * w0[static_cast<std::size_t>(i)];
    const double n1 = normalize(w1);
    v0 = std::move(w0);
    v1 = std::move(w1);
    if (n1 <= tiny || d == 1) {
      rank_one = true;
      break;
    }
    const double ritz = dot(v0, apply(v0)) + dot(v1, apply(v1));
    if (std::abs(ritz - prev) <= 1e-15 * total && it > 10) break;
    prev = ritz;
  }
  // Rayleigh-Ritz rotation inside the block orders the two axes.
  double l0 = dot(v0, apply(v0)), l1 = 0.0;
  if (!rank_one) {
    const auto a0 = apply(v0), a1 = apply(v1);
    const double b00 = dot(v0, a0), b01 = dot(v0, a1), b11 = dot(v1, a1);
    const double theta = 0.5 * std::atan2(2.0 * b01, b00 - b11);
    const double cs = std::cos(theta), sn = std::sin(theta);
    std::vector<double> r0(static_cast<std::size_t>(d)), r1(static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < r0.size(); ++i) {
      r0[i] = cs * v0[i] + sn * v1[i];
      r1[i] = -sn * v0[i] + cs * v1[i];
    }
    v0 = std::move(r0);
    v1 = std::move(r1);
    l0 = dot(v0, apply(v0));
    l1 = dot(v1, apply(v1));
    if (l1 > l0) {
      std::swap(v0, v1);
      std::swap(l0, l1);
    }
    if (l1 <= tiny) rank_one = true;
  }
  if (rank_one) {
    std::fill(v1.begin(), v1.end(), 0.0);
    l1 = 0.0;
  }
  for (auto* v : {&v0, &v1}) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < v->size(); ++i) {
      if (std::abs((*v)[i]) > std::abs((*v)[arg]) + 1e-12) arg = i;
    }
    if ((*v)[arg] < 0.0) {
      for (auto& e : *v) e = -e;
    }
  }
  p.one_dimensional = rank_one;
  p.explained = std::clamp((l0 + l1) / total, 0.0, 1.0);
  p.components = nd::Matrix(2, d);
  std::copy(v0.begin(), v0.end(), p.components.row(0));
  std::copy(v1.begin(), v1.end(), p.components.row(1));
  p.coords = nd::Matrix(n, 2);
  for (int r = 0; r < n; ++r) {
    double a = 0.0, b = 0.0;
    for (int j = 0; j < d; ++j) {
      a += c(r, j) * v0[static_cast<std::size_t>(j)];
      b += c(r, j) * v1[static_cast<std::size_t>(j)];
    }
    p.coords(r, 0) = a;
    p.coords(r, 1) = b;
  }
  return p;
}

void write_projection_csv(const std::string& path, const Projection& p, std::span<const std::string> labels) {
  if (!labels.empty() && static_cast<int>(labels.size()) != p.coords.rows) fail(ErrorCode::ShapeMismatch, "one label per projected point");
  auto out = open_out(path);
  out << "x,y,label\n";
  for (int r = 0; r < p.coords.rows; ++r) {
    out << fmt(p.coords(r, 0)) << "," << fmt(p.coords(r, 1)) << "," << (labels.empty() ? "" : csv_field(labels[static_cast<std::size_t>(r)])) << "\n";
  }
  if (!out) fail(ErrorCode::Io, "failed writing " + path);
}

nd::Matrix interpolate(std::span<const double> z_a, std::span<const double> z_b, int k) {
  if (z_a.size() != z_b.size()) fail(ErrorCode::WidthMismatch, "interpolation endpoints differ in width");
  if (k < 1) fail(ErrorCode::BadRange, "need at least one interpolant");
  nd::Matrix out(k, static_cast<int>(z_a.size()));
  for (int i = 1; i <= k; ++i) {
    const double w = static_cast<double>(i) / static_cast<double>(k + 1);
    for (std::size_t j = 0; j < z_a.size(); ++j) out(i - 1, static_cast<int>(j)) = (1.0 - w) * z_a[j] + w * z_b[j];
  }
  return out;
}

}  // namespace jtk::eval
