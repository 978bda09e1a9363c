#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "jtreekit/ndtensor.hpp"

namespace jtk::nd {

namespace {

constexpr const char* kMagic = "jtreekit-checkpoint";
constexpr int kVersion = 1;

void put_f32(std::string& out, double x) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(x));
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

double get_f32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return static_cast<double>(std::bit_cast<float>(bits));
}

bool plain_token(const std::string& s) {
  if (s.empty()) return false;
  for (unsigned char c : s) {
    if (c <= ' ' || c > '~') return false;
  }
  return true;
}

}  // namespace

void Checkpoint::add_params(const ParamStore& store, const std::string& prefix) {
  for (const Param* p : store.all()) {
    if (p->name.rfind(prefix, 0) == 0) tensors[p->name] = p->value;
  }
}

void Checkpoint::load_params(ParamStore& store, const std::string& prefix) const {
  for (Param* p : store.all()) {
    if (p->name.rfind(prefix, 0) != 0) continue;
    const auto it = tensors.find(p->name);
    if (it == tensors.end()) fail(ErrorCode::MissingArtifact, "checkpoint lacks tensor " + p->name);
    if (!it->second.same_shape(p->value)) fail(ErrorCode::ShapeMismatch, "checkpoint tensor " + p->name + " has a different shape");
    p->value = it->second;
  }
}

const Matrix& Checkpoint::tensor(const std::string& name) const {
  const auto it = tensors.find(name);
  if (it == tensors.end()) fail(ErrorCode::MissingArtifact, "checkpoint lacks tensor " + name);
  return it->second;
}

std::string Checkpoint::serialize() const {
  std::string out = std::string(kMagic) + " " + std::to_string(kVersion) + "\n";
  for (const auto& [k, v] : meta) {
    if (!plain_token(k) || v.find('\n') != std::string::npos) fail(ErrorCode::Format, "metadata entries must be single-line tokens");
    out += "meta " + k + " " + v + "\n";
  }
  for (const auto& [name, m] : tensors) {
    if (!plain_token(name)) fail(ErrorCode::Format, "tensor names must be printable without spaces");
    out += "tensor " + name + " " + std::to_string(m.rows) + " " + std::to_string(m.cols) + " f32\n";
  }
  out += "end\n";
  for (const auto& [_, m] : tensors) {
    for (double x : m.data) put_f32(out, x);
  }
  return out;
}

Checkpoint Checkpoint::deserialize(const std::string& bytes) {
  Checkpoint c;
  std::size_t pos = 0;
  auto next_line = [&]() {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) fail(ErrorCode::Format, "truncated checkpoint manifest");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  {
    std::istringstream head(next_line());
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kMagic) fail(ErrorCode::Format, "not a checkpoint file");
    if (version != kVersion) fail(ErrorCode::Format, "unsupported checkpoint version " + std::to_string(version));
  }
  std::vector<std::pair<std::string, std::pair<int, int>>> order;
  while (true) {
    const std::string line = next_line();
    if (line == "end") break;
    if (line.rfind("meta ", 0) == 0) {
      const auto sp = line.find(' ', 5);
      if (sp == std::string::npos) fail(ErrorCode::Format, "bad meta line: " + line);
      c.meta[line.substr(5, sp - 5)] = line.substr(sp + 1);
      continue;
    }
    std::istringstream ls(line);
    std::string kw, name, dtype;
    int rows = -1, cols = -1;
    ls >> kw >> name >> rows >> cols >> dtype;
    if (kw != "tensor" || rows < 0 || cols < 0 || dtype != "f32") fail(ErrorCode::Format, "bad manifest line: " + line);
    order.push_back({name, {rows, cols}});
  }
  std::size_t need = 0;
  for (const auto& [_, shape] : order) need += 4 * static_cast<std::size_t>(shape.first) * static_cast<std::size_t>(shape.second);
  if (bytes.size() - pos != need) fail(ErrorCode::Format, "checkpoint payload size does not match its manifest");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (const auto& [name, shape] : order) {
    Matrix m(shape.first, shape.second);
    for (double& x : m.data) {
      x = get_f32(p);
      p += 4;
    }
    c.tensors[name] = std::move(m);
  }
  return c;
}

void Checkpoint::save(const std::string& path) const {
  const std::string bytes = serialize();
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingArtifact, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace jtk::nd
