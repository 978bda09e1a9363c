#include "jtreekit/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace jtk::mol {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingArtifact, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  return out;
}

}  // namespace

std::vector<std::string> read_smiles_file(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto ws = line.find_first_of(" \t");
    out.push_back(ws == std::string::npos ? line : line.substr(0, ws));
  }
  return out;
}

void write_smiles_file(const std::string& path, const std::vector<std::string>& smiles,
                       const std::vector<std::string>& trailing_comments) {
  auto out = open_out(path);
  for (const auto& s : smiles) out << s << '\n';
  for (const auto& c : trailing_comments) out << "# " << c << '\n';
  if (!out) fail(ErrorCode::Io, "write failed: " + path);
}

std::vector<PropertyRecord> read_property_cache(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "smiles,W,logP,TPSA") {
    fail(ErrorCode::Format, "property cache header must be smiles,W,logP,TPSA");
  }
  std::vector<PropertyRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field[4];
    for (auto& f : field) {
      if (!std::getline(ss, f, ',')) fail(ErrorCode::Format, path + ":" + std::to_string(lineno) + ": expected 4 fields");
    }
    PropertyRecord r;
    r.smiles = field[0];
    try {
      r.props.weight = std::stod(field[1]);
      r.props.logp = std::stod(field[2]);
      r.props.tpsa = std::stod(field[3]);
    } catch (const std::exception&) {
      fail(ErrorCode::Format, path + ":" + std::to_string(lineno) + ": bad number");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_property_cache(const std::string& path, const std::vector<PropertyRecord>& records) {
  auto out = open_out(path);
  out << "smiles,W,logP,TPSA\n";
  char buf[128];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f\n", r.props.weight, r.props.logp, r.props.tpsa);
    out << r.smiles << buf;
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path);
}

}  // namespace jtk::mol
