#pragma once

#include <string>
#include <vector>

#include "jtreekit/molgraph.hpp"
#include "jtreekit/properties.hpp"

namespace jtk::mol {

// One SMILES per line; blank lines and lines starting with '#' are skipped.
// Anything after the first whitespace on a line is ignored.
std::vector<std::string> read_smiles_file(const std::string& path);
void write_smiles_file(const std::string& path, const std::vector<std::string>& smiles,
                       const std::vector<std::string>& trailing_comments = {});

struct PropertyRecord {
  std::string smiles;
  Properties props;
};

// Header `smiles,W,logP,TPSA`, one comma-separated record per line.
std::vector<PropertyRecord> read_property_cache(const std::string& path);
void write_property_cache(const std::string& path, const std::vector<PropertyRecord>& records);

}  // namespace jtk::mol
