#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "dvkit/dataset.hpp"

namespace testing_support {

inline std::string fixture(const std::string& name) { return std::string(DVKIT_FIXTURE_DIR) + "/" + name; }

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

inline const dvkit::SchemaCatalog& catalog() {
  static const dvkit::SchemaCatalog c = dvkit::load_schemas(fixture("schemas.json"));
  return c;
}

/// Database owning `table`; fixture table names are unique across databases.
inline const dvkit::DatabaseSchema& schema_owning(const std::string& table) {
  for (const auto& [_, s] : catalog().all()) {
    if (s.find_table(table) != nullptr) return s;
  }
  throw std::runtime_error("no fixture database owns table " + table);
}

}  // namespace testing_support
