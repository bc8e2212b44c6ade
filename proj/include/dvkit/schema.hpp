#pragma once

// Database schema model: validation, case normalization, n-gram based
// filtration against a natural-language question, and the `| db | t : t.c`
// linearization together with its inverse.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dvkit/text.hpp"

namespace dvkit {

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ColumnDef {
  std::string name;
  std::string type;  // optional; empty when undeclared

  friend bool operator==(const ColumnDef&, const ColumnDef&) = default;
};

struct TableSchema {
  std::string name;
  std::vector<ColumnDef> columns;

  /// Case-insensitive lookup.
  [[nodiscard]] const ColumnDef* find_column(std::string_view col) const {
    for (const auto& c : columns) {
      if (text::iequals(c.name, col)) return &c;
    }
    return nullptr;
  }

  friend bool operator==(const TableSchema&, const TableSchema&) = default;
};

struct DatabaseSchema {
  std::string db_name;
  std::vector<TableSchema> tables;

  /// Case-insensitive lookup.
  [[nodiscard]] const TableSchema* find_table(std::string_view table) const {
    for (const auto& t : tables) {
      if (text::iequals(t.name, table)) return &t;
    }
    return nullptr;
  }

  friend bool operator==(const DatabaseSchema&, const DatabaseSchema&) = default;
};

/// Throws SchemaError unless every table has at least one column, and table
/// and column names are non-empty and unique (case-insensitively).
inline void validate_schema(const DatabaseSchema& s) {
  if (s.db_name.empty()) throw SchemaError("schema has an empty database name");
  std::set<std::string> table_names;
  for (const auto& t : s.tables) {
    if (t.name.empty()) throw SchemaError("database '" + s.db_name + "' has a table with an empty name");
    if (!table_names.insert(text::to_lower(t.name)).second) {
      throw SchemaError("duplicate table '" + t.name + "' in database '" + s.db_name + "'");
    }
    if (t.columns.empty()) throw SchemaError("table '" + t.name + "' has no columns");
    std::set<std::string> col_names;
    for (const auto& c : t.columns) {
      if (c.name.empty()) throw SchemaError("table '" + t.name + "' has a column with an empty name");
      if (!col_names.insert(text::to_lower(c.name)).second) {
        throw SchemaError("duplicate column '" + c.name + "' in table '" + t.name + "'");
      }
    }
  }
}

/// Lowercases every name. Column types are left alone.
inline DatabaseSchema normalize_schema(DatabaseSchema s) {
  s.db_name = text::to_lower(s.db_name);
  for (auto& t : s.tables) {
    t.name = text::to_lower(t.name);
    for (auto& c : t.columns) c.name = text::to_lower(c.name);
  }
  return s;
}

/// `table.column`, the rendering used in schema encodings and normalized
/// queries.
inline std::string qualified_column(std::string_view table, std::string_view column) {
  std::string out(table);
  out += '.';
  out += column;
  return out;
}

namespace detail {

inline void require_delimiter_free(std::string_view name, std::string_view what) {
  if (name.find_first_of("|,:") != std::string_view::npos) {
    throw SchemaError(std::string(what) + " '" + std::string(name) +
                      "' contains a reserved delimiter ('|', ',' or ':')");
  }
}

}  // namespace detail

/// `| <db> | <t1> : <t1>.<c1>, <t1>.<c2> | <t2> : ...`
inline std::string encode_schema(const DatabaseSchema& s) {
  detail::require_delimiter_free(s.db_name, "database name");
  std::string out = "| " + s.db_name;
  for (const auto& t : s.tables) {
    detail::require_delimiter_free(t.name, "table name");
    out += " | " + t.name + " :";
    bool first = true;
    for (const auto& c : t.columns) {
      detail::require_delimiter_free(c.name, "column name");
      out += first ? " " : ", ";
      out += qualified_column(t.name, c.name);
      first = false;
    }
  }
  return out;
}

/// Inverse of encode_schema for delimiter-free schemas. Column types are
/// not part of the encoding and come back empty.
inline DatabaseSchema decode_schema(std::string_view encoded) {
  std::vector<std::string_view> blocks;
  std::size_t start = 0;
  while (true) {
    std::size_t bar = encoded.find('|', start);
    if (bar == std::string_view::npos) {
      blocks.push_back(encoded.substr(start));
      break;
    }
    blocks.push_back(encoded.substr(start, bar - start));
    start = bar + 1;
  }
  if (blocks.size() < 2 || !text::trim(blocks[0]).empty()) {
    throw SchemaError("encoded schema must start with '| <db>'");
  }
  DatabaseSchema s;
  s.db_name = std::string(text::trim(blocks[1]));
  for (std::size_t i = 2; i < blocks.size(); ++i) {
    std::string_view block = blocks[i];
    std::size_t colon = block.find(':');
    if (colon == std::string_view::npos) throw SchemaError("table block without ':'");
    TableSchema t;
    t.name = std::string(text::trim(block.substr(0, colon)));
    std::string_view cols = block.substr(colon + 1);
    std::size_t pos = 0;
    while (pos <= cols.size()) {
      std::size_t comma = cols.find(',', pos);
      std::string_view item =
          text::trim(cols.substr(pos, comma == std::string_view::npos ? cols.npos : comma - pos));
      const std::string prefix = t.name + ".";
      if (item.substr(0, prefix.size()) != prefix) {
        throw SchemaError("column '" + std::string(item) + "' lacks the '" + prefix + "' prefix");
      }
      t.columns.push_back(ColumnDef{std::string(item.substr(prefix.size())), {}});
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    s.tables.push_back(std::move(t));
  }
  return s;
}

struct FilterConfig {
  int max_n = 3;
  bool match_columns = true;
};

/// Every contiguous n-gram (1 <= n <= max_n) of `tokens`, space-joined.
inline std::set<std::string> ngrams(const std::vector<std::string>& tokens, int max_n) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string gram;
    for (std::size_t n = 0; n < static_cast<std::size_t>(max_n) && i + n < tokens.size(); ++n) {
      if (n > 0) gram += ' ';
      gram += tokens[i + n];
      out.insert(gram);
    }
  }
  return out;
}

/// Keeps the tables whose name (or, with match_columns, any column name)
/// shares an n-gram with the question. Retained tables keep all columns.
/// Falls back to the full schema when nothing matches.
inline DatabaseSchema filter_schema(std::string_view question, const DatabaseSchema& s,
                                    const FilterConfig& cfg = {}) {
  if (cfg.max_n < 1) throw std::invalid_argument("filter_schema: max_n must be >= 1");
  const std::set<std::string> q_grams = ngrams(text::alnum_tokens(question), cfg.max_n);
  const auto overlaps = [&](std::string_view identifier) {
    for (const auto& g : ngrams(text::alnum_tokens(identifier), cfg.max_n)) {
      if (q_grams.contains(g)) return true;
    }
    return false;
  };

  DatabaseSchema out{s.db_name, {}};
  for (const auto& t : s.tables) {
    bool hit = overlaps(t.name);
    if (!hit && cfg.match_columns) {
      for (const auto& c : t.columns) {
        if (overlaps(c.name)) {
          hit = true;
          break;
        }
      }
    }
    if (hit) out.tables.push_back(t);
  }
  if (out.tables.empty()) return s;
  return out;
}

}  // namespace dvkit
