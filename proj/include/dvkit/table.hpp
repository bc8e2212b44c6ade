#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dvkit/schema.hpp"
#include "dvkit/text.hpp"
#include "dvkit/vql.hpp"

namespace dvkit {

class TableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataTable {
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;
  std::optional<std::string> owner;  // table name used to prefix headers

  friend bool operator==(const DataTable&, const DataTable&) = default;
};

inline void validate_table(const DataTable& t) {
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    if (t.rows[r].size() != t.headers.size()) {
      throw TableError("row " + std::to_string(r + 1) + " has " + std::to_string(t.rows[r].size()) +
                       " cells, expected " + std::to_string(t.headers.size()));
    }
  }
}

inline std::size_t cell_count(const DataTable& t) { return t.rows.size() * t.headers.size(); }

inline constexpr std::size_t kDefaultCellLimit = 150;

/// Inclusive: a table of exactly `threshold` cells passes.
inline bool passes_cell_filter(const DataTable& t, std::size_t threshold = kDefaultCellLimit) {
  return cell_count(t) <= threshold;
}

/// `col : h1 | h2 row 1 : v11 | v12 row 2 : ...`
inline std::string encode_table(const DataTable& t) {
  validate_table(t);
  const auto check = [](const std::string& cell) {
    if (cell.find('|') != std::string::npos) {
      throw TableError("cell '" + cell + "' contains the reserved delimiter '|'");
    }
  };
  std::string out = "col :";
  for (std::size_t i = 0; i < t.headers.size(); ++i) {
    check(t.headers[i]);
    out += (i == 0 ? " " : " | ") + t.headers[i];
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out += " row " + std::to_string(r + 1) + " :";
    for (std::size_t i = 0; i < t.rows[r].size(); ++i) {
      check(t.rows[r][i]);
      out += (i == 0 ? " " : " | ") + t.rows[r][i];
    }
  }
  return out;
}

/// Inverse of encode_table for tables whose cells contain neither '|' nor
/// the text ` row <k> :`, and carry no leading or trailing blanks.
inline DataTable decode_table(std::string_view encoded) {
  constexpr std::string_view kHead = "col :";
  if (encoded.substr(0, kHead.size()) != kHead) throw TableError("encoded table must start with 'col :'");
  std::vector<std::string_view> segments;
  std::size_t pos = kHead.size();
  for (std::size_t row = 1;; ++row) {
    const std::string marker = " row " + std::to_string(row) + " :";
    std::size_t at = encoded.find(marker, pos);
    if (at == std::string_view::npos) {
      segments.push_back(encoded.substr(pos));
      break;
    }
    segments.push_back(encoded.substr(pos, at - pos));
    pos = at + marker.size();
  }
  const auto cells = [](std::string_view seg) {
    std::vector<std::string> out;
    if (seg.empty()) return out;
    // Every segment begins with the single space that follows ':'.
    seg.remove_prefix(1);
    std::size_t start = 0;
    while (true) {
      std::size_t bar = seg.find(" | ", start);
      if (bar == std::string_view::npos) {
        out.emplace_back(seg.substr(start));
        break;
      }
      out.emplace_back(seg.substr(start, bar - start));
      start = bar + 3;
    }
    return out;
  };
  DataTable t;
  t.headers = cells(segments.front());
  for (std::size_t i = 1; i < segments.size(); ++i) t.rows.push_back(cells(segments[i]));
  validate_table(t);
  return t;
}

namespace detail {

inline bool plain_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!text::is_alnum_ascii(c) && c != '_') return false;
  }
  return true;
}

/// `country` -> `artist.country`; `COUNT(Country)` -> `count(artist.country)`.
/// Headers that are neither are only lowercased.
inline std::string normalize_header(std::string_view header, const std::optional<std::string>& owner) {
  std::string h = text::to_lower(text::trim(header));
  if (!owner) return h;
  const std::string table = text::to_lower(*owner);
  if (plain_identifier(h)) return qualified_column(table, h);
  const std::size_t open = h.find('(');
  if (open != std::string::npos && h.back() == ')') {
    const std::string fn(text::trim(std::string_view(h).substr(0, open)));
    std::string inner(text::trim(std::string_view(h).substr(open + 1, h.size() - open - 2)));
    std::string distinct;
    if (inner.rfind("distinct ", 0) == 0) {
      distinct = "distinct ";
      inner = std::string(text::trim(std::string_view(inner).substr(9)));
    }
    if (vql::aggregate_from(fn) && plain_identifier(inner)) {
      return fn + "(" + distinct + qualified_column(table, inner) + ")";
    }
  }
  return h;
}

}  // namespace detail

/// Lowercases headers and prefixes them with the owning table when known.
/// Cell values are kept verbatim.
inline DataTable normalize_table(DataTable t) {
  for (auto& h : t.headers) h = detail::normalize_header(h, t.owner);
  if (t.owner) t.owner = text::to_lower(*t.owner);
  return t;
}

}  // namespace dvkit
