#pragma once

// Source dataset records, JSON-lines ingestion, pre-processing filters,
// cross-domain partitioning and the per-split statistics reports.
//
// Line formats (one JSON object per line, UTF-8):
//   text2vis   {"id", "db_id", "question", "vql", "split"?}
//   visqa      {"id", "db_id", "question", "answer", "vql", "qtype",
//               "headers"?, "rows"?, "split"?}
//   tabletext  {"id", "source", "headers", "rows", "description", "split"?}
//   schema     {"db_id", "tables": [{"name", "columns": [...]}]}

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dvkit/random.hpp"
#include "dvkit/schema.hpp"
#include "dvkit/table.hpp"
#include "dvkit/text.hpp"
#include "dvkit/vql.hpp"

namespace dvkit {

/// Malformed input file: carries the 1-based line number (0 when the
/// problem is not tied to one line).
class DatasetError : public std::runtime_error {
 public:
  DatasetError(std::size_t line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { kTrain, kValid, kTest };

inline constexpr Split kAllSplits[] = {Split::kTrain, Split::kValid, Split::kTest};

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "";
}

inline std::optional<Split> split_from(std::string_view s) {
  const std::string w = text::to_lower(s);
  if (w == "train") return Split::kTrain;
  if (w == "valid" || w == "validation" || w == "dev") return Split::kValid;
  if (w == "test") return Split::kTest;
  return std::nullopt;
}

enum class DatasetKind { kText2Vis, kVisQA, kTableText };

inline std::optional<DatasetKind> dataset_kind_from(std::string_view s) {
  if (s == "text2vis") return DatasetKind::kText2Vis;
  if (s == "visqa") return DatasetKind::kVisQA;
  if (s == "tabletext") return DatasetKind::kTableText;
  return std::nullopt;
}

struct Text2VisRecord {
  std::string id;
  std::string db_id;
  std::string question;
  std::string vql;
  bool has_join = false;
  std::optional<Split> split;

  friend bool operator==(const Text2VisRecord&, const Text2VisRecord&) = default;
};

struct VisQARecord {
  std::string id;
  std::string db_id;
  std::string question;
  std::string answer;
  std::string vql;
  int question_type = 1;
  std::optional<DataTable> table;
  std::optional<Split> split;

  friend bool operator==(const VisQARecord&, const VisQARecord&) = default;
};

enum class TableTextSource { kChart2Text, kWikiTableText };

inline std::string_view to_string(TableTextSource s) {
  return s == TableTextSource::kChart2Text ? "chart2text" : "wikitabletext";
}

struct TableTextRecord {
  std::string id;
  TableTextSource source = TableTextSource::kChart2Text;
  DataTable table;
  std::string description;
  std::optional<Split> split;

  friend bool operator==(const TableTextRecord&, const TableTextRecord&) = default;
};

/// Key used for split assignment: the database for the NVBench-derived
/// kinds, the record itself for table-text.
inline const std::string& partition_key(const Text2VisRecord& r) { return r.db_id; }
inline const std::string& partition_key(const VisQARecord& r) { return r.db_id; }
inline const std::string& partition_key(const TableTextRecord& r) { return r.id; }

/// Derived from the parsed query; falls back to a keyword scan when the
/// query does not parse.
inline bool detect_join(std::string_view vql_text) {
  try {
    return vql::has_join(vql::parse_vql(vql_text));
  } catch (const std::exception&) {
    for (const auto& tok : text::alnum_tokens(vql_text)) {
      if (tok == "join") return true;
    }
    return false;
  }
}

// ---------------------------------------------------------------------------
// JSON conversion

namespace detail {

using json = nlohmann::json;

class FieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string id_field(const json& j, const char* key) {
  if (!j.contains(key)) throw FieldError(std::string("missing field '") + key + "'");
  const json& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw FieldError(std::string("field '") + key + "' must be a string or integer");
}

inline std::string string_field(const json& j, const char* key) {
  if (!j.contains(key)) throw FieldError(std::string("missing field '") + key + "'");
  const json& v = j.at(key);
  if (!v.is_string()) throw FieldError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

inline std::string cell_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

inline DataTable table_fields(const json& j) {
  DataTable t;
  if (!j.contains("headers") || !j.at("headers").is_array()) {
    throw FieldError("missing array field 'headers'");
  }
  for (const auto& h : j.at("headers")) t.headers.push_back(cell_string(h));
  if (!j.contains("rows") || !j.at("rows").is_array()) throw FieldError("missing array field 'rows'");
  for (const auto& row : j.at("rows")) {
    if (!row.is_array()) throw FieldError("'rows' must be an array of arrays");
    std::vector<std::string> cells;
    for (const auto& c : row) cells.push_back(cell_string(c));
    t.rows.push_back(std::move(cells));
  }
  try {
    validate_table(t);
  } catch (const TableError& e) {
    throw FieldError(e.what());
  }
  return t;
}

inline std::optional<Split> split_field(const json& j) {
  if (!j.contains("split") || j.at("split").is_null()) return std::nullopt;
  if (!j.at("split").is_string()) throw FieldError("field 'split' must be a string");
  auto s = split_from(j.at("split").get<std::string>());
  if (!s) throw FieldError("unknown split '" + j.at("split").get<std::string>() + "'");
  return s;
}

inline void from_json_record(const json& j, Text2VisRecord& r) {
  r.id = id_field(j, "id");
  r.db_id = string_field(j, "db_id");
  r.question = string_field(j, "question");
  r.vql = string_field(j, "vql");
  r.split = split_field(j);
  r.has_join = detect_join(r.vql);
}

inline void from_json_record(const json& j, VisQARecord& r) {
  r.id = id_field(j, "id");
  r.db_id = string_field(j, "db_id");
  r.question = string_field(j, "question");
  r.answer = string_field(j, "answer");
  r.vql = string_field(j, "vql");
  if (!j.contains("qtype") || !j.at("qtype").is_number_integer()) {
    throw FieldError("missing integer field 'qtype'");
  }
  r.question_type = j.at("qtype").get<int>();
  if (r.question_type < 1 || r.question_type > 3) {
    throw FieldError("qtype must be 1, 2 or 3, got " + std::to_string(r.question_type));
  }
  if (j.contains("headers")) r.table = table_fields(j);
  r.split = split_field(j);
}

inline void from_json_record(const json& j, TableTextRecord& r) {
  r.id = id_field(j, "id");
  const std::string source = text::to_lower(string_field(j, "source"));
  if (source == "chart2text") {
    r.source = TableTextSource::kChart2Text;
  } else if (source == "wikitabletext") {
    r.source = TableTextSource::kWikiTableText;
  } else {
    throw FieldError("unknown source '" + source + "'");
  }
  r.table = table_fields(j);
  r.description = string_field(j, "description");
  r.split = split_field(j);
}

inline void put_table(nlohmann::ordered_json& j, const DataTable& t) {
  j["headers"] = t.headers;
  j["rows"] = t.rows;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const Text2VisRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["db_id"] = r.db_id;
  j["question"] = r.question;
  j["vql"] = r.vql;
  if (r.split) j["split"] = to_string(*r.split);
  return j;
}

inline nlohmann::ordered_json to_json(const VisQARecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["db_id"] = r.db_id;
  j["question"] = r.question;
  j["answer"] = r.answer;
  j["vql"] = r.vql;
  j["qtype"] = r.question_type;
  if (r.table) detail::put_table(j, *r.table);
  if (r.split) j["split"] = to_string(*r.split);
  return j;
}

inline nlohmann::ordered_json to_json(const TableTextRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["source"] = to_string(r.source);
  detail::put_table(j, r.table);
  j["description"] = r.description;
  if (r.split) j["split"] = to_string(*r.split);
  return j;
}

// ---------------------------------------------------------------------------
// Loading

struct Reject {
  std::size_t line = 0;
  std::string reason;
};

template <typename Record>
struct LoadResult {
  std::vector<Record> records;
  std::vector<Reject> rejects;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Parses JSON-lines text. Lines that are not JSON objects raise
/// DatasetError; objects with missing or ill-typed fields go to `rejects`.
/// Duplicate ids raise DatasetError. Blank lines are skipped.
template <typename Record>
LoadResult<Record> parse_records(std::string_view content) {
  LoadResult<Record> out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    std::string_view line = content.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = (nl == std::string_view::npos) ? content.size() : nl + 1;
    ++line_no;
    if (text::is_blank(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DatasetError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw DatasetError(line_no, "expected a JSON object");
    Record r;
    try {
      detail::from_json_record(j, r);
    } catch (const detail::FieldError& e) {
      out.rejects.push_back(Reject{line_no, e.what()});
      continue;
    }
    if (!seen.insert(r.id).second) throw DatasetError(line_no, "duplicate id '" + r.id + "'");
    out.records.push_back(std::move(r));
  }
  return out;
}

template <typename Record>
LoadResult<Record> load_records(const std::string& path) {
  return parse_records<Record>(read_file(path));
}

template <typename Record>
std::string records_to_jsonl(const std::vector<Record>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Schemas

/// Schemas keyed by lowercase db_id.
class SchemaCatalog {
 public:
  void add(DatabaseSchema s) {
    validate_schema(s);
    const std::string key = text::to_lower(s.db_name);
    if (schemas_.contains(key)) throw SchemaError("duplicate schema for database '" + s.db_name + "'");
    schemas_.emplace(key, std::move(s));
  }

  [[nodiscard]] const DatabaseSchema* find(std::string_view db_id) const {
    auto it = schemas_.find(text::to_lower(db_id));
    return it == schemas_.end() ? nullptr : &it->second;
  }

  [[nodiscard]] const DatabaseSchema& at(std::string_view db_id) const {
    const DatabaseSchema* s = find(db_id);
    if (s == nullptr) throw SchemaError("no schema for database '" + std::string(db_id) + "'");
    return *s;
  }

  [[nodiscard]] std::size_t size() const { return schemas_.size(); }
  [[nodiscard]] bool empty() const { return schemas_.empty(); }
  [[nodiscard]] const std::map<std::string, DatabaseSchema>& all() const { return schemas_; }

 private:
  std::map<std::string, DatabaseSchema> schemas_;
};

namespace detail {

/// Our own layout, or a Spider `tables.json` entry (table_names_original +
/// column_names_original).
inline DatabaseSchema schema_from_json(const json& j) {
  DatabaseSchema s;
  s.db_name = string_field(j, "db_id");
  if (j.contains("table_names_original")) {
    for (const auto& name : j.at("table_names_original")) {
      s.tables.push_back(TableSchema{name.get<std::string>(), {}});
    }
    const json& types = j.contains("column_types") ? j.at("column_types") : json::array();
    std::size_t k = 0;
    for (const auto& pair : j.at("column_names_original")) {
      const int table = pair.at(0).get<int>();
      if (table >= 0 && static_cast<std::size_t>(table) < s.tables.size()) {
        std::string type = k < types.size() ? types.at(k).get<std::string>() : "";
        s.tables[table].columns.push_back(ColumnDef{pair.at(1).get<std::string>(), type});
      }
      ++k;
    }
    return s;
  }
  if (!j.contains("tables") || !j.at("tables").is_array()) throw FieldError("missing array field 'tables'");
  for (const auto& t : j.at("tables")) {
    TableSchema ts;
    ts.name = string_field(t, "name");
    if (!t.contains("columns") || !t.at("columns").is_array()) {
      throw FieldError("table '" + ts.name + "' lacks a 'columns' array");
    }
    for (const auto& c : t.at("columns")) {
      if (c.is_string()) {
        ts.columns.push_back(ColumnDef{c.get<std::string>(), {}});
      } else {
        ColumnDef cd{string_field(c, "name"), {}};
        if (c.contains("type") && c.at("type").is_string()) cd.type = c.at("type").get<std::string>();
        ts.columns.push_back(std::move(cd));
      }
    }
    s.tables.push_back(std::move(ts));
  }
  return s;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const DatabaseSchema& s) {
  nlohmann::ordered_json j;
  j["db_id"] = s.db_name;
  j["tables"] = nlohmann::ordered_json::array();
  for (const auto& t : s.tables) {
    nlohmann::ordered_json jt;
    jt["name"] = t.name;
    jt["columns"] = nlohmann::ordered_json::array();
    for (const auto& c : t.columns) jt["columns"].push_back(c.name);
    j["tables"].push_back(std::move(jt));
  }
  return j;
}

/// Accepts a single schema object, a JSON array of them, or JSON lines.
inline SchemaCatalog parse_schemas(std::string_view content) {
  SchemaCatalog catalog;
  const auto add = [&catalog](const nlohmann::json& j, std::size_t line) {
    try {
      catalog.add(detail::schema_from_json(j));
    } catch (const detail::FieldError& e) {
      throw DatasetError(line, e.what());
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(line, e.what());
    } catch (const SchemaError& e) {
      throw DatasetError(line, e.what());
    }
  };
  if (text::is_blank(content)) return catalog;
  nlohmann::json whole = nlohmann::json::parse(content, nullptr, false);
  if (!whole.is_discarded()) {
    if (whole.is_array()) {
      for (const auto& j : whole) add(j, 0);
    } else {
      add(whole, 1);
    }
    return catalog;
  }
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    std::string_view line = content.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = (nl == std::string_view::npos) ? content.size() : nl + 1;
    ++line_no;
    if (text::is_blank(line)) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DatasetError(line_no, "invalid schema JSON");
    add(j, line_no);
  }
  return catalog;
}

inline SchemaCatalog load_schemas(const std::string& path) { return parse_schemas(read_file(path)); }

// ---------------------------------------------------------------------------
// Pre-processing

struct PreprocessConfig {
  std::size_t cell_limit = kDefaultCellLimit;
};

template <typename Record>
struct Dropped {
  Record record;
  std::string reason;  // "incomplete" | "cjk" | "cell-limit"
};

template <typename Record>
struct Preprocessed {
  std::vector<Record> kept;
  std::vector<Dropped<Record>> dropped;
};

inline std::optional<std::string> drop_reason(const Text2VisRecord& r, const PreprocessConfig&) {
  if (text::is_blank(r.question) || text::is_blank(r.vql)) return "incomplete";
  if (text::contains_cjk(r.question)) return "cjk";
  return std::nullopt;
}

inline std::optional<std::string> drop_reason(const VisQARecord& r, const PreprocessConfig&) {
  if (text::is_blank(r.question) || text::is_blank(r.answer) || text::is_blank(r.vql)) {
    return "incomplete";
  }
  if (text::contains_cjk(r.question)) return "cjk";
  return std::nullopt;
}

/// The cell limit applies to Chart2Text only; WikiTableText tables are small
/// by construction.
inline std::optional<std::string> drop_reason(const TableTextRecord& r, const PreprocessConfig& cfg) {
  if (text::is_blank(r.description) || r.table.headers.empty()) return "incomplete";
  if (r.source == TableTextSource::kChart2Text && !passes_cell_filter(r.table, cfg.cell_limit)) {
    return "cell-limit";
  }
  return std::nullopt;
}

template <typename Record>
Preprocessed<Record> preprocess(std::vector<Record> records, const PreprocessConfig& cfg = {}) {
  Preprocessed<Record> out;
  for (auto& r : records) {
    if (auto reason = drop_reason(r, cfg)) {
      out.dropped.push_back(Dropped<Record>{std::move(r), std::move(*reason)});
    } else {
      out.kept.push_back(std::move(r));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Partitioning

struct SplitRatios {
  double train = 0.7;
  double valid = 0.1;
  double test = 0.2;

  [[nodiscard]] double at(Split s) const {
    return s == Split::kTrain ? train : (s == Split::kValid ? valid : test);
  }
};

using SplitAssignment = std::map<std::string, Split>;

namespace detail {

inline double ratio_deviation(const std::array<double, 3>& assigned, double total,
                              const SplitRatios& ratios) {
  double dev = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    dev += std::abs(assigned[k] / total - ratios.at(kAllSplits[k]));
  }
  return dev;
}

/// Greedy largest-deficit assignment over `sizes` in the given order,
/// followed by local refinement (single moves, then pairwise swaps) while
/// the total absolute ratio deviation strictly decreases. No split is left
/// empty when there are at least three items.
inline std::vector<Split> assign_in_order(const std::vector<std::size_t>& sizes,
                                          const SplitRatios& ratios) {
  const std::size_t n = sizes.size();
  double total = 0.0;
  for (auto s : sizes) total += static_cast<double>(s);
  if (total <= 0.0) total = 1.0;
  std::vector<std::size_t> where(n, 0);
  std::array<double, 3> mass{0.0, 0.0, 0.0};
  std::array<std::size_t, 3> members{0, 0, 0};

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_deficit = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < 3; ++k) {
      const double deficit = ratios.at(kAllSplits[k]) * total - mass[k];
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = k;
      }
    }
    where[i] = best;
    mass[best] += static_cast<double>(sizes[i]);
    ++members[best];
  }

  const auto move = [&](std::size_t i, std::size_t to) {
    mass[where[i]] -= static_cast<double>(sizes[i]);
    --members[where[i]];
    where[i] = to;
    mass[to] += static_cast<double>(sizes[i]);
    ++members[to];
  };

  // Fill empty splits from the most populated one, choosing the item whose
  // move leaves the lowest deviation.
  if (n >= 3) {
    for (std::size_t k = 0; k < 3; ++k) {
      if (members[k] > 0) continue;
      std::size_t donor = static_cast<std::size_t>(
          std::max_element(members.begin(), members.end()) - members.begin());
      std::size_t pick = n;
      double best_dev = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (where[i] != donor) continue;
        auto trial = mass;
        trial[donor] -= static_cast<double>(sizes[i]);
        trial[k] += static_cast<double>(sizes[i]);
        const double dev = ratio_deviation(trial, total, ratios);
        if (dev < best_dev) {
          best_dev = dev;
          pick = i;
        }
      }
      move(pick, k);
    }
  }

  constexpr double kEps = 1e-12;
  while (true) {
    const double current = ratio_deviation(mass, total, ratios);
    double best_dev = current - kEps;
    std::optional<std::pair<std::size_t, std::size_t>> best_move;  // (item, split)
    std::optional<std::pair<std::size_t, std::size_t>> best_swap;  // (item, item)
    for (std::size_t i = 0; i < n; ++i) {
      if (n >= 3 && members[where[i]] == 1) continue;
      for (std::size_t k = 0; k < 3; ++k) {
        if (k == where[i]) continue;
        auto trial = mass;
        trial[where[i]] -= static_cast<double>(sizes[i]);
        trial[k] += static_cast<double>(sizes[i]);
        const double dev = ratio_deviation(trial, total, ratios);
        if (dev < best_dev) {
          best_dev = dev;
          best_move = {i, k};
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (where[i] == where[j] || sizes[i] == sizes[j]) continue;
        auto trial = mass;
        const double delta = static_cast<double>(sizes[j]) - static_cast<double>(sizes[i]);
        trial[where[i]] += delta;
        trial[where[j]] -= delta;
        const double dev = ratio_deviation(trial, total, ratios);
        if (dev < best_dev) {
          best_dev = dev;
          best_swap = {i, j};
          best_move.reset();
        }
      }
    }
    if (best_swap) {
      const auto [i, j] = *best_swap;
      const std::size_t wi = where[i];
      const std::size_t wj = where[j];
      move(i, wj);
      move(j, wi);
    } else if (best_move) {
      move(best_move->first, best_move->second);
    } else {
      break;
    }
  }

  std::vector<Split> out;
  out.reserve(n);
  for (auto w : where) out.push_back(kAllSplits[w]);
  return out;
}

}  // namespace detail

/// Assigns whole keys (databases) to splits. Keys are shuffled with the
/// seed, then assigned greedily to the split with the largest remaining
/// instance deficit and refined locally. Deterministic for a fixed seed.
inline SplitAssignment partition_by_database(const std::map<std::string, std::size_t>& key_sizes,
                                             const SplitRatios& ratios, std::uint64_t seed) {
  const double sum = ratios.train + ratios.valid + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9 || ratios.train < 0 || ratios.valid < 0 || ratios.test < 0) {
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  }
  if (key_sizes.size() < 3) {
    throw std::invalid_argument("partitioning needs at least 3 databases, got " +
                                std::to_string(key_sizes.size()));
  }
  std::vector<std::string> keys;
  for (const auto& [k, _] : key_sizes) keys.push_back(k);
  Rng rng(seed);
  shuffle(keys, rng);
  std::vector<std::size_t> sizes;
  for (const auto& k : keys) sizes.push_back(key_sizes.at(k));
  const auto splits = detail::assign_in_order(sizes, ratios);
  SplitAssignment out;
  for (std::size_t i = 0; i < keys.size(); ++i) out[keys[i]] = splits[i];
  return out;
}

template <typename Record>
std::map<std::string, std::size_t> partition_sizes(const std::vector<Record>& records) {
  std::map<std::string, std::size_t> sizes;
  for (const auto& r : records) ++sizes[partition_key(r)];
  return sizes;
}

template <typename Record>
SplitAssignment partition_records(const std::vector<Record>& records, const SplitRatios& ratios,
                                  std::uint64_t seed) {
  return partition_by_database(partition_sizes(records), ratios, seed);
}

/// The published assignment when every record carries a split field.
/// Throws when one key is published under two different splits.
template <typename Record>
std::optional<SplitAssignment> published_splits(const std::vector<Record>& records) {
  if (records.empty()) return std::nullopt;
  SplitAssignment out;
  for (const auto& r : records) {
    if (!r.split) return std::nullopt;
    auto [it, inserted] = out.emplace(partition_key(r), *r.split);
    if (!inserted && it->second != *r.split) {
      throw DatasetError(0, "key '" + partition_key(r) + "' is published in two splits");
    }
  }
  return out;
}

template <typename Record>
std::optional<Split> split_of(const Record& r, const SplitAssignment* assignment) {
  if (r.split) return r.split;
  if (assignment != nullptr) {
    if (auto it = assignment->find(partition_key(r)); it != assignment->end()) return it->second;
  }
  return std::nullopt;
}

inline nlohmann::ordered_json to_json(const SplitAssignment& a) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, s] : a) j[k] = to_string(s);
  return j;
}

inline SplitAssignment split_assignment_from_json(const nlohmann::json& j) {
  SplitAssignment out;
  if (!j.is_object()) throw DatasetError(0, "split assignment must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    auto s = v.is_string() ? split_from(v.get<std::string>()) : std::nullopt;
    if (!s) throw DatasetError(0, "invalid split for key '" + k + "'");
    out[k] = *s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct Text2VisStats {
  struct Bucket {
    std::size_t instances = 0;
    std::size_t without_join = 0;
    std::size_t databases = 0;
    std::size_t databases_without_join = 0;
  };
  Bucket total;
  std::map<std::string, Bucket> by_split;  // train/valid/test/unassigned
};

struct VisQAStats {
  struct Bucket {
    std::size_t qa_pairs = 0;
    std::size_t dv_queries = 0;
    std::size_t databases = 0;
    std::array<std::size_t, 3> by_type{0, 0, 0};
  };
  Bucket total;
  std::map<std::string, Bucket> by_split;
};

struct TableTextStats {
  struct Bucket {
    std::size_t instances = 0;
    std::size_t min_cells = 0;
    std::size_t max_cells = 0;
    std::size_t within_limit = 0;
    std::size_t over_limit = 0;
  };
  std::size_t cell_limit = kDefaultCellLimit;
  std::map<std::string, Bucket> by_source;                             // totals per source
  std::map<std::string, std::map<std::string, Bucket>> by_source_split;  // source -> split
};

namespace detail {

template <typename Record>
std::string split_label(const Record& r, const SplitAssignment* a) {
  auto s = split_of(r, a);
  return s ? std::string(to_string(*s)) : std::string("unassigned");
}

}  // namespace detail

inline Text2VisStats compute_stats(const std::vector<Text2VisRecord>& records,
                                   const SplitAssignment* assignment = nullptr) {
  Text2VisStats st;
  std::map<std::string, std::set<std::string>> dbs;
  std::map<std::string, std::set<std::string>> dbs_no_join;
  const auto add = [](Text2VisStats::Bucket& b, const Text2VisRecord& r) {
    ++b.instances;
    if (!r.has_join) ++b.without_join;
  };
  for (const auto& r : records) {
    const std::string split = detail::split_label(r, assignment);
    add(st.total, r);
    add(st.by_split[split], r);
    for (const std::string& key : {std::string("*"), split}) {
      dbs[key].insert(r.db_id);
      if (!r.has_join) dbs_no_join[key].insert(r.db_id);
    }
  }
  st.total.databases = dbs["*"].size();
  st.total.databases_without_join = dbs_no_join["*"].size();
  for (auto& [split, b] : st.by_split) {
    b.databases = dbs[split].size();
    b.databases_without_join = dbs_no_join[split].size();
  }
  return st;
}

inline VisQAStats compute_stats(const std::vector<VisQARecord>& records,
                                const SplitAssignment* assignment = nullptr) {
  VisQAStats st;
  std::map<std::string, std::set<std::string>> dbs;
  std::map<std::string, std::set<std::pair<std::string, std::string>>> queries;
  for (const auto& r : records) {
    const std::string split = detail::split_label(r, assignment);
    for (auto* b : {&st.total, &st.by_split[split]}) {
      ++b->qa_pairs;
      ++b->by_type[static_cast<std::size_t>(r.question_type - 1)];
    }
    for (const std::string& key : {std::string("*"), split}) {
      dbs[key].insert(r.db_id);
      queries[key].insert({r.db_id, r.vql});
    }
  }
  st.total.databases = dbs["*"].size();
  st.total.dv_queries = queries["*"].size();
  for (auto& [split, b] : st.by_split) {
    b.databases = dbs[split].size();
    b.dv_queries = queries[split].size();
  }
  return st;
}

inline TableTextStats compute_stats(const std::vector<TableTextRecord>& records,
                                    const SplitAssignment* assignment = nullptr,
                                    std::size_t cell_limit = kDefaultCellLimit) {
  TableTextStats st;
  st.cell_limit = cell_limit;
  const auto add = [cell_limit](TableTextStats::Bucket& b, std::size_t cells) {
    b.min_cells = b.instances == 0 ? cells : std::min(b.min_cells, cells);
    b.max_cells = b.instances == 0 ? cells : std::max(b.max_cells, cells);
    ++b.instances;
    if (cells <= cell_limit) {
      ++b.within_limit;
    } else {
      ++b.over_limit;
    }
  };
  for (const auto& r : records) {
    const std::string source(to_string(r.source));
    const std::size_t cells = cell_count(r.table);
    add(st.by_source[source], cells);
    add(st.by_source_split[source][detail::split_label(r, assignment)], cells);
  }
  return st;
}

inline nlohmann::ordered_json to_json(const Text2VisStats& st) {
  const auto bucket = [](const Text2VisStats::Bucket& b) {
    nlohmann::ordered_json j;
    j["instances"] = b.instances;
    j["without_join"] = b.without_join;
    j["with_join"] = b.instances - b.without_join;
    j["databases"] = b.databases;
    j["databases_without_join"] = b.databases_without_join;
    return j;
  };
  nlohmann::ordered_json j;
  j["kind"] = "text2vis";
  j["total"] = bucket(st.total);
  j["splits"] = nlohmann::ordered_json::object();
  for (const auto& [split, b] : st.by_split) j["splits"][split] = bucket(b);
  return j;
}

inline nlohmann::ordered_json to_json(const VisQAStats& st) {
  const auto bucket = [](const VisQAStats::Bucket& b) {
    nlohmann::ordered_json j;
    j["qa_pairs"] = b.qa_pairs;
    j["dv_queries"] = b.dv_queries;
    j["databases"] = b.databases;
    j["type1"] = b.by_type[0];
    j["type2"] = b.by_type[1];
    j["type3"] = b.by_type[2];
    return j;
  };
  nlohmann::ordered_json j;
  j["kind"] = "visqa";
  j["total"] = bucket(st.total);
  j["splits"] = nlohmann::ordered_json::object();
  for (const auto& [split, b] : st.by_split) j["splits"][split] = bucket(b);
  return j;
}

inline nlohmann::ordered_json to_json(const TableTextStats& st) {
  const auto bucket = [](const TableTextStats::Bucket& b) {
    nlohmann::ordered_json j;
    j["instances"] = b.instances;
    j["min_cells"] = b.min_cells;
    j["max_cells"] = b.max_cells;
    j["within_limit"] = b.within_limit;
    j["over_limit"] = b.over_limit;
    return j;
  };
  nlohmann::ordered_json j;
  j["kind"] = "tabletext";
  j["cell_limit"] = st.cell_limit;
  j["sources"] = nlohmann::ordered_json::object();
  for (const auto& [source, b] : st.by_source) {
    auto js = bucket(b);
    js["splits"] = nlohmann::ordered_json::object();
    for (const auto& [split, sb] : st.by_source_split.at(source)) js["splits"][split] = bucket(sb);
    j["sources"][source] = std::move(js);
  }
  return j;
}

}  // namespace dvkit
