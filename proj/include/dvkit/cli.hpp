#pragma once

// Command-line front end. `run` takes argv without the program name and
// writes to the given streams, so it can be driven in-process.
//
// Exit codes: 0 ok, 1 internal, 2 usage, 3 I/O, 4 schema/dataset mismatch,
// 5 malformed input. Errors go to the error stream as one JSON object:
//   {"error":{"code":4,"kind":"mismatch","message":"..."}}

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dvkit/corpus.hpp"
#include "dvkit/dataset.hpp"
#include "dvkit/metrics.hpp"
#include "dvkit/schema.hpp"
#include "dvkit/table.hpp"
#include "dvkit/vql.hpp"

namespace dvkit::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kIo = 3,
  kMismatch = 4,
  kMalformed = 5,
};

/// Inputs that do not fit together: wrong db id, unequal prediction/gold
/// sets, and the like.
class MismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string schema_path;
  std::string db_id;
  std::string query;
  std::string question;
  std::string input;
  std::string output;
  std::string output_dir;
  std::string table_path;
  std::string kind;
  std::string task;
  std::string pred_path;
  std::string gold_path;
  std::string assignment_path;
  std::string text2vis_path;
  std::string visqa_path;
  std::string tabletext_path;
  std::string vocab_path;
  std::optional<std::uint64_t> seed;
  double mask_rate = 0.15;
  double mean_span = 3.0;
  double temperature = 2.0;
  std::size_t size_cap = 0;  // 0: uncapped
  std::size_t count = 0;
  std::vector<double> ratios{0.7, 0.1, 0.2};
  bool spaced_parens = false;
  bool normalize_gold = true;
  bool match_columns = true;
  int max_n = 3;
  std::size_t cell_limit = kDefaultCellLimit;
  bool lenient = false;
  bool no_dual = false;
  bool no_mlm = false;
  bool skip_invalid = false;
  bool per_sample = false;
};

namespace detail {

/// Writes via a sibling temp file and rename, so readers never see a
/// partial file.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path() && !fs::exists(target.parent_path())) {
    throw IoError("output directory '" + target.parent_path().string() + "' does not exist");
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into '" + path + "'");
  }
}

inline void emit(const std::string& content, const std::string& output, std::ostream& out) {
  if (output.empty() || output == "-") {
    out << content;
  } else {
    write_atomic(output, content);
  }
}

inline SchemaCatalog load_catalog(const Config& c) {
  if (c.schema_path.empty()) throw UsageError("--schema is required");
  return load_schemas(c.schema_path);
}

/// The schema named by --db, or the only one in the file.
inline const DatabaseSchema& pick_schema(const SchemaCatalog& catalog, const std::string& db_id) {
  if (!db_id.empty()) {
    const DatabaseSchema* s = catalog.find(db_id);
    if (s == nullptr) throw MismatchError("database '" + db_id + "' is not in the schema file");
    return *s;
  }
  if (catalog.size() != 1) {
    throw UsageError("schema file holds " + std::to_string(catalog.size()) + " databases; pass --db");
  }
  return catalog.all().begin()->second;
}

inline DatasetKind require_kind(const std::string& kind) {
  auto k = dataset_kind_from(kind);
  if (!k) throw UsageError("unknown --kind '" + kind + "'");
  return *k;
}

inline std::uint64_t require_seed(const Config& c) {
  if (!c.seed) throw UsageError("--seed is required");
  return *c.seed;
}

inline std::string dump_doc(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

template <typename Record>
std::vector<Record> load_all(const std::string& path) {
  auto res = load_records<Record>(path);
  if (!res.rejects.empty()) {
    const auto& r = res.rejects.front();
    throw DatasetError(r.line, r.reason + " (" + std::to_string(res.rejects.size()) + " rejected in '" +
                                   path + "')");
  }
  return std::move(res.records);
}

// ---- subcommands ----------------------------------------------------------

inline int cmd_normalize(const Config& c, std::ostream& out) {
  const SchemaCatalog catalog = load_catalog(c);
  const vql::NormalizeOptions nopts{.strict = !c.lenient};
  const vql::SerializeOptions sopts{.spaced_parens = c.spaced_parens};
  if (!c.query.empty()) {
    out << vql::normalize_text(c.query, pick_schema(catalog, c.db_id), nopts, sopts) << "\n";
    return kOk;
  }
  if (c.input.empty()) throw UsageError("pass --query or --input");
  auto records = load_all<Text2VisRecord>(c.input);
  for (auto& r : records) {
    const DatabaseSchema* s = catalog.find(r.db_id);
    if (s == nullptr) throw MismatchError("record '" + r.id + "': no schema for database '" + r.db_id + "'");
    r.vql = vql::normalize_text(r.vql, *s, nopts, sopts);
  }
  emit(records_to_jsonl(records), c.output, out);
  return kOk;
}

inline int cmd_filter_schema(const Config& c, std::ostream& out) {
  const SchemaCatalog catalog = load_catalog(c);
  const FilterConfig fc{c.max_n, c.match_columns};
  const DatabaseSchema filtered = filter_schema(c.question, pick_schema(catalog, c.db_id), fc);
  out << encode_schema(normalize_schema(filtered)) << "\n";
  return kOk;
}

inline int cmd_encode(const Config& c, std::ostream& out) {
  if (!c.table_path.empty()) {
    const nlohmann::json j = nlohmann::json::parse(read_file(c.table_path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DatasetError(1, "table file must hold one JSON object");
    DataTable t;
    try {
      t = dvkit::detail::table_fields(j);
    } catch (const dvkit::detail::FieldError& e) {
      throw DatasetError(1, e.what());
    }
    if (j.contains("owner") && j.at("owner").is_string()) t.owner = j.at("owner").get<std::string>();
    out << encode_table(normalize_table(std::move(t))) << "\n";
    return kOk;
  }
  const SchemaCatalog catalog = load_catalog(c);
  out << encode_schema(normalize_schema(pick_schema(catalog, c.db_id))) << "\n";
  return kOk;
}

template <typename Record>
int preprocess_kind(const Config& c, std::ostream& out) {
  auto res = load_records<Record>(c.input);
  auto pre = preprocess(std::move(res.records), PreprocessConfig{c.cell_limit});
  if (c.output.empty()) throw UsageError("--output is required");
  write_atomic(c.output, records_to_jsonl(pre.kept));
  nlohmann::ordered_json report;
  report["kept"] = pre.kept.size();
  std::map<std::string, std::size_t> reasons;
  for (const auto& d : pre.dropped) ++reasons[d.reason];
  report["dropped"] = pre.dropped.size();
  report["dropped_by_reason"] = reasons;
  report["rejected"] = res.rejects.size();
  out << dump_doc(report);
  return kOk;
}

inline int cmd_preprocess(const Config& c, std::ostream& out) {
  switch (require_kind(c.kind)) {
    case DatasetKind::kText2Vis: return preprocess_kind<Text2VisRecord>(c, out);
    case DatasetKind::kVisQA: return preprocess_kind<VisQARecord>(c, out);
    case DatasetKind::kTableText: return preprocess_kind<TableTextRecord>(c, out);
  }
  return kInternal;
}

template <typename Record>
int split_kind(const Config& c, std::ostream& out) {
  const std::uint64_t seed = require_seed(c);
  if (c.output_dir.empty()) throw UsageError("--output-dir is required");
  if (c.ratios.size() != 3) throw UsageError("--ratios takes three values");
  auto records = load_all<Record>(c.input);
  const SplitRatios ratios{c.ratios[0], c.ratios[1], c.ratios[2]};
  const SplitAssignment a = partition_records(records, ratios, seed);
  std::map<Split, std::vector<Record>> parts;
  for (auto r : records) {
    const Split s = a.at(partition_key(r));
    r.split = s;
    parts[s].push_back(std::move(r));
  }
  namespace fs = std::filesystem;
  const fs::path dir(c.output_dir);
  if (!fs::is_directory(dir)) throw IoError("'" + c.output_dir + "' is not a directory");
  nlohmann::ordered_json report;
  for (Split s : kAllSplits) {
    write_atomic((dir / (std::string(to_string(s)) + ".jsonl")).string(), records_to_jsonl(parts[s]));
    nlohmann::ordered_json b;
    std::set<std::string> keys;
    for (const auto& r : parts[s]) keys.insert(partition_key(r));
    b["instances"] = parts[s].size();
    b["keys"] = keys.size();
    b["fraction"] = records.empty() ? 0.0 : static_cast<double>(parts[s].size()) / static_cast<double>(records.size());
    report[std::string(to_string(s))] = b;
  }
  write_atomic((dir / "assignment.json").string(), dump_doc(to_json(a)));
  out << dump_doc(report);
  return kOk;
}

inline int cmd_split(const Config& c, std::ostream& out) {
  switch (require_kind(c.kind)) {
    case DatasetKind::kText2Vis: return split_kind<Text2VisRecord>(c, out);
    case DatasetKind::kVisQA: return split_kind<VisQARecord>(c, out);
    case DatasetKind::kTableText: return split_kind<TableTextRecord>(c, out);
  }
  return kInternal;
}

inline int cmd_build_corpus(const Config& c, std::ostream& out) {
  corpus::BuildConfig bc;
  bc.seed = require_seed(c);
  bc.filter = FilterConfig{c.max_n, c.match_columns};
  bc.corruption = corpus::CorruptionConfig{c.mask_rate, c.mean_span};
  bc.serialize.spaced_parens = c.spaced_parens;
  bc.dual = !c.no_dual;
  bc.mlm = !c.no_mlm;
  bc.skip_invalid = c.skip_invalid;
  if (!c.vocab_path.empty()) {
    auto tok = std::make_shared<corpus::VocabTokenizer>(corpus::VocabTokenizer::from_file(c.vocab_path));
    bc.tokenizer = [tok](std::string_view s) { return (*tok)(s); };
  }
  if (!(c.mask_rate > 0.0 && c.mask_rate < 1.0)) throw UsageError("--mask-rate must be in (0, 1)");
  if (!(c.mean_span >= 1.0)) throw UsageError("--mean-span must be >= 1");
  if (c.text2vis_path.empty() && c.visqa_path.empty() && c.tabletext_path.empty()) {
    throw UsageError("pass at least one of --text2vis, --visqa, --tabletext");
  }
  if (c.output.empty()) throw UsageError("--output is required");

  SchemaCatalog catalog;
  if (!c.schema_path.empty()) catalog = load_schemas(c.schema_path);
  std::vector<Text2VisRecord> t2v;
  std::vector<VisQARecord> qa;
  std::vector<TableTextRecord> tt;
  corpus::SourceRecords src;
  if (!c.text2vis_path.empty()) {
    t2v = load_all<Text2VisRecord>(c.text2vis_path);
    src.text2vis = &t2v;
  }
  if (!c.visqa_path.empty()) {
    qa = load_all<VisQARecord>(c.visqa_path);
    src.visqa = &qa;
  }
  if (!c.tabletext_path.empty()) {
    tt = load_all<TableTextRecord>(c.tabletext_path);
    src.tabletext = &tt;
  }
  if ((src.text2vis != nullptr || src.visqa != nullptr) && c.schema_path.empty()) {
    throw UsageError("--schema is required for text-to-vis and FeVisQA records");
  }
  const corpus::BuildResult res = corpus::build_corpus(src, catalog, bc);
  write_atomic(c.output, corpus::write_corpus(res.examples));

  nlohmann::ordered_json report;
  std::map<std::string, std::size_t> pairs, dual, mlm;
  for (const auto& p : res.pairs) ++pairs[std::string(to_string(p.task))];
  for (const auto& e : res.examples) {
    ++(e.objective == corpus::Objective::kDual ? dual : mlm)[std::string(to_string(e.task))];
  }
  report["examples"] = res.examples.size();
  report["pairs_by_task"] = pairs;
  report["dual_by_task"] = dual;
  report["mlm_by_task"] = mlm;
  auto skipped = nlohmann::ordered_json::array();
  for (const auto& s : res.skipped) skipped.push_back({{"id", s.record_id}, {"reason", s.reason}});
  report["skipped"] = skipped;
  out << dump_doc(report);
  return kOk;
}

inline int cmd_sample_mixture(const Config& c, std::ostream& out) {
  corpus::MixtureConfig mc;
  mc.seed = require_seed(c);
  mc.temperature = c.temperature;
  if (c.size_cap > 0) mc.size_cap = c.size_cap;
  if (!(c.temperature > 0.0)) throw UsageError("--temperature must be positive");
  if (c.output.empty()) throw UsageError("--output is required");
  const auto examples = corpus::read_corpus(read_file(c.input));
  if (examples.empty() && c.count > 0) throw MismatchError("corpus '" + c.input + "' is empty");
  const auto drawn = corpus::sample_mixture(examples, c.count, mc);
  write_atomic(c.output, corpus::write_corpus(drawn));

  std::map<std::string, std::size_t> sizes, counts;
  for (const auto& e : examples) ++sizes[std::string(to_string(e.task))];
  for (const auto& e : drawn) ++counts[std::string(to_string(e.task))];
  std::vector<std::size_t> size_vec;
  for (const auto& [_, n] : sizes) size_vec.push_back(n);
  const auto rates = examples.empty() ? std::vector<double>{} : corpus::mixing_rates(size_vec, c.temperature, mc.size_cap);
  nlohmann::ordered_json report;
  report["drawn"] = drawn.size();
  std::size_t i = 0;
  for (const auto& [task, n] : sizes) {
    report["tasks"][task] = {{"size", n}, {"rate", rates[i++]}, {"drawn", counts[task]}};
  }
  out << dump_doc(report);
  return kOk;
}

struct IdLine {
  std::size_t line = 0;
  nlohmann::json value;
};

inline std::map<std::string, IdLine> load_keyed(const std::string& path) {
  const std::string content = read_file(path);
  std::map<std::string, IdLine> out;
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank(line)) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DatasetError(line_no, "not a JSON object in '" + path + "'");
    std::string id;
    try {
      id = dvkit::detail::id_field(j, "id");
    } catch (const dvkit::detail::FieldError& e) {
      throw DatasetError(line_no, e.what());
    }
    if (out.contains(id)) throw DatasetError(line_no, "duplicate id '" + id + "' in '" + path + "'");
    out.emplace(id, IdLine{line_no, std::move(j)});
  }
  return out;
}

inline std::string first_string(const IdLine& l, std::initializer_list<const char*> keys, const std::string& path) {
  for (const char* k : keys) {
    if (l.value.contains(k) && l.value.at(k).is_string()) return l.value.at(k).get<std::string>();
  }
  std::string names;
  for (const char* k : keys) names += std::string(names.empty() ? "" : ", ") + k;
  throw DatasetError(l.line, "no string field among (" + names + ") in '" + path + "'");
}

inline int cmd_evaluate(const Config& c, std::ostream& out) {
  const auto pred = load_keyed(c.pred_path);
  const auto gold = load_keyed(c.gold_path);
  for (const auto& [id, _] : gold) {
    if (!pred.contains(id)) throw MismatchError("no prediction for id '" + id + "'");
  }
  for (const auto& [id, _] : pred) {
    if (!gold.contains(id)) throw MismatchError("prediction '" + id + "' has no gold record");
  }
  nlohmann::ordered_json report;
  if (c.task == "text2vis") {
    const SchemaCatalog catalog = load_catalog(c);
    std::vector<std::string> p, g, dbs;
    for (const auto& [id, gl] : gold) {
      g.push_back(first_string(gl, {"vql"}, c.gold_path));
      dbs.push_back(first_string(gl, {"db_id"}, c.gold_path));
      if (catalog.find(dbs.back()) == nullptr) {
        throw MismatchError("gold record '" + id + "': no schema for database '" + dbs.back() + "'");
      }
      p.push_back(first_string(pred.at(id), {"prediction", "vql"}, c.pred_path));
    }
    metrics::EmOptions opts;
    opts.normalize_gold = c.normalize_gold;
    report = metrics::to_json(metrics::em_suite(p, g, dbs, catalog, opts), c.per_sample);
  } else if (c.task == "vis2text" || c.task == "table2text" || c.task == "fevisqa") {
    std::vector<std::string> p;
    std::vector<std::vector<std::string>> refs;
    for (const auto& [id, gl] : gold) {
      std::vector<std::string> r;
      if (gl.value.contains("references") && gl.value.at("references").is_array()) {
        for (const auto& x : gl.value.at("references")) {
          if (!x.is_string()) throw DatasetError(gl.line, "references must be strings");
          r.push_back(x.get<std::string>());
        }
      } else {
        r.push_back(first_string(gl, {"reference", "description", "answer", "text"}, c.gold_path));
      }
      if (r.empty()) throw DatasetError(gl.line, "record '" + id + "' has no reference");
      refs.push_back(std::move(r));
      p.push_back(first_string(pred.at(id), {"prediction", "description", "answer", "text"}, c.pred_path));
    }
    report = metrics::to_json(metrics::text_gen_suite(p, refs));
  } else {
    throw UsageError("unknown --task '" + c.task + "'");
  }
  emit(dump_doc(report), c.output, out);
  return kOk;
}

template <typename Record>
int stats_kind(const Config& c, std::ostream& out) {
  auto records = load_all<Record>(c.input);
  std::optional<SplitAssignment> a;
  if (!c.assignment_path.empty()) {
    const nlohmann::json j = nlohmann::json::parse(read_file(c.assignment_path), nullptr, false);
    if (j.is_discarded()) throw DatasetError(1, "assignment file is not JSON");
    a = split_assignment_from_json(j);
  }
  if constexpr (std::is_same_v<Record, TableTextRecord>) {
    out << dump_doc(to_json(compute_stats(records, a ? &*a : nullptr, c.cell_limit)));
  } else {
    out << dump_doc(to_json(compute_stats(records, a ? &*a : nullptr)));
  }
  return kOk;
}

inline int cmd_stats(const Config& c, std::ostream& out) {
  switch (require_kind(c.kind)) {
    case DatasetKind::kText2Vis: return stats_kind<Text2VisRecord>(c, out);
    case DatasetKind::kVisQA: return stats_kind<VisQARecord>(c, out);
    case DatasetKind::kTableText: return stats_kind<TableTextRecord>(c, out);
  }
  return kInternal;
}

inline int report_error(std::ostream& err, int code, std::string_view kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"]["code"] = code;
  j["error"]["kind"] = kind;
  j["error"]["message"] = message;
  err << j.dump() << "\n";
  return code;
}

}  // namespace detail

/// Runs one subcommand. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config c;
  CLI::App app{"Corpus toolkit for visualization-language pre-training", "dvkit"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  const auto schema_opt = [&c](CLI::App* sc, bool required) {
    auto* o = sc->add_option("--schema", c.schema_path, "Schema file (JSON object, array or JSON lines)");
    if (required) o->required();
    sc->add_option("--db", c.db_id, "Database id; optional when the schema file holds one database");
  };
  const auto kind_opt = [&c](CLI::App* sc) {
    sc->add_option("--kind", c.kind, "Dataset kind: text2vis, visqa or tabletext")
        ->required()
        ->check(CLI::IsMember({"text2vis", "visqa", "tabletext"}));
  };
  const auto filter_opts = [&c](CLI::App* sc) {
    sc->add_option("--max-n", c.max_n, "Longest n-gram used for schema filtration")->check(CLI::PositiveNumber);
    sc->add_flag("!--no-match-columns", c.match_columns, "Match tables by name only, not by column names");
  };

  auto* normalize = app.add_subcommand("normalize", "Standardize DV queries against a schema");
  schema_opt(normalize, true);
  auto* q_opt = normalize->add_option("--query", c.query, "Single query to normalize");
  normalize->add_option("--input", c.input, "Text-to-vis JSON lines to normalize")->excludes(q_opt);
  normalize->add_option("--output", c.output, "Output file (default: stdout)");
  normalize->add_flag("--spaced-parens", c.spaced_parens, "Print 'count ( x )' instead of 'count(x)'");
  normalize->add_flag("--lenient", c.lenient, "Leave unresolvable columns unqualified");

  auto* filter = app.add_subcommand("filter-schema", "Print the schema filtered by a question");
  schema_opt(filter, true);
  filter->add_option("--question", c.question, "Natural-language question")->required();
  filter_opts(filter);

  auto* encode = app.add_subcommand("encode", "Print the linearized schema or table");
  schema_opt(encode, false);
  encode->add_option("--table", c.table_path, "Table JSON file with headers, rows and optional owner");

  auto* pre = app.add_subcommand("preprocess", "Drop incomplete, CJK-question and oversized-table records");
  kind_opt(pre);
  pre->add_option("--input", c.input, "Input JSON lines")->required();
  pre->add_option("--output", c.output, "Kept records")->required();
  pre->add_option("--cell-limit", c.cell_limit, "Largest Chart2Text table kept, in cells");

  auto* split = app.add_subcommand("split", "Partition records into train/valid/test by database");
  kind_opt(split);
  split->add_option("--input", c.input, "Input JSON lines")->required();
  split->add_option("--output-dir", c.output_dir, "Directory for train/valid/test.jsonl and assignment.json")
      ->required();
  split->add_option("--seed", c.seed, "Random seed")->required();
  split->add_option("--ratios", c.ratios, "Train, valid and test fractions")->expected(3)->delimiter(',');

  auto* build = app.add_subcommand("build-corpus", "Build the pre-training corpus");
  build->add_option("--schema", c.schema_path, "Schema file");
  build->add_option("--text2vis", c.text2vis_path, "Text-to-vis records");
  build->add_option("--visqa", c.visqa_path, "FeVisQA records");
  build->add_option("--tabletext", c.tabletext_path, "Table-to-text records");
  build->add_option("--output", c.output, "Corpus JSON lines")->required();
  build->add_option("--seed", c.seed, "Random seed")->required();
  build->add_option("--mask-rate", c.mask_rate, "Fraction of tokens masked");
  build->add_option("--mean-span", c.mean_span, "Mean masked span length");
  build->add_option("--vocab", c.vocab_path, "Subword vocabulary, one piece per line (default: whitespace tokens)");
  build->add_flag("--spaced-parens", c.spaced_parens, "Print 'count ( x )' instead of 'count(x)'");
  build->add_flag("--no-dual", c.no_dual, "Omit the bidirectional dual-corpus examples");
  build->add_flag("--no-mlm", c.no_mlm, "Omit the span-corruption examples");
  build->add_flag("--skip-invalid", c.skip_invalid, "Skip records that fail instead of aborting");
  filter_opts(build);

  auto* mix = app.add_subcommand("sample-mixture", "Draw a temperature-mixed sample from a corpus");
  mix->add_option("--input", c.input, "Corpus JSON lines")->required();
  mix->add_option("--output", c.output, "Sampled corpus")->required();
  mix->add_option("--count", c.count, "Number of draws")->required();
  mix->add_option("--seed", c.seed, "Random seed")->required();
  mix->add_option("--temperature", c.temperature, "Mixing temperature");
  mix->add_option("--size-cap", c.size_cap, "Cap on task size before mixing (0: none)");

  auto* eval = app.add_subcommand("evaluate", "Score predictions against gold records");
  eval->add_option("--task", c.task, "text2vis, vis2text, table2text or fevisqa")
      ->required()
      ->check(CLI::IsMember({"text2vis", "vis2text", "table2text", "fevisqa"}));
  eval->add_option("pred", c.pred_path, "Predictions, JSON lines keyed by id")->required();
  eval->add_option("gold", c.gold_path, "Gold records, JSON lines keyed by id")->required();
  eval->add_option("--schema", c.schema_path, "Schema file (text2vis)");
  eval->add_flag("!--raw-gold", c.normalize_gold, "Compare against gold queries without standardizing them");
  eval->add_flag("--per-sample", c.per_sample, "Include per-sample matches (text2vis)");
  eval->add_option("--output", c.output, "Report file (default: stdout)");

  auto* stats = app.add_subcommand("stats", "Dataset statistics");
  kind_opt(stats);
  stats->add_option("input", c.input, "Input JSON lines")->required();
  stats->add_option("--assignment", c.assignment_path, "Split assignment written by 'split'");
  stats->add_option("--cell-limit", c.cell_limit, "Cell limit reported for table-to-text");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return detail::report_error(err, kUsage, "usage", e.what());
  }

  try {
    if (normalize->parsed()) return detail::cmd_normalize(c, out);
    if (filter->parsed()) return detail::cmd_filter_schema(c, out);
    if (encode->parsed()) return detail::cmd_encode(c, out);
    if (pre->parsed()) return detail::cmd_preprocess(c, out);
    if (split->parsed()) return detail::cmd_split(c, out);
    if (build->parsed()) return detail::cmd_build_corpus(c, out);
    if (mix->parsed()) return detail::cmd_sample_mixture(c, out);
    if (eval->parsed()) return detail::cmd_evaluate(c, out);
    if (stats->parsed()) return detail::cmd_stats(c, out);
    return detail::report_error(err, kUsage, "usage", "no subcommand");
  } catch (const UsageError& e) {
    return detail::report_error(err, kUsage, "usage", e.what());
  } catch (const IoError& e) {
    return detail::report_error(err, kIo, "io", e.what());
  } catch (const MismatchError& e) {
    return detail::report_error(err, kMismatch, "mismatch", e.what());
  } catch (const SchemaError& e) {
    return detail::report_error(err, kMismatch, "mismatch", e.what());
  } catch (const DatasetError& e) {
    return detail::report_error(err, kMalformed, "dataset", e.what());
  } catch (const corpus::CorpusFormatError& e) {
    return detail::report_error(err, kMalformed, "corpus", e.what());
  } catch (const vql::SyntaxError& e) {
    return detail::report_error(err, kMalformed, "syntax", e.what());
  } catch (const vql::UnknownChartError& e) {
    return detail::report_error(err, kMalformed, "syntax", e.what());
  } catch (const vql::NormalizeError& e) {
    return detail::report_error(err, kMismatch, "normalize", e.what());
  } catch (const TableError& e) {
    return detail::report_error(err, kMalformed, "table", e.what());
  } catch (const corpus::CorpusError& e) {
    return detail::report_error(err, kMalformed, "corpus", e.what());
  } catch (const std::invalid_argument& e) {
    return detail::report_error(err, kUsage, "usage", e.what());
  } catch (const std::exception& e) {
    return detail::report_error(err, kInternal, "internal", e.what());
  }
}

}  // namespace dvkit::cli
