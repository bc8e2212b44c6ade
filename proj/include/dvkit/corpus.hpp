#pragma once

// Hybrid pre-training corpus: tagged dual-corpus pairs, random orientation,
// span corruption with ordered sentinels, temperature mixing, and the
// JSON-lines corpus file.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dvkit/dataset.hpp"
#include "dvkit/random.hpp"
#include "dvkit/schema.hpp"
#include "dvkit/table.hpp"
#include "dvkit/text.hpp"
#include "dvkit/vql.hpp"

namespace dvkit::corpus {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corrupt corpus file line.
class CorpusFormatError : public std::runtime_error {
 public:
  CorpusFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// ---------------------------------------------------------------------------
// Special tokens

namespace tokens {
inline constexpr std::string_view kNl = "<nl>";
inline constexpr std::string_view kVql = "<vql>";
inline constexpr std::string_view kSchema = "<schema>";
inline constexpr std::string_view kTable = "<table>";
inline constexpr std::string_view kDescription = "<description>";
inline constexpr std::string_view kQuestion = "<question>";
inline constexpr std::string_view kAnswer = "<answer>";

inline constexpr std::string_view kSegmentTokens[] = {kNl,    kVql,         kSchema,  kTable,
                                                       kDescription, kQuestion, kAnswer};

/// <mask_k>, k >= 1.
inline std::string mask(std::size_t k) { return "<mask_" + std::to_string(k) + ">"; }

/// k when `tok` is exactly <mask_k>, else 0.
inline std::size_t mask_index(std::string_view tok) {
  constexpr std::string_view kPrefix = "<mask_";
  if (tok.size() <= kPrefix.size() + 1 || tok.substr(0, kPrefix.size()) != kPrefix || tok.back() != '>') {
    return 0;
  }
  std::string_view digits = tok.substr(kPrefix.size(), tok.size() - kPrefix.size() - 1);
  if (digits.empty() || digits.front() == '0') return 0;
  std::size_t k = 0;
  for (char c : digits) {
    if (c < '0' || c > '9') return 0;
    k = k * 10 + static_cast<std::size_t>(c - '0');
  }
  return k;
}

/// Position of the first reserved token (segment tag or sentinel, any
/// case) inside `s`, or npos.
inline std::size_t find_reserved(std::string_view s) {
  const std::string lower = text::to_lower(s);
  std::size_t first = std::string::npos;
  for (auto tok : kSegmentTokens) first = std::min(first, lower.find(tok));
  for (std::size_t at = lower.find("<mask_"); at != std::string::npos; at = lower.find("<mask_", at + 1)) {
    std::size_t close = lower.find('>', at);
    if (close != std::string::npos && mask_index(std::string_view(lower).substr(at, close - at + 1)) > 0) {
      first = std::min(first, at);
      break;
    }
  }
  return first;
}

}  // namespace tokens

// ---------------------------------------------------------------------------
// Dual-corpus pairs

enum class Task { kText2Vis, kVis2Text, kTable2Text, kFeVisQA };

inline constexpr Task kAllTasks[] = {Task::kText2Vis, Task::kVis2Text, Task::kTable2Text, Task::kFeVisQA};

inline std::string_view to_string(Task t) {
  switch (t) {
    case Task::kText2Vis: return "text2vis";
    case Task::kVis2Text: return "vis2text";
    case Task::kTable2Text: return "table2text";
    case Task::kFeVisQA: return "fevisqa";
  }
  return "";
}

inline std::optional<Task> task_from(std::string_view s) {
  for (Task t : kAllTasks) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

struct Segment {
  std::string_view tag;  // one of tokens::kSegmentTokens
  std::string text;
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// `<tag> text <tag> text ...`
inline std::string render(const std::vector<Segment>& segments) {
  std::string out;
  for (const auto& s : segments) {
    if (!out.empty()) out += ' ';
    out += s.tag;
    out += ' ';
    out += s.text;
  }
  return out;
}

struct DualPair {
  Task task = Task::kText2Vis;
  std::string key;  // record id the pair was built from; seeds its orientation
  std::vector<Segment> side_a;
  std::vector<Segment> side_b;
  friend bool operator==(const DualPair&, const DualPair&) = default;
};

enum class Objective { kDual, kMlm };

inline std::string_view to_string(Objective o) { return o == Objective::kDual ? "dual" : "mlm"; }

enum class Direction { kForward, kReverse };

inline std::string_view to_string(Direction d) {
  return d == Direction::kForward ? "forward" : "reverse";
}

struct OrientedExample {
  Objective objective = Objective::kDual;
  Task task = Task::kText2Vis;
  std::optional<Direction> direction;  // dual only
  std::string source;
  std::string target;
  friend bool operator==(const OrientedExample&, const OrientedExample&) = default;
};

/// Forward (side_a -> side_b) or reverse, each with probability 1/2.
inline OrientedExample orient_bidirectional(const DualPair& p, Rng& rng) {
  const bool forward = (rng() >> 63) == 0;
  OrientedExample ex;
  ex.objective = Objective::kDual;
  ex.task = p.task;
  ex.direction = forward ? Direction::kForward : Direction::kReverse;
  ex.source = render(forward ? p.side_a : p.side_b);
  ex.target = render(forward ? p.side_b : p.side_a);
  return ex;
}

/// Swaps source and target and flips the direction.
inline OrientedExample flip(OrientedExample ex) {
  std::swap(ex.source, ex.target);
  if (ex.direction) {
    ex.direction = *ex.direction == Direction::kForward ? Direction::kReverse : Direction::kForward;
  }
  return ex;
}

// ---------------------------------------------------------------------------
// Span corruption

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

inline Tokenizer whitespace_tokenizer() {
  return [](std::string_view s) { return text::split_whitespace(s); };
}

/// Greedy longest-match subword tokenizer over a fixed vocabulary. Pieces
/// after the first in a word carry the `##` continuation prefix; characters
/// with no vocabulary entry become single-character pieces.
class VocabTokenizer {
 public:
  explicit VocabTokenizer(std::set<std::string> vocab) : vocab_(std::move(vocab)) {
    for (const auto& v : vocab_) max_len_ = std::max(max_len_, v.size());
  }

  static VocabTokenizer from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary '" + path + "'");
    std::set<std::string> vocab;
    std::string line;
    while (std::getline(in, line)) {
      auto t = text::trim(line);
      if (!t.empty()) vocab.emplace(t);
    }
    return VocabTokenizer(std::move(vocab));
  }

  std::vector<std::string> operator()(std::string_view s) const {
    std::vector<std::string> out;
    for (const auto& word : text::split_whitespace(s)) {
      if (vocab_.contains(word) || tokens::mask_index(word) > 0) {
        out.push_back(word);
        continue;
      }
      std::size_t pos = 0;
      while (pos < word.size()) {
        const std::string prefix = pos == 0 ? "" : "##";
        std::size_t len = std::min(max_len_, word.size() - pos);
        for (; len > 0; --len) {
          if (vocab_.contains(prefix + word.substr(pos, len))) break;
        }
        if (len == 0) len = 1;
        out.push_back(prefix + word.substr(pos, len));
        pos += len;
      }
    }
    return out;
  }

 private:
  std::set<std::string> vocab_;
  std::size_t max_len_ = 1;
};

struct MlmExample {
  std::vector<std::string> corrupted_input;
  std::vector<std::string> target;
  friend bool operator==(const MlmExample&, const MlmExample&) = default;
};

struct Span {
  std::size_t start = 0;
  std::size_t length = 0;
};

struct CorruptionConfig {
  double mask_rate = 0.15;
  double mean_span = 3.0;
};

/// round(rate * n) clamped to [1, n - 1].
inline std::size_t masked_token_count(std::size_t n, double rate) {
  const auto m = static_cast<long long>(std::llround(rate * static_cast<double>(n)));
  const long long hi = static_cast<long long>(n) - 1;
  return static_cast<std::size_t>(std::clamp(m, 1LL, std::max(1LL, hi)));
}

/// max(1, round(masked / mean_span)), reduced when that many non-adjacent
/// spans cannot fit in n tokens.
inline std::size_t span_count(std::size_t masked, double mean_span, std::size_t n) {
  auto k = static_cast<std::size_t>(
      std::max(1LL, std::llround(static_cast<double>(masked) / mean_span)));
  k = std::min(k, masked);
  // k spans need masked + (k - 1) positions to stay non-adjacent.
  if (masked + k - 1 > n) k = n - masked + 1;
  return std::max<std::size_t>(k, 1);
}

/// Replaces the given spans (sorted, non-overlapping, non-adjacent) with
/// <mask_1>, <mask_2>, ... and lists each sentinel followed by its span in
/// the target.
inline MlmExample corrupt_spans(const std::vector<std::string>& tokens, const std::vector<Span>& spans) {
  MlmExample ex;
  std::size_t pos = 0;
  std::size_t k = 0;
  for (const auto& sp : spans) {
    if (sp.length == 0 || sp.start < pos || sp.start + sp.length > tokens.size() ||
        (k > 0 && sp.start == pos)) {
      throw CorpusError("spans must be sorted, non-empty, in range and non-adjacent");
    }
    for (; pos < sp.start; ++pos) ex.corrupted_input.push_back(tokens[pos]);
    const std::string sentinel = tokens::mask(++k);
    ex.corrupted_input.push_back(sentinel);
    ex.target.push_back(sentinel);
    for (; pos < sp.start + sp.length; ++pos) ex.target.push_back(tokens[pos]);
  }
  for (; pos < tokens.size(); ++pos) ex.corrupted_input.push_back(tokens[pos]);
  return ex;
}

/// Samples k span lengths as a uniform composition of the masked count and
/// places the spans uniformly among all non-adjacent placements.
inline std::vector<Span> sample_spans(std::size_t n, const CorruptionConfig& cfg, Rng& rng) {
  if (n < 2) throw CorpusError("span corruption needs at least 2 tokens, got " + std::to_string(n));
  const std::size_t masked = masked_token_count(n, cfg.mask_rate);
  const std::size_t k = span_count(masked, cfg.mean_span, n);

  // Span lengths: k - 1 cut points among the masked - 1 inner boundaries.
  std::vector<std::size_t> lengths;
  {
    const auto cuts = sample_sorted(masked - 1, k - 1, rng);
    std::size_t prev = 0;
    for (auto c : cuts) {
      lengths.push_back(c + 1 - prev);
      prev = c + 1;
    }
    lengths.push_back(masked - prev);
  }
  // Gaps: k + 1 gaps with the k - 1 inner ones >= 1. Distribute the free
  // unmasked tokens with stars and bars.
  const std::size_t free_tokens = n - masked - (k - 1);
  const auto bars = sample_sorted(free_tokens + k, k, rng);
  std::vector<std::size_t> gaps;
  std::size_t prev = 0;
  for (std::size_t i = 0; i < k; ++i) {
    gaps.push_back(bars[i] - prev);
    prev = bars[i] + 1;
  }
  std::vector<Span> spans;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k; ++i) {
    pos += gaps[i] + (i > 0 ? 1 : 0);
    spans.push_back(Span{pos, lengths[i]});
    pos += lengths[i];
  }
  return spans;
}

inline MlmExample span_corrupt(const std::vector<std::string>& tokens, const CorruptionConfig& cfg, Rng& rng) {
  return corrupt_spans(tokens, sample_spans(tokens.size(), cfg, rng));
}

/// Splices target spans back in at their sentinels.
inline std::vector<std::string> reconstruct(const MlmExample& ex) {
  std::map<std::size_t, std::vector<std::string>> spans;
  std::size_t current = 0;
  for (const auto& tok : ex.target) {
    if (std::size_t k = tokens::mask_index(tok); k > 0) {
      current = k;
      spans[k];
    } else {
      if (current == 0) throw CorpusError("target does not start with a sentinel");
      spans[current].push_back(tok);
    }
  }
  std::vector<std::string> out;
  for (const auto& tok : ex.corrupted_input) {
    if (std::size_t k = tokens::mask_index(tok); k > 0) {
      auto it = spans.find(k);
      if (it == spans.end()) throw CorpusError("sentinel " + tok + " missing from target");
      out.insert(out.end(), it->second.begin(), it->second.end());
    } else {
      out.push_back(tok);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Temperature mixing

/// size_i^(1/T) / sum_j size_j^(1/T), sizes optionally capped first.
inline std::vector<double> mixing_rates(const std::vector<std::size_t>& sizes, double temperature,
                                        std::optional<std::size_t> size_cap = std::nullopt) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  std::vector<double> w;
  double sum = 0.0;
  for (auto s : sizes) {
    const double capped = static_cast<double>(size_cap ? std::min(s, *size_cap) : s);
    w.push_back(capped > 0 ? std::pow(capped, 1.0 / temperature) : 0.0);
    sum += w.back();
  }
  if (sum <= 0.0) throw std::invalid_argument("temperature mixing needs at least one non-empty task");
  for (auto& x : w) x /= sum;
  return w;
}

struct MixtureConfig {
  double temperature = 2.0;
  std::optional<std::size_t> size_cap;
  std::uint64_t seed = 0;
};

/// Endless stream of (task, example index). Tasks are drawn by their mixing
/// rate; within a task, examples come in a fresh random order each epoch.
class MixtureSampler {
 public:
  struct Draw {
    std::size_t task = 0;
    std::size_t index = 0;
  };

  MixtureSampler(std::vector<std::size_t> sizes, const MixtureConfig& cfg)
      : sizes_(std::move(sizes)),
        rates_(mixing_rates(sizes_, cfg.temperature, cfg.size_cap)),
        rng_(cfg.seed),
        order_(sizes_.size()),
        cursor_(sizes_.size(), 0) {
    double acc = 0.0;
    for (double r : rates_) cumulative_.push_back(acc += r);
    for (std::size_t t = 0; t < sizes_.size(); ++t) cursor_[t] = sizes_[t];  // forces a shuffle
  }

  [[nodiscard]] const std::vector<double>& rates() const { return rates_; }

  std::size_t next_task() {
    const double u = uniform_unit(rng_);
    for (std::size_t t = 0; t < cumulative_.size(); ++t) {
      if (u < cumulative_[t] && rates_[t] > 0.0) return t;
    }
    // Rounding can leave the last cumulative value just under 1.
    for (std::size_t t = rates_.size(); t-- > 0;) {
      if (rates_[t] > 0.0) return t;
    }
    return 0;
  }

  Draw next() {
    const std::size_t t = next_task();
    if (cursor_[t] >= sizes_[t]) {
      order_[t].resize(sizes_[t]);
      for (std::size_t i = 0; i < sizes_[t]; ++i) order_[t][i] = i;
      shuffle(order_[t], rng_);
      cursor_[t] = 0;
    }
    return Draw{t, order_[t][cursor_[t]++]};
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<double> rates_;
  std::vector<double> cumulative_;
  Rng rng_;
  std::vector<std::vector<std::size_t>> order_;
  std::vector<std::size_t> cursor_;
};

/// Draws `count` examples from `examples`, grouping them by task and mixing
/// the groups by temperature. Output order is the draw order.
inline std::vector<OrientedExample> sample_mixture(const std::vector<OrientedExample>& examples,
                                                   std::size_t count, const MixtureConfig& cfg) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    groups[std::string(to_string(examples[i].task))].push_back(i);
  }
  std::vector<std::size_t> sizes;
  std::vector<const std::vector<std::size_t>*> members;
  for (const auto& [_, idx] : groups) {
    sizes.push_back(idx.size());
    members.push_back(&idx);
  }
  std::vector<OrientedExample> out;
  if (count == 0) return out;
  MixtureSampler sampler(sizes, cfg);
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto d = sampler.next();
    out.push_back(examples[(*members[d.task])[d.index]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus construction

struct BuildConfig {
  std::uint64_t seed = 0;
  FilterConfig filter;
  CorruptionConfig corruption;
  vql::SerializeOptions serialize;
  bool dual = true;
  bool mlm = true;
  /// Lowercase NL questions in <nl> segments along with the DV knowledge.
  bool lowercase_questions = true;
  /// Skip records whose query does not parse or normalize instead of
  /// failing the build.
  bool skip_invalid = false;
  Tokenizer tokenizer = whitespace_tokenizer();
};

struct Skipped {
  std::string record_id;
  std::string reason;
};

struct BuildResult {
  std::vector<DualPair> pairs;
  std::vector<OrientedExample> examples;  // dual examples, then MLM examples
  std::vector<Skipped> skipped;
};

struct SourceRecords {
  const std::vector<Text2VisRecord>* text2vis = nullptr;
  const std::vector<VisQARecord>* visqa = nullptr;
  const std::vector<TableTextRecord>* tabletext = nullptr;
};

namespace detail {

inline std::string checked(std::string s, const std::string& record_id) {
  if (std::size_t at = tokens::find_reserved(s); at != std::string::npos) {
    throw CorpusError("record '" + record_id + "': text contains a reserved token at byte " +
                      std::to_string(at));
  }
  return s;
}

class Builder {
 public:
  Builder(const SchemaCatalog& catalog, const BuildConfig& cfg) : catalog_(catalog), cfg_(cfg) {}

  BuildResult run(const SourceRecords& src) {
    if (src.text2vis != nullptr) text2vis(*src.text2vis);
    if (src.visqa != nullptr) visqa(*src.visqa);
    if (src.tabletext != nullptr) tabletext(*src.tabletext);
    // Pairs are grouped by task in a fixed order.
    std::stable_sort(result_.pairs.begin(), result_.pairs.end(),
                     [](const DualPair& a, const DualPair& b) { return a.task < b.task; });
    if (cfg_.dual) {
      for (const auto& p : result_.pairs) {
        Rng rng(derive_seed(cfg_.seed, "dual:" + std::string(to_string(p.task)) + ":" + p.key));
        result_.examples.push_back(orient_bidirectional(p, rng));
      }
    }
    if (cfg_.mlm) {
      for (const auto& [task, text] : mlm_texts_) {
        auto toks = cfg_.tokenizer(text);
        if (toks.size() < 2) continue;
        Rng rng(derive_seed(cfg_.seed, "mlm:" + text));
        MlmExample m = span_corrupt(toks, cfg_.corruption, rng);
        OrientedExample ex;
        ex.objective = Objective::kMlm;
        ex.task = task;
        ex.source = text::join(m.corrupted_input, " ");
        ex.target = text::join(m.target, " ");
        result_.examples.push_back(std::move(ex));
      }
    }
    return std::move(result_);
  }

 private:
  const DatabaseSchema& schema_for(const std::string& db_id, const std::string& record_id) const {
    const DatabaseSchema* s = catalog_.find(db_id);
    if (s == nullptr) {
      throw SchemaError("record '" + record_id + "': no schema for database '" + db_id + "'");
    }
    return *s;
  }

  std::string encoded_filtered_schema(const std::string& question, const DatabaseSchema& s) const {
    return encode_schema(normalize_schema(filter_schema(question, s, cfg_.filter)));
  }

  /// Runs `fn`; on failure either rethrows with the record id or records a
  /// skip. Returns false when skipped.
  template <typename Fn>
  bool guarded(const std::string& record_id, Fn&& fn) {
    try {
      fn();
      return true;
    } catch (const SchemaError& e) {
      if (!cfg_.skip_invalid) throw;
      result_.skipped.push_back(Skipped{record_id, e.what()});
    } catch (const CorpusError& e) {
      if (!cfg_.skip_invalid) throw;
      result_.skipped.push_back(Skipped{record_id, e.what()});
    } catch (const std::exception& e) {
      if (!cfg_.skip_invalid) throw CorpusError("record '" + record_id + "': " + e.what());
      result_.skipped.push_back(Skipped{record_id, e.what()});
    }
    return false;
  }

  void add_mlm(Task task, const std::string& text) {
    if (mlm_seen_.insert(text).second) mlm_texts_.emplace_back(task, text);
  }

  void text2vis(const std::vector<Text2VisRecord>& records) {
    // Representative description per distinct query: first record in input
    // order.
    std::map<std::pair<std::string, std::string>, bool> seen_query;
    for (const auto& r : records) {
      guarded(r.id, [&] {
        const DatabaseSchema& full = schema_for(r.db_id, r.id);
        const std::string query = checked(vql::normalize_text(r.vql, full, {}, cfg_.serialize), r.id);
        const std::string question =
            checked(cfg_.lowercase_questions ? text::to_lower(r.question) : r.question, r.id);
        const std::string schema = checked(encoded_filtered_schema(r.question, full), r.id);

        result_.pairs.push_back(DualPair{Task::kText2Vis,
                                         r.id,
                                         {{tokens::kNl, question}, {tokens::kSchema, schema}},
                                         {{tokens::kVql, query}}});
        const auto key = std::make_pair(text::to_lower(r.db_id), query);
        if (!seen_query.contains(key)) {
          seen_query[key] = true;
          result_.pairs.push_back(DualPair{Task::kVis2Text,
                                           r.id,
                                           {{tokens::kVql, query}, {tokens::kSchema, schema}},
                                           {{tokens::kDescription, checked(r.question, r.id)}}});
        }
        add_mlm(Task::kText2Vis, question);
        add_mlm(Task::kText2Vis, schema);
      });
    }
  }

  void visqa(const std::vector<VisQARecord>& records) {
    for (const auto& r : records) {
      guarded(r.id, [&] {
        const DatabaseSchema& full = schema_for(r.db_id, r.id);
        const vql::VqlQuery q = vql::normalize_vql(vql::parse_vql(r.vql), full);
        const std::string query = checked(vql::serialize_vql(q, cfg_.serialize), r.id);
        const std::string question = checked(r.question, r.id);
        const std::string answer = checked(r.answer, r.id);
        std::vector<Segment> side_a{{tokens::kQuestion, question},
                                    {tokens::kVql, query},
                                    {tokens::kSchema, checked(encoded_filtered_schema(r.question, full), r.id)}};
        if (r.table) {
          DataTable t = *r.table;
          t.owner = q.source.primary.name;
          side_a.push_back({tokens::kTable, checked(encode_table(normalize_table(std::move(t))), r.id)});
        }
        result_.pairs.push_back(DualPair{Task::kFeVisQA, r.id, std::move(side_a), {{tokens::kAnswer, answer}}});
        add_mlm(Task::kFeVisQA, query);
        add_mlm(Task::kFeVisQA, question);
        add_mlm(Task::kFeVisQA, answer);
      });
    }
  }

  void tabletext(const std::vector<TableTextRecord>& records) {
    for (const auto& r : records) {
      guarded(r.id, [&] {
        const std::string table = checked(encode_table(normalize_table(r.table)), r.id);
        const std::string description = checked(r.description, r.id);
        result_.pairs.push_back(
            DualPair{Task::kTable2Text, r.id, {{tokens::kTable, table}}, {{tokens::kDescription, description}}});
        add_mlm(Task::kTable2Text, table);
        add_mlm(Task::kTable2Text, description);
      });
    }
  }

  const SchemaCatalog& catalog_;
  const BuildConfig& cfg_;
  BuildResult result_;
  std::set<std::string> mlm_seen_;
  std::vector<std::pair<Task, std::string>> mlm_texts_;
};

}  // namespace detail

/// Builds tagged pairs for every record (plus one vis-to-text pair per
/// distinct query), orients each pair with a seed derived from the record
/// id, and corrupts every distinct segment text for the MLM objective.
/// Output does not depend on processing order.
inline BuildResult build_corpus(const SourceRecords& src, const SchemaCatalog& catalog, const BuildConfig& cfg) {
  return detail::Builder(catalog, cfg).run(src);
}

inline std::vector<DualPair> build_dual_pairs(const SourceRecords& src, const SchemaCatalog& catalog,
                                              BuildConfig cfg = {}) {
  cfg.mlm = false;
  cfg.dual = false;
  return build_corpus(src, catalog, cfg).pairs;
}

// ---------------------------------------------------------------------------
// Corpus file

inline std::string to_jsonl_line(const OrientedExample& ex) {
  nlohmann::ordered_json j;
  j["objective"] = to_string(ex.objective);
  j["task"] = to_string(ex.task);
  if (ex.direction) j["direction"] = to_string(*ex.direction);
  j["source"] = ex.source;
  j["target"] = ex.target;
  return j.dump();
}

inline std::string write_corpus(const std::vector<OrientedExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    out += to_jsonl_line(ex);
    out += '\n';
  }
  return out;
}

inline std::vector<OrientedExample> read_corpus(std::string_view content) {
  std::vector<OrientedExample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    std::string_view line = content.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = (nl == std::string_view::npos) ? content.size() : nl + 1;
    ++line_no;
    if (text::is_blank(line)) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw CorpusFormatError(line_no, "not a JSON object");
    const auto str = [&](const char* key) -> std::string {
      if (!j.contains(key) || !j.at(key).is_string()) {
        throw CorpusFormatError(line_no, std::string("missing string field '") + key + "'");
      }
      return j.at(key).get<std::string>();
    };
    OrientedExample ex;
    const std::string objective = str("objective");
    if (objective == "dual") {
      ex.objective = Objective::kDual;
    } else if (objective == "mlm") {
      ex.objective = Objective::kMlm;
    } else {
      throw CorpusFormatError(line_no, "unknown objective '" + objective + "'");
    }
    const std::string task = str("task");
    auto t = task_from(task);
    if (!t) throw CorpusFormatError(line_no, "unknown task '" + task + "'");
    ex.task = *t;
    if (ex.objective == Objective::kDual) {
      const std::string dir = str("direction");
      if (dir == "forward") {
        ex.direction = Direction::kForward;
      } else if (dir == "reverse") {
        ex.direction = Direction::kReverse;
      } else {
        throw CorpusFormatError(line_no, "unknown direction '" + dir + "'");
      }
    } else if (j.contains("direction")) {
      throw CorpusFormatError(line_no, "mlm examples carry no direction");
    }
    ex.source = str("source");
    ex.target = str("target");
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace dvkit::corpus
