#pragma once

// Evaluation metrics. Exact match over DV queries, split into chart type,
// select list and data clauses; BLEU, ROUGE-1/2/L and METEOR (exact and
// Porter-stem stages) over text.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dvkit/dataset.hpp"
#include "dvkit/porter_stemmer.hpp"
#include "dvkit/schema.hpp"
#include "dvkit/text.hpp"
#include "dvkit/vql.hpp"

namespace dvkit::metrics {

// ---------------------------------------------------------------------------
// Exact match

struct SampleMatch {
  bool vis = false;
  bool axis = false;
  bool data = false;
  bool all = false;
  friend bool operator==(const SampleMatch&, const SampleMatch&) = default;
};

struct EmReport {
  std::size_t n = 0;
  double vis_em = 0.0;
  double axis_em = 0.0;
  double data_em = 0.0;
  double em = 0.0;
  std::vector<SampleMatch> per_sample;
};

struct EmOptions {
  /// Run the standardization rules over gold queries as well. When off,
  /// gold queries are only re-serialized canonically.
  bool normalize_gold = true;
  vql::ParseOptions parse;
};

namespace detail {

inline std::optional<vql::QueryComponents> prediction_components(std::string_view pred,
                                                                 const DatabaseSchema& schema,
                                                                 const EmOptions& opts) {
  try {
    const auto q = vql::normalize_vql(vql::parse_vql(pred, opts.parse), schema, {.strict = false});
    return vql::decompose(q);
  } catch (const vql::SyntaxError&) {
  } catch (const vql::UnknownChartError&) {
  } catch (const vql::NormalizeError&) {
  }
  return std::nullopt;
}

inline vql::QueryComponents gold_components(std::string_view gold, const DatabaseSchema& schema,
                                            const EmOptions& opts) {
  auto q = vql::parse_vql(gold, opts.parse);
  if (opts.normalize_gold) q = vql::normalize_vql(q, schema);
  return vql::decompose(q);
}

inline SampleMatch compare(const std::optional<vql::QueryComponents>& p, const vql::QueryComponents& g) {
  SampleMatch m;
  if (!p) return m;
  m.vis = p->vis == g.vis;
  m.axis = p->axis == g.axis;
  m.data = p->data == g.data;
  m.all = m.vis && m.axis && m.data;
  return m;
}

}  // namespace detail

inline EmReport aggregate(std::vector<SampleMatch> per_sample) {
  EmReport r;
  r.n = per_sample.size();
  std::size_t vis = 0, axis = 0, data = 0, all = 0;
  for (const auto& m : per_sample) {
    vis += m.vis;
    axis += m.axis;
    data += m.data;
    all += m.all;
  }
  if (r.n > 0) {
    const auto n = static_cast<double>(r.n);
    r.vis_em = static_cast<double>(vis) / n;
    r.axis_em = static_cast<double>(axis) / n;
    r.data_em = static_cast<double>(data) / n;
    r.em = static_cast<double>(all) / n;
  }
  r.per_sample = std::move(per_sample);
  return r;
}

/// Scores predictions against gold queries. `db_ids[i]` names the schema
/// for sample i. Predictions that do not parse count as a full mismatch;
/// gold queries must parse.
inline EmReport em_suite(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                         const std::vector<std::string>& db_ids, const SchemaCatalog& catalog,
                         const EmOptions& opts = {}) {
  if (pred.size() != gold.size() || db_ids.size() != gold.size()) {
    throw std::invalid_argument("em_suite: " + std::to_string(pred.size()) + " predictions, " +
                                std::to_string(gold.size()) + " gold queries and " +
                                std::to_string(db_ids.size()) + " database ids");
  }
  std::vector<SampleMatch> per_sample;
  per_sample.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const DatabaseSchema& schema = catalog.at(db_ids[i]);
    per_sample.push_back(detail::compare(detail::prediction_components(pred[i], schema, opts),
                                         detail::gold_components(gold[i], schema, opts)));
  }
  return aggregate(std::move(per_sample));
}

inline nlohmann::ordered_json to_json(const EmReport& r, bool with_samples = false) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["vis_em"] = r.vis_em;
  j["axis_em"] = r.axis_em;
  j["data_em"] = r.data_em;
  j["em"] = r.em;
  if (with_samples) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& m : r.per_sample) {
      arr.push_back({{"vis", m.vis}, {"axis", m.axis}, {"data", m.data}, {"all", m.all}});
    }
    j["per_sample"] = std::move(arr);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Text metrics

using Tokens = std::vector<std::string>;

/// Lowercases, splits on whitespace, and makes every ASCII punctuation
/// character its own token.
inline Tokens tokenize(std::string_view s) {
  Tokens out;
  std::string cur;
  const auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : s) {
    const auto u = static_cast<unsigned char>(ch);
    if (text::is_space(ch)) {
      flush();
    } else if (u < 0x80 && !text::is_alnum_ascii(ch)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur += text::lower_char(ch);
    }
  }
  flush();
  return out;
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

inline NgramCounts ngram_counts(const Tokens& toks, std::size_t n) {
  NgramCounts out;
  if (n == 0 || toks.size() < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++out[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                   toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

/// Sum over candidate n-grams of min(count, max count in any reference).
inline std::size_t clipped_matches(const Tokens& cand, const std::vector<Tokens>& refs, std::size_t n) {
  std::size_t total = 0;
  std::vector<NgramCounts> ref_counts;
  for (const auto& r : refs) ref_counts.push_back(ngram_counts(r, n));
  for (const auto& [gram, c] : ngram_counts(cand, n)) {
    std::size_t max_ref = 0;
    for (const auto& rc : ref_counts) {
      if (auto it = rc.find(gram); it != rc.end()) max_ref = std::max(max_ref, it->second);
    }
    total += std::min(c, max_ref);
  }
  return total;
}

/// Sufficient statistics for BLEU; sums across samples for corpus BLEU.
struct BleuStats {
  std::vector<std::size_t> matches;  // index k-1: clipped k-gram matches
  std::vector<std::size_t> totals;   // index k-1: candidate k-grams
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& o) {
    if (matches.size() < o.matches.size()) {
      matches.resize(o.matches.size(), 0);
      totals.resize(o.totals.size(), 0);
    }
    for (std::size_t k = 0; k < o.matches.size(); ++k) {
      matches[k] += o.matches[k];
      totals[k] += o.totals[k];
    }
    cand_len += o.cand_len;
    ref_len += o.ref_len;
    return *this;
  }
};

/// Reference length closest to `c`; ties go to the shorter reference.
inline std::size_t closest_ref_length(std::size_t c, const std::vector<Tokens>& refs) {
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = [c](std::size_t len) { return len > c ? len - c : c - len; };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  return best;
}

inline BleuStats bleu_stats(const Tokens& cand, const std::vector<Tokens>& refs, std::size_t max_n) {
  if (refs.empty()) throw std::invalid_argument("BLEU needs at least one reference");
  BleuStats s;
  for (std::size_t k = 1; k <= max_n; ++k) {
    s.matches.push_back(clipped_matches(cand, refs, k));
    s.totals.push_back(cand.size() >= k ? cand.size() - k + 1 : 0);
  }
  s.cand_len = cand.size();
  s.ref_len = closest_ref_length(cand.size(), refs);
  return s;
}

/// Unsmoothed: any zero precision gives 0.
inline double bleu_from_stats(const BleuStats& s, std::size_t n) {
  if (n == 0) throw std::invalid_argument("BLEU order must be >= 1");
  if (s.cand_len == 0 || s.matches.size() < n) return 0.0;
  double log_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (s.matches[k] == 0 || s.totals[k] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(s.matches[k]) / static_cast<double>(s.totals[k]));
  }
  const double c = static_cast<double>(s.cand_len);
  const double r = static_cast<double>(s.ref_len);
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return std::min(1.0, bp * std::exp(log_sum / static_cast<double>(n)));
}

inline double bleu_n(const Tokens& cand, const std::vector<Tokens>& refs, std::size_t n) {
  return bleu_from_stats(bleu_stats(cand, refs, n), n);
}

inline double bleu_n(std::string_view cand, const std::vector<std::string>& refs, std::size_t n) {
  std::vector<Tokens> r;
  for (const auto& x : refs) r.push_back(tokenize(x));
  return bleu_n(tokenize(cand), r, n);
}

/// Counts summed over all samples before taking precisions.
inline double corpus_bleu(const std::vector<Tokens>& cands, const std::vector<std::vector<Tokens>>& refs,
                          std::size_t n) {
  if (cands.size() != refs.size()) throw std::invalid_argument("corpus_bleu: length mismatch");
  BleuStats total;
  for (std::size_t i = 0; i < cands.size(); ++i) total += bleu_stats(cands[i], refs[i], n);
  return bleu_from_stats(total, n);
}

enum class RougeVariant { kRouge1, kRouge2, kRougeL };

inline double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline double rouge(const Tokens& cand, const Tokens& ref, RougeVariant v) {
  if (v == RougeVariant::kRougeL) {
    if (cand.empty() || ref.empty()) return 0.0;
    const auto l = static_cast<double>(lcs_length(cand, ref));
    return f1(l / static_cast<double>(cand.size()), l / static_cast<double>(ref.size()));
  }
  const std::size_t n = v == RougeVariant::kRouge1 ? 1 : 2;
  const NgramCounts c = ngram_counts(cand, n);
  const NgramCounts r = ngram_counts(ref, n);
  std::size_t c_total = 0, r_total = 0, overlap = 0;
  for (const auto& [g, k] : c) c_total += k;
  for (const auto& [g, k] : r) {
    r_total += k;
    if (auto it = c.find(g); it != c.end()) overlap += std::min(k, it->second);
  }
  if (c_total == 0 || r_total == 0) return 0.0;
  return f1(static_cast<double>(overlap) / static_cast<double>(c_total),
            static_cast<double>(overlap) / static_cast<double>(r_total));
}

inline double rouge(std::string_view cand, std::string_view ref, RougeVariant v) {
  return rouge(tokenize(cand), tokenize(ref), v);
}

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

/// Exact stage, then Porter-stem stage over the tokens left unaligned. In
/// each stage a candidate token prefers the reference token right after
/// the previous alignment, else the leftmost free one.
inline MeteorAlignment meteor_align(const Tokens& cand, const Tokens& ref) {
  std::vector<std::optional<std::size_t>> link(cand.size());
  std::vector<bool> used(ref.size(), false);
  const auto stage = [&](const Tokens& c, const Tokens& r) {
    std::optional<std::size_t> prev;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (link[i]) {
        prev = link[i];
        continue;
      }
      std::optional<std::size_t> pick;
      if (prev && *prev + 1 < r.size() && !used[*prev + 1] && r[*prev + 1] == c[i]) pick = *prev + 1;
      for (std::size_t j = 0; !pick && j < r.size(); ++j) {
        if (!used[j] && r[j] == c[i]) pick = j;
      }
      if (pick) {
        link[i] = pick;
        used[*pick] = true;
        prev = pick;
      }
    }
  };
  stage(cand, ref);
  Tokens cs, rs;
  for (const auto& t : cand) cs.push_back(porter_stem(t));
  for (const auto& t : ref) rs.push_back(porter_stem(t));
  stage(cs, rs);

  MeteorAlignment a;
  std::optional<std::size_t> prev_c, prev_r;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (!link[i]) continue;
    ++a.matches;
    if (!prev_c || *prev_c + 1 != i || *prev_r + 1 != *link[i]) ++a.chunks;
    prev_c = i;
    prev_r = link[i];
  }
  return a;
}

/// F_mean = 10PR / (R + 9P), penalty = 0.5 (chunks / matches)^3,
/// score = F_mean (1 - penalty). Synonym matching is not performed.
inline double meteor(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  const MeteorAlignment a = meteor_align(cand, ref);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double p = m / static_cast<double>(cand.size());
  const double r = m / static_cast<double>(ref.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double penalty = 0.5 * std::pow(static_cast<double>(a.chunks) / m, 3.0);
  return fmean * (1.0 - penalty);
}

inline double meteor(std::string_view cand, std::string_view ref) { return meteor(tokenize(cand), tokenize(ref)); }

/// Best score over references.
inline double meteor(const Tokens& cand, const std::vector<Tokens>& refs) {
  double best = 0.0;
  for (const auto& r : refs) best = std::max(best, meteor(cand, r));
  return best;
}

struct TextGenReport {
  std::size_t n = 0;
  double bleu_1 = 0.0;
  double bleu_2 = 0.0;
  double bleu_4 = 0.0;
  double rouge_1 = 0.0;
  double rouge_2 = 0.0;
  double rouge_l = 0.0;
  double meteor = 0.0;
};

/// Corpus BLEU; ROUGE and METEOR are sample means, each taken against the
/// best-scoring reference.
inline TextGenReport text_gen_suite(const std::vector<std::string>& cands,
                                    const std::vector<std::vector<std::string>>& refs) {
  if (cands.size() != refs.size()) {
    throw std::invalid_argument("text_gen_suite: " + std::to_string(cands.size()) + " candidates and " +
                                std::to_string(refs.size()) + " reference sets");
  }
  TextGenReport rep;
  rep.n = cands.size();
  if (rep.n == 0) return rep;
  std::vector<Tokens> c;
  std::vector<std::vector<Tokens>> r;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (refs[i].empty()) throw std::invalid_argument("sample " + std::to_string(i + 1) + " has no reference");
    c.push_back(tokenize(cands[i]));
    r.emplace_back();
    for (const auto& x : refs[i]) r.back().push_back(tokenize(x));
  }
  rep.bleu_1 = corpus_bleu(c, r, 1);
  rep.bleu_2 = corpus_bleu(c, r, 2);
  rep.bleu_4 = corpus_bleu(c, r, 4);
  for (std::size_t i = 0; i < c.size(); ++i) {
    double r1 = 0.0, r2 = 0.0, rl = 0.0;
    for (const auto& ref : r[i]) {
      r1 = std::max(r1, rouge(c[i], ref, RougeVariant::kRouge1));
      r2 = std::max(r2, rouge(c[i], ref, RougeVariant::kRouge2));
      rl = std::max(rl, rouge(c[i], ref, RougeVariant::kRougeL));
    }
    rep.rouge_1 += r1;
    rep.rouge_2 += r2;
    rep.rouge_l += rl;
    rep.meteor += meteor(c[i], r[i]);
  }
  const auto n = static_cast<double>(rep.n);
  rep.rouge_1 /= n;
  rep.rouge_2 /= n;
  rep.rouge_l /= n;
  rep.meteor /= n;
  return rep;
}

inline nlohmann::ordered_json to_json(const TextGenReport& r) {
  nlohmann::ordered_json j;
  j["n"] = r.n;
  j["bleu_1"] = r.bleu_1;
  j["bleu_2"] = r.bleu_2;
  j["bleu_4"] = r.bleu_4;
  j["rouge_1"] = r.rouge_1;
  j["rouge_2"] = r.rouge_2;
  j["rouge_l"] = r.rouge_l;
  j["meteor"] = r.meteor;
  return j;
}

}  // namespace dvkit::metrics
