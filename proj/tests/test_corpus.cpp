#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "dvkit/corpus.hpp"
#include "test_support.hpp"

using namespace dvkit;
using namespace dvkit::corpus;
using testing_support::catalog;
using testing_support::fixture;

namespace {

std::vector<std::string> words(const std::string& s) { return text::split_whitespace(s); }

double binom(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

struct Fixtures {
  std::vector<Text2VisRecord> t2v = load_records<Text2VisRecord>(fixture("text2vis.jsonl")).records;
  std::vector<VisQARecord> qa = load_records<VisQARecord>(fixture("visqa.jsonl")).records;
  std::vector<TableTextRecord> tt = load_records<TableTextRecord>(fixture("tabletext.jsonl")).records;
  SourceRecords src() const { return SourceRecords{&t2v, &qa, &tt}; }
};

const DualPair& pair_for(const std::vector<DualPair>& pairs, Task task, const std::string& key) {
  for (const auto& p : pairs) {
    if (p.task == task && p.key == key) return p;
  }
  throw std::runtime_error("no pair " + key);
}

}  // namespace

TEST(Tokens, MaskIndexAndReserved) {
  EXPECT_EQ(tokens::mask(3), "<mask_3>");
  EXPECT_EQ(tokens::mask_index("<mask_12>"), 12u);
  EXPECT_EQ(tokens::mask_index("<mask_0>"), 0u);
  EXPECT_EQ(tokens::mask_index("<mask_01>"), 0u);
  EXPECT_EQ(tokens::mask_index("<mask_>"), 0u);
  EXPECT_EQ(tokens::mask_index("mask_1"), 0u);
  EXPECT_EQ(tokens::find_reserved("plain text"), std::string::npos);
  EXPECT_EQ(tokens::find_reserved("ab <VQL> c"), 3u);
  EXPECT_EQ(tokens::find_reserved("x <mask_2> y"), 2u);
  for (Task t : kAllTasks) EXPECT_EQ(task_from(to_string(t)), t);
  EXPECT_FALSE(task_from("summarize"));
}

TEST(SpanCorruption, SentinelLayout) {
  const auto toks = words(
      "visualize bar select people.name from people group by people.name order by people.name desc");
  const auto ex = corrupt_spans(toks, {{1, 1}, {5, 2}, {10, 1}, {12, 1}});
  EXPECT_EQ(text::join(ex.target, " "), "<mask_1> bar <mask_2> people group <mask_3> by <mask_4> desc");
  EXPECT_EQ(text::join(ex.corrupted_input, " "),
            "visualize <mask_1> select people.name from <mask_2> by people.name order <mask_3> people.name <mask_4>");
  EXPECT_EQ(reconstruct(ex), toks);
}

TEST(SpanCorruption, RejectsBadSpans) {
  const auto toks = words("a b c d e");
  EXPECT_THROW(corrupt_spans(toks, {{1, 2}, {3, 1}}), CorpusError);  // adjacent
  EXPECT_THROW(corrupt_spans(toks, {{2, 1}, {1, 1}}), CorpusError);  // unsorted
  EXPECT_THROW(corrupt_spans(toks, {{4, 2}}), CorpusError);          // out of range
  EXPECT_THROW(corrupt_spans(toks, {{1, 0}}), CorpusError);
  Rng rng(1);
  EXPECT_THROW(span_corrupt({"one"}, {}, rng), CorpusError);
}

TEST(SpanCorruption, Counts) {
  EXPECT_EQ(masked_token_count(1000, 0.15), 150u);
  EXPECT_EQ(masked_token_count(10, 0.15), 2u);   // 1.5 rounds away from zero
  EXPECT_EQ(masked_token_count(3, 0.15), 1u);    // clamped up
  EXPECT_EQ(masked_token_count(2, 0.15), 1u);
  EXPECT_EQ(masked_token_count(4, 0.9), 3u);     // clamped down
  EXPECT_EQ(span_count(150, 3.0, 1000), 50u);
  EXPECT_EQ(span_count(2, 3.0, 10), 1u);
  EXPECT_EQ(span_count(3, 1.0, 4), 2u);          // 3 single spans cannot fit in 4
  EXPECT_EQ(span_count(1, 3.0, 2), 1u);
}

TEST(SpanCorruption, TwoTokenSequenceMasksExactlyOne) {
  Rng rng(2);
  std::map<std::size_t, int> starts;
  for (int i = 0; i < 2000; ++i) {
    const auto sp = sample_spans(2, {}, rng);
    ASSERT_EQ(sp.size(), 1u);
    ASSERT_EQ(sp[0].length, 1u);
    ++starts[sp[0].start];
  }
  EXPECT_EQ(starts.size(), 2u);
}

TEST(SpanCorruption, ReconstructsAndStaysValid) {
  Rng rng(11);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 2 + uniform_below(rng, 120);
    std::vector<std::string> toks;
    for (std::size_t i = 0; i < n; ++i) toks.push_back("w" + std::to_string(uniform_below(rng, 7)));
    CorruptionConfig cfg{0.05 + 0.5 * uniform_unit(rng), 1.0 + 4.0 * uniform_unit(rng)};
    const auto spans = sample_spans(n, cfg, rng);
    std::size_t masked = 0;
    for (std::size_t i = 0; i < spans.size(); ++i) {
      masked += spans[i].length;
      if (i > 0) {
        ASSERT_GT(spans[i].start, spans[i - 1].start + spans[i - 1].length);
      }
    }
    ASSERT_EQ(masked, masked_token_count(n, cfg.mask_rate));
    ASSERT_EQ(spans.size(), span_count(masked, cfg.mean_span, n));
    const auto ex = corrupt_spans(toks, spans);
    ASSERT_EQ(reconstruct(ex), toks);
    ASSERT_EQ(ex.corrupted_input.size() + ex.target.size(), n + 2 * spans.size());
  }
}

TEST(SpanCorruption, PlacementUniformOverNonAdjacentChoices) {
  // n = 6, two single-token spans: C(5, 2) = 10 placements.
  const CorruptionConfig cfg{0.34, 1.0};
  ASSERT_EQ(masked_token_count(6, cfg.mask_rate), 2u);
  ASSERT_EQ(span_count(2, cfg.mean_span, 6), 2u);
  std::set<std::pair<std::size_t, std::size_t>> expected;
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = a + 2; b < 6; ++b) expected.insert({a, b});
  ASSERT_EQ(expected.size(), 10u);

  Rng rng(4);
  std::map<std::pair<std::size_t, std::size_t>, int> hist;
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) {
    const auto sp = sample_spans(6, cfg, rng);
    ++hist[{sp[0].start, sp[1].start}];
  }
  ASSERT_EQ(hist.size(), expected.size());
  for (const auto& [p, n] : hist) {
    EXPECT_TRUE(expected.contains(p));
    EXPECT_NEAR(n / double(draws), 0.1, 0.01);
  }
}

TEST(SpanCorruption, LengthsAreAUniformComposition) {
  // n = 100: 15 masked tokens in 5 spans; P(first length = l) = C(14 - l, 3) / C(14, 4).
  Rng rng(6);
  const int draws = 40000;
  std::map<std::size_t, int> first;
  for (int i = 0; i < draws; ++i) {
    const auto sp = sample_spans(100, {}, rng);
    ASSERT_EQ(sp.size(), 5u);
    ++first[sp[0].length];
  }
  for (std::size_t l = 1; l <= 11; ++l) {
    const double p = binom(14 - l, 3) / binom(14, 4);
    EXPECT_NEAR(first[l] / double(draws), p, 0.01) << l;
  }
}

TEST(SpanCorruption, LongSequenceStatistics) {
  Rng rng(8);
  double spans = 0, masked = 0;
  const int runs = 500;
  for (int i = 0; i < runs; ++i) {
    const auto sp = sample_spans(1000, {}, rng);
    spans += static_cast<double>(sp.size());
    for (const auto& s : sp) masked += static_cast<double>(s.length);
  }
  EXPECT_DOUBLE_EQ(masked / runs / 1000.0, 0.15);
  EXPECT_DOUBLE_EQ(masked / spans, 3.0);
}

TEST(Orientation, BalancedAndFlippable) {
  const DualPair p{Task::kText2Vis, "k", {{tokens::kNl, "q"}}, {{tokens::kVql, "v"}}};
  Rng rng(99);
  int forward = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto ex = orient_bidirectional(p, rng);
    if (ex.direction == Direction::kForward) {
      ++forward;
      ASSERT_EQ(ex.source, "<nl> q");
      ASSERT_EQ(ex.target, "<vql> v");
    } else {
      ASSERT_EQ(ex.source, "<vql> v");
    }
    ASSERT_EQ(flip(flip(ex)), ex);
    ASSERT_NE(flip(ex).direction, ex.direction);
  }
  EXPECT_NEAR(forward / double(draws), 0.5, 0.01);
}

TEST(Mixing, RatesFollowTemperature) {
  auto r = mixing_rates({100, 400}, 2.0);
  EXPECT_NEAR(r[0], 1.0 / 3, 1e-12);
  EXPECT_NEAR(r[1], 2.0 / 3, 1e-12);
  r = mixing_rates({100, 400}, 1.0);
  EXPECT_NEAR(r[0], 0.2, 1e-12);
  EXPECT_NEAR(r[1], 0.8, 1e-12);
  r = mixing_rates({100, 400}, 2.0, 100);
  EXPECT_NEAR(r[0], 0.5, 1e-12);
  r = mixing_rates({0, 9, 16}, 2.0);
  EXPECT_EQ(r[0], 0.0);
  EXPECT_NEAR(r[1], 3.0 / 7, 1e-12);
  EXPECT_THROW(mixing_rates({1, 2}, 0.0), std::invalid_argument);
  EXPECT_THROW(mixing_rates({0, 0}, 2.0), std::invalid_argument);
}

TEST(Mixing, SamplerMatchesRatesAndCoversEpochs) {
  MixtureSampler s({10, 40, 0, 90}, MixtureConfig{2.0, std::nullopt, 5});
  std::vector<int> task_hits(4, 0);
  std::map<std::size_t, std::vector<std::size_t>> seq;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto d = s.next();
    ++task_hits[d.task];
    seq[d.task].push_back(d.index);
  }
  const std::vector<double> expect{std::sqrt(10.0), std::sqrt(40.0), 0.0, std::sqrt(90.0)};
  const double z = expect[0] + expect[1] + expect[3];
  for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(task_hits[t] / double(draws), expect[t] / z, 0.01);
  // Each epoch visits every example of a task exactly once.
  for (const auto& [t, v] : seq) {
    const std::size_t size = std::vector<std::size_t>{10, 40, 0, 90}[t];
    for (std::size_t e = 0; e + size <= v.size(); e += size) {
      std::set<std::size_t> epoch(v.begin() + static_cast<long>(e), v.begin() + static_cast<long>(e + size));
      ASSERT_EQ(epoch.size(), size);
    }
  }
}

TEST(Mixing, SampleMixtureIsDeterministic) {
  std::vector<OrientedExample> ex;
  for (int i = 0; i < 30; ++i) {
    OrientedExample e;
    e.task = i < 10 ? Task::kText2Vis : Task::kTable2Text;
    e.source = "s" + std::to_string(i);
    ex.push_back(e);
  }
  const auto a = sample_mixture(ex, 200, MixtureConfig{2.0, std::nullopt, 1});
  EXPECT_EQ(a.size(), 200u);
  EXPECT_EQ(a, sample_mixture(ex, 200, MixtureConfig{2.0, std::nullopt, 1}));
  EXPECT_NE(a, sample_mixture(ex, 200, MixtureConfig{2.0, std::nullopt, 2}));
  EXPECT_TRUE(sample_mixture(ex, 0, {}).empty());
}

TEST(Build, ArtistPairs) {
  const Fixtures f;
  const auto pairs = build_dual_pairs(f.src(), catalog());
  const auto& p = pair_for(pairs, Task::kText2Vis, "t2v-001");
  const std::string schema =
      "| theme_gallery | artist : artist.age, artist.name, artist.country, artist.year_join, artist.artist_id";
  const std::string query =
      "visualize pie select artist.country, count(artist.country) from artist group by artist.country";
  EXPECT_EQ(render(p.side_a),
            "<nl> give me a pie chart about the proportion of the number of countries in the artist table <schema> " +
                schema);
  EXPECT_EQ(render(p.side_b), "<vql> " + query);
  const auto& v = pair_for(pairs, Task::kVis2Text, "t2v-001");
  EXPECT_EQ(render(v.side_a), "<vql> " + query + " <schema> " + schema);
  EXPECT_EQ(render(v.side_b),
            "<description> Give me a pie chart about the proportion of the number of countries in the artist table");
  // t2v-047 repeats the query of t2v-001.
  EXPECT_THROW(pair_for(pairs, Task::kVis2Text, "t2v-047"), std::runtime_error);
}

TEST(Build, PairCountsAndOrder) {
  const Fixtures f;
  const auto pairs = build_dual_pairs(f.src(), catalog());
  std::map<Task, int> n;
  for (const auto& p : pairs) ++n[p.task];
  EXPECT_EQ(n[Task::kText2Vis], 50);
  EXPECT_EQ(n[Task::kVis2Text], 46);
  EXPECT_EQ(n[Task::kFeVisQA], 12);
  EXPECT_EQ(n[Task::kTable2Text], 10);
  EXPECT_TRUE(std::is_sorted(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.task < b.task; }));
}

TEST(Build, FeVisQASegments) {
  const Fixtures f;
  const auto pairs = build_dual_pairs(f.src(), catalog());
  const auto& p = pair_for(pairs, Task::kFeVisQA, "qa-006");
  ASSERT_EQ(p.side_a.size(), 4u);
  EXPECT_EQ(p.side_a[0], (Segment{tokens::kQuestion, "Which country has the most artists?"}));
  EXPECT_EQ(p.side_a[1].tag, tokens::kVql);
  EXPECT_EQ(p.side_a[2].tag, tokens::kSchema);
  EXPECT_EQ(p.side_a[3], (Segment{tokens::kTable,
                                  "col : artist.country | count(artist.country) row 1 : Netherlands | 1 row 2 : "
                                  "United States | 4 row 3 : Zimbabwe | 2 row 4 : Fiji | 1"}));
  EXPECT_EQ(p.side_b, (std::vector<Segment>{{tokens::kAnswer, "United States"}}));

  const auto& film = pair_for(pairs, Task::kFeVisQA, "qa-001");
  EXPECT_EQ(film.side_a[3].text,
            "col : film.type | count(film.type) row 1 : Mass human sacrifice | 1 row 2 : Mass suicide | 6 row 3 : "
            "Mass suicide murder | 2");

  const auto& t = pair_for(pairs, Task::kTable2Text, "tt-005");
  ASSERT_EQ(t.side_a.size(), 1u);
  EXPECT_EQ(t.side_a[0].tag, tokens::kTable);
  EXPECT_EQ(t.side_a[0].text.rfind("col : name | nationality | position row 1 : Ivan Ljubicic", 0), 0u);
  EXPECT_EQ(t.side_b[0].tag, tokens::kDescription);
}

TEST(Build, ExamplesAreDeterministicAndSeeded) {
  const Fixtures f;
  BuildConfig cfg;
  cfg.seed = 17;
  const auto a = build_corpus(f.src(), catalog(), cfg);
  const auto b = build_corpus(f.src(), catalog(), cfg);
  EXPECT_EQ(write_corpus(a.examples), write_corpus(b.examples));
  cfg.seed = 18;
  EXPECT_NE(write_corpus(a.examples), write_corpus(build_corpus(f.src(), catalog(), cfg).examples));

  std::size_t dual = 0;
  std::set<std::string> mlm_sources;
  for (const auto& ex : a.examples) {
    if (ex.objective == Objective::kDual) {
      ++dual;
      ASSERT_TRUE(ex.direction);
    } else {
      ASSERT_FALSE(ex.direction);
      EXPECT_NE(ex.target.find("<mask_1>"), std::string::npos);
      MlmExample m{words(ex.source), words(ex.target)};
      EXPECT_FALSE(reconstruct(m).empty());
    }
  }
  EXPECT_EQ(dual, a.pairs.size());
}

TEST(Build, OrientationIndependentOfOtherRecords) {
  const Fixtures f;
  BuildConfig cfg;
  cfg.seed = 3;
  cfg.mlm = false;
  const auto all = build_corpus(f.src(), catalog(), cfg);
  std::vector<TableTextRecord> one{f.tt[4]};
  const auto single = build_corpus(SourceRecords{nullptr, nullptr, &one}, catalog(), cfg);
  ASSERT_EQ(single.examples.size(), 1u);
  const auto it = std::find(all.examples.begin(), all.examples.end(), single.examples[0]);
  EXPECT_NE(it, all.examples.end());
}

TEST(Build, ErrorsAndSkips) {
  const Fixtures f;
  std::vector<Text2VisRecord> bad = {f.t2v[0]};
  bad[0].db_id = "missing_db";
  EXPECT_THROW(build_corpus(SourceRecords{&bad, nullptr, nullptr}, catalog(), {}), SchemaError);

  std::vector<Text2VisRecord> reserved = {f.t2v[0]};
  reserved[0].question = "show <vql> please";
  EXPECT_THROW(build_corpus(SourceRecords{&reserved, nullptr, nullptr}, catalog(), {}), CorpusError);

  std::vector<Text2VisRecord> broken = {f.t2v[0], f.t2v[1]};
  broken[0].vql = "visualize bar select from";
  EXPECT_THROW(build_corpus(SourceRecords{&broken, nullptr, nullptr}, catalog(), {}), CorpusError);
  BuildConfig skip;
  skip.skip_invalid = true;
  const auto res = build_corpus(SourceRecords{&broken, nullptr, nullptr}, catalog(), skip);
  ASSERT_EQ(res.skipped.size(), 1u);
  EXPECT_EQ(res.skipped[0].record_id, f.t2v[0].id);
  EXPECT_EQ(res.pairs.size(), 2u);
}

TEST(CorpusFile, RoundTripAndValidation) {
  const Fixtures f;
  const auto res = build_corpus(f.src(), catalog(), {});
  const std::string text = write_corpus(res.examples);
  EXPECT_EQ(read_corpus(text), res.examples);

  const auto first = to_jsonl_line(res.examples[0]);
  EXPECT_EQ(first.rfind("{\"objective\":\"dual\",\"task\":\"text2vis\",\"direction\":", 0), 0u);

  EXPECT_THROW(read_corpus("{\"objective\":\"dual\",\"task\":\"text2vis\",\"source\":\"a\",\"target\":\"b\"}\n"),
               CorpusFormatError);
  EXPECT_THROW(read_corpus("{\"objective\":\"mlm\",\"task\":\"text2vis\",\"direction\":\"forward\","
                           "\"source\":\"a\",\"target\":\"b\"}\n"),
               CorpusFormatError);
  EXPECT_THROW(read_corpus("{\"objective\":\"dual\",\"task\":\"poetry\",\"direction\":\"forward\","
                           "\"source\":\"a\",\"target\":\"b\"}\n"),
               CorpusFormatError);
  try {
    read_corpus(first + "\nnot json\n");
    FAIL();
  } catch (const CorpusFormatError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Tokenizer, VocabGreedyLongestMatch) {
  const VocabTokenizer tok({"visual", "##ize", "##iz", "bar", "count", "##ry"});
  EXPECT_EQ(tok("visualize bar <mask_1> country"),
            (std::vector<std::string>{"visual", "##ize", "bar", "<mask_1>", "count", "##ry"}));
  EXPECT_EQ(tok("xy"), (std::vector<std::string>{"x", "##y"}));

  const std::string path = testing::TempDir() + "dvkit_vocab.txt";
  {
    std::ofstream out(path);
    out << "bar\n  \n##s\n";
  }
  EXPECT_EQ(VocabTokenizer::from_file(path)("bars"), (std::vector<std::string>{"bar", "##s"}));
  std::remove(path.c_str());
  EXPECT_THROW(VocabTokenizer::from_file("/nonexistent/vocab.txt"), IoError);
}
