#include <gtest/gtest.h>

#include "dvkit/random.hpp"
#include "dvkit/schema.hpp"
#include "dvkit/table.hpp"
#include "test_support.hpp"

using namespace dvkit;
using testing_support::catalog;

namespace {

const char* kArtistQuestion = "Give me a pie chart about the proportion of the number of countries in the artist table";

DatabaseSchema only(const DatabaseSchema& s, const std::vector<std::string>& tables) {
  DatabaseSchema out{s.db_name, {}};
  for (const auto& t : tables) out.tables.push_back(*s.find_table(t));
  return out;
}

// Naive overlap: some contiguous run of <= max_n identifier tokens occurs
// contiguously in the question.
bool naive_overlap(const std::vector<std::string>& q, const std::vector<std::string>& id, int max_n) {
  for (std::size_t i = 0; i < id.size(); ++i) {
    for (std::size_t n = 1; n <= static_cast<std::size_t>(max_n) && i + n <= id.size(); ++n) {
      for (std::size_t j = 0; j + n <= q.size(); ++j) {
        bool eq = true;
        for (std::size_t k = 0; k < n && eq; ++k) eq = q[j + k] == id[i + k];
        if (eq) return true;
      }
    }
  }
  return false;
}

}  // namespace

TEST(SchemaEncode, SingleTableExamples) {
  EXPECT_EQ(encode_schema(only(catalog().at("inn_1"), {"rooms"})),
            "| inn_1 | rooms : rooms.roomid, rooms.roomname, rooms.bedtype, rooms.baseprice, rooms.decor");
  EXPECT_EQ(encode_schema(only(catalog().at("theme_gallery"), {"artist"})),
            "| theme_gallery | artist : artist.age, artist.name, artist.country, artist.year_join, artist.artist_id");
  EXPECT_EQ(encode_schema(DatabaseSchema{"d", {TableSchema{"t", {ColumnDef{"c", ""}}}}}), "| d | t : t.c");
}

TEST(SchemaEncode, AllergyMultiTable) {
  EXPECT_EQ(encode_schema(catalog().at("allergy_1")),
            "| allergy_1 | allergy_type : allergy_type.allergy, allergy_type.allergytype | has_allergy : "
            "has_allergy.stuid, has_allergy.allergy | student : student.stuid, student.lname, student.fname, "
            "student.age, student.sex, student.major, student.advisor, student.city_code");
}

TEST(SchemaEncode, RejectsDelimiters) {
  for (const char* bad : {"a|b", "a,b", "a:b"}) {
    EXPECT_THROW(encode_schema(DatabaseSchema{"d", {TableSchema{"t", {ColumnDef{bad, ""}}}}}), SchemaError);
    EXPECT_THROW(encode_schema(DatabaseSchema{"d", {TableSchema{bad, {ColumnDef{"c", ""}}}}}), SchemaError);
    EXPECT_THROW(encode_schema(DatabaseSchema{bad, {TableSchema{"t", {ColumnDef{"c", ""}}}}}), SchemaError);
  }
}

TEST(SchemaEncode, DecodeInvertsEncodeOnRandomSchemas) {
  Rng rng(21);
  const auto name = [&rng] {
    std::string s;
    const std::size_t len = 1 + uniform_below(rng, 8);
    for (std::size_t i = 0; i < len; ++i) s += "abcxyz_09"[uniform_below(rng, 9)];
    return s;
  };
  for (int trial = 0; trial < 300; ++trial) {
    DatabaseSchema s{name(), {}};
    const std::size_t tables = 1 + uniform_below(rng, 4);
    for (std::size_t t = 0; t < tables; ++t) {
      TableSchema ts{name() + std::to_string(t), {}};
      const std::size_t cols = 1 + uniform_below(rng, 5);
      for (std::size_t c = 0; c < cols; ++c) ts.columns.push_back(ColumnDef{name() + std::to_string(c), ""});
      s.tables.push_back(ts);
    }
    EXPECT_EQ(decode_schema(encode_schema(s)), s);
  }
}

TEST(SchemaNormalize, LowercasesNamesOnly) {
  DatabaseSchema s{"Theme_Gallery", {TableSchema{"Artist", {ColumnDef{"Year_Join", "NUMBER"}}}}};
  const DatabaseSchema n = normalize_schema(s);
  EXPECT_EQ(n.db_name, "theme_gallery");
  EXPECT_EQ(n.tables[0].name, "artist");
  EXPECT_EQ(n.tables[0].columns[0].name, "year_join");
  EXPECT_EQ(n.tables[0].columns[0].type, "NUMBER");
  EXPECT_EQ(normalize_schema(n), n);
}

TEST(SchemaValidate, Errors) {
  EXPECT_THROW(validate_schema(DatabaseSchema{"d", {TableSchema{"t", {}}}}), SchemaError);
  EXPECT_THROW(validate_schema(DatabaseSchema{"d", {TableSchema{"t", {ColumnDef{"a", ""}}},
                                                    TableSchema{"T", {ColumnDef{"a", ""}}}}}),
               SchemaError);
  EXPECT_THROW(validate_schema(DatabaseSchema{"d", {TableSchema{"t", {ColumnDef{"a", ""}, ColumnDef{"A", ""}}}}}),
               SchemaError);
  EXPECT_NO_THROW(validate_schema(catalog().at("hr_1")));
}

TEST(SchemaFilter, ArtistQuestionKeepsOnlyArtist) {
  const DatabaseSchema& tg = catalog().at("theme_gallery");
  ASSERT_EQ(tg.tables.size(), 2u);
  const DatabaseSchema f = filter_schema(kArtistQuestion, tg);
  ASSERT_EQ(f.tables.size(), 1u);
  EXPECT_EQ(f.tables[0], *tg.find_table("artist"));
  EXPECT_EQ(f.tables[0].columns.size(), 5u);
}

TEST(SchemaFilter, NoMatchReturnsFullSchema) {
  const DatabaseSchema& tg = catalog().at("theme_gallery");
  EXPECT_EQ(filter_schema("Plot something unrelated please", tg), tg);
  EXPECT_EQ(filter_schema("", tg), tg);
}

TEST(SchemaFilter, ColumnMatchingToggle) {
  const DatabaseSchema& tg = catalog().at("theme_gallery");
  // "attendance" is only a column name.
  EXPECT_EQ(filter_schema("total attendance per day", tg).tables.size(), 1u);
  EXPECT_EQ(filter_schema("total attendance per day", tg).tables[0].name, "exhibition_record");
  EXPECT_EQ(filter_schema("total attendance per day", tg, {3, false}), tg);
}

TEST(SchemaFilter, TwoOfThreeTables) {
  const DatabaseSchema s{"toy",
                         {TableSchema{"singer", {ColumnDef{"singer_id", ""}, ColumnDef{"net_worth", ""}}},
                          TableSchema{"song", {ColumnDef{"title", ""}, ColumnDef{"sales", ""}}},
                          TableSchema{"concert", {ColumnDef{"venue", ""}}}}};
  const DatabaseSchema f = filter_schema("Which singer has the highest net worth and how many songs sales?", s);
  ASSERT_EQ(f.tables.size(), 2u);
  EXPECT_EQ(f.tables[0].name, "singer");
  EXPECT_EQ(f.tables[1].name, "song");
}

TEST(SchemaFilter, AgreesWithNaiveSearch) {
  const std::vector<std::string> vocab = {"net", "worth", "singer", "song", "sales", "id", "venue", "concert",
                                          "the", "of", "exhibition", "record", "date", "year", "join"};
  const DatabaseSchema s{"toy",
                         {TableSchema{"singer", {ColumnDef{"singer_id", ""}, ColumnDef{"net_worth", ""}}},
                          TableSchema{"song_sales", {ColumnDef{"year_join", ""}}},
                          TableSchema{"exhibition_record", {ColumnDef{"date", ""}}},
                          TableSchema{"concert", {ColumnDef{"venue_of_the_year", ""}}}}};
  Rng rng(4);
  for (int trial = 0; trial < 2000; ++trial) {
    std::string q;
    const std::size_t len = uniform_below(rng, 7);
    for (std::size_t i = 0; i < len; ++i) q += (i ? " " : "") + vocab[uniform_below(rng, vocab.size())];
    for (int max_n : {1, 2, 3}) {
      for (bool cols : {true, false}) {
        const auto qt = text::alnum_tokens(q);
        DatabaseSchema expect{s.db_name, {}};
        for (const auto& t : s.tables) {
          bool hit = naive_overlap(qt, text::alnum_tokens(t.name), max_n);
          for (const auto& c : t.columns) hit = hit || (cols && naive_overlap(qt, text::alnum_tokens(c.name), max_n));
          if (hit) expect.tables.push_back(t);
        }
        if (expect.tables.empty()) expect = s;
        EXPECT_EQ(filter_schema(q, s, {max_n, cols}), expect) << q;
      }
    }
  }
}

TEST(SchemaFilter, RejectsZeroMaxN) { EXPECT_THROW(filter_schema("x", catalog().at("inn_1"), {0, true}), std::invalid_argument); }

TEST(TableEncode, ArtistHeaderIsPrefixed) {
  DataTable t{{"Country", "COUNT(Country)"}, {{"Netherlands", "1"}, {"United States", "4"}}, "artist"};
  const std::string enc = encode_table(normalize_table(t));
  EXPECT_EQ(enc.rfind("col : artist.country | count(artist.country)", 0), 0u);
  EXPECT_EQ(enc, "col : artist.country | count(artist.country) row 1 : Netherlands | 1 row 2 : United States | 4");
}

TEST(TableEncode, FilmTypeCountTable) {
  DataTable t{{"Type", "COUNT(Type)"}, {{"Mass human sacrifice", "1"}, {"Mass suicide", "6"}, {"Mass suicide murder", "2"}}, "film"};
  EXPECT_EQ(encode_table(normalize_table(t)),
            "col : film.type | count(film.type) row 1 : Mass human sacrifice | 1 row 2 : Mass suicide | 6 row 3 : "
            "Mass suicide murder | 2");
}

TEST(TableEncode, HeadersWithoutOwnerOnlyLowercased) {
  DataTable t{{"Year", "Revenue in million U.S. dollars"}, {{"2010", "100"}}, std::nullopt};
  EXPECT_EQ(encode_table(normalize_table(t)), "col : year | revenue in million u.s. dollars row 1 : 2010 | 100");
  DataTable d{{"count(distinct Studio)"}, {}, "film"};
  EXPECT_EQ(normalize_table(d).headers[0], "count(distinct film.studio)");
}

TEST(TableEncode, ErrorsAndRoundTrip) {
  EXPECT_THROW(encode_table(DataTable{{"a", "b"}, {{"1"}}, std::nullopt}), TableError);
  EXPECT_THROW(encode_table(DataTable{{"a|b"}, {}, std::nullopt}), TableError);
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    DataTable t;
    const std::size_t cols = 1 + uniform_below(rng, 4), rows = uniform_below(rng, 12);
    const auto cell = [&rng] {
      std::string s = "v";
      const std::size_t len = uniform_below(rng, 6);
      for (std::size_t i = 0; i < len; ++i) s += "ab :1,x"[uniform_below(rng, 7)];
      return s + "z";
    };
    for (std::size_t c = 0; c < cols; ++c) t.headers.push_back(cell());
    for (std::size_t r = 0; r < rows; ++r) {
      t.rows.emplace_back();
      for (std::size_t c = 0; c < cols; ++c) t.rows.back().push_back(cell());
    }
    EXPECT_EQ(decode_table(encode_table(t)), t);
  }
}

TEST(TableFilter, CellLimitIsInclusive) {
  const auto make = [](std::size_t rows, std::size_t cols) {
    DataTable t;
    t.headers.assign(cols, "h");
    t.rows.assign(rows, std::vector<std::string>(cols, "v"));
    return t;
  };
  EXPECT_EQ(cell_count(make(50, 3)), 150u);
  EXPECT_TRUE(passes_cell_filter(make(50, 3)));
  EXPECT_FALSE(passes_cell_filter(make(1, 151)));
  EXPECT_FALSE(passes_cell_filter(make(80, 2)));
  EXPECT_TRUE(passes_cell_filter(make(0, 4)));
  EXPECT_TRUE(passes_cell_filter(make(10, 3), 30));
  EXPECT_FALSE(passes_cell_filter(make(10, 3), 29));
}
