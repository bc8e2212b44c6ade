#pragma once

// The DV query language: AST, recursive-descent parser, canonical
// serializer, schema-aware normalizer and the vis/axis/data decomposition
// used by the exact-match metrics.
//
// Grammar (keywords case-insensitive):
//
//   query      := "visualize" chart core
//   core       := "select" expr ("," expr)* "from" table_ref join*
//                 [where] [group_by] [order_by] [bin]
//   join       := "join" table_ref "on" predicate
//   table_ref  := name [["as"] alias]
//   expr       := agg "(" ["distinct"] (column | "*") ")" | column | "*"
//   predicate  := conj ("or" conj)*        conj := atom ("and" atom)*
//   atom       := "(" predicate ")" | operand cmp operand
//               | operand ["not"] "like" string
//               | operand ["not"] "between" operand "and" operand
//               | operand ["not"] "in" "(" (core | literal ("," literal)*) ")"
//   operand    := expr | literal | "(" core ")"
//   group_by   := "group" "by" column ("," column)*
//   order_by   := "order" "by" expr ["asc" | "desc"]
//   bin        := "bin" column "by" name
//
// The trailing clauses are accepted in any order; the serializer always
// emits where, group by, order by, bin.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dvkit/schema.hpp"
#include "dvkit/text.hpp"

namespace dvkit::vql {

// ---------------------------------------------------------------------------
// AST

/// Heap-allocated value with deep copy and value equality; breaks the
/// query -> predicate -> subquery recursion.
template <typename T>
class Box {
 public:
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT(google-explicit-constructor)
  Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  ~Box() = default;

  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) { return *a.ptr_ == *b.ptr_; }

 private:
  std::unique_ptr<T> ptr_;
};

/// Lowercase chart kind, possibly multi-word ("stacked bar").
class ChartType {
 public:
  ChartType() = default;
  explicit ChartType(std::string kind) : kind_(std::move(kind)) {}
  [[nodiscard]] const std::string& str() const { return kind_; }
  friend bool operator==(const ChartType&, const ChartType&) = default;

 private:
  std::string kind_;
};

inline const std::vector<std::string>& default_chart_kinds() {
  static const std::vector<std::string> kinds = {
      "bar", "pie", "line", "scatter", "stacked bar", "grouping line", "grouping scatter"};
  return kinds;
}

enum class Aggregate { kCount, kSum, kAvg, kMax, kMin };

inline std::string_view to_string(Aggregate a) {
  switch (a) {
    case Aggregate::kCount: return "count";
    case Aggregate::kSum: return "sum";
    case Aggregate::kAvg: return "avg";
    case Aggregate::kMax: return "max";
    case Aggregate::kMin: return "min";
  }
  return "";
}

inline std::optional<Aggregate> aggregate_from(std::string_view word) {
  const std::string w = text::to_lower(word);
  if (w == "count") return Aggregate::kCount;
  if (w == "sum") return Aggregate::kSum;
  if (w == "avg") return Aggregate::kAvg;
  if (w == "max") return Aggregate::kMax;
  if (w == "min") return Aggregate::kMin;
  return std::nullopt;
}

struct ColumnRef {
  std::string table;  // empty when unqualified
  std::string column;
  bool wildcard = false;

  static ColumnRef star() { return ColumnRef{{}, {}, true}; }
  friend bool operator==(const ColumnRef&, const ColumnRef&) = default;
};

struct SelectExpr {
  std::optional<Aggregate> aggregate;
  ColumnRef operand;
  bool distinct = false;  // count(distinct x)

  friend bool operator==(const SelectExpr&, const SelectExpr&) = default;
};

struct Literal {
  enum class Kind { kString, kNumber };
  Kind kind = Kind::kString;
  std::string text;  // unescaped content for strings, lexeme for numbers
  bool double_quoted = false;

  friend bool operator==(const Literal&, const Literal&) = default;
};

struct VqlQuery;
using Subquery = Box<VqlQuery>;
using Operand = std::variant<SelectExpr, Literal, Subquery>;

enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe };

inline std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return "=";
    case CompareOp::kNe: return "!=";
    case CompareOp::kLt: return "<";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGt: return ">";
    case CompareOp::kGe: return ">=";
  }
  return "";
}

struct Comparison {
  Operand lhs;
  CompareOp op = CompareOp::kEq;
  Operand rhs;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct Like {
  Operand lhs;
  bool negated = false;
  Literal pattern;
  friend bool operator==(const Like&, const Like&) = default;
};

struct Between {
  Operand lhs;
  bool negated = false;
  Operand low;
  Operand high;
  friend bool operator==(const Between&, const Between&) = default;
};

struct InList {
  Operand lhs;
  bool negated = false;
  std::variant<std::vector<Literal>, Subquery> rhs;
  friend bool operator==(const InList&, const InList&) = default;
};

enum class Logic { kAnd, kOr };

struct Predicate;

/// n-ary and/or; terms never hold a Conjunction with the same op.
struct Conjunction {
  Logic op = Logic::kAnd;
  std::vector<Predicate> terms;
  friend bool operator==(const Conjunction&, const Conjunction&) = default;
};

struct Predicate {
  std::variant<Comparison, Like, Between, InList, Conjunction> node;
  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct TableRef {
  std::string name;
  std::string alias;  // empty when unaliased
  friend bool operator==(const TableRef&, const TableRef&) = default;
};

struct Join {
  TableRef table;
  Predicate on;
  friend bool operator==(const Join&, const Join&) = default;
};

struct TableSource {
  TableRef primary;
  std::vector<Join> joins;

  /// alias -> table name, in the case the query was written in.
  [[nodiscard]] std::map<std::string, std::string> alias_map() const {
    std::map<std::string, std::string> out;
    if (!primary.alias.empty()) out[primary.alias] = primary.name;
    for (const auto& j : joins) {
      if (!j.table.alias.empty()) out[j.table.alias] = j.table.name;
    }
    return out;
  }

  [[nodiscard]] std::vector<std::string> table_names() const {
    std::vector<std::string> out{primary.name};
    for (const auto& j : joins) out.push_back(j.table.name);
    return out;
  }

  friend bool operator==(const TableSource&, const TableSource&) = default;
};

enum class Direction { kAsc, kDesc };

struct OrderSpec {
  SelectExpr key;
  std::optional<Direction> direction;  // always set after normalization
  friend bool operator==(const OrderSpec&, const OrderSpec&) = default;
};

struct BinSpec {
  ColumnRef column;
  std::string interval;
  friend bool operator==(const BinSpec&, const BinSpec&) = default;
};

struct VqlQuery {
  std::optional<ChartType> chart;  // absent only for nested subqueries
  std::vector<SelectExpr> select;
  TableSource source;
  std::optional<Predicate> filter;
  std::vector<ColumnRef> group_by;
  std::optional<OrderSpec> order;
  std::optional<BinSpec> bin;

  friend bool operator==(const VqlQuery&, const VqlQuery&) = default;
};

struct QueryComponents {
  std::string vis;
  std::vector<std::string> axis;
  std::string data;
  friend bool operator==(const QueryComponents&, const QueryComponents&) = default;
};

// ---------------------------------------------------------------------------
// Errors

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(std::size_t offset, std::vector<std::string> expected, std::string found)
      : std::runtime_error(format(offset, expected, found)),
        offset_(offset),
        expected_(std::move(expected)),
        found_(std::move(found)) {}

  [[nodiscard]] std::size_t offset() const { return offset_; }
  [[nodiscard]] const std::vector<std::string>& expected() const { return expected_; }
  [[nodiscard]] const std::string& found() const { return found_; }

 private:
  static std::string format(std::size_t offset, const std::vector<std::string>& expected,
                            const std::string& found) {
    return "syntax error at byte " + std::to_string(offset) + ": expected one of {" +
           text::join(expected, ", ") + "}, found " + found;
  }

  std::size_t offset_;
  std::vector<std::string> expected_;
  std::string found_;
};

class UnknownChartError : public std::runtime_error {
 public:
  UnknownChartError(std::string kind, const std::vector<std::string>& supported)
      : std::runtime_error("unknown chart type '" + kind + "'; supported: " +
                           text::join(supported, ", ")),
        kind_(std::move(kind)) {}
  [[nodiscard]] const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

class NormalizeError : public std::runtime_error {
 public:
  enum class Kind { kAmbiguousColumn, kUnknownColumn, kUnknownTable };
  NormalizeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// ---------------------------------------------------------------------------
// Lexer

namespace detail {

enum class TokKind { kIdent, kNumber, kString, kSymbol, kEnd };

struct Token {
  TokKind kind = TokKind::kEnd;
  std::string text;
  std::size_t offset = 0;
  bool double_quoted = false;
};

inline std::string describe(const Token& t) {
  switch (t.kind) {
    case TokKind::kEnd: return "end of input";
    case TokKind::kString: return "string literal";
    case TokKind::kNumber: return "number '" + t.text + "'";
    default: return "'" + t.text + "'";
  }
}

inline bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

inline bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

inline bool digit(char c) { return c >= '0' && c <= '9'; }

inline std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (text::is_space(c)) {
      ++i;
      continue;
    }
    Token t;
    t.offset = i;
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      t.kind = TokKind::kIdent;
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else if (digit(c) || (c == '.' && i + 1 < s.size() && digit(s[i + 1]))) {
      std::size_t j = i;
      while (j < s.size() && (digit(s[j]) || s[j] == '.')) ++j;
      // Exponent: 1e3, 2.5E-4.
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && digit(s[k])) {
          while (k < s.size() && digit(s[k])) ++k;
          if (k == s.size() || !ident_char(s[k])) j = k;
        }
      }
      // Identifiers such as 2011_sales start with a digit in a few schemas.
      if (j < s.size() && ident_start(s[j])) {
        while (j < s.size() && ident_char(s[j])) ++j;
        t.kind = TokKind::kIdent;
      } else {
        t.kind = TokKind::kNumber;
      }
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else if (c == '\'' || c == '"') {
      const char q = c;
      std::size_t j = i + 1;
      std::string body;
      bool closed = false;
      while (j < s.size()) {
        if (s[j] == q) {
          if (j + 1 < s.size() && s[j + 1] == q) {
            body += q;
            j += 2;
            continue;
          }
          closed = true;
          ++j;
          break;
        }
        body += s[j++];
      }
      if (!closed) throw SyntaxError(i, {"closing quote"}, "end of input");
      t.kind = TokKind::kString;
      t.text = std::move(body);
      t.double_quoted = (q == '"');
      i = j;
    } else {
      static constexpr std::string_view two[] = {"!=", "<>", "<=", ">="};
      t.kind = TokKind::kSymbol;
      bool matched = false;
      for (auto sym : two) {
        if (s.substr(i, 2) == sym) {
          t.text = std::string(sym);
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (std::string_view("(),.*=<>-;").find(c) == std::string_view::npos) {
          throw SyntaxError(i, {"token"}, std::string("'") + c + "'");
        }
        t.text = std::string(1, c);
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.offset = s.size();
  out.push_back(end);
  return out;
}

inline bool is_reserved(std::string_view word) {
  static constexpr std::string_view kReserved[] = {
      "visualize", "select", "from", "join", "on",  "as",  "where", "and",
      "or",        "not",    "in",   "like", "between", "group", "by", "order",
      "asc",       "desc",   "bin",  "distinct", "inner"};
  const std::string w = text::to_lower(word);
  return std::find(std::begin(kReserved), std::end(kReserved), w) != std::end(kReserved);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parser

struct ParseOptions {
  std::vector<std::string> chart_kinds = default_chart_kinds();
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view input, const ParseOptions& opts) : toks_(lex(input)), opts_(opts) {}

  VqlQuery parse_top() {
    expect_kw("visualize");
    ChartType chart = parse_chart();
    VqlQuery q = parse_core();
    q.chart = std::move(chart);
    accept_sym(";");
    if (peek().kind != TokKind::kEnd) fail({"end of input"});
    return q;
  }

 private:
  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }

  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  static bool is_kw(const Token& t, std::string_view kw) {
    return t.kind == TokKind::kIdent && text::iequals(t.text, kw);
  }

  static bool is_sym(const Token& t, std::string_view sym) {
    return t.kind == TokKind::kSymbol && t.text == sym;
  }

  bool accept_kw(std::string_view kw) {
    if (!is_kw(peek(), kw)) return false;
    next();
    return true;
  }

  bool accept_sym(std::string_view sym) {
    if (!is_sym(peek(), sym)) return false;
    next();
    return true;
  }

  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail({"'" + std::string(kw) + "'"});
  }

  void expect_sym(std::string_view sym) {
    if (!accept_sym(sym)) fail({"'" + std::string(sym) + "'"});
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw SyntaxError(peek().offset, std::move(expected), describe(peek()));
  }

  std::string expect_name(std::string_view what) {
    if (peek().kind != TokKind::kIdent || is_reserved(peek().text)) fail({std::string(what)});
    return next().text;
  }

  ChartType parse_chart() {
    // Longest kind whose words match the upcoming identifiers.
    const std::string* best = nullptr;
    std::size_t best_words = 0;
    for (const auto& kind : opts_.chart_kinds) {
      const auto words = text::split_whitespace(kind);
      bool ok = !words.empty();
      for (std::size_t k = 0; ok && k < words.size(); ++k) {
        ok = is_kw(peek(k), words[k]);
      }
      if (ok && words.size() > best_words) {
        best = &kind;
        best_words = words.size();
      }
    }
    if (best == nullptr) {
      if (peek().kind != TokKind::kIdent) fail({"chart type"});
      throw UnknownChartError(text::to_lower(peek().text), opts_.chart_kinds);
    }
    for (std::size_t k = 0; k < best_words; ++k) next();
    return ChartType(text::to_lower(*best));
  }

  VqlQuery parse_core() {
    VqlQuery q;
    expect_kw("select");
    q.select.push_back(parse_select_expr());
    while (accept_sym(",")) q.select.push_back(parse_select_expr());
    expect_kw("from");
    q.source.primary = parse_table_ref();
    while (true) {
      if (is_kw(peek(), "inner") && is_kw(peek(1), "join")) next();
      if (!accept_kw("join")) break;
      Join j{parse_table_ref(), {}};
      expect_kw("on");
      j.on = parse_predicate();
      q.source.joins.push_back(std::move(j));
    }
    while (true) {
      if (!q.filter && accept_kw("where")) {
        q.filter = parse_predicate();
      } else if (q.group_by.empty() && is_kw(peek(), "group")) {
        next();
        expect_kw("by");
        q.group_by.push_back(parse_column_ref());
        while (accept_sym(",")) q.group_by.push_back(parse_column_ref());
      } else if (!q.order && is_kw(peek(), "order")) {
        next();
        expect_kw("by");
        OrderSpec o{parse_select_expr(), std::nullopt};
        if (accept_kw("asc")) {
          o.direction = Direction::kAsc;
        } else if (accept_kw("desc")) {
          o.direction = Direction::kDesc;
        }
        q.order = std::move(o);
      } else if (!q.bin && accept_kw("bin")) {
        BinSpec b{parse_column_ref(), {}};
        expect_kw("by");
        b.interval = expect_name("bin interval");
        q.bin = std::move(b);
      } else {
        break;
      }
    }
    return q;
  }

  TableRef parse_table_ref() {
    TableRef t;
    t.name = expect_name("table name");
    if (accept_kw("as")) {
      t.alias = expect_name("alias");
    } else if (peek().kind == TokKind::kIdent && !is_reserved(peek().text)) {
      t.alias = next().text;
    }
    return t;
  }

  ColumnRef parse_column_ref() {
    if (accept_sym("*")) return ColumnRef::star();
    ColumnRef c;
    std::string first = expect_name("column");
    if (accept_sym(".")) {
      c.table = std::move(first);
      if (accept_sym("*")) {
        // t.* carries no column information beyond the wildcard.
        return ColumnRef::star();
      }
      c.column = expect_name("column");
    } else {
      c.column = std::move(first);
    }
    return c;
  }

  SelectExpr parse_select_expr() {
    SelectExpr e;
    if (peek().kind == TokKind::kIdent && is_sym(peek(1), "(")) {
      auto agg = aggregate_from(peek().text);
      if (!agg) fail({"aggregate function", "column"});
      e.aggregate = agg;
      next();
      next();
      e.distinct = accept_kw("distinct");
      e.operand = parse_column_ref();
      expect_sym(")");
      return e;
    }
    if (peek().kind != TokKind::kIdent && !is_sym(peek(), "*")) {
      fail({"column", "aggregate function", "'*'"});
    }
    e.operand = parse_column_ref();
    return e;
  }

  Literal parse_literal() {
    const Token& t = peek();
    if (t.kind == TokKind::kString) {
      Literal l{Literal::Kind::kString, t.text, t.double_quoted};
      next();
      return l;
    }
    if (t.kind == TokKind::kNumber) {
      Literal l{Literal::Kind::kNumber, t.text, false};
      next();
      return l;
    }
    if (is_sym(t, "-") && peek(1).kind == TokKind::kNumber) {
      next();
      Literal l{Literal::Kind::kNumber, "-" + next().text, false};
      return l;
    }
    fail({"literal"});
  }

  bool at_literal() const {
    const Token& t = peek();
    return t.kind == TokKind::kString || t.kind == TokKind::kNumber ||
           (is_sym(t, "-") && peek(1).kind == TokKind::kNumber);
  }

  Operand parse_operand() {
    if (is_sym(peek(), "(") && is_kw(peek(1), "select")) {
      next();
      VqlQuery sub = parse_core();
      expect_sym(")");
      return Subquery(std::move(sub));
    }
    if (at_literal()) return parse_literal();
    return parse_select_expr();
  }

  static void append_term(Conjunction& c, Predicate p) {
    if (auto* inner = std::get_if<Conjunction>(&p.node); inner && inner->op == c.op) {
      for (auto& t : inner->terms) c.terms.push_back(std::move(t));
    } else {
      c.terms.push_back(std::move(p));
    }
  }

  Predicate parse_predicate() {
    Predicate first = parse_conj();
    if (!is_kw(peek(), "or")) return first;
    Conjunction c{Logic::kOr, {}};
    append_term(c, std::move(first));
    while (accept_kw("or")) append_term(c, parse_conj());
    return Predicate{std::move(c)};
  }

  Predicate parse_conj() {
    Predicate first = parse_atom();
    if (!is_kw(peek(), "and")) return first;
    Conjunction c{Logic::kAnd, {}};
    append_term(c, std::move(first));
    while (accept_kw("and")) append_term(c, parse_atom());
    return Predicate{std::move(c)};
  }

  Predicate parse_atom() {
    if (is_sym(peek(), "(") && !is_kw(peek(1), "select")) {
      next();
      Predicate p = parse_predicate();
      expect_sym(")");
      return p;
    }
    Operand lhs = parse_operand();
    const bool negated = accept_kw("not");
    if (accept_kw("in")) {
      InList in{std::move(lhs), negated, std::vector<Literal>{}};
      expect_sym("(");
      if (is_kw(peek(), "select")) {
        in.rhs = Subquery(parse_core());
      } else {
        std::vector<Literal> items;
        items.push_back(parse_literal());
        while (accept_sym(",")) items.push_back(parse_literal());
        in.rhs = std::move(items);
      }
      expect_sym(")");
      return Predicate{std::move(in)};
    }
    if (accept_kw("like")) {
      if (peek().kind != TokKind::kString) fail({"string literal"});
      return Predicate{Like{std::move(lhs), negated, parse_literal()}};
    }
    if (accept_kw("between")) {
      Operand low = parse_operand();
      expect_kw("and");
      Operand high = parse_operand();
      return Predicate{Between{std::move(lhs), negated, std::move(low), std::move(high)}};
    }
    if (negated) fail({"'in'", "'like'", "'between'"});
    const Token& t = peek();
    std::optional<CompareOp> op;
    if (t.kind == TokKind::kSymbol) {
      if (t.text == "=") op = CompareOp::kEq;
      if (t.text == "!=" || t.text == "<>") op = CompareOp::kNe;
      if (t.text == "<") op = CompareOp::kLt;
      if (t.text == "<=") op = CompareOp::kLe;
      if (t.text == ">") op = CompareOp::kGt;
      if (t.text == ">=") op = CompareOp::kGe;
    }
    if (!op) fail({"comparison operator", "'in'", "'like'", "'between'", "'not'"});
    next();
    return Predicate{Comparison{std::move(lhs), *op, parse_operand()}};
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const ParseOptions& opts_;
};

}  // namespace detail

/// Parses a single top-level query (must start with `visualize`).
inline VqlQuery parse_vql(std::string_view text, const ParseOptions& opts = {}) {
  return detail::Parser(text, opts).parse_top();
}

// ---------------------------------------------------------------------------
// Serializer

struct SerializeOptions {
  /// Emit `count ( t.c )` instead of `count(t.c)`.
  bool spaced_parens = false;
};

namespace detail {

class Printer {
 public:
  explicit Printer(const SerializeOptions& opts) : opts_(opts) {}

  std::string paren(const std::string& inner) const {
    return opts_.spaced_parens ? "( " + inner + " )" : "(" + inner + ")";
  }

  std::string column(const ColumnRef& c) const {
    if (c.wildcard) return "*";
    return c.table.empty() ? c.column : qualified_column(c.table, c.column);
  }

  std::string expr(const SelectExpr& e) const {
    if (!e.aggregate) return column(e.operand);
    std::string inner = (e.distinct ? "distinct " : "") + column(e.operand);
    return std::string(to_string(*e.aggregate)) + (opts_.spaced_parens ? " " : "") + paren(inner);
  }

  static std::string literal(const Literal& l) {
    if (l.kind == Literal::Kind::kNumber) return l.text;
    const char q = l.double_quoted ? '"' : '\'';
    std::string out(1, q);
    for (char c : l.text) {
      out += c;
      if (c == q) out += q;
    }
    out += q;
    return out;
  }

  std::string operand(const Operand& o) const {
    if (const auto* e = std::get_if<SelectExpr>(&o)) return expr(*e);
    if (const auto* l = std::get_if<Literal>(&o)) return literal(*l);
    return paren(core(*std::get<Subquery>(o)));
  }

  std::string predicate(const Predicate& p) const {
    return std::visit([this](const auto& n) { return node(n); }, p.node);
  }

  std::string node(const Comparison& c) const {
    return operand(c.lhs) + " " + std::string(to_string(c.op)) + " " + operand(c.rhs);
  }

  std::string node(const Like& l) const {
    return operand(l.lhs) + (l.negated ? " not like " : " like ") + literal(l.pattern);
  }

  std::string node(const Between& b) const {
    return operand(b.lhs) + (b.negated ? " not between " : " between ") + operand(b.low) +
           " and " + operand(b.high);
  }

  std::string node(const InList& in) const {
    std::string rhs;
    if (const auto* items = std::get_if<std::vector<Literal>>(&in.rhs)) {
      std::vector<std::string> parts;
      for (const auto& l : *items) parts.push_back(literal(l));
      rhs = paren(text::join(parts, ", "));
    } else {
      rhs = paren(core(*std::get<Subquery>(in.rhs)));
    }
    return operand(in.lhs) + (in.negated ? " not in " : " in ") + rhs;
  }

  std::string node(const Conjunction& c) const {
    std::vector<std::string> parts;
    for (const auto& t : c.terms) {
      std::string s = predicate(t);
      // Only an `or` nested under `and` needs grouping.
      const auto* inner = std::get_if<Conjunction>(&t.node);
      if (inner && c.op == Logic::kAnd && inner->op == Logic::kOr) s = paren(s);
      parts.push_back(std::move(s));
    }
    return text::join(parts, c.op == Logic::kAnd ? " and " : " or ");
  }

  std::string table_ref(const TableRef& t) const {
    return t.alias.empty() ? t.name : t.name + " as " + t.alias;
  }

  std::string axis(const VqlQuery& q) const {
    std::vector<std::string> parts;
    for (const auto& e : q.select) parts.push_back(expr(e));
    return text::join(parts, ", ");
  }

  std::string data(const VqlQuery& q) const {
    std::string out = "from " + table_ref(q.source.primary);
    for (const auto& j : q.source.joins) {
      out += " join " + table_ref(j.table) + " on " + predicate(j.on);
    }
    if (q.filter) out += " where " + predicate(*q.filter);
    if (!q.group_by.empty()) {
      std::vector<std::string> cols;
      for (const auto& c : q.group_by) cols.push_back(column(c));
      out += " group by " + text::join(cols, ", ");
    }
    if (q.order) {
      out += " order by " + expr(q.order->key);
      if (q.order->direction) out += *q.order->direction == Direction::kAsc ? " asc" : " desc";
    }
    if (q.bin) out += " bin " + column(q.bin->column) + " by " + q.bin->interval;
    return out;
  }

  std::string core(const VqlQuery& q) const { return "select " + axis(q) + " " + data(q); }

  std::string query(const VqlQuery& q) const {
    std::string out;
    if (q.chart) out = "visualize " + q.chart->str() + " ";
    return out + core(q);
  }

 private:
  const SerializeOptions& opts_;
};

}  // namespace detail

/// Canonical single-space rendering. Keywords are lowercase; identifiers
/// and literals keep the case stored in the AST.
inline std::string serialize_vql(const VqlQuery& q, const SerializeOptions& opts = {}) {
  return detail::Printer(opts).query(q);
}

inline std::string serialize_expr(const SelectExpr& e, const SerializeOptions& opts = {}) {
  return detail::Printer(opts).expr(e);
}

/// Splits a normalized query into its vis, axis and data components.
inline QueryComponents decompose(const VqlQuery& q, const SerializeOptions& opts = {}) {
  detail::Printer p(opts);
  QueryComponents c;
  c.vis = q.chart ? q.chart->str() : std::string();
  for (const auto& e : q.select) c.axis.push_back(p.expr(e));
  c.data = p.data(q);
  return c;
}

/// Inverse of decompose: `visualize <vis> select <axis...> <data>`.
inline std::string reassemble(const QueryComponents& c) {
  return "visualize " + c.vis + " select " + text::join(c.axis, ", ") + " " + c.data;
}

/// True when the query joins at least one table (nested subqueries
/// included).
inline bool has_join(const VqlQuery& q);

namespace detail {

inline bool operand_has_join(const Operand& o) {
  if (const auto* s = std::get_if<Subquery>(&o)) return has_join(**s);
  return false;
}

inline bool predicate_has_join(const Predicate& p) {
  return std::visit(
      [](const auto& n) -> bool {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Conjunction>) {
          return std::any_of(n.terms.begin(), n.terms.end(), predicate_has_join);
        } else if constexpr (std::is_same_v<N, Comparison>) {
          return operand_has_join(n.lhs) || operand_has_join(n.rhs);
        } else if constexpr (std::is_same_v<N, Between>) {
          return operand_has_join(n.lhs) || operand_has_join(n.low) || operand_has_join(n.high);
        } else if constexpr (std::is_same_v<N, InList>) {
          if (const auto* s = std::get_if<Subquery>(&n.rhs); s && has_join(**s)) return true;
          return operand_has_join(n.lhs);
        } else {
          return operand_has_join(n.lhs);
        }
      },
      p.node);
}

}  // namespace detail

inline bool has_join(const VqlQuery& q) {
  if (!q.source.joins.empty()) return true;
  return q.filter && detail::predicate_has_join(*q.filter);
}

// ---------------------------------------------------------------------------
// Normalizer

struct NormalizeOptions {
  /// When false, columns that cannot be attributed to exactly one table are
  /// left unqualified instead of raising NormalizeError. Used when scoring
  /// model predictions, which may reference columns that do not exist.
  bool strict = true;
};

namespace detail {

struct Scope {
  std::vector<std::string> tables;             // lowercase, source order
  std::map<std::string, std::string> aliases;  // lowercase alias -> table
  const Scope* parent = nullptr;
};

class Normalizer {
 public:
  Normalizer(const DatabaseSchema& schema, const NormalizeOptions& opts)
      : schema_(schema), opts_(opts) {}

  VqlQuery query(const VqlQuery& in, const Scope* parent) {
    VqlQuery q = in;
    Scope scope;
    scope.parent = parent;
    const auto bind = [&scope](TableRef& t) {
      t.name = text::to_lower(t.name);
      if (!t.alias.empty()) scope.aliases[text::to_lower(t.alias)] = t.name;
      t.alias.clear();
      scope.tables.push_back(t.name);
    };
    bind(q.source.primary);
    for (auto& j : q.source.joins) bind(j.table);

    for (auto& j : q.source.joins) j.on = predicate(j.on, scope);
    for (auto& c : q.group_by) c = column(c, scope);
    for (auto& e : q.select) e = expr(e, scope);
    if (q.filter) q.filter = predicate(*q.filter, scope);
    if (q.order) {
      q.order->key = expr(q.order->key, scope);
      if (!q.order->direction) q.order->direction = Direction::kAsc;
    }
    if (q.bin) {
      q.bin->column = column(q.bin->column, scope);
      q.bin->interval = text::to_lower(q.bin->interval);
    }
    replace_wildcards(q);
    return q;
  }

 private:
  std::string resolve_table(const std::string& qualifier, const Scope& scope) const {
    const std::string q = text::to_lower(qualifier);
    for (const Scope* s = &scope; s != nullptr; s = s->parent) {
      if (auto it = s->aliases.find(q); it != s->aliases.end()) return it->second;
    }
    return q;
  }

  ColumnRef column(const ColumnRef& in, const Scope& scope) const {
    if (in.wildcard) return in;
    ColumnRef c{{}, text::to_lower(in.column), false};
    if (!in.table.empty()) {
      c.table = resolve_table(in.table, scope);
      return c;
    }
    for (const Scope* s = &scope; s != nullptr; s = s->parent) {
      std::vector<std::string> owners;
      for (const auto& t : s->tables) {
        const TableSchema* ts = schema_.find_table(t);
        if (ts != nullptr && ts->find_column(c.column) != nullptr &&
            std::find(owners.begin(), owners.end(), t) == owners.end()) {
          owners.push_back(t);
        }
      }
      if (owners.size() == 1) {
        c.table = owners.front();
        return c;
      }
      if (owners.size() > 1) {
        if (opts_.strict) {
          throw NormalizeError(NormalizeError::Kind::kAmbiguousColumn,
                               "column '" + c.column + "' is ambiguous between tables " +
                                   text::join(owners, ", "));
        }
        return c;
      }
    }
    if (opts_.strict) {
      throw NormalizeError(NormalizeError::Kind::kUnknownColumn,
                           "column '" + c.column + "' not found in tables " +
                               text::join(scope.tables, ", ") + " of database '" +
                               schema_.db_name + "'");
    }
    return c;
  }

  SelectExpr expr(const SelectExpr& in, const Scope& scope) const {
    SelectExpr e = in;
    e.operand = column(in.operand, scope);
    return e;
  }

  static Literal literal(const Literal& in) {
    return Literal{in.kind, text::to_lower(in.text), false};
  }

  Operand operand(const Operand& in, const Scope& scope) {
    if (const auto* e = std::get_if<SelectExpr>(&in)) return expr(*e, scope);
    if (const auto* l = std::get_if<Literal>(&in)) return literal(*l);
    return Subquery(query(*std::get<Subquery>(in), &scope));
  }

  Predicate predicate(const Predicate& p, const Scope& scope) {
    return std::visit([&](const auto& n) { return Predicate{node(n, scope)}; }, p.node);
  }

  Comparison node(const Comparison& c, const Scope& s) {
    return Comparison{operand(c.lhs, s), c.op, operand(c.rhs, s)};
  }

  Like node(const Like& l, const Scope& s) {
    return Like{operand(l.lhs, s), l.negated, literal(l.pattern)};
  }

  Between node(const Between& b, const Scope& s) {
    return Between{operand(b.lhs, s), b.negated, operand(b.low, s), operand(b.high, s)};
  }

  InList node(const InList& in, const Scope& s) {
    InList out{operand(in.lhs, s), in.negated, std::vector<Literal>{}};
    if (const auto* items = std::get_if<std::vector<Literal>>(&in.rhs)) {
      std::vector<Literal> lits;
      for (const auto& l : *items) lits.push_back(literal(l));
      out.rhs = std::move(lits);
    } else {
      out.rhs = Subquery(query(*std::get<Subquery>(in.rhs), &s));
    }
    return out;
  }

  Conjunction node(const Conjunction& c, const Scope& s) {
    Conjunction out{c.op, {}};
    for (const auto& t : c.terms) out.terms.push_back(predicate(t, s));
    return out;
  }

  /// Column that stands in for `*`: the primary table's group-by column,
  /// else the first plain selected column, else the primary table's first
  /// schema column.
  std::optional<ColumnRef> wildcard_substitute(const VqlQuery& q) const {
    const std::string& primary = q.source.primary.name;
    for (const auto& g : q.group_by) {
      if (!g.wildcard && g.table == primary) return g;
    }
    for (const auto& e : q.select) {
      if (!e.aggregate && !e.operand.wildcard) return e.operand;
    }
    if (const TableSchema* ts = schema_.find_table(primary); ts != nullptr && !ts->columns.empty()) {
      return ColumnRef{primary, text::to_lower(ts->columns.front().name), false};
    }
    if (opts_.strict) {
      throw NormalizeError(NormalizeError::Kind::kUnknownTable,
                           "cannot replace '*': table '" + primary + "' not in database '" +
                               schema_.db_name + "'");
    }
    return std::nullopt;
  }

  void replace_wildcards(VqlQuery& q) const {
    const bool any = std::any_of(q.select.begin(), q.select.end(),
                                 [](const SelectExpr& e) { return e.operand.wildcard; }) ||
                     (q.order && q.order->key.operand.wildcard);
    if (!any) return;
    const auto sub = wildcard_substitute(q);
    if (!sub) return;
    for (auto& e : q.select) {
      if (e.operand.wildcard) e.operand = *sub;
    }
    if (q.order && q.order->key.operand.wildcard) q.order->key.operand = *sub;
  }

  const DatabaseSchema& schema_;
  const NormalizeOptions& opts_;
};

}  // namespace detail

/// Applies the five standardization rules: table-prefix every column and
/// replace `*`, single-quote literals, make the order direction explicit,
/// erase aliases, and lowercase everything. Idempotent.
inline VqlQuery normalize_vql(const VqlQuery& q, const DatabaseSchema& schema,
                              const NormalizeOptions& opts = {}) {
  VqlQuery out = detail::Normalizer(schema, opts).query(q, nullptr);
  if (out.chart) out.chart = ChartType(text::to_lower(out.chart->str()));
  return out;
}

/// parse -> normalize -> serialize.
inline std::string normalize_text(std::string_view text, const DatabaseSchema& schema,
                                  const NormalizeOptions& nopts = {},
                                  const SerializeOptions& sopts = {},
                                  const ParseOptions& popts = {}) {
  return serialize_vql(normalize_vql(parse_vql(text, popts), schema, nopts), sopts);
}

}  // namespace dvkit::vql
