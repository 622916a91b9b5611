#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "maxent/error.hpp"
#include "maxent/polynomial.hpp"
#include "maxent/predicate.hpp"
#include "maxent/schema.hpp"
#include "maxent/summary.hpp"

namespace maxent {

inline constexpr std::size_t kMaxGroups = 100'000;

/// Parsed counting query: one range per attribute, optional grouping and top-k.
struct QueryPlan {
  RangePredicate predicates;
  std::vector<std::size_t> group_by;
  bool order_desc = false;
  std::optional<std::size_t> limit;
};

namespace detail {

struct Token {
  enum class Kind { Word, Number, String, Symbol, End } kind;
  std::string text;
  std::size_t pos;
};

inline std::vector<Token> tokenize(const std::string& sql) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < sql.size()) {
    const char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < sql.size() && (std::isalnum(static_cast<unsigned char>(sql[j])) || sql[j] == '_' || sql[j] == '.')) ++j;
      out.push_back({Token::Kind::Word, sql.substr(i, j - i), i});
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || ((c == '-' || c == '+' || c == '.') && i + 1 < sql.size() &&
                                                               (std::isdigit(static_cast<unsigned char>(sql[i + 1])) || sql[i + 1] == '.'))) {
      std::size_t j = i + 1;
      while (j < sql.size() && (std::isalnum(static_cast<unsigned char>(sql[j])) || sql[j] == '.' ||
                                ((sql[j] == '-' || sql[j] == '+') && (sql[j - 1] == 'e' || sql[j - 1] == 'E')))) {
        ++j;
      }
      out.push_back({Token::Kind::Number, sql.substr(i, j - i), i});
      i = j;
    } else if (c == '\'') {
      std::string lit;
      std::size_t j = i + 1;
      while (true) {
        if (j >= sql.size()) throw QueryParseError("unterminated string literal at offset " + std::to_string(i));
        if (sql[j] == '\'') {
          if (j + 1 < sql.size() && sql[j + 1] == '\'') {
            lit.push_back('\'');
            j += 2;
            continue;
          }
          break;
        }
        lit.push_back(sql[j++]);
      }
      out.push_back({Token::Kind::String, lit, i});
      i = j + 1;
    } else if (std::string_view("(),*=[];").find(c) != std::string_view::npos) {
      out.push_back({Token::Kind::Symbol, std::string(1, c), i});
      ++i;
    } else {
      throw QueryParseError(std::string("unexpected character '") + c + "' at offset " + std::to_string(i));
    }
  }
  out.push_back({Token::Kind::End, "", sql.size()});
  return out;
}

inline std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

class Parser {
 public:
  Parser(const std::string& sql, const Schema& schema) : tokens_(tokenize(sql)), schema_(schema) {}

  QueryPlan parse() {
    QueryPlan plan;
    plan.predicates = all_true(schema_.arity());
    expect_keyword("SELECT");
    std::vector<std::size_t> selected;
    std::string count_alias = "CNT";
    while (true) {
      if (is_keyword("COUNT")) {
        next();
        expect_symbol("(");
        expect_symbol("*");
        expect_symbol(")");
        if (accept_keyword("AS")) count_alias = upper(expect_word());
        break;
      }
      if (peek().kind != Token::Kind::Word) fail("expected an attribute or COUNT(*)");
      const auto name = next().text;
      if (accept_symbol("(")) {
        throw QueryParseError("unsupported aggregate '" + name + "'; only COUNT(*) is supported");
      }
      selected.push_back(attribute(name));
      expect_symbol(",");
    }
    if (peek().kind == Token::Kind::Symbol && peek().text == ",") fail("COUNT(*) must be the last select item");
    expect_keyword("FROM");
    expect_word();
    if (accept_keyword("WHERE")) {
      std::vector<bool> seen(schema_.arity(), false);
      do {
        const auto attr = attribute(expect_word());
        if (seen[attr]) fail("attribute '" + schema_.attribute(attr).name() + "' is constrained twice");
        seen[attr] = true;
        plan.predicates[attr] = condition(attr);
      } while (accept_keyword("AND"));
      if (is_keyword("OR")) fail("disjunctive predicates are not supported");
    }
    if (accept_keyword("GROUP")) {
      expect_keyword("BY");
      do {
        plan.group_by.push_back(attribute(expect_word()));
      } while (accept_symbol(","));
    }
    auto sorted = [](std::vector<std::size_t> v) {
      std::sort(v.begin(), v.end());
      return v;
    };
    if (sorted(selected) != sorted(plan.group_by)) fail("selected attributes must match the GROUP BY list");
    for (std::size_t k = 0; k < plan.group_by.size(); ++k) {
      for (std::size_t l = k + 1; l < plan.group_by.size(); ++l) {
        if (plan.group_by[k] == plan.group_by[l]) fail("duplicate GROUP BY attribute");
      }
    }
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      const auto key = peek();
      if (is_keyword("COUNT")) {
        next();
        expect_symbol("(");
        expect_symbol("*");
        expect_symbol(")");
      } else if (upper(expect_word()) != count_alias) {
        throw QueryParseError("can only order by the count, got '" + key.text + "'");
      }
      if (!accept_keyword("DESC")) fail("only ORDER BY ... DESC is supported");
      plan.order_desc = true;
    }
    if (accept_keyword("LIMIT")) {
      const auto tok = next();
      if (tok.kind != Token::Kind::Number || tok.text.find_first_not_of("0123456789") != std::string::npos) {
        fail("LIMIT expects a non-negative integer");
      }
      plan.limit = std::stoull(tok.text);
    }
    accept_symbol(";");
    if (peek().kind != Token::Kind::End) fail("unexpected trailing input '" + peek().text + "'");
    return plan;
  }

 private:
  Interval condition(std::size_t attr) {
    const auto& dom = schema_.attribute(attr);
    if (accept_symbol("=")) {
      const auto v = literal(dom);
      return {v, v};
    }
    if (accept_keyword("IN")) {
      expect_symbol("[");
      const auto lo = literal(dom);
      expect_symbol(",");
      const auto hi = literal(dom);
      expect_symbol("]");
      if (lo > hi) fail("empty range for attribute '" + dom.name() + "'");
      return {lo, hi};
    }
    fail("expected '=' or IN after '" + dom.name() + "'");
  }

  BucketIndex literal(const AttributeDomain& dom) {
    const auto tok = next();
    if (tok.kind != Token::Kind::String && tok.kind != Token::Kind::Number && tok.kind != Token::Kind::Word) {
      fail("expected a literal for attribute '" + dom.name() + "'");
    }
    try {
      if (!dom.is_numeric()) return dom.index_of_label(tok.text);
      std::size_t used = 0;
      const double v = std::stod(tok.text, &used);
      if (used != tok.text.size()) throw std::invalid_argument(tok.text);
      return dom.bucket_of(v);
    } catch (const SchemaError& e) {
      throw QueryParseError(e.what());
    } catch (const std::exception&) {
      throw QueryParseError("value '" + tok.text + "' is not numeric for attribute '" + dom.name() + "'");
    }
  }

  std::size_t attribute(const std::string& name) {
    auto i = schema_.find(name);
    if (!i) throw QueryParseError("unknown attribute '" + name + "'");
    return *i;
  }

  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() {
    const auto& t = tokens_[pos_];
    if (t.kind != Token::Kind::End) ++pos_;
    return t;
  }
  bool is_keyword(const char* kw) const { return peek().kind == Token::Kind::Word && upper(peek().text) == kw; }
  bool accept_keyword(const char* kw) {
    if (!is_keyword(kw)) return false;
    ++pos_;
    return true;
  }
  void expect_keyword(const char* kw) {
    if (!accept_keyword(kw)) fail(std::string("expected ") + kw);
  }
  bool accept_symbol(const char* s) {
    if (peek().kind != Token::Kind::Symbol || peek().text != s) return false;
    ++pos_;
    return true;
  }
  void expect_symbol(const char* s) {
    if (!accept_symbol(s)) fail(std::string("expected '") + s + "'");
  }
  std::string expect_word() {
    if (peek().kind != Token::Kind::Word) fail("expected an identifier");
    return next().text;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw QueryParseError(msg + " at offset " + std::to_string(peek().pos));
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const Schema& schema_;
};

}  // namespace detail

inline QueryPlan parse_query(const std::string& sql, const Schema& schema) {
  return detail::Parser(sql, schema).parse();
}

struct GroupAnswer {
  std::vector<BucketIndex> values;  // parallel to plan.group_by
  double raw = 0.0;
  std::int64_t rounded = 0;
};

struct QueryAnswer {
  std::vector<GroupAnswer> groups;
  double wall_ms = 0.0;
};

/// Nearest integer, halves away from zero, never negative.
inline std::int64_t round_estimate(double raw) { return std::max<std::int64_t>(0, std::llround(raw)); }

/// Zero-set of a predicate: every 1D variable whose value falls outside the
/// attribute's range.
inline std::vector<StatId> zero_set_for(const StatisticSet& stats, const RangePredicate& pred) {
  std::vector<StatId> zeros;
  for (std::size_t a = 0; a < pred.size(); ++a) {
    if (!pred[a]) continue;
    for (BucketIndex v = 0; v < stats.domain_sizes()[a]; ++v) {
      if (!pred[a]->contains(v)) zeros.push_back(stats.one_d_id(a, v));
    }
  }
  return zeros;
}

/// Expected count of one conjunctive predicate: (n / P) * P[non-qualifying 1D variables = 0].
inline double estimate(const Summary& summary, const RangePredicate& pred) {
  const auto& poly = summary.polynomial();
  std::vector<double> values = summary.alpha().vector();
  for (auto j : zero_set_for(summary.statistics(), pred)) values[j] = 0.0;
  Evaluator ev(poly, std::move(values));
  const double pq = ev.value();
  const auto n = static_cast<double>(summary.cardinality());
  if (!ev.overflowed() && std::isfinite(summary.P())) return n * (pq / summary.P());
  const auto lq = ev.log_value();
  return lq.sign == 0 ? 0.0 : lq.sign * n * std::exp(lq.log_abs - summary.log_P());
}

inline void validate_plan(const Summary& summary, const QueryPlan& plan) {
  const auto& sizes = summary.statistics().domain_sizes();
  if (plan.predicates.size() != sizes.size()) throw QueryParseError("plan arity does not match the summary schema");
  for (std::size_t a = 0; a < sizes.size(); ++a) {
    if (plan.predicates[a] && (plan.predicates[a]->lo > plan.predicates[a]->hi || plan.predicates[a]->hi >= sizes[a])) {
      throw QueryParseError("range outside the domain of attribute '" + summary.schema().attribute(a).name() + "'");
    }
  }
  for (auto g : plan.group_by) {
    if (g >= sizes.size()) throw QueryParseError("group-by attribute out of range");
  }
}

/// Answers a plan; one zero-set evaluation per group. Group attributes with a
/// WHERE range enumerate only the values inside it.
inline QueryAnswer answer(const Summary& summary, const QueryPlan& plan) {
  const auto start = std::chrono::steady_clock::now();
  validate_plan(summary, plan);
  const auto& sizes = summary.statistics().domain_sizes();
  std::vector<Interval> spans;
  double groups = 1.0;
  for (auto g : plan.group_by) {
    const Interval span = plan.predicates[g].value_or(Interval{0, sizes[g] - 1});
    spans.push_back(span);
    groups *= span.length();
  }
  if (groups > static_cast<double>(kMaxGroups)) {
    throw PlanTooLargeError("query expands to " + std::to_string(static_cast<std::uint64_t>(groups)) +
                            " groups; the limit is " + std::to_string(kMaxGroups));
  }

  QueryAnswer out;
  std::vector<BucketIndex> cursor;
  for (const auto& s : spans) cursor.push_back(s.lo);
  while (true) {
    auto pred = plan.predicates;
    for (std::size_t k = 0; k < plan.group_by.size(); ++k) pred[plan.group_by[k]] = Interval{cursor[k], cursor[k]};
    GroupAnswer g;
    g.values = cursor;
    g.raw = estimate(summary, pred);
    g.rounded = round_estimate(g.raw);
    out.groups.push_back(std::move(g));
    bool advanced = false;
    for (std::size_t k = cursor.size(); k-- > 0;) {
      if (cursor[k] < spans[k].hi) {
        ++cursor[k];
        advanced = true;
        break;
      }
      cursor[k] = spans[k].lo;
    }
    if (!advanced) break;
  }
  if (plan.order_desc) {
    std::stable_sort(out.groups.begin(), out.groups.end(),
                     [](const GroupAnswer& a, const GroupAnswer& b) { return a.raw > b.raw; });
  }
  if (plan.limit && out.groups.size() > *plan.limit) out.groups.resize(*plan.limit);
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline QueryAnswer answer(const Summary& summary, const std::string& sql) {
  return answer(summary, parse_query(sql, summary.schema()));
}

/// {"group_by": [...], "groups": [{"values": [...], "raw": x, "rounded": k}]}; wall time is left to the caller.
inline nlohmann::json groups_to_json(const Summary& summary, const QueryPlan& plan, const QueryAnswer& ans) {
  nlohmann::json names = nlohmann::json::array();
  for (auto g : plan.group_by) names.push_back(summary.schema().attribute(g).name());
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : ans.groups) {
    nlohmann::json values = nlohmann::json::array();
    for (std::size_t k = 0; k < g.values.size(); ++k) {
      values.push_back(summary.schema().attribute(plan.group_by[k]).describe(g.values[k]));
    }
    groups.push_back({{"values", values}, {"raw", g.raw}, {"rounded", g.rounded}});
  }
  return {{"group_by", names}, {"groups", groups}};
}

}  // namespace maxent
