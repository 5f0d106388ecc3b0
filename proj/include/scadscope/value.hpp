#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "scadscope/diagnostic.hpp"
#include "scadscope/syntax.hpp"

namespace scadscope {

struct Value;

struct Range {
  double start = 0;
  double step = 1;  // never 0
  double end = 0;
};

struct Unresolved {
  std::string expr_text;  // the originating expression
  std::string reason;
};

/// Statically known value of an expression. Strings and undef are
/// represented as Unresolved.
struct Value {
  std::variant<double, bool, std::vector<Value>, Range, Unresolved> data;

  static Value number(double v) { return Value{v}; }
  static Value boolean(bool v) { return Value{v}; }
  static Value vector(std::vector<Value> v) { return Value{std::move(v)}; }
  static Value range(Range r) { return Value{r}; }
  static Value unresolved(std::string text, std::string reason) {
    return Value{Unresolved{std::move(text), std::move(reason)}};
  }

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_vector() const { return std::holds_alternative<std::vector<Value>>(data); }
  bool is_range() const { return std::holds_alternative<Range>(data); }
  bool is_unresolved() const { return std::holds_alternative<Unresolved>(data); }

  double as_number() const { return std::get<double>(data); }
  bool as_bool() const { return std::get<bool>(data); }
  const std::vector<Value>& as_vector() const { return std::get<std::vector<Value>>(data); }
  const Range& as_range() const { return std::get<Range>(data); }
  const Unresolved& as_unresolved() const { return std::get<Unresolved>(data); }

  /// Resolved values only; Unresolved never compares equal.
  friend bool operator==(const Value& a, const Value& b);

  /// OpenSCAD source text for a resolved value, e.g. "2" or "[0, 1.5]".
  std::string to_source() const;
};

using Environment = std::map<std::string, Value, std::less<>>;

/// Folds `expr` under `env`. Total: anything not statically known yields
/// Unresolved. Problems such as division by zero are appended to `diags`
/// when given.
Value eval_const(const Expr& expr, const Environment& env,
                 std::vector<ParseDiagnostic>* diags = nullptr);

/// Elements produced by iterating a loop over `v`, or nullopt when the
/// value is not enumerable or yields more than `limit` elements.
std::optional<std::vector<Value>> enumerate(const Value& v, std::size_t limit);

/// OpenSCAD truthiness, nullopt when unresolved.
std::optional<bool> truthy(const Value& v);

/// Shortest decimal text that reads back as `v`.
std::string format_number(double v);

}  // namespace scadscope
