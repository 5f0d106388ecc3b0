#include <charconv>
#include <cmath>
#include <numbers>

#include "scadscope/value.hpp"

namespace scadscope {

bool operator==(const Value& a, const Value& b) {
  if (a.data.index() != b.data.index()) return false;
  if (a.is_number()) return a.as_number() == b.as_number();
  if (a.is_bool()) return a.as_bool() == b.as_bool();
  if (a.is_vector()) return a.as_vector() == b.as_vector();
  if (a.is_range()) {
    const auto& x = a.as_range();
    const auto& y = b.as_range();
    return x.start == y.start && x.step == y.step && x.end == y.end;
  }
  return false;
}

std::string format_number(double v) {
  if (v == 0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string Value::to_source() const {
  if (is_number()) return format_number(as_number());
  if (is_bool()) return as_bool() ? "true" : "false";
  if (is_range()) {
    const auto& r = as_range();
    return "[" + format_number(r.start) + ":" + format_number(r.step) + ":" + format_number(r.end) + "]";
  }
  if (is_vector()) {
    std::string out = "[";
    bool first = true;
    for (const auto& e : as_vector()) {
      if (!first) out += ", ";
      first = false;
      out += e.to_source();
    }
    return out + "]";
  }
  return "undef";
}

std::optional<bool> truthy(const Value& v) {
  if (v.is_bool()) return v.as_bool();
  if (v.is_number()) return v.as_number() != 0;
  if (v.is_vector()) return !v.as_vector().empty();
  if (v.is_range()) return true;
  return std::nullopt;
}

std::optional<std::vector<Value>> enumerate(const Value& v, std::size_t limit) {
  if (v.is_vector()) {
    if (v.as_vector().size() > limit) return std::nullopt;
    for (const auto& e : v.as_vector())
      if (e.is_unresolved()) return std::nullopt;
    return v.as_vector();
  }
  if (v.is_number()) return std::vector<Value>{v};
  if (!v.is_range()) return std::nullopt;
  const Range& r = v.as_range();
  const double span = (r.end - r.start) / r.step;
  if (!std::isfinite(span)) return std::nullopt;
  if (span < 0) return std::vector<Value>{};
  // tolerate accumulated float error at the inclusive end
  const double count = std::floor(span + 1e-9) + 1;
  if (count > static_cast<double>(limit)) return std::nullopt;
  std::vector<Value> out;
  for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k)
    out.push_back(Value::number(r.start + static_cast<double>(k) * r.step));
  return out;
}

namespace {

class Evaluator {
 public:
  Evaluator(const Environment& env, std::vector<ParseDiagnostic>* diags)
      : env_(env), diags_(diags) {}

  Value eval(const Expr& e) {
    switch (e.kind) {
      case ExprKind::kNumber: return Value::number(e.number);
      case ExprKind::kBool: return Value::boolean(e.text == "true");
      case ExprKind::kString: return unresolved(e, "string values are not modeled");
      case ExprKind::kUndef: return unresolved(e, "undef");
      case ExprKind::kOpaque: return unresolved(e, "construct outside the evaluated subset");
      case ExprKind::kIdentifier: {
        auto it = env_.find(e.text);
        if (it == env_.end()) return unresolved(e, "unbound variable '" + e.text + "'");
        return it->second;
      }
      case ExprKind::kVector: {
        std::vector<Value> out;
        for (const auto& c : e.children) out.push_back(eval(c));
        return Value::vector(std::move(out));
      }
      case ExprKind::kRange: return range(e);
      case ExprKind::kUnary: return unary(e);
      case ExprKind::kBinary: return binary(e);
      case ExprKind::kTernary: {
        auto cond = truthy(eval(e.children[0]));
        if (!cond) return unresolved(e, "unresolved condition");
        return eval(e.children[*cond ? 1 : 2]);
      }
      case ExprKind::kIndex: {
        Value obj = eval(e.children[0]);
        Value idx = eval(e.children[1]);
        if (!obj.is_vector() || !idx.is_number()) return unresolved(e, "unresolved index");
        const double i = idx.as_number();
        const auto& vec = obj.as_vector();
        if (i < 0 || i >= static_cast<double>(vec.size())) return unresolved(e, "index out of range");
        return vec[static_cast<std::size_t>(i)];
      }
      case ExprKind::kMember: {
        Value obj = eval(e.children[0]);
        static constexpr std::string_view names = "xyz";
        const auto pos = names.find(e.text);
        if (!obj.is_vector() || e.text.size() != 1 || pos == std::string_view::npos ||
            pos >= obj.as_vector().size())
          return unresolved(e, "unresolved member");
        return obj.as_vector()[pos];
      }
      case ExprKind::kCall: return call(e);
    }
    return unresolved(e, "unknown expression");
  }

 private:
  Value unresolved(const Expr& e, std::string reason) {
    return Value::unresolved(describe(e), std::move(reason));
  }

  static std::string describe(const Expr& e) {
    switch (e.kind) {
      case ExprKind::kBinary: return describe(e.children[0]) + " " + e.op + " " + describe(e.children[1]);
      case ExprKind::kUnary: return e.op + describe(e.children[0]);
      case ExprKind::kUndef: return "undef";
      case ExprKind::kCall: return e.text + "(...)";
      case ExprKind::kRange: return "[" + describe(e.children[0]) + ":...]";
      default: return e.text.empty() ? "<expr>" : e.text;
    }
  }

  void report(const Expr& e, std::string message) {
    if (diags_) diags_->push_back({Severity::kWarning, std::move(message), e.span});
  }

  Value range(const Expr& e) {
    std::vector<double> parts;
    for (const auto& c : e.children) {
      Value v = eval(c);
      if (!v.is_number()) return unresolved(e, "unresolved range bound");
      parts.push_back(v.as_number());
    }
    Range r;
    r.start = parts[0];
    if (parts.size() == 3) {
      r.step = parts[1];
      r.end = parts[2];
    } else {
      r.end = parts[1];
      // OpenSCAD swaps reversed two-part ranges
      if (r.end < r.start) std::swap(r.start, r.end);
    }
    if (r.step == 0) {
      report(e, "range step is zero");
      return unresolved(e, "range step is zero");
    }
    return Value::range(r);
  }

  Value unary(const Expr& e) {
    Value v = eval(e.children[0]);
    if (e.op == "!") {
      auto t = truthy(v);
      if (!t) return unresolved(e, "unresolved operand");
      return Value::boolean(!*t);
    }
    const double sign = e.op == "-" ? -1.0 : 1.0;
    return scale(v, sign, e);
  }

  Value scale(const Value& v, double factor, const Expr& e) {
    if (v.is_number()) return Value::number(v.as_number() * factor);
    if (v.is_vector()) {
      std::vector<Value> out;
      for (const auto& x : v.as_vector()) {
        Value s = scale(x, factor, e);
        if (s.is_unresolved()) return s;
        out.push_back(std::move(s));
      }
      return Value::vector(std::move(out));
    }
    return unresolved(e, "operand is not numeric");
  }

  Value elementwise(const Value& a, const Value& b, char op, const Expr& e) {
    if (a.is_number() && b.is_number()) {
      const double x = a.as_number(), y = b.as_number();
      return Value::number(op == '+' ? x + y : x - y);
    }
    if (a.is_vector() && b.is_vector()) {
      const auto& va = a.as_vector();
      const auto& vb = b.as_vector();
      std::vector<Value> out;
      for (std::size_t i = 0; i < std::min(va.size(), vb.size()); ++i) {
        Value r = elementwise(va[i], vb[i], op, e);
        if (r.is_unresolved()) return r;
        out.push_back(std::move(r));
      }
      return Value::vector(std::move(out));
    }
    return unresolved(e, "incompatible operands");
  }

  Value multiply(const Value& a, const Value& b, const Expr& e) {
    if (a.is_number() && b.is_number()) return Value::number(a.as_number() * b.as_number());
    if (a.is_number() && b.is_vector()) return scale(b, a.as_number(), e);
    if (a.is_vector() && b.is_number()) return scale(a, b.as_number(), e);
    if (a.is_vector() && b.is_vector()) {
      const auto& va = a.as_vector();
      const auto& vb = b.as_vector();
      if (va.size() != vb.size()) return unresolved(e, "vector size mismatch");
      double dot = 0;
      for (std::size_t i = 0; i < va.size(); ++i) {
        if (!va[i].is_number() || !vb[i].is_number()) return unresolved(e, "non-numeric vector");
        dot += va[i].as_number() * vb[i].as_number();
      }
      return Value::number(dot);
    }
    return unresolved(e, "incompatible operands");
  }

  Value binary(const Expr& e) {
    const std::string& op = e.op;
    if (op == "&&" || op == "||") {
      auto l = truthy(eval(e.children[0]));
      if (l && op == "&&" && !*l) return Value::boolean(false);
      if (l && op == "||" && *l) return Value::boolean(true);
      auto r = truthy(eval(e.children[1]));
      if (!l || !r) return unresolved(e, "unresolved operand");
      return Value::boolean(*r);
    }
    Value a = eval(e.children[0]);
    Value b = eval(e.children[1]);
    if (a.is_unresolved()) return a;
    if (b.is_unresolved()) return b;
    if (op == "+" || op == "-") return elementwise(a, b, op[0], e);
    if (op == "*") return multiply(a, b, e);
    if (op == "/") {
      if (!b.is_number()) return unresolved(e, "incompatible operands");
      if (b.as_number() == 0) {
        report(e, "division by zero");
        return unresolved(e, "division by zero");
      }
      return scale(a, 1.0 / b.as_number(), e);
    }
    if (op == "%") {
      if (!a.is_number() || !b.is_number()) return unresolved(e, "incompatible operands");
      if (b.as_number() == 0) {
        report(e, "modulo by zero");
        return unresolved(e, "modulo by zero");
      }
      return Value::number(std::fmod(a.as_number(), b.as_number()));
    }
    if (op == "^") {
      if (!a.is_number() || !b.is_number()) return unresolved(e, "incompatible operands");
      return Value::number(std::pow(a.as_number(), b.as_number()));
    }
    if (op == "==") return Value::boolean(a == b);
    if (op == "!=") return Value::boolean(!(a == b));
    if (!a.is_number() || !b.is_number()) return unresolved(e, "non-numeric comparison");
    const double x = a.as_number(), y = b.as_number();
    if (op == "<") return Value::boolean(x < y);
    if (op == "<=") return Value::boolean(x <= y);
    if (op == ">") return Value::boolean(x > y);
    if (op == ">=") return Value::boolean(x >= y);
    return unresolved(e, "unknown operator");
  }

  Value call(const Expr& e) {
    std::vector<Value> args;
    for (const auto& a : e.args) {
      if (a.name) return unresolved(e, "named arguments to functions are not evaluated");
      args.push_back(eval(a.value));
      if (args.back().is_unresolved()) return args.back();
    }
    const std::string& f = e.text;
    auto num1 = [&](auto fn) -> Value {
      if (args.size() != 1 || !args[0].is_number()) return unresolved(e, "bad arguments to " + f);
      return Value::number(fn(args[0].as_number()));
    };
    constexpr double kDeg = std::numbers::pi / 180.0;
    if (f == "abs") return num1([](double x) { return std::abs(x); });
    if (f == "sqrt") return num1([](double x) { return std::sqrt(x); });
    if (f == "floor") return num1([](double x) { return std::floor(x); });
    if (f == "ceil") return num1([](double x) { return std::ceil(x); });
    if (f == "round") return num1([](double x) { return std::round(x); });
    if (f == "sin") return num1([&](double x) { return std::sin(x * kDeg); });
    if (f == "cos") return num1([&](double x) { return std::cos(x * kDeg); });
    if (f == "tan") return num1([&](double x) { return std::tan(x * kDeg); });
    if (f == "len") {
      if (args.size() == 1 && args[0].is_vector())
        return Value::number(static_cast<double>(args[0].as_vector().size()));
      return unresolved(e, "bad arguments to len");
    }
    if (f == "min" || f == "max") {
      std::vector<double> xs;
      const auto& src = args.size() == 1 && args[0].is_vector() ? args[0].as_vector() : args;
      for (const auto& v : src) {
        if (!v.is_number()) return unresolved(e, "bad arguments to " + f);
        xs.push_back(v.as_number());
      }
      if (xs.empty()) return unresolved(e, "bad arguments to " + f);
      return Value::number(f == "min" ? *std::min_element(xs.begin(), xs.end())
                                      : *std::max_element(xs.begin(), xs.end()));
    }
    return unresolved(e, "user function '" + f + "' is not evaluated");
  }

  const Environment& env_;
  std::vector<ParseDiagnostic>* diags_;
};

}  // namespace

Value eval_const(const Expr& expr, const Environment& env, std::vector<ParseDiagnostic>* diags) {
  return Evaluator(env, diags).eval(expr);
}

}  // namespace scadscope
