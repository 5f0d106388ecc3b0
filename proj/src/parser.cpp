#include <algorithm>
#include <array>
#include <cstdlib>
#include <functional>
#include <set>

#include "scadscope/syntax.hpp"

namespace scadscope {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::kModuleDef: return "ModuleDef";
    case NodeKind::kModuleCall: return "ModuleCall";
    case NodeKind::kPrimitive: return "Primitive";
    case NodeKind::kTransform: return "Transform";
    case NodeKind::kBoolean: return "Boolean";
    case NodeKind::kFor: return "For";
    case NodeKind::kIf: return "If";
    case NodeKind::kAssign: return "Assign";
    case NodeKind::kExpr: return "Expr";
    case NodeKind::kBlock: return "Block";
    case NodeKind::kComment: return "Comment";
    case NodeKind::kOpaque: return "Opaque";
  }
  return "?";
}

namespace {

template <std::size_t N>
bool one_of(std::string_view name, const std::array<std::string_view, N>& set) {
  return std::find(set.begin(), set.end(), name) != set.end();
}

constexpr std::array<std::string_view, 7> kPrimitives = {
    "cube", "sphere", "cylinder", "polyhedron", "circle", "square", "text"};
constexpr std::array<std::string_view, 6> kTransforms = {
    "translate", "rotate", "scale", "mirror", "color", "resize"};
constexpr std::array<std::string_view, 3> kBooleans = {"union", "difference", "intersection"};
constexpr std::array<std::string_view, 19> kOtherBuiltins = {
    "polygon", "hull",   "minkowski", "linear_extrude", "rotate_extrude", "offset", "projection",
    "render",  "children", "echo",    "assert",         "multmatrix",     "surface", "import",
    "intersection_for", "let", "group", "import_stl", "roof"};

}  // namespace

bool is_primitive_name(std::string_view name) { return one_of(name, kPrimitives); }
bool is_transform_name(std::string_view name) { return one_of(name, kTransforms); }
bool is_boolean_name(std::string_view name) { return one_of(name, kBooleans); }
bool is_other_builtin_name(std::string_view name) { return one_of(name, kOtherBuiltins); }

namespace {

struct SyntaxError {
  std::string message;
  SourceSpan span;
};

constexpr int kMaxNesting = 200;

class Parser {
 public:
  Parser(const std::string& source, std::vector<Token> tokens)
      : src_(source), lines_(source), tokens_(std::move(tokens)) {}

  SyntaxNode parse_program(std::vector<ParseDiagnostic>& diags) {
    diags_ = &diags;
    SyntaxNode root;
    root.kind = NodeKind::kBlock;
    root.span = lines_.span(0, src_.size());
    statement_list(root.children, /*top_level=*/true);
    return root;
  }

 private:
  // ---- token cursor ------------------------------------------------------

  std::size_t next_significant(std::size_t i) const {
    while (i < tokens_.size() && tokens_[i].kind == TokenKind::kComment) ++i;
    return i;
  }
  bool at_end() const { return next_significant(pos_) >= tokens_.size(); }
  const Token* peek(std::size_t ahead = 0) const {
    std::size_t i = next_significant(pos_);
    for (std::size_t k = 0; k < ahead && i < tokens_.size(); ++k) i = next_significant(i + 1);
    return i < tokens_.size() ? &tokens_[i] : nullptr;
  }
  bool peek_punct(std::string_view p, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->is_punct(p);
  }
  bool peek_ident(std::string_view p) const {
    const Token* t = peek();
    return t && t->is_ident(p);
  }
  const Token& advance() {
    pos_ = next_significant(pos_);
    last_end_ = tokens_[pos_].span.end_byte;
    return tokens_[pos_++];
  }
  SourceSpan here() const {
    const Token* t = peek();
    if (t) return t->span;
    return lines_.span(src_.size(), src_.size());
  }
  [[noreturn]] void fail(std::string message) const { throw SyntaxError{std::move(message), here()}; }
  const Token& expect_punct(std::string_view p) {
    if (!peek_punct(p)) {
      const Token* t = peek();
      fail("expected '" + std::string(p) + "' but found " +
           (t ? "'" + std::string(t->text) + "'" : std::string("end of input")));
    }
    return advance();
  }
  const Token& expect_identifier() {
    const Token* t = peek();
    if (!t || t->kind != TokenKind::kIdentifier) fail("expected identifier");
    return advance();
  }
  SourceSpan span_from(std::size_t start) const { return lines_.span(start, last_end_); }

  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p(p) {
      if (++p.depth_ > kMaxNesting) {
        --p.depth_;
        p.fail("nesting too deep");
      }
    }
    ~DepthGuard() { --p.depth_; }
    Parser& p;
  };

  // ---- statements -------------------------------------------------------

  void error(const SyntaxError& e) { diags_->push_back({Severity::kError, e.message, e.span}); }

  void synchronize() {
    int depth = 0;
    while (!at_end()) {
      const Token& t = *peek();
      if (t.is_punct("{")) {
        ++depth;
      } else if (t.is_punct("}")) {
        if (depth == 0) return;
        --depth;
      } else if (t.is_punct(";") && depth == 0) {
        advance();
        return;
      }
      advance();
    }
  }

  void take_comments(std::vector<SyntaxNode>& out) {
    while (pos_ < tokens_.size() && tokens_[pos_].kind == TokenKind::kComment) {
      SyntaxNode c;
      c.kind = NodeKind::kComment;
      c.name = std::string(tokens_[pos_].text);
      c.span = tokens_[pos_].span;
      out.push_back(std::move(c));
      ++pos_;
    }
  }

  void statement_list(std::vector<SyntaxNode>& out, bool top_level) {
    for (;;) {
      take_comments(out);
      if (at_end()) return;
      if (peek_punct("}")) {
        if (!top_level) return;
        error({"unmatched '}'", peek()->span});
        advance();
        continue;
      }
      const std::size_t before = pos_;
      try {
        if (auto node = statement()) out.push_back(std::move(*node));
      } catch (const SyntaxError& e) {
        error(e);
        synchronize();
        if (pos_ == before && !at_end() && !peek_punct("}")) advance();
      }
    }
  }

  std::optional<SyntaxNode> statement() {
    DepthGuard guard(*this);
    const Token* t = peek();
    if (t->is_punct(";")) {
      advance();
      return std::nullopt;
    }
    if (t->is_punct("{")) return block();
    if (t->kind == TokenKind::kIdentifier) {
      if (t->text == "module") return module_definition();
      if (t->text == "function") return function_definition();
      if (t->text == "use" || t->text == "include") return use_include();
      if (peek_punct("=", 1)) return assignment();
    }
    return instantiation();
  }

  SyntaxNode block() {
    const Token& open = advance();
    SyntaxNode node;
    node.kind = NodeKind::kBlock;
    statement_list(node.children, false);
    if (!peek_punct("}")) throw SyntaxError{"unmatched '{'", open.span};
    advance();
    node.span = span_from(open.span.start_byte);
    return node;
  }

  SyntaxNode module_definition() {
    const std::size_t start = advance().span.start_byte;
    SyntaxNode node;
    node.kind = NodeKind::kModuleDef;
    const Token& name = expect_identifier();
    node.name = std::string(name.text);
    node.name_span = name.span;
    const std::size_t open = expect_punct("(").span.start_byte;
    node.params = parameters();
    expect_punct(")");
    node.args_span = span_from(open);
    node.children.push_back(child_statement());
    node.span = span_from(start);
    return node;
  }

  SyntaxNode function_definition() {
    const std::size_t start = advance().span.start_byte;
    SyntaxNode node;
    node.kind = NodeKind::kOpaque;
    const Token& name = expect_identifier();
    node.name = std::string(name.text);
    node.name_span = name.span;
    expect_punct("(");
    node.params = parameters();
    expect_punct(")");
    expect_punct("=");
    Argument body;
    body.value = expression();
    body.span = body.value.span;
    node.args.push_back(std::move(body));
    expect_punct(";");
    node.span = span_from(start);
    return node;
  }

  SyntaxNode use_include() {
    const Token& kw = advance();
    SyntaxNode node;
    node.kind = NodeKind::kOpaque;
    node.name = std::string(kw.text);
    node.name_span = kw.span;
    const Token* path = peek();
    if (!path || path->kind != TokenKind::kPath) fail("expected <file> after " + node.name);
    advance();
    node.span = span_from(kw.span.start_byte);
    return node;
  }

  SyntaxNode assignment() {
    const Token& name = advance();
    SyntaxNode node;
    node.kind = NodeKind::kAssign;
    node.name = std::string(name.text);
    node.name_span = name.span;
    advance();  // '='
    Argument value;
    value.value = expression();
    value.span = value.value.span;
    node.args.push_back(std::move(value));
    expect_punct(";");
    node.span = span_from(name.span.start_byte);
    return node;
  }

  SyntaxNode instantiation() {
    const std::size_t start = here().start_byte;
    std::string modifiers;
    while (peek() && peek()->kind == TokenKind::kPunct && peek()->text.size() == 1 &&
           std::string_view("!#%*").find(peek()->text[0]) != std::string_view::npos) {
      modifiers += advance().text;
    }
    const Token* t = peek();
    if (!t) fail("expected statement after modifier");
    if (t->kind != TokenKind::kIdentifier) {
      fail("unexpected '" + std::string(t->text) + "'");
    }
    SyntaxNode node;
    node.modifiers = std::move(modifiers);
    if (t->text == "if") {
      advance();
      node.kind = NodeKind::kIf;
      node.name = "if";
      const std::size_t open = expect_punct("(").span.start_byte;
      Argument cond;
      cond.value = expression();
      cond.span = cond.value.span;
      node.args.push_back(std::move(cond));
      expect_punct(")");
      node.args_span = span_from(open);
      node.children.push_back(child_statement());
      if (peek_ident("else")) {
        advance();
        node.has_else = true;
        node.children.push_back(child_statement());
      }
      node.span = span_from(start);
      return node;
    }
    const Token& name = advance();
    node.name = std::string(name.text);
    node.name_span = name.span;
    if (node.name == "for") {
      node.kind = NodeKind::kFor;
    } else if (is_primitive_name(node.name)) {
      node.kind = NodeKind::kPrimitive;
    } else if (is_transform_name(node.name)) {
      node.kind = NodeKind::kTransform;
    } else if (is_boolean_name(node.name)) {
      node.kind = NodeKind::kBoolean;
    } else {
      node.kind = NodeKind::kModuleCall;
    }
    const std::size_t open = expect_punct("(").span.start_byte;
    node.args = arguments(")");
    expect_punct(")");
    node.args_span = span_from(open);
    if (peek_punct(";")) {
      advance();
    } else {
      node.children.push_back(child_statement());
    }
    node.span = span_from(start);
    return node;
  }

  SyntaxNode child_statement() {
    if (at_end()) fail("expected statement");
    if (peek_punct("}")) fail("expected statement before '}'");
    if (peek_punct(";")) {
      // empty body; keep an empty block so the parent records its extent
      const Token& semi = advance();
      SyntaxNode empty;
      empty.kind = NodeKind::kBlock;
      empty.span = semi.span;
      return empty;
    }
    auto node = statement();
    return std::move(*node);
  }

  std::vector<Parameter> parameters() {
    std::vector<Parameter> out;
    while (!peek_punct(")")) {
      Parameter p;
      const Token& name = expect_identifier();
      p.name = std::string(name.text);
      if (peek_punct("=")) {
        advance();
        p.default_value = expression();
      }
      p.span = span_from(name.span.start_byte);
      out.push_back(std::move(p));
      if (!peek_punct(",")) break;
      advance();
    }
    return out;
  }

  std::vector<Argument> arguments(std::string_view close) {
    std::vector<Argument> out;
    while (!peek_punct(close)) {
      Argument a;
      const std::size_t start = here().start_byte;
      const Token* t = peek();
      if (t && t->kind == TokenKind::kIdentifier && peek_punct("=", 1)) {
        a.name = std::string(advance().text);
        advance();
      }
      a.value = expression();
      a.span = span_from(start);
      out.push_back(std::move(a));
      if (!peek_punct(",")) break;
      advance();
    }
    return out;
  }

  // ---- expressions ------------------------------------------------------

  Expr make(ExprKind kind, std::size_t start) {
    Expr e;
    e.kind = kind;
    e.span = span_from(start);
    return e;
  }

  Expr binary(std::string op, Expr lhs, Expr rhs) {
    Expr e;
    e.kind = ExprKind::kBinary;
    e.op = std::move(op);
    e.span = lines_.span(lhs.span.start_byte, rhs.span.end_byte);
    e.children.push_back(std::move(lhs));
    e.children.push_back(std::move(rhs));
    return e;
  }

  Expr expression() {
    DepthGuard guard(*this);
    Expr cond = logical_or();
    if (!peek_punct("?")) return cond;
    advance();
    Expr then = expression();
    expect_punct(":");
    Expr otherwise = expression();
    Expr e;
    e.kind = ExprKind::kTernary;
    e.span = lines_.span(cond.span.start_byte, otherwise.span.end_byte);
    e.children = {std::move(cond), std::move(then), std::move(otherwise)};
    return e;
  }

  Expr left_assoc(const std::function<Expr()>& sub, std::initializer_list<std::string_view> ops) {
    Expr lhs = sub();
    for (;;) {
      const Token* t = peek();
      if (!t || t->kind != TokenKind::kPunct) return lhs;
      auto it = std::find(ops.begin(), ops.end(), t->text);
      if (it == ops.end()) return lhs;
      std::string op(advance().text);
      lhs = binary(std::move(op), std::move(lhs), sub());
    }
  }

  Expr logical_or() { return left_assoc([this] { return logical_and(); }, {"||"}); }
  Expr logical_and() { return left_assoc([this] { return equality(); }, {"&&"}); }
  Expr equality() { return left_assoc([this] { return relational(); }, {"==", "!="}); }
  Expr relational() { return left_assoc([this] { return additive(); }, {"<", "<=", ">", ">="}); }
  Expr additive() { return left_assoc([this] { return multiplicative(); }, {"+", "-"}); }
  Expr multiplicative() { return left_assoc([this] { return unary(); }, {"*", "/", "%"}); }

  Expr unary() {
    DepthGuard guard(*this);
    if (peek_punct("!") || peek_punct("-") || peek_punct("+")) {
      const Token& op = advance();
      Expr operand = unary();
      Expr e;
      e.kind = ExprKind::kUnary;
      e.op = std::string(op.text);
      e.span = lines_.span(op.span.start_byte, operand.span.end_byte);
      e.children.push_back(std::move(operand));
      return e;
    }
    return power();
  }

  Expr power() {
    Expr base = postfix();
    if (!peek_punct("^")) return base;
    advance();
    return binary("^", std::move(base), unary());
  }

  Expr postfix() {
    Expr e = primary();
    for (;;) {
      const std::size_t start = e.span.start_byte;
      if (peek_punct("(")) {
        advance();
        Expr call;
        call.kind = ExprKind::kCall;
        call.text = e.kind == ExprKind::kIdentifier ? e.text : std::string();
        call.args = arguments(")");
        expect_punct(")");
        call.children.push_back(std::move(e));
        call.span = span_from(start);
        e = std::move(call);
      } else if (peek_punct("[")) {
        advance();
        Expr idx;
        idx.kind = ExprKind::kIndex;
        idx.children.push_back(std::move(e));
        idx.children.push_back(expression());
        expect_punct("]");
        idx.span = span_from(start);
        e = std::move(idx);
      } else if (peek_punct(".") && peek(1) && peek(1)->kind == TokenKind::kIdentifier) {
        advance();
        Expr mem;
        mem.kind = ExprKind::kMember;
        mem.text = std::string(advance().text);
        mem.children.push_back(std::move(e));
        mem.span = span_from(start);
        e = std::move(mem);
      } else {
        return e;
      }
    }
  }

  // Skips a balanced bracket group starting at the current opener.
  void skip_balanced() {
    int depth = 0;
    do {
      if (at_end()) fail("unterminated bracket");
      const Token& t = advance();
      if (t.is_punct("(") || t.is_punct("[") || t.is_punct("{")) ++depth;
      if (t.is_punct(")") || t.is_punct("]") || t.is_punct("}")) --depth;
    } while (depth > 0);
  }

  Expr opaque(std::size_t start) {
    Expr e = make(ExprKind::kOpaque, start);
    e.text = std::string(slice(src_, e.span));
    return e;
  }

  Expr primary() {
    const Token* t = peek();
    if (!t) fail("expected expression");
    const std::size_t start = t->span.start_byte;
    switch (t->kind) {
      case TokenKind::kNumber: {
        advance();
        Expr e = make(ExprKind::kNumber, start);
        e.text = std::string(t->text);
        e.number = std::strtod(e.text.c_str(), nullptr);
        return e;
      }
      case TokenKind::kString: {
        advance();
        Expr e = make(ExprKind::kString, start);
        e.text = std::string(t->text);
        return e;
      }
      case TokenKind::kIdentifier: {
        if (t->text == "true" || t->text == "false") {
          advance();
          Expr e = make(ExprKind::kBool, start);
          e.text = std::string(t->text);
          return e;
        }
        if (t->text == "undef") {
          advance();
          return make(ExprKind::kUndef, start);
        }
        if (t->text == "let" || t->text == "assert" || t->text == "echo") {
          advance();
          if (!peek_punct("(")) fail("expected '('");
          skip_balanced();
          expression();
          return opaque(start);
        }
        if (t->text == "function") {
          advance();
          if (!peek_punct("(")) fail("expected '('");
          skip_balanced();
          expression();
          return opaque(start);
        }
        advance();
        Expr e = make(ExprKind::kIdentifier, start);
        e.text = std::string(t->text);
        return e;
      }
      case TokenKind::kPunct:
        if (t->text == "(") {
          advance();
          Expr inner = expression();
          expect_punct(")");
          inner.span = span_from(start);
          return inner;
        }
        if (t->text == "[") return vector_or_range();
        break;
      default:
        break;
    }
    fail("unexpected '" + std::string(t->text) + "' in expression");
  }

  Expr vector_or_range() {
    const std::size_t start = advance().span.start_byte;
    if (peek_punct("]")) {
      advance();
      return make(ExprKind::kVector, start);
    }
    const Token* t = peek();
    if (t && (t->is_ident("for") || t->is_ident("each") || t->is_ident("let") || t->is_ident("if"))) {
      // list comprehension: kept verbatim
      int depth = 1;
      while (depth > 0) {
        if (at_end()) fail("unterminated list comprehension");
        const Token& tok = advance();
        if (tok.is_punct("[")) ++depth;
        if (tok.is_punct("]")) --depth;
      }
      return opaque(start);
    }
    Expr first = expression();
    if (peek_punct(":")) {
      advance();
      Expr second = expression();
      Expr e;
      e.kind = ExprKind::kRange;
      e.children.push_back(std::move(first));
      e.children.push_back(std::move(second));
      if (peek_punct(":")) {
        advance();
        e.children.push_back(expression());
      }
      expect_punct("]");
      e.span = span_from(start);
      return e;
    }
    Expr e;
    e.kind = ExprKind::kVector;
    e.children.push_back(std::move(first));
    while (peek_punct(",")) {
      advance();
      if (peek_punct("]")) break;
      e.children.push_back(expression());
    }
    expect_punct("]");
    e.span = span_from(start);
    return e;
  }

  const std::string& src_;
  LineIndex lines_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t last_end_ = 0;
  int depth_ = 0;
  std::vector<ParseDiagnostic>* diags_ = nullptr;
};

void collect_module_names(const SyntaxNode& node, std::set<std::string>& names) {
  if (node.kind == NodeKind::kModuleDef) names.insert(node.name);
  for (const auto& c : node.children) collect_module_names(c, names);
}

void warn_unknown_calls(const SyntaxNode& node, const std::set<std::string>& defined,
                        std::vector<ParseDiagnostic>& diags) {
  if (node.kind == NodeKind::kModuleCall && !defined.contains(node.name) &&
      !is_other_builtin_name(node.name)) {
    diags.push_back({Severity::kWarning, "unknown module '" + node.name + "'", node.name_span});
  }
  for (const auto& c : node.children) warn_unknown_calls(c, defined, diags);
}

}  // namespace

std::shared_ptr<const ParseResult> parse(std::string_view source) {
  auto result = std::make_shared<ParseResult>();
  result->source = std::string(source);
  LexResult lexed = tokenize(result->source);
  result->diagnostics = std::move(lexed.diagnostics);
  std::vector<Token> significant;
  significant.reserve(lexed.tokens.size());
  for (const auto& t : lexed.tokens) {
    if (t.kind == TokenKind::kComment) result->comments.push_back(t);
    // stray bytes are already diagnosed by the lexer
    if (t.kind != TokenKind::kError) significant.push_back(t);
  }
  Parser parser(result->source, std::move(significant));
  result->root = parser.parse_program(result->diagnostics);
  std::set<std::string> defined;
  collect_module_names(result->root, defined);
  warn_unknown_calls(result->root, defined, result->diagnostics);
  std::stable_sort(result->diagnostics.begin(), result->diagnostics.end(),
                   [](const ParseDiagnostic& a, const ParseDiagnostic& b) {
                     return a.span.start_byte < b.span.start_byte;
                   });
  return result;
}

}  // namespace scadscope
