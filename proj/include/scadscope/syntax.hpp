#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scadscope/diagnostic.hpp"
#include "scadscope/lexer.hpp"
#include "scadscope/source_span.hpp"

namespace scadscope {

enum class ExprKind {
  kNumber,
  kString,
  kBool,
  kUndef,
  kIdentifier,
  kVector,
  kRange,    // children: start, end or start, step, end
  kUnary,    // op, children[0]
  kBinary,   // op, children[0..1]
  kTernary,  // children: cond, then, else
  kCall,     // text = callee name, args
  kIndex,    // children: object, index
  kMember,   // children[0], text = member
  kOpaque,   // let/function literals/list comprehensions
};

struct Argument;

struct Expr {
  ExprKind kind = ExprKind::kUndef;
  std::string op;
  std::string text;  // literal text, identifier name, or the opaque source
  double number = 0.0;
  std::vector<Expr> children;
  std::vector<Argument> args;
  SourceSpan span;
};

struct Argument {
  std::optional<std::string> name;
  Expr value;
  SourceSpan span;
};

struct Parameter {
  std::string name;
  std::optional<Expr> default_value;
  SourceSpan span;
};

enum class NodeKind {
  kModuleDef,
  kModuleCall,
  kPrimitive,
  kTransform,
  kBoolean,
  kFor,
  kIf,
  kAssign,
  kExpr,
  kBlock,
  kComment,
  kOpaque,  // use/include/function definitions
};

std::string_view to_string(NodeKind kind);

bool is_primitive_name(std::string_view name);
bool is_transform_name(std::string_view name);
bool is_boolean_name(std::string_view name);
/// Builtins outside the modeled subset (hull, linear_extrude, echo, ...).
bool is_other_builtin_name(std::string_view name);

/// One statement or block of the parse tree.
///
/// Child layout by kind:
///  - Block: the statements between the braces.
///  - ModuleDef / For: a single body statement (often a Block).
///  - If: then-branch, plus the else-branch when `has_else`.
///  - calls (ModuleCall/Primitive/Transform/Boolean): the child statement, if
///    any; a braced child is a Block.
/// For `For` the loop variables are `args`; `If` keeps its condition in
/// `args[0]`; `Assign` keeps its value in `args[0]`.
struct SyntaxNode {
  NodeKind kind = NodeKind::kBlock;
  std::string name;
  std::string modifiers;  // leading !, #, %, * characters
  std::vector<Argument> args;
  std::vector<Parameter> params;
  std::vector<SyntaxNode> children;
  SourceSpan span;
  SourceSpan name_span;
  std::optional<SourceSpan> args_span;  // "(" .. ")" inclusive
  bool has_else = false;
};

struct ParseResult {
  std::string source;
  SyntaxNode root;
  std::vector<ParseDiagnostic> diagnostics;
  std::vector<Token> comments;  // views into `source`

  bool ok() const { return !has_errors(diagnostics); }
};

/// Parses OpenSCAD source. Always returns a tree; on syntax errors the tree
/// holds every statement that could be recovered.
/// The result owns a copy of the source, so it is safe to keep a shared_ptr
/// to it and hand out pointers into `root`.
std::shared_ptr<const ParseResult> parse(std::string_view source);

/// Source text covered by `span`.
inline std::string_view slice(std::string_view source, const SourceSpan& span) {
  return source.substr(span.start_byte, span.end_byte - span.start_byte);
}

}  // namespace scadscope
