#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "scadscope/diagnostic.hpp"
#include "scadscope/source_span.hpp"

namespace scadscope {

enum class TokenKind {
  kIdentifier,  // includes keywords and $-prefixed special variables
  kNumber,
  kString,
  kPath,  // the <...> operand of use/include
  kPunct,
  kComment,
  kError,  // bytes outside the lexical grammar
};

struct Token {
  TokenKind kind;
  std::string_view text;  // exact lexeme, views the lexed source
  SourceSpan span;

  bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
  bool is_punct(std::string_view t) const { return is(TokenKind::kPunct, t); }
  bool is_ident(std::string_view t) const { return is(TokenKind::kIdentifier, t); }
};

struct LexResult {
  std::vector<Token> tokens;
  std::vector<ParseDiagnostic> diagnostics;
};

/// Splits `source` into tokens. Whitespace is skipped; comments are kept as
/// tokens, so lexemes plus skipped whitespace reproduce the input exactly.
/// Token text views `source`, which must outlive the result.
LexResult tokenize(std::string_view source);

}  // namespace scadscope
