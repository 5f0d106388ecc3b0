#include "scadscope/lexer.hpp"

#include <cctype>

namespace scadscope {
namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src), lines_(src) {}

  LexResult run() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (is_space(c)) {
        ++pos_;
      } else if (c == '/' && peek(1) == '/') {
        line_comment();
      } else if (c == '/' && peek(1) == '*') {
        block_comment();
      } else if (c == '"') {
        string_literal();
      } else if (is_digit(c) || (c == '.' && is_digit(peek(1)))) {
        number();
      } else if (is_ident_start(c)) {
        identifier();
      } else if (c == '<' && expecting_path()) {
        path();
      } else if (!punct()) {
        error_run();
      }
    }
    return std::move(out_);
  }

 private:
  char peek(std::size_t ahead) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void emit(TokenKind kind, std::size_t start) {
    out_.tokens.push_back(Token{kind, src_.substr(start, pos_ - start), lines_.span(start, pos_)});
  }

  void diag(std::string msg, std::size_t start, std::size_t end) {
    out_.diagnostics.push_back({Severity::kError, std::move(msg), lines_.span(start, end)});
  }

  void line_comment() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
    emit(TokenKind::kComment, start);
  }

  void block_comment() {
    const std::size_t start = pos_;
    const auto close = src_.find("*/", pos_ + 2);
    if (close == std::string_view::npos) {
      pos_ = src_.size();
      diag("unterminated block comment", start, start + 2);
    } else {
      pos_ = close + 2;
    }
    emit(TokenKind::kComment, start);
  }

  void string_literal() {
    const std::size_t start = pos_++;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\\' && pos_ + 1 < src_.size()) {
        pos_ += 2;
      } else if (c == '"') {
        ++pos_;
        emit(TokenKind::kString, start);
        return;
      } else {
        ++pos_;
      }
    }
    pos_ = src_.size();
    diag("unterminated string literal", start, start + 1);
    emit(TokenKind::kString, start);
  }

  void number() {
    const std::size_t start = pos_;
    while (is_digit(peek(0))) ++pos_;
    if (peek(0) == '.' && is_digit(peek(1))) {
      ++pos_;
      while (is_digit(peek(0))) ++pos_;
    } else if (peek(0) == '.' && !is_ident_start(peek(1)) && peek(1) != '.') {
      ++pos_;  // "1." is a valid literal
    }
    if (peek(0) == 'e' || peek(0) == 'E') {
      std::size_t k = 1;
      if (peek(k) == '+' || peek(k) == '-') ++k;
      if (is_digit(peek(k))) {
        pos_ += k;
        while (is_digit(peek(0))) ++pos_;
      }
    }
    emit(TokenKind::kNumber, start);
  }

  void identifier() {
    const std::size_t start = pos_++;
    while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
    emit(TokenKind::kIdentifier, start);
  }

  // `<` directly after use/include opens a file path.
  bool expecting_path() const {
    for (auto it = out_.tokens.rbegin(); it != out_.tokens.rend(); ++it) {
      if (it->kind == TokenKind::kComment) continue;
      return it->is_ident("use") || it->is_ident("include");
    }
    return false;
  }

  void path() {
    const std::size_t start = pos_;
    std::size_t end = pos_ + 1;
    while (end < src_.size() && src_[end] != '>' && src_[end] != '\n') ++end;
    if (end < src_.size() && src_[end] == '>') {
      pos_ = end + 1;
    } else {
      pos_ = end;
      diag("unterminated include path", start, start + 1);
    }
    emit(TokenKind::kPath, start);
  }

  bool punct() {
    static constexpr std::string_view two[] = {"<=", ">=", "==", "!=", "&&", "||"};
    for (auto p : two) {
      if (src_.substr(pos_, 2) == p) {
        const std::size_t start = pos_;
        pos_ += 2;
        emit(TokenKind::kPunct, start);
        return true;
      }
    }
    static constexpr std::string_view one = "()[]{};,=+-*/%^!<>?:.#";
    if (one.find(src_[pos_]) != std::string_view::npos) {
      const std::size_t start = pos_++;
      emit(TokenKind::kPunct, start);
      return true;
    }
    return false;
  }

  void error_run() {
    const std::size_t start = pos_++;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (is_space(c) || is_ident_start(c) || is_digit(c) || c == '"' || c == '/' ||
          std::string_view("()[]{};,=+-*%^!<>?:.#&|").find(c) != std::string_view::npos)
        break;
      ++pos_;
    }
    diag("unexpected character(s) '" + std::string(src_.substr(start, pos_ - start)) + "'",
         start, pos_);
    emit(TokenKind::kError, start);
  }

  std::string_view src_;
  LineIndex lines_;
  std::size_t pos_ = 0;
  LexResult out_;
};

}  // namespace

LexResult tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace scadscope
