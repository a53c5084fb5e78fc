#pragma once

#include <cctype>
#include <string>

#include "safectrl/expr.hpp"

namespace safectrl::detail {

/// Hand-rolled scanner shared by the model, risk-DSL and property parsers.
struct Lexer {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;
  int col = 1;

  explicit Lexer(const std::string& t) : text(t) {}

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line, col); }

  void advance() {
    if (text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  void skip_ws() {
    while (pos < text.size()) {
      char c = text[pos];
      if (c == '/' && pos + 1 < text.size() && text[pos + 1] == '/') {
        while (pos < text.size() && text[pos] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  bool eof() {
    skip_ws();
    return pos >= text.size();
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  bool peek_word(const std::string& tok) {
    skip_ws();
    if (text.compare(pos, tok.size(), tok) != 0) return false;
    if (std::isalpha(static_cast<unsigned char>(tok[0])) || tok[0] == '_') {
      std::size_t end = pos + tok.size();
      if (end < text.size() &&
          (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_'))
        return false;
    }
    return true;
  }

  bool try_consume(const std::string& tok) {
    if (!peek_word(tok)) return false;
    for (std::size_t k = 0; k < tok.size(); ++k) advance();
    return true;
  }

  void consume(const std::string& tok) {
    if (!try_consume(tok)) fail("expected '" + tok + "'");
  }

  bool ident_ahead() {
    char c = peek();
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }

  std::string ident() {
    skip_ws();
    if (!ident_ahead()) fail("expected identifier");
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      advance();
    return text.substr(start, pos - start);
  }

  Value number() {
    skip_ws();
    bool neg = false;
    if (pos < text.size() && text[pos] == '-') {
      neg = true;
      advance();
    }
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) advance();
    bool real = false;
    if (pos + 1 < text.size() && text[pos] == '.' &&
        std::isdigit(static_cast<unsigned char>(text[pos + 1]))) {
      real = true;
      advance();
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) advance();
    }
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
      real = true;
      advance();
      if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) advance();
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) advance();
    }
    if (pos == start) fail("expected number");
    std::string s = text.substr(start, pos - start);
    if (real) return Value::real(neg ? -std::stod(s) : std::stod(s));
    std::int64_t v = std::stoll(s);
    return Value::integer(neg ? -v : v);
  }

  std::string quoted() {
    skip_ws();
    if (peek() != '"') fail("expected quoted string");
    advance();
    std::size_t start = pos;
    while (pos < text.size() && text[pos] != '"') advance();
    if (pos >= text.size()) fail("unterminated string");
    std::string s = text.substr(start, pos - start);
    advance();
    return s;
  }
};

/// Parses one expression starting at the lexer's position; leaves the lexer
/// on the first token that cannot extend the expression.
Expr parse_expr_stream(Lexer& lex, const DeclTable& decls);

}  // namespace safectrl::detail
