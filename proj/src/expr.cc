#include "ensemblectl/expr.h"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>

#include "ensemblectl/errors.h"

namespace ensemblectl {

namespace {

constexpr int kMaxDepth = 200;

struct FunctionEntry {
  std::string_view name;
  Function fn;
};

constexpr std::array<FunctionEntry, 5> kFunctions{{
    {"sin", Function::kSin},
    {"cos", Function::kCos},
    {"exp", Function::kExp},
    {"sqrt", Function::kSqrt},
    {"abs", Function::kAbs},
}};

std::optional<Function> lookup_function(std::string_view name) {
  for (const auto& entry : kFunctions) {
    if (entry.name == name) return entry.fn;
  }
  return std::nullopt;
}

bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool is_ident_char(char c) {
  return is_ident_start(c) || (c >= '0' && c <= '9');
}
bool is_digit(char c) { return c >= '0' && c <= '9'; }

enum class TokenKind {
  kEnd,
  kNumber,
  kIdent,
  kPlus,
  kMinus,
  kStar,
  kSlash,
  kCaret,
  kLParen,
  kRParen,
};

struct Token {
  TokenKind kind;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
};

std::string describe(const Token& t) {
  if (t.kind == TokenKind::kEnd) return "end of input";
  return "'" + std::string(t.text) + "'";
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
            text_[pos_] == '\r')) {
      ++pos_;
    }
    const std::size_t start = pos_;
    if (pos_ >= text_.size()) return {TokenKind::kEnd, start, {}};
    const char c = text_[pos_];
    auto single = [&](TokenKind kind) {
      ++pos_;
      return Token{kind, start, text_.substr(start, 1)};
    };
    switch (c) {
      case '+':
        return single(TokenKind::kPlus);
      case '-':
        return single(TokenKind::kMinus);
      case '*':
        return single(TokenKind::kStar);
      case '/':
        return single(TokenKind::kSlash);
      case '^':
        return single(TokenKind::kCaret);
      case '(':
        return single(TokenKind::kLParen);
      case ')':
        return single(TokenKind::kRParen);
      default:
        break;
    }
    if (is_digit(c) || c == '.') return lex_number(start);
    if (is_ident_start(c)) {
      while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
      return {TokenKind::kIdent, start, text_.substr(start, pos_ - start)};
    }
    throw SyntaxError(start, "unexpected character");
  }

 private:
  Token lex_number(std::size_t start) {
    std::size_t digits = 0;
    while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_, ++digits;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_, ++digits;
    }
    if (digits == 0) throw SyntaxError(start, "malformed number");
    // Exponent only when followed by digits, so that "2e" is the number 2
    // followed by the identifier e (and then rejected by the parser).
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) {
        ++look;
      }
      if (look < text_.size() && is_digit(text_[look])) {
        pos_ = look;
        while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
      }
    }
    const std::string_view lexeme = text_.substr(start, pos_ - start);
    double value = 0.0;
    const auto result =
        std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), value);
    if (result.ec != std::errc() || !std::isfinite(value)) {
      throw SyntaxError(start, "number literal out of range");
    }
    return {TokenKind::kNumber, start, lexeme, value};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// expr    := term (('+' | '-') term)*
// term    := unary (('*' | '/') unary)*
// unary   := '-' unary | power
// power   := primary ('^' unary)?
// primary := number | 'b' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { advance(); }

  Expr parse() {
    Expr result = parse_expr();
    if (current_.kind != TokenKind::kEnd) {
      throw SyntaxError(current_.offset,
                        "expected operator or end of input, found " +
                            describe(current_));
    }
    return result;
  }

 private:
  void advance() { current_ = lexer_.next(); }

  void enter() {
    if (++depth_ > kMaxDepth) {
      throw SyntaxError(current_.offset, "expression nested too deeply");
    }
  }

  Expr parse_expr() {
    enter();
    Expr lhs = parse_term();
    while (current_.kind == TokenKind::kPlus ||
           current_.kind == TokenKind::kMinus) {
      const BinaryOp op =
          current_.kind == TokenKind::kPlus ? BinaryOp::kAdd : BinaryOp::kSub;
      advance();
      lhs = Expr::binary(op, lhs, parse_term());
    }
    --depth_;
    return lhs;
  }

  Expr parse_term() {
    Expr lhs = parse_unary();
    while (current_.kind == TokenKind::kStar ||
           current_.kind == TokenKind::kSlash) {
      const BinaryOp op =
          current_.kind == TokenKind::kStar ? BinaryOp::kMul : BinaryOp::kDiv;
      advance();
      lhs = Expr::binary(op, lhs, parse_unary());
    }
    return lhs;
  }

  Expr parse_unary() {
    if (current_.kind == TokenKind::kMinus) {
      enter();
      advance();
      Expr operand = parse_unary();
      --depth_;
      return Expr::negate(operand);
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (current_.kind == TokenKind::kCaret) {
      enter();
      advance();
      // Right-associative: the exponent is itself a unary expression, which
      // may contain another '^'.
      Expr exponent = parse_unary();
      --depth_;
      return Expr::binary(BinaryOp::kPow, base, exponent);
    }
    return base;
  }

  Expr parse_primary() {
    const Token tok = current_;
    switch (tok.kind) {
      case TokenKind::kNumber:
        advance();
        return Expr::constant(tok.number);
      case TokenKind::kLParen: {
        advance();
        Expr inner = parse_expr();
        expect(TokenKind::kRParen, "')'");
        return inner;
      }
      case TokenKind::kIdent:
        return parse_identifier(tok);
      default:
        throw SyntaxError(tok.offset,
                          "expected number, identifier or '(', found " +
                              describe(tok));
    }
  }

  Expr parse_identifier(const Token& tok) {
    advance();
    if (tok.text == "b") return Expr::variable();
    if (tok.text == "pi") return Expr::named(NamedConstant::kPi);
    if (tok.text == "e") return Expr::named(NamedConstant::kE);
    if (const auto fn = lookup_function(tok.text)) {
      enter();
      expect(TokenKind::kLParen, "'(' after function name");
      Expr arg = parse_expr();
      expect(TokenKind::kRParen, "')'");
      --depth_;
      return Expr::call(*fn, arg);
    }
    throw UnknownIdentifierError(tok.offset, std::string(tok.text));
  }

  void expect(TokenKind kind, const char* what) {
    if (current_.kind != kind) {
      throw SyntaxError(current_.offset, std::string("expected ") + what +
                                             ", found " + describe(current_));
    }
    advance();
  }

  Lexer lexer_;
  Token current_{};
  int depth_ = 0;
};

char op_symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::kAdd:
      return '+';
    case BinaryOp::kSub:
      return '-';
    case BinaryOp::kMul:
      return '*';
    case BinaryOp::kDiv:
      return '/';
    case BinaryOp::kPow:
      return '^';
  }
  return '?';
}

void format_into(const Expr& expr, std::string& out) {
  std::visit(
      [&out](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ConstantNode>) {
          std::array<char, 64> buf{};
          const auto res =
              std::to_chars(buf.data(), buf.data() + buf.size(), n.value);
          out.append(buf.data(), res.ptr);
        } else if constexpr (std::is_same_v<T, VariableNode>) {
          out += 'b';
        } else if constexpr (std::is_same_v<T, NamedNode>) {
          out += n.which == NamedConstant::kPi ? "pi" : "e";
        } else if constexpr (std::is_same_v<T, NegateNode>) {
          out += "(-";
          format_into(n.operand, out);
          out += ')';
        } else if constexpr (std::is_same_v<T, BinaryNode>) {
          out += '(';
          format_into(n.lhs, out);
          out += ' ';
          out += op_symbol(n.op);
          out += ' ';
          format_into(n.rhs, out);
          out += ')';
        } else {
          out += function_name(n.fn);
          out += '(';
          format_into(n.arg, out);
          out += ')';
        }
      },
      expr.node().value);
}

}  // namespace

Expr Expr::constant(double value) {
  // Literals are unsigned in the grammar; a sign is always a negate node.
  if (!std::isfinite(value) || std::signbit(value)) {
    throw DomainError("expression constants must be finite and non-negative");
  }
  return Expr(std::make_shared<const ExprNode>(ExprNode{ConstantNode{value}}));
}
Expr Expr::variable() {
  return Expr(std::make_shared<const ExprNode>(ExprNode{VariableNode{}}));
}
Expr Expr::named(NamedConstant which) {
  return Expr(std::make_shared<const ExprNode>(ExprNode{NamedNode{which}}));
}
Expr Expr::negate(Expr operand) {
  return Expr(std::make_shared<const ExprNode>(
      ExprNode{NegateNode{std::move(operand)}}));
}
Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  return Expr(std::make_shared<const ExprNode>(
      ExprNode{BinaryNode{op, std::move(lhs), std::move(rhs)}}));
}
Expr Expr::call(Function fn, Expr arg) {
  return Expr(
      std::make_shared<const ExprNode>(ExprNode{CallNode{fn, std::move(arg)}}));
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  const auto& va = a.node().value;
  const auto& vb = b.node().value;
  if (va.index() != vb.index()) return false;
  return std::visit(
      [&vb](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(vb);
        if constexpr (std::is_same_v<T, ConstantNode>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, VariableNode>) {
          return true;
        } else if constexpr (std::is_same_v<T, NamedNode>) {
          return x.which == y.which;
        } else if constexpr (std::is_same_v<T, NegateNode>) {
          return x.operand == y.operand;
        } else if constexpr (std::is_same_v<T, BinaryNode>) {
          return x.op == y.op && x.lhs == y.lhs && x.rhs == y.rhs;
        } else {
          return x.fn == y.fn && x.arg == y.arg;
        }
      },
      va);
}

Expr parse_expression(std::string_view text) {
  return Parser(text).parse();
}

double evaluate(const Expr& expr, double beta) {
  return std::visit(
      [beta](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ConstantNode>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, VariableNode>) {
          return beta;
        } else if constexpr (std::is_same_v<T, NamedNode>) {
          return n.which == NamedConstant::kPi ? std::numbers::pi
                                               : std::numbers::e;
        } else if constexpr (std::is_same_v<T, NegateNode>) {
          return -evaluate(n.operand, beta);
        } else if constexpr (std::is_same_v<T, BinaryNode>) {
          const double l = evaluate(n.lhs, beta);
          const double r = evaluate(n.rhs, beta);
          switch (n.op) {
            case BinaryOp::kAdd:
              return l + r;
            case BinaryOp::kSub:
              return l - r;
            case BinaryOp::kMul:
              return l * r;
            case BinaryOp::kDiv:
              return l / r;
            case BinaryOp::kPow:
              // Negative base with a non-integer exponent yields NaN.
              return std::pow(l, r);
          }
          return std::nan("");
        } else {
          const double x = evaluate(n.arg, beta);
          switch (n.fn) {
            case Function::kSin:
              return std::sin(x);
            case Function::kCos:
              return std::cos(x);
            case Function::kExp:
              return std::exp(x);
            case Function::kSqrt:
              return std::sqrt(x);
            case Function::kAbs:
              return std::abs(x);
          }
          return std::nan("");
        }
      },
      expr.node().value);
}

double evaluate_finite(const Expr& expr, double beta, std::string_view what) {
  const double value = evaluate(expr, beta);
  if (!std::isfinite(value)) {
    throw DomainError(std::string(what) + " '" + format(expr) +
                      "' is not finite at b = " + std::to_string(beta));
  }
  return value;
}

std::string format(const Expr& expr) {
  std::string out;
  format_into(expr, out);
  return out;
}

std::string_view function_name(Function fn) {
  for (const auto& entry : kFunctions) {
    if (entry.fn == fn) return entry.name;
  }
  return "?";
}

}  // namespace ensemblectl
