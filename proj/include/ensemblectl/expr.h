#pragma once

// Scalar functions of the ensemble parameter, written in a small arithmetic
// language. The only free variable is `b`; see docs/expressions.md for the
// grammar.

#include <memory>
#include <string>
#include <string_view>
#include <variant>

namespace ensemblectl {

enum class BinaryOp { kAdd, kSub, kMul, kDiv, kPow };
// Adding a function means extending this enum, the name table in expr.cc and
// the switch in evaluate().
enum class Function { kSin, kCos, kExp, kSqrt, kAbs };
enum class NamedConstant { kPi, kE };

struct ExprNode;

// Immutable expression tree. Copies share structure, so an Expr is cheap to
// pass by value and safe to evaluate from several threads at once.
class Expr {
 public:
  static Expr constant(double value);
  static Expr variable();
  static Expr named(NamedConstant which);
  static Expr negate(Expr operand);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
  static Expr call(Function fn, Expr arg);

  const ExprNode& node() const { return *node_; }

  // Structural equality. Constants compare by value.
  friend bool operator==(const Expr& a, const Expr& b);

 private:
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

  std::shared_ptr<const ExprNode> node_;
};

struct ConstantNode {
  double value;
};
struct VariableNode {};
struct NamedNode {
  NamedConstant which;
};
struct NegateNode {
  Expr operand;
};
struct BinaryNode {
  BinaryOp op;
  Expr lhs;
  Expr rhs;
};
struct CallNode {
  Function fn;
  Expr arg;
};

struct ExprNode {
  std::variant<ConstantNode, VariableNode, NamedNode, NegateNode, BinaryNode,
               CallNode>
      value;
};

// Throws SyntaxError (with byte offset) or UnknownIdentifierError.
Expr parse_expression(std::string_view text);

// Plain IEEE-754 evaluation; singular inputs give inf/nan.
double evaluate(const Expr& expr, double beta);

// Same as evaluate() but throws DomainError on a non-finite result. `what`
// names the quantity in the error message.
double evaluate_finite(const Expr& expr, double beta,
                       std::string_view what = "expression");

// Fully parenthesized canonical text; parse_expression(format(e)) == e.
std::string format(const Expr& expr);

std::string_view function_name(Function fn);

}  // namespace ensemblectl
