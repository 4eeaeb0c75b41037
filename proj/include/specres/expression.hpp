#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "specres/types.hpp"

namespace specres::family {

// Tiny arithmetic expression language used for parameterized interface
// families and sweep rules.  The accepted grammar, verbatim:
//
//   expr   := term (("+" | "-") term)*
//   term   := factor (("*" | "/") factor)*
//   factor := base ("^" factor)?
//   base   := number | const | var | func "(" expr ")" | "(" expr ")" | "-" base
//   func   := "sin" | "cos" | "exp" | "sqrt" | "abs"
//   const  := "pi" | "e"
//   var    := "s" | "x" | "y"
//
// "^" is right-associative and, per this grammar, applies to a whole
// base: "-x^2" parses as (-x)^2 because the unary minus is consumed by
// `base` first.  Multiplication is never implicit.  Numeric literals are
// plain decimals with an optional exponent part (2, 1.5, 2.5e-3).

struct ExprNode {
  enum Kind { kNumber, kConstant, kVariable, kNegate, kBinary, kCall };
  Kind kind;
  double number = 0.0;  // kNumber
  char op = 0;          // kBinary: one of + - * / ^
  std::string name;     // kConstant / kVariable / kCall
  int a = -1, b = -1;   // children (a for kNegate/kCall, a+b for kBinary)
};

class Expression {
public:
  const std::vector<ExprNode>& nodes() const { return nodes_; }
  int root() const { return root_; }
  const std::string& text() const { return text_; }
  std::set<std::string> variables() const;

private:
  friend Expression parse_expression(const std::string&);
  std::vector<ExprNode> nodes_;
  int root_ = -1;
  std::string text_;  // original source, kept for reports
};

// Throws ParseError (with byte position) on any rejection: unknown
// identifier, unbalanced parentheses, trailing garbage, empty input.
Expression parse_expression(const std::string& text);

// Prints with the minimal parenthesization that reparses to a
// structurally identical tree.
std::string to_string(const Expression& e);

bool structurally_equal(const Expression& a, const Expression& b);

// Evaluates over the reals.  Unbound variables, division by zero,
// sqrt of a negative, pow domain errors and non-finite results all
// throw EvalError.
double evaluate(const Expression& e, const std::map<std::string, double>& env);

}  // namespace specres::family

namespace specres {
// The expression machinery serves more than interface families (sweep
// rules are expressions in s, reports print them back), so the core
// names are available one level up as well.
using family::evaluate;
using family::Expression;
using family::parse_expression;
using family::structurally_equal;
using family::to_string;
}  // namespace specres
