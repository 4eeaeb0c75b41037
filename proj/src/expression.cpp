#include "specres/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>

namespace specres::family {

namespace {

const char* const kFuncs[] = {"sin", "cos", "exp", "sqrt", "abs"};
const char* const kConsts[] = {"pi", "e"};
const char* const kVars[] = {"s", "x", "y"};

template <std::size_t N>
bool is_in(const std::string& s, const char* const (&table)[N]) {
  for (const char* t : table)
    if (s == t) return true;
  return false;
}

class Parser {
public:
  explicit Parser(const std::string& text) : text_(text) {}

  // Fills `nodes` and returns the root index; the caller owns the
  // Expression being built (only the friend function can).
  int run(std::vector<ExprNode>& nodes) {
    skip_ws();
    if (at_end()) throw ParseError("empty expression", pos_);
    const int root = parse_expr(nodes);
    skip_ws();
    if (!at_end())
      throw ParseError(std::string("unexpected character '") + text_[pos_] + "'", pos_);
    return root;
  }

private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int add(std::vector<ExprNode>& nodes, ExprNode n) {
    nodes.push_back(std::move(n));
    return static_cast<int>(nodes.size() - 1);
  }

  int parse_expr(std::vector<ExprNode>& nodes) {
    int lhs = parse_term(nodes);
    while (true) {
      skip_ws();
      char c = peek();
      if (c != '+' && c != '-') return lhs;
      ++pos_;
      int rhs = parse_term(nodes);
      ExprNode n;
      n.kind = ExprNode::kBinary;
      n.op = c;
      n.a = lhs;
      n.b = rhs;
      lhs = add(nodes, n);
    }
  }

  int parse_term(std::vector<ExprNode>& nodes) {
    int lhs = parse_factor(nodes);
    while (true) {
      skip_ws();
      char c = peek();
      if (c != '*' && c != '/') return lhs;
      ++pos_;
      int rhs = parse_factor(nodes);
      ExprNode n;
      n.kind = ExprNode::kBinary;
      n.op = c;
      n.a = lhs;
      n.b = rhs;
      lhs = add(nodes, n);
    }
  }

  int parse_factor(std::vector<ExprNode>& nodes) {
    int base = parse_base(nodes);
    skip_ws();
    if (peek() == '^') {
      ++pos_;
      int exponent = parse_factor(nodes);  // right-associative
      ExprNode n;
      n.kind = ExprNode::kBinary;
      n.op = '^';
      n.a = base;
      n.b = exponent;
      return add(nodes, n);
    }
    return base;
  }

  int parse_base(std::vector<ExprNode>& nodes) {
    skip_ws();
    if (at_end()) throw ParseError("unexpected end of expression", pos_);
    char c = peek();
    if (c == '-') {
      ++pos_;
      int child = parse_base(nodes);
      ExprNode n;
      n.kind = ExprNode::kNegate;
      n.a = child;
      return add(nodes, n);
    }
    if (c == '(') {
      ++pos_;
      int inner = parse_expr(nodes);
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return parse_number(nodes);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parse_identifier(nodes);
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  int parse_number(std::vector<ExprNode>& nodes) {
    const std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (peek() == '.') {
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    // Exponent part only if 'e'/'E' is followed by a digit (with optional
    // sign); otherwise the letter belongs to whatever comes next.
    if (peek() == 'e' || peek() == 'E') {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      }
    }
    double value = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_)
      throw ParseError("malformed numeric literal", start);
    ExprNode n;
    n.kind = ExprNode::kNumber;
    n.number = value;
    return add(nodes, n);
  }

  int parse_identifier(std::vector<ExprNode>& nodes) {
    const std::size_t start = pos_;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') ++pos_;
    const std::string name = text_.substr(start, pos_ - start);
    if (is_in(name, kFuncs)) {
      if (!eat('(')) throw ParseError("expected '(' after function '" + name + "'", pos_);
      int arg = parse_expr(nodes);
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      ExprNode n;
      n.kind = ExprNode::kCall;
      n.name = name;
      n.a = arg;
      return add(nodes, n);
    }
    ExprNode n;
    if (is_in(name, kConsts)) {
      n.kind = ExprNode::kConstant;
    } else if (is_in(name, kVars)) {
      n.kind = ExprNode::kVariable;
    } else {
      throw ParseError("unknown identifier '" + name + "'", start);
    }
    n.name = name;
    return add(nodes, n);
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression parse_expression(const std::string& text) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text).run(e.nodes_);
  return e;
}

std::set<std::string> Expression::variables() const {
  std::set<std::string> vars;
  for (const ExprNode& n : nodes_)
    if (n.kind == ExprNode::kVariable) vars.insert(n.name);
  return vars;
}

namespace {

int precedence(const ExprNode& n) {
  switch (n.kind) {
    case ExprNode::kBinary:
      if (n.op == '+' || n.op == '-') return 1;
      if (n.op == '*' || n.op == '/') return 2;
      return 4;  // ^
    case ExprNode::kNegate:
      return 3;
    default:
      return 5;  // atoms and calls
  }
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void print_node(const Expression& e, int idx, std::string& out) {
  const ExprNode& n = e.nodes()[idx];
  auto child = [&](int c, bool parens) {
    if (parens) out += '(';
    print_node(e, c, out);
    if (parens) out += ')';
  };
  switch (n.kind) {
    case ExprNode::kNumber:
      out += format_number(n.number);
      break;
    case ExprNode::kConstant:
    case ExprNode::kVariable:
      out += n.name;
      break;
    case ExprNode::kNegate: {
      out += '-';
      // The operand of a printed unary minus must itself be a valid
      // `base`, so any binary child needs parentheses.
      child(n.a, e.nodes()[n.a].kind == ExprNode::kBinary);
      break;
    }
    case ExprNode::kCall:
      out += n.name;
      out += '(';
      print_node(e, n.a, out);
      out += ')';
      break;
    case ExprNode::kBinary: {
      const int p = precedence(n);
      const int pa = precedence(e.nodes()[n.a]);
      const int pb = precedence(e.nodes()[n.b]);
      if (n.op == '^') {
        // Right-associative, and a bare left operand must be a `base`.
        child(n.a, pa <= p);
        out += n.op;
        child(n.b, pb < p);
      } else {
        // Left-associative; an equal-precedence right child needs
        // parentheses to keep the tree shape on reparse.
        child(n.a, pa < p);
        out += n.op;
        child(n.b, pb <= p);
      }
      break;
    }
  }
}

}  // namespace

std::string to_string(const Expression& e) {
  if (e.root() < 0) return "";
  std::string out;
  print_node(e, e.root(), out);
  return out;
}

namespace {

bool nodes_equal(const Expression& x, int ix, const Expression& y, int iy) {
  const ExprNode& a = x.nodes()[ix];
  const ExprNode& b = y.nodes()[iy];
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprNode::kNumber:
      return a.number == b.number;
    case ExprNode::kConstant:
    case ExprNode::kVariable:
      return a.name == b.name;
    case ExprNode::kNegate:
      return nodes_equal(x, a.a, y, b.a);
    case ExprNode::kCall:
      return a.name == b.name && nodes_equal(x, a.a, y, b.a);
    case ExprNode::kBinary:
      return a.op == b.op && nodes_equal(x, a.a, y, b.a) && nodes_equal(x, a.b, y, b.b);
  }
  return false;
}

double eval_node(const Expression& e, int idx, const std::map<std::string, double>& env) {
  const ExprNode& n = e.nodes()[idx];
  switch (n.kind) {
    case ExprNode::kNumber:
      return n.number;
    case ExprNode::kConstant:
      return n.name == "pi" ? M_PI : M_E;
    case ExprNode::kVariable: {
      auto it = env.find(n.name);
      if (it == env.end()) throw EvalError("unbound variable '" + n.name + "'");
      return it->second;
    }
    case ExprNode::kNegate:
      return -eval_node(e, n.a, env);
    case ExprNode::kCall: {
      const double v = eval_node(e, n.a, env);
      if (n.name == "sin") return std::sin(v);
      if (n.name == "cos") return std::cos(v);
      if (n.name == "exp") {
        const double r = std::exp(v);
        if (!std::isfinite(r)) throw EvalError("exp overflow");
        return r;
      }
      if (n.name == "sqrt") {
        if (v < 0.0) throw EvalError("sqrt of negative value");
        return std::sqrt(v);
      }
      return std::abs(v);  // abs
    }
    case ExprNode::kBinary: {
      const double a = eval_node(e, n.a, env);
      const double b = eval_node(e, n.b, env);
      double r = 0.0;
      switch (n.op) {
        case '+':
          r = a + b;
          break;
        case '-':
          r = a - b;
          break;
        case '*':
          r = a * b;
          break;
        case '/':
          if (b == 0.0) throw EvalError("division by zero");
          r = a / b;
          break;
        case '^':
          r = std::pow(a, b);
          if (std::isnan(r))
            throw EvalError("pow domain error (negative base with fractional exponent?)");
          break;
      }
      if (!std::isfinite(r)) throw EvalError("non-finite value in evaluation");
      return r;
    }
  }
  throw EvalError("corrupt expression tree");
}

}  // namespace

bool structurally_equal(const Expression& a, const Expression& b) {
  if (a.root() < 0 || b.root() < 0) return a.root() == b.root();
  return nodes_equal(a, a.root(), b, b.root());
}

double evaluate(const Expression& e, const std::map<std::string, double>& env) {
  if (e.root() < 0) throw EvalError("empty expression");
  return eval_node(e, e.root(), env);
}

}  // namespace specres::family
