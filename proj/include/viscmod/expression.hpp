#pragma once

// Tiny arithmetic expression grammar used for drift fields b(x) and
// first-order terms g(p) supplied through the run configuration.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('-' | '+') unary | power
//   power  := atom ('^' unary)?
//   atom   := number | name | name '(' expr ')' | '(' expr ')'
//
// Names: x, y (aliases x1, x2), p1, p2 (aliases px, py), pi, e.
// Functions: sin, cos, tan, exp, log, sqrt, abs, tanh.

#include "viscmod/common.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace viscmod {

class Expression {
 public:
  Expression() : Expression("0") {}
  explicit Expression(std::string source) : source_(std::move(source)) {
    Parser p{source_, 0, nodes_};
    root_ = p.parse_expr();
    p.skip_ws();
    if (p.pos != source_.size()) p.fail("unexpected trailing input");
  }

  const std::string& source() const { return source_; }

  /// Evaluate with coordinates x and gradient p (either may be empty).
  double eval(std::span<const double> x, std::span<const double> p) const {
    return eval_node(root_, x, p);
  }

  /// True if the expression reads only constants.
  bool is_constant() const {
    for (const auto& n : nodes_)
      if (n.kind == Kind::Var) return false;
    return true;
  }

  /// Largest coordinate (x) and gradient (p) index referenced, or -1.
  int max_x_index() const { return max_var(VarX); }
  int max_p_index() const { return max_var(VarP); }

 private:
  enum class Kind { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
  enum Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Tanh };
  static constexpr int VarX = 0;
  static constexpr int VarP = 1;

  struct Node {
    Kind kind;
    double value = 0.0;
    int var_space = 0;
    int var_index = 0;
    int fn = 0;
    int lhs = -1;
    int rhs = -1;
  };

  struct Parser {
    std::string_view src;
    std::size_t pos;
    std::vector<Node>& nodes;

    [[noreturn]] void fail(const std::string& msg) const {
      throw ConfigError("expression '" + std::string(src) + "': " + msg + " at offset " +
                        std::to_string(pos));
    }
    void skip_ws() {
      while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    bool accept(char c) {
      skip_ws();
      if (pos < src.size() && src[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    int push(Node n) {
      nodes.push_back(n);
      return int(nodes.size()) - 1;
    }
    int binary(Kind k, int l, int r) { return push(Node{k, 0.0, 0, 0, 0, l, r}); }

    int parse_expr() {
      int l = parse_term();
      for (;;) {
        if (accept('+')) l = binary(Kind::Add, l, parse_term());
        else if (accept('-')) l = binary(Kind::Sub, l, parse_term());
        else return l;
      }
    }
    int parse_term() {
      int l = parse_unary();
      for (;;) {
        if (accept('*')) l = binary(Kind::Mul, l, parse_unary());
        else if (accept('/')) l = binary(Kind::Div, l, parse_unary());
        else return l;
      }
    }
    int parse_unary() {
      if (accept('-')) return push(Node{Kind::Neg, 0.0, 0, 0, 0, parse_unary(), -1});
      if (accept('+')) return parse_unary();
      return parse_power();
    }
    int parse_power() {
      int base = parse_atom();
      if (accept('^')) return binary(Kind::Pow, base, parse_unary());
      return base;
    }
    int parse_atom() {
      skip_ws();
      if (pos >= src.size()) fail("unexpected end of input");
      char c = src[pos];
      if (accept('(')) {
        int e = parse_expr();
        if (!accept(')')) fail("expected ')'");
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t start = pos;
        while (pos < src.size() &&
               (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.'))
          ++pos;
        if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
          std::size_t save = pos++;
          if (pos < src.size() && (src[pos] == '+' || src[pos] == '-')) ++pos;
          if (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) {
            while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
          } else {
            pos = save;
          }
        }
        std::string text(src.substr(start, pos - start));
        char* end = nullptr;
        double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size()) fail("malformed number '" + text + "'");
        return push(Node{Kind::Num, v});
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t start = pos;
        while (pos < src.size() && std::isalnum(static_cast<unsigned char>(src[pos]))) ++pos;
        std::string name(src.substr(start, pos - start));
        skip_ws();
        if (pos < src.size() && src[pos] == '(') {
          int fn = function_id(name);
          accept('(');
          int arg = parse_expr();
          if (!accept(')')) fail("expected ')' after function argument");
          return push(Node{Kind::Call, 0.0, 0, 0, fn, arg, -1});
        }
        return variable(name);
      }
      fail(std::string("unexpected character '") + c + "'");
    }
    int function_id(const std::string& name) {
      static const char* names[] = {"sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh"};
      for (int i = 0; i < 8; ++i)
        if (name == names[i]) return i;
      fail("unknown function '" + name + "'");
    }
    int variable(const std::string& name) {
      if (name == "pi") return push(Node{Kind::Num, M_PI});
      if (name == "e") return push(Node{Kind::Num, M_E});
      if (name == "x" || name == "x1") return push(Node{Kind::Var, 0.0, VarX, 0});
      if (name == "y" || name == "x2") return push(Node{Kind::Var, 0.0, VarX, 1});
      if (name == "p1" || name == "px") return push(Node{Kind::Var, 0.0, VarP, 0});
      if (name == "p2" || name == "py") return push(Node{Kind::Var, 0.0, VarP, 1});
      fail("unknown name '" + name + "'");
    }
  };

  double eval_node(int id, std::span<const double> x, std::span<const double> p) const {
    const Node& n = nodes_[std::size_t(id)];
    switch (n.kind) {
      case Kind::Num: return n.value;
      case Kind::Var: {
        auto space = n.var_space == VarX ? x : p;
        if (std::size_t(n.var_index) >= space.size())
          throw DimensionMismatch("expression '" + source_ + "' reads a component beyond the dimension");
        return space[std::size_t(n.var_index)];
      }
      case Kind::Neg: return -eval_node(n.lhs, x, p);
      case Kind::Add: return eval_node(n.lhs, x, p) + eval_node(n.rhs, x, p);
      case Kind::Sub: return eval_node(n.lhs, x, p) - eval_node(n.rhs, x, p);
      case Kind::Mul: return eval_node(n.lhs, x, p) * eval_node(n.rhs, x, p);
      case Kind::Div: return eval_node(n.lhs, x, p) / eval_node(n.rhs, x, p);
      case Kind::Pow: return std::pow(eval_node(n.lhs, x, p), eval_node(n.rhs, x, p));
      case Kind::Call: {
        double a = eval_node(n.lhs, x, p);
        switch (n.fn) {
          case Sin: return std::sin(a);
          case Cos: return std::cos(a);
          case Tan: return std::tan(a);
          case Exp: return std::exp(a);
          case Log: return std::log(a);
          case Sqrt: return std::sqrt(a);
          case Abs: return std::abs(a);
          default: return std::tanh(a);
        }
      }
    }
    return 0.0;
  }

  int max_var(int space) const {
    int m = -1;
    for (const auto& n : nodes_)
      if (n.kind == Kind::Var && n.var_space == space) m = std::max(m, n.var_index);
    return m;
  }

  std::string source_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Vector field given as ';'-separated component expressions.
inline std::vector<Expression> parse_vector_expression(const std::string& text) {
  std::vector<Expression> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t semi = text.find(';', start);
    out.emplace_back(text.substr(start, semi == std::string::npos ? std::string::npos : semi - start));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return out;
}

}  // namespace viscmod
