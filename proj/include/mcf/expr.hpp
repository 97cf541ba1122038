#pragma once

// Datum expression catalog: constants, linear combinations a.x, coordinate
// products, and sin/cos composites. Deliberately not a general interpreter;
// the grammar is
//   expr    := term (('+'|'-') term)*
//   term    := factor ('*' factor)*
//   factor  := ['-'] primary
//   primary := number | 'pi' | x<k> | sin(expr) | cos(expr) | (expr)
// with x1, x2, ... the chart coordinates.

#include <cctype>
#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcf/linalg.hpp"

namespace mcf {

class Expr {
 public:
  // Throws std::invalid_argument with a readable message on bad input.
  static Expr parse(const std::string& text) {
    Expr e;
    Parser p{text, 0, &e};
    const int root = p.expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("unexpected trailing input");
    e.root_ = root;
    return e;
  }

  double eval(const Vec& x) const { return eval_node(root_, x); }

  // Largest coordinate index used (1-based); 0 for constant expressions.
  int max_var() const { return max_var_; }

 private:
  enum class Op { constant, var, add, sub, mul, neg, sin, cos };
  struct Node {
    Op op;
    double value = 0.0;  // constant
    int var = 0;         // 0-based coordinate
    int a = -1, b = -1;  // children
  };

  std::vector<Node> nodes_;
  int root_ = -1;
  int max_var_ = 0;

  int add_node(Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }

  double eval_node(int id, const Vec& x) const {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::constant: return n.value;
      case Op::var: return x[n.var];
      case Op::add: return eval_node(n.a, x) + eval_node(n.b, x);
      case Op::sub: return eval_node(n.a, x) - eval_node(n.b, x);
      case Op::mul: return eval_node(n.a, x) * eval_node(n.b, x);
      case Op::neg: return -eval_node(n.a, x);
      case Op::sin: return std::sin(eval_node(n.a, x));
      case Op::cos: return std::cos(eval_node(n.a, x));
    }
    return 0.0;
  }

  struct Parser {
    const std::string& s;
    std::size_t pos;
    Expr* out;

    [[noreturn]] void fail(const std::string& why) const {
      throw std::invalid_argument("datum expression: " + why + " at position " + std::to_string(pos) +
                                  " in '" + s + "'");
    }
    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool take(char c) {
      skip_ws();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    bool take_word(const char* w) {
      skip_ws();
      const std::size_t len = std::strlen(w);
      if (s.compare(pos, len, w) == 0) {
        const char next = pos + len < s.size() ? s[pos + len] : '\0';
        if (!std::isalnum(static_cast<unsigned char>(next))) {
          pos += len;
          return true;
        }
      }
      return false;
    }

    int expr() {
      int lhs = term();
      while (true) {
        if (take('+')) {
          const int rhs = term();
          lhs = out->add_node({Op::add, 0, 0, lhs, rhs});
        } else if (take('-')) {
          const int rhs = term();
          lhs = out->add_node({Op::sub, 0, 0, lhs, rhs});
        } else {
          return lhs;
        }
      }
    }

    int term() {
      int lhs = factor();
      while (take('*')) {
        const int rhs = factor();
        lhs = out->add_node({Op::mul, 0, 0, lhs, rhs});
      }
      return lhs;
    }

    int factor() {
      if (take('-')) return out->add_node({Op::neg, 0, 0, factor(), -1});
      return primary();
    }

    int primary() {
      skip_ws();
      if (pos >= s.size()) fail("unexpected end of input");
      if (take_word("pi")) return out->add_node({Op::constant, std::numbers::pi, 0, -1, -1});
      if (take_word("sin")) return trig(Op::sin);
      if (take_word("cos")) return trig(Op::cos);
      const char c = s[pos];
      if (c == '(') {
        ++pos;
        const int e = expr();
        if (!take(')')) fail("missing ')'");
        return e;
      }
      if (c == 'x') {
        ++pos;
        std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos == start) fail("coordinate index expected after 'x'");
        const int k = std::stoi(s.substr(start, pos - start));
        if (k < 1) fail("coordinate indices are 1-based");
        out->max_var_ = std::max(out->max_var_, k);
        return out->add_node({Op::var, 0, k - 1, -1, -1});
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        char* end = nullptr;
        const double v = std::strtod(s.c_str() + pos, &end);
        if (end == s.c_str() + pos) fail("malformed number");
        pos = static_cast<std::size_t>(end - s.c_str());
        return out->add_node({Op::constant, v, 0, -1, -1});
      }
      fail("unexpected character");
    }

    int trig(Op op) {
      if (!take('(')) fail("expected '(' after function name");
      const int arg = expr();
      if (!take(')')) fail("missing ')'");
      return out->add_node({op, 0, 0, arg, -1});
    }
  };
};

}  // namespace mcf
