#pragma once

#include <string>
#include <vector>

#include "finfocal/common.hpp"
#include "finfocal/dual.hpp"

namespace finfocal {

// Tiny arithmetic expression language for scenario-supplied metric
// coefficients: +, -, *, /, ^, parentheses, sqrt/sin/cos/tan/exp/log,
// constants (pi), position variables x0..x3 and fiber variables y0..y3.
// Expressions evaluate at any scalar ring (double or nested duals), which is
// how fiber and base derivatives of the metric stay exact.
class Expr {
 public:
  Expr() = default;
  static Expr parse(const std::string& text);
  static Expr constant(double v);

  bool depends_on_x() const;
  bool depends_on_y() const;
  const std::string& text() const { return text_; }

  template <class T>
  T eval(const SVec<T>& x, const SVec<T>& y) const {
    return eval_node<T>(root_, x, y);
  }

 private:
  enum class Op {
    Const,
    VarX,
    VarY,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Exp,
    Log
  };
  struct Node {
    Op op;
    int a = -1, b = -1;  // child indices
    double value = 0.0;  // Const payload, or variable component index
  };

  template <class T>
  T eval_node(int idx, const SVec<T>& x, const SVec<T>& y) const {
    const Node& nd = nodes_[static_cast<size_t>(idx)];
    switch (nd.op) {
      case Op::Const:
        return T(nd.value);
      case Op::VarX:
        return x[static_cast<int>(nd.value)];
      case Op::VarY:
        return y[static_cast<int>(nd.value)];
      case Op::Add:
        return eval_node<T>(nd.a, x, y) + eval_node<T>(nd.b, x, y);
      case Op::Sub:
        return eval_node<T>(nd.a, x, y) - eval_node<T>(nd.b, x, y);
      case Op::Mul:
        return eval_node<T>(nd.a, x, y) * eval_node<T>(nd.b, x, y);
      case Op::Div:
        return eval_node<T>(nd.a, x, y) / eval_node<T>(nd.b, x, y);
      case Op::Neg:
        return -eval_node<T>(nd.a, x, y);
      case Op::Pow: {
        const Node& e = nodes_[static_cast<size_t>(nd.b)];
        if (e.op == Op::Const) return pow(eval_node<T>(nd.a, x, y), e.value);
        return pow(eval_node<T>(nd.a, x, y), eval_node<T>(nd.b, x, y));
      }
      case Op::Sqrt:
        return sqrt(eval_node<T>(nd.a, x, y));
      case Op::Sin:
        return sin(eval_node<T>(nd.a, x, y));
      case Op::Cos:
        return cos(eval_node<T>(nd.a, x, y));
      case Op::Tan:
        return tan(eval_node<T>(nd.a, x, y));
      case Op::Exp:
        return exp(eval_node<T>(nd.a, x, y));
      case Op::Log:
        return log(eval_node<T>(nd.a, x, y));
    }
    throw ConfigError("corrupt expression tree");
  }

  std::vector<Node> nodes_;
  int root_ = -1;
  std::string text_;

  friend class ExprParser;
};

}  // namespace finfocal
