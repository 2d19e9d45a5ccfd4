#include "finfocal/expr.hpp"

#include <cctype>
#include <cmath>

namespace finfocal {

namespace {

struct Token {
  enum Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End } kind;
  double number = 0.0;
  std::string ident;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t end = 0;
      double v = std::stod(s.substr(i), &end);
      out.push_back({Token::Number, v, {}});
      i += end;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_'))
        ++j;
      Token t;
      t.kind = Token::Ident;
      t.ident = s.substr(i, j - i);
      out.push_back(t);
      i = j;
      continue;
    }
    Token t;
    switch (c) {
      case '+': t.kind = Token::Plus; break;
      case '-': t.kind = Token::Minus; break;
      case '*': t.kind = Token::Star; break;
      case '/': t.kind = Token::Slash; break;
      case '^': t.kind = Token::Caret; break;
      case '(': t.kind = Token::LParen; break;
      case ')': t.kind = Token::RParen; break;
      default:
        throw ConfigError("unexpected character '" + std::string(1, c) +
                          "' in expression: " + s);
    }
    out.push_back(t);
    ++i;
  }
  out.push_back({Token::End, 0.0, {}});
  return out;
}

}  // namespace

class ExprParser {
 public:
  ExprParser(const std::string& text, Expr* out)
      : tokens_(tokenize(text)), out_(out) {
    out_->text_ = text;
  }

  void run() {
    out_->root_ = parse_sum();
    if (cur().kind != Token::End)
      throw ConfigError("trailing input in expression: " + out_->text_);
  }

 private:
  using Op = Expr::Op;

  const Token& cur() const { return tokens_[pos_]; }
  void advance() { ++pos_; }

  int add(Expr::Node n) {
    out_->nodes_.push_back(n);
    return static_cast<int>(out_->nodes_.size()) - 1;
  }

  int parse_sum() {
    int lhs;
    if (cur().kind == Token::Minus) {
      advance();
      lhs = add({Op::Neg, parse_term(), -1, 0.0});
    } else {
      lhs = parse_term();
    }
    for (;;) {
      if (cur().kind == Token::Plus) {
        advance();
        lhs = add({Op::Add, lhs, parse_term(), 0.0});
      } else if (cur().kind == Token::Minus) {
        advance();
        lhs = add({Op::Sub, lhs, parse_term(), 0.0});
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_factor();
    for (;;) {
      if (cur().kind == Token::Star) {
        advance();
        lhs = add({Op::Mul, lhs, parse_factor(), 0.0});
      } else if (cur().kind == Token::Slash) {
        advance();
        lhs = add({Op::Div, lhs, parse_factor(), 0.0});
      } else {
        return lhs;
      }
    }
  }

  int parse_factor() {
    int base = parse_unary();
    if (cur().kind == Token::Caret) {
      advance();
      int expo = parse_factor();  // right-associative
      return add({Op::Pow, base, expo, 0.0});
    }
    return base;
  }

  int parse_unary() {
    if (cur().kind == Token::Minus) {
      advance();
      return add({Op::Neg, parse_unary(), -1, 0.0});
    }
    return parse_primary();
  }

  int parse_primary() {
    const Token& t = cur();
    if (t.kind == Token::Number) {
      advance();
      return add({Op::Const, -1, -1, t.number});
    }
    if (t.kind == Token::LParen) {
      advance();
      int e = parse_sum();
      expect(Token::RParen);
      return e;
    }
    if (t.kind == Token::Ident) {
      std::string id = t.ident;
      advance();
      if (id == "pi") return add({Op::Const, -1, -1, M_PI});
      if (id.size() == 2 && (id[0] == 'x' || id[0] == 'y') && std::isdigit(id[1])) {
        int comp = id[1] - '0';
        if (comp >= kMaxDim) throw ConfigError("variable index out of range: " + id);
        return add({id[0] == 'x' ? Op::VarX : Op::VarY, -1, -1,
                    static_cast<double>(comp)});
      }
      Op fn;
      if (id == "sqrt") fn = Op::Sqrt;
      else if (id == "sin") fn = Op::Sin;
      else if (id == "cos") fn = Op::Cos;
      else if (id == "tan") fn = Op::Tan;
      else if (id == "exp") fn = Op::Exp;
      else if (id == "log") fn = Op::Log;
      else throw ConfigError("unknown identifier in expression: " + id);
      expect(Token::LParen);
      int arg = parse_sum();
      expect(Token::RParen);
      return add({fn, arg, -1, 0.0});
    }
    throw ConfigError("malformed expression: " + out_->text_);
  }

  void expect(Token::Kind k) {
    if (cur().kind != k) throw ConfigError("malformed expression: " + out_->text_);
    advance();
  }

  std::vector<Token> tokens_;
  size_t pos_ = 0;
  Expr* out_;
};

Expr Expr::parse(const std::string& text) {
  Expr e;
  ExprParser(text, &e).run();
  return e;
}

Expr Expr::constant(double v) {
  Expr e;
  e.text_ = format_g17(v);
  e.nodes_.push_back({Op::Const, -1, -1, v});
  e.root_ = 0;
  return e;
}

bool Expr::depends_on_x() const {
  for (const Node& n : nodes_)
    if (n.op == Op::VarX) return true;
  return false;
}

bool Expr::depends_on_y() const {
  for (const Node& n : nodes_)
    if (n.op == Op::VarY) return true;
  return false;
}

}  // namespace finfocal
