#pragma once

// Tiny infix grammar for user-supplied callables:
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | '+' unary | power
//   power  := atom ('^' unary)?            (right associative)
//   atom   := number | name | name '(' expr ')' | '(' expr ')'
// Names: x1..xn, t, tau1..taud, s, pi, e.
// Functions (one argument): sin cos tan exp log sqrt tanh abs.

#include "slowcert/core.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace slowcert {

class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t pos) : ConfigError(what + " at column " + std::to_string(pos + 1)), pos_(pos) {}
  std::size_t position() const noexcept { return pos_; }

 private:
  std::size_t pos_;
};

/// Which variables an expression may reference.
struct ExpressionScope {
  std::size_t state_dim = 0;
  std::size_t param_dim = 0;
  bool allow_t = true;
  bool allow_s = false;
};

struct ExprArgs {
  const Vec* x = nullptr;
  double t = 0.0;
  const Vec* tau = nullptr;
  double s = 0.0;
};

namespace detail {

struct ExprNode {
  enum class Op { Const, X, T, Tau, S, Neg, Add, Sub, Mul, Div, Pow, Call };
  enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Tanh, Abs };
  Op op = Op::Const;
  Fn fn = Fn::Sin;
  double value = 0.0;
  std::size_t index = 0;
  std::unique_ptr<ExprNode> a, b;

  double eval(const ExprArgs& v) const {
    switch (op) {
      case Op::Const: return value;
      case Op::X: return (*v.x)[static_cast<Eigen::Index>(index)];
      case Op::T: return v.t;
      case Op::Tau: return (*v.tau)[static_cast<Eigen::Index>(index)];
      case Op::S: return v.s;
      case Op::Neg: return -a->eval(v);
      case Op::Add: return a->eval(v) + b->eval(v);
      case Op::Sub: return a->eval(v) - b->eval(v);
      case Op::Mul: return a->eval(v) * b->eval(v);
      case Op::Div: return a->eval(v) / b->eval(v);
      case Op::Pow: {
        const double base = a->eval(v);
        const double ex = b->eval(v);
        if (ex == 2.0) return base * base;
        return std::pow(base, ex);
      }
      case Op::Call: {
        const double u = a->eval(v);
        switch (fn) {
          case Fn::Sin: return std::sin(u);
          case Fn::Cos: return std::cos(u);
          case Fn::Tan: return std::tan(u);
          case Fn::Exp: return std::exp(u);
          case Fn::Log: return std::log(u);
          case Fn::Sqrt: return std::sqrt(u);
          case Fn::Tanh: return std::tanh(u);
          case Fn::Abs: return std::abs(u);
        }
      }
    }
    return 0.0;
  }
};

class ExprParser {
 public:
  ExprParser(const std::string& text, const ExpressionScope& scope) : s_(text), scope_(scope) {}

  std::unique_ptr<ExprNode> parse() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
    auto node = expr();
    skip();
    if (pos_ < s_.size()) throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
    return node;
  }

 private:
  using Node = std::unique_ptr<ExprNode>;

  static Node make(ExprNode::Op op, Node a = nullptr, Node b = nullptr) {
    auto n = std::make_unique<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Node expr() {
    Node lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(ExprNode::Op::Add, std::move(lhs), term());
      else if (accept('-')) lhs = make(ExprNode::Op::Sub, std::move(lhs), term());
      else return lhs;
    }
  }

  Node term() {
    Node lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(ExprNode::Op::Mul, std::move(lhs), unary());
      else if (accept('/')) lhs = make(ExprNode::Op::Div, std::move(lhs), unary());
      else return lhs;
    }
  }

  Node unary() {
    if (accept('-')) return make(ExprNode::Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  Node power() {
    Node base = atom();
    if (accept('^')) return make(ExprNode::Op::Pow, std::move(base), unary());
    return base;
  }

  Node atom() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Node inner = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  Node number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = make(ExprNode::Op::Const);
    n->value = v;
    return n;
  }

  static bool lookup_fn(const std::string& id, ExprNode::Fn& fn) {
    static const std::pair<const char*, ExprNode::Fn> table[] = {
        {"sin", ExprNode::Fn::Sin},   {"cos", ExprNode::Fn::Cos},   {"tan", ExprNode::Fn::Tan},
        {"exp", ExprNode::Fn::Exp},   {"log", ExprNode::Fn::Log},   {"sqrt", ExprNode::Fn::Sqrt},
        {"tanh", ExprNode::Fn::Tanh}, {"abs", ExprNode::Fn::Abs}};
    for (const auto& [k, f] : table)
      if (id == k) {
        fn = f;
        return true;
      }
    return false;
  }

  // 1-based suffix after a prefix such as "x" or "tau"; 0 when absent or malformed
  static std::size_t indexed(const std::string& id, const std::string& prefix) {
    if (id.size() <= prefix.size() || id.compare(0, prefix.size(), prefix) != 0) return 0;
    std::size_t v = 0;
    for (std::size_t i = prefix.size(); i < id.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(id[i]))) return 0;
      v = v * 10 + static_cast<std::size_t>(id[i] - '0');
      if (v > 1'000'000) return 0;
    }
    return v;
  }

  Node name() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string id = s_.substr(start, pos_ - start);

    ExprNode::Fn fn;
    if (lookup_fn(id, fn)) {
      if (!accept('(')) throw ParseError("function '" + id + "' expects one parenthesised argument", pos_);
      Node arg = expr();
      if (accept(','))
        throw ParseError("function '" + id + "' takes exactly 1 argument", pos_ - 1);
      if (!accept(')')) throw ParseError("expected ')' after argument of '" + id + "'", pos_);
      auto n = make(ExprNode::Op::Call, std::move(arg));
      n->fn = fn;
      return n;
    }
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') throw ParseError("unknown function '" + id + "'", start);

    if (id == "pi" || id == "e") {
      auto n = make(ExprNode::Op::Const);
      n->value = id == "pi" ? std::numbers::pi : std::numbers::e;
      return n;
    }
    if (id == "t") {
      if (!scope_.allow_t) throw ParseError("'t' is not available here", start);
      return make(ExprNode::Op::T);
    }
    if (id == "s") {
      if (!scope_.allow_s) throw ParseError("'s' is not available here", start);
      return make(ExprNode::Op::S);
    }
    if (const std::size_t k = indexed(id, "tau"); k > 0) {
      if (k > scope_.param_dim)
        throw ParseError("'" + id + "' exceeds parameter dimension " + std::to_string(scope_.param_dim), start);
      auto n = make(ExprNode::Op::Tau);
      n->index = k - 1;
      return n;
    }
    if (const std::size_t k = indexed(id, "x"); k > 0) {
      if (k > scope_.state_dim)
        throw ParseError("'" + id + "' exceeds state dimension " + std::to_string(scope_.state_dim), start);
      auto n = make(ExprNode::Op::X);
      n->index = k - 1;
      return n;
    }
    throw ParseError("unknown identifier '" + id + "'", start);
  }

  const std::string& s_;
  ExpressionScope scope_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parsed expression; cheap to copy (shared tree).
class Expression {
 public:
  Expression() = default;
  Expression(std::shared_ptr<const detail::ExprNode> root, std::string text)
      : root_(std::move(root)), text_(std::move(text)) {}

  double operator()(const ExprArgs& a) const { return root_->eval(a); }
  double operator()(const Vec& x, double t, const Vec& tau) const { return root_->eval({&x, t, &tau, 0.0}); }
  double of_s(double s) const { return root_->eval({nullptr, 0.0, nullptr, s}); }
  const std::string& text() const { return text_; }

 private:
  std::shared_ptr<const detail::ExprNode> root_;
  std::string text_;
};

inline Expression parse_expression(const std::string& text, const ExpressionScope& scope = {8, 8, true, false}) {
  detail::ExprParser p(text, scope);
  return Expression(std::shared_ptr<const detail::ExprNode>(p.parse()), text);
}

}  // namespace slowcert
