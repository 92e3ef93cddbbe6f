#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace properhyp {

enum class Var { t, x };

/// Raised by parse_expr; offset() is the byte position of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Raised when a formula evaluates to a non-finite value.
class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& formula, double t, double x);
  double t() const noexcept { return t_; }
  double x() const noexcept { return x_; }

 private:
  double t_;
  double x_;
};

/// Immutable expression tree over the variables t and x.
///
/// Nodes are shared, so copies are cheap and an Expr may be used from several
/// threads at once. Powers take a literal non-negative integer exponent, which
/// keeps differentiation closed over the grammar.
class Expr {
 public:
  enum class Kind { constant, variable, neg, sin, cos, exp, tanh, add, sub, mul, div, pow };

  struct Node;

  Expr();  // the constant 0
  explicit Expr(double value);

  static Expr constant(double value);
  static Expr variable(Var v);

  Kind kind() const;
  bool is_constant() const { return kind() == Kind::constant; }
  /// Value of a constant node; undefined for other kinds.
  double constant_value() const;

  double eval(double t, double x) const;
  bool depends_on(Var v) const;
  std::string to_string() const;
  std::size_t node_count() const;

  // Constant-folding constructors.
  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  static Expr pow(const Expr& base, int exponent);
  static Expr unary(Kind k, const Expr& arg);

  const Node& node() const { return *node_; }

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Expr make(Kind k, const Expr& lhs, const Expr& rhs, int exponent = 0);
  std::shared_ptr<const Node> node_;
};

struct Expr::Node {
  Kind kind = Kind::constant;
  double value = 0.0;
  Var var = Var::x;
  int exponent = 0;
  Expr lhs{std::shared_ptr<const Node>{}};
  Expr rhs{std::shared_ptr<const Node>{}};
};

Expr parse_expr(std::string_view src);

/// Evaluates e at (t, x); throws EvalError on a non-finite result.
double eval_expr(const Expr& e, double t, double x);

/// Exact symbolic derivative; only literal constants are folded.
Expr diff_expr(const Expr& e, Var var);

/// Repeated derivative, n >= 0.
Expr diff_expr(const Expr& e, Var var, int n);

}  // namespace properhyp
