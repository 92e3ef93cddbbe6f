#include "properhyp/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace properhyp {

namespace {

using Kind = Expr::Kind;

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

}  // namespace

EvalError::EvalError(const std::string& formula, double t, double x)
    : std::runtime_error("non-finite value of '" + formula + "' at (t=" + format_number(t) +
                         ", x=" + format_number(x) + ")"),
      t_(t),
      x_(x) {}

Expr::Expr() : Expr(0.0) {}

Expr::Expr(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::constant;
  n->value = value;
  node_ = std::move(n);
}

Expr Expr::constant(double value) { return Expr(value); }

Expr Expr::variable(Var v) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::variable;
  n->var = v;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr::Kind Expr::kind() const { return node_->kind; }

double Expr::constant_value() const { return node_->value; }

namespace {

double apply_unary(Kind k, double v) {
  switch (k) {
    case Kind::neg: return -v;
    case Kind::sin: return std::sin(v);
    case Kind::cos: return std::cos(v);
    case Kind::exp: return std::exp(v);
    case Kind::tanh: return std::tanh(v);
    default: return v;
  }
}

double ipow(double base, int n) {
  double result = 1.0;
  double b = base;
  unsigned e = static_cast<unsigned>(n);
  while (e != 0) {
    if (e & 1U) result *= b;
    b *= b;
    e >>= 1U;
  }
  return result;
}

}  // namespace

double Expr::eval(double t, double x) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::constant: return n.value;
    case Kind::variable: return n.var == Var::t ? t : x;
    case Kind::neg:
    case Kind::sin:
    case Kind::cos:
    case Kind::exp:
    case Kind::tanh: return apply_unary(n.kind, n.lhs.eval(t, x));
    case Kind::add: return n.lhs.eval(t, x) + n.rhs.eval(t, x);
    case Kind::sub: return n.lhs.eval(t, x) - n.rhs.eval(t, x);
    case Kind::mul: return n.lhs.eval(t, x) * n.rhs.eval(t, x);
    case Kind::div: return n.lhs.eval(t, x) / n.rhs.eval(t, x);
    case Kind::pow: return ipow(n.lhs.eval(t, x), n.exponent);
  }
  return 0.0;
}

bool Expr::depends_on(Var v) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::constant: return false;
    case Kind::variable: return n.var == v;
    case Kind::add:
    case Kind::sub:
    case Kind::mul:
    case Kind::div: return n.lhs.depends_on(v) || n.rhs.depends_on(v);
    default: return n.lhs.depends_on(v);
  }
}

std::size_t Expr::node_count() const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::constant:
    case Kind::variable: return 1;
    case Kind::add:
    case Kind::sub:
    case Kind::mul:
    case Kind::div: return 1 + n.lhs.node_count() + n.rhs.node_count();
    default: return 1 + n.lhs.node_count();
  }
}

namespace {

// Binding strength used by the printer: 1 additive, 2 multiplicative,
// 3 unary minus, 4 power, 5 atom.
int precedence(const Expr& e) {
  switch (e.kind()) {
    case Kind::add:
    case Kind::sub: return 1;
    case Kind::mul:
    case Kind::div: return 2;
    case Kind::neg: return 3;
    case Kind::pow: return 4;
    case Kind::constant: return e.constant_value() < 0 || std::signbit(e.constant_value()) ? 3 : 5;
    default: return 5;
  }
}

void print(const Expr& e, std::ostream& os);

void print_at(const Expr& e, int min_prec, std::ostream& os) {
  if (precedence(e) < min_prec) {
    os << '(';
    print(e, os);
    os << ')';
  } else {
    print(e, os);
  }
}

const char* function_name(Kind k) {
  switch (k) {
    case Kind::sin: return "sin";
    case Kind::cos: return "cos";
    case Kind::exp: return "exp";
    case Kind::tanh: return "tanh";
    default: return "?";
  }
}

void print(const Expr& e, std::ostream& os) {
  const auto& n = e.node();
  switch (n.kind) {
    case Kind::constant: os << format_number(n.value); break;
    case Kind::variable: os << (n.var == Var::t ? 't' : 'x'); break;
    case Kind::neg:
      os << '-';
      print_at(n.lhs, 3, os);
      break;
    case Kind::sin:
    case Kind::cos:
    case Kind::exp:
    case Kind::tanh:
      os << function_name(n.kind) << '(';
      print(n.lhs, os);
      os << ')';
      break;
    case Kind::add:
    case Kind::sub:
      print_at(n.lhs, 1, os);
      os << (n.kind == Kind::add ? " + " : " - ");
      print_at(n.rhs, 2, os);
      break;
    case Kind::mul:
    case Kind::div:
      print_at(n.lhs, 2, os);
      os << (n.kind == Kind::mul ? '*' : '/');
      print_at(n.rhs, 3, os);
      break;
    case Kind::pow:
      print_at(n.lhs, 5, os);
      os << '^' << n.exponent;
      break;
  }
}

bool is_const(const Expr& e, double v) { return e.is_constant() && e.constant_value() == v; }

}  // namespace

std::string Expr::to_string() const {
  std::ostringstream os;
  print(*this, os);
  return os.str();
}

Expr Expr::make(Kind k, const Expr& lhs, const Expr& rhs, int exponent) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->lhs = lhs;
  n->rhs = rhs;
  n->exponent = exponent;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() + b.constant_value());
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return Expr::make(Kind::add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() - b.constant_value());
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return -b;
  return Expr::make(Kind::sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() * b.constant_value());
  if (is_const(a, 0.0) || is_const(b, 0.0)) return Expr(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return Expr::make(Kind::mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) return Expr(a.constant_value() / b.constant_value());
  if (is_const(b, 1.0)) return a;
  if (is_const(a, 0.0)) return Expr(0.0);
  return Expr::make(Kind::div, a, b);
}

Expr operator-(const Expr& a) {
  if (a.is_constant()) return Expr(-a.constant_value());
  if (a.kind() == Kind::neg) return a.node().lhs;
  return Expr::make(Kind::neg, a, Expr());
}

Expr Expr::pow(const Expr& base, int exponent) {
  if (exponent < 0) throw std::invalid_argument("Expr::pow: negative exponent");
  if (exponent == 0) return Expr(1.0);
  if (exponent == 1) return base;
  if (base.is_constant()) return Expr(ipow(base.constant_value(), exponent));
  return make(Kind::pow, base, Expr(), exponent);
}

Expr Expr::unary(Kind k, const Expr& arg) {
  switch (k) {
    case Kind::neg: return -arg;
    case Kind::sin:
    case Kind::cos:
    case Kind::exp:
    case Kind::tanh:
      if (arg.is_constant()) return Expr(apply_unary(k, arg.constant_value()));
      return make(k, arg, Expr());
    default: throw std::invalid_argument("Expr::unary: not a unary kind");
  }
}

double eval_expr(const Expr& e, double t, double x) {
  const double v = e.eval(t, x);
  if (!std::isfinite(v)) throw EvalError(e.to_string(), t, x);
  return v;
}

Expr diff_expr(const Expr& e, Var var) {
  const auto& n = e.node();
  switch (n.kind) {
    case Kind::constant: return Expr(0.0);
    case Kind::variable: return Expr(n.var == var ? 1.0 : 0.0);
    case Kind::neg: return -diff_expr(n.lhs, var);
    case Kind::sin: return Expr::unary(Kind::cos, n.lhs) * diff_expr(n.lhs, var);
    case Kind::cos: return -(Expr::unary(Kind::sin, n.lhs) * diff_expr(n.lhs, var));
    case Kind::exp: return e * diff_expr(n.lhs, var);
    case Kind::tanh: return (Expr(1.0) - Expr::pow(e, 2)) * diff_expr(n.lhs, var);
    case Kind::add: return diff_expr(n.lhs, var) + diff_expr(n.rhs, var);
    case Kind::sub: return diff_expr(n.lhs, var) - diff_expr(n.rhs, var);
    case Kind::mul:
      return diff_expr(n.lhs, var) * n.rhs + n.lhs * diff_expr(n.rhs, var);
    case Kind::div:
      return (diff_expr(n.lhs, var) * n.rhs - n.lhs * diff_expr(n.rhs, var)) /
             Expr::pow(n.rhs, 2);
    case Kind::pow:
      return Expr(static_cast<double>(n.exponent)) * Expr::pow(n.lhs, n.exponent - 1) *
             diff_expr(n.lhs, var);
  }
  return Expr(0.0);
}

Expr diff_expr(const Expr& e, Var var, int n) {
  Expr out = e;
  for (int i = 0; i < n; ++i) out = diff_expr(out, var);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr parse() {
    Expr e = parse_sum();
    skip_space();
    if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_sum() {
    Expr lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + (parse_product());
      } else if (accept('-')) {
        lhs = lhs - (parse_product());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_product() {
    Expr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * (parse_unary());
      } else if (accept('/')) {
        lhs = lhs / (parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return -parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    while (accept('^')) {
      skip_space();
      const std::size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (pos_ == start) fail("expected non-negative integer exponent");
      if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E'))
        fail("exponent must be an integer literal");
      const std::string digits(src_.substr(start, pos_ - start));
      if (digits.size() > 6) {
        pos_ = start;
        fail("exponent too large");
      }
      base = Expr::pow(base, std::stoi(digits));
    }
    return base;
  }

  Expr parse_primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      const std::string_view id = src_.substr(start, pos_ - start);
      if (id == "t") return Expr::variable(Var::t);
      if (id == "x") return Expr::variable(Var::x);
      Kind fn;
      if (id == "sin") {
        fn = Kind::sin;
      } else if (id == "cos") {
        fn = Kind::cos;
      } else if (id == "exp") {
        fn = Kind::exp;
      } else if (id == "tanh") {
        fn = Kind::tanh;
      } else {
        pos_ = start;
        fail("unknown identifier '" + std::string(id) + "'");
      }
      if (!accept('(')) fail("expected '(' after function name");
      Expr arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return Expr::unary(fn, arg);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    const std::string text(src_.substr(start, pos_ - start));
    if (text == ".") {
      pos_ = start;
      fail("malformed number");
    }
    return Expr(std::strtod(text.c_str(), nullptr));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view src) { return Parser(src).parse(); }

}  // namespace properhyp
