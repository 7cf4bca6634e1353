#pragma once

// Scalar expressions over named real coordinates: AST, parser, printer,
// point evaluation and symbolic differentiation.
//
// Grammar (whitespace-insensitive):
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := ("-" factor) | power
//   power  := atom ("^" factor)?
//   atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace seqwarp {

enum class Op { constant, variable, negate, add, sub, mul, div, pow, call };
enum class Fn { sin, cos, tan, sinh, cosh, tanh, exp, log, sqrt };

inline constexpr std::array<std::pair<std::string_view, Fn>, 9> kFunctions{{
    {"sin", Fn::sin},
    {"cos", Fn::cos},
    {"tan", Fn::tan},
    {"sinh", Fn::sinh},
    {"cosh", Fn::cosh},
    {"tanh", Fn::tanh},
    {"exp", Fn::exp},
    {"log", Fn::log},
    {"sqrt", Fn::sqrt},
}};

inline std::string_view fn_name(Fn fn) {
  for (const auto& [name, f] : kFunctions)
    if (f == fn) return name;
  return "?";
}

inline std::optional<Fn> fn_from_name(std::string_view name) {
  for (const auto& [n, f] : kFunctions)
    if (n == name) return f;
  return std::nullopt;
}

class ParseError : public std::runtime_error {
 public:
  enum class Kind { syntax, unknown_identifier, arity };

  ParseError(Kind kind, std::size_t offset, const std::string& what)
      : std::runtime_error(what + " at offset " + std::to_string(offset) + " (column " +
                           std::to_string(offset + 1) + ")"),
        kind_(kind),
        offset_(offset) {}

  Kind kind() const { return kind_; }
  // Zero-based byte offset into the parsed text.
  std::size_t offset() const { return offset_; }
  std::size_t column() const { return offset_ + 1; }

 private:
  Kind kind_;
  std::size_t offset_;
};

class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& what, std::string subexpression)
      : std::runtime_error(what + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}

  const std::string& subexpression() const { return subexpression_; }

 private:
  std::string subexpression_;
};

class Expr {
 public:
  struct Node {
    Op op = Op::constant;
    Fn fn = Fn::sin;
    double value = 0.0;
    std::string name;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
  };

  Expr() : Expr(make_constant_node(0.0)) {}

  // Negative literals become negate(constant) so every constant node is non-negative.
  static Expr constant(double v) {
    if (v < 0.0 || (v == 0.0 && std::signbit(v))) return negate(Expr(make_constant_node(-v)));
    return Expr(make_constant_node(v));
  }
  static Expr variable(std::string name) {
    auto n = std::make_shared<Node>();
    n->op = Op::variable;
    n->name = std::move(name);
    return Expr(std::move(n));
  }
  static Expr negate(const Expr& x) {
    auto n = std::make_shared<Node>();
    n->op = Op::negate;
    n->a = x.node_;
    return Expr(std::move(n));
  }
  static Expr binary(Op op, const Expr& l, const Expr& r) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->a = l.node_;
    n->b = r.node_;
    return Expr(std::move(n));
  }
  static Expr call(Fn fn, const Expr& arg) {
    auto n = std::make_shared<Node>();
    n->op = Op::call;
    n->fn = fn;
    n->a = arg.node_;
    return Expr(std::move(n));
  }

  Op op() const { return node_->op; }
  Fn fn() const { return node_->fn; }
  double value() const { return node_->value; }
  const std::string& name() const { return node_->name; }
  Expr lhs() const { return Expr(node_->a); }
  Expr rhs() const { return Expr(node_->b); }
  const Node& node() const { return *node_; }

  bool is_constant_value(double v) const { return node_->op == Op::constant && node_->value == v; }

  std::set<std::string> free_variables() const {
    std::set<std::string> out;
    collect_vars(*node_, out);
    return out;
  }
  bool has_variables() const { return has_vars(*node_); }

  std::string to_string() const {
    std::string out;
    print(*node_, out);
    return out;
  }

  friend bool operator==(const Expr& x, const Expr& y) { return equal(*x.node_, *y.node_); }

 private:
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static std::shared_ptr<const Node> make_constant_node(double v) {
    auto n = std::make_shared<Node>();
    n->op = Op::constant;
    n->value = v;
    return n;
  }

  static void collect_vars(const Node& n, std::set<std::string>& out) {
    if (n.op == Op::variable) out.insert(n.name);
    if (n.a) collect_vars(*n.a, out);
    if (n.b) collect_vars(*n.b, out);
  }
  static bool has_vars(const Node& n) {
    if (n.op == Op::variable) return true;
    return (n.a && has_vars(*n.a)) || (n.b && has_vars(*n.b));
  }

  static bool equal(const Node& x, const Node& y) {
    if (&x == &y) return true;
    if (x.op != y.op) return false;
    switch (x.op) {
      case Op::constant:
        return x.value == y.value;
      case Op::variable:
        return x.name == y.name;
      case Op::call:
        return x.fn == y.fn && equal(*x.a, *y.a);
      case Op::negate:
        return equal(*x.a, *y.a);
      default:
        return equal(*x.a, *y.a) && equal(*x.b, *y.b);
    }
  }

  static int precedence(const Node& n) {
    switch (n.op) {
      case Op::add:
      case Op::sub:
        return 1;
      case Op::mul:
      case Op::div:
        return 2;
      case Op::negate:
        return 3;
      case Op::pow:
        return 4;
      default:
        return 5;
    }
  }

  static void print_child(const Node& n, int min_prec, std::string& out) {
    if (precedence(n) < min_prec) {
      out += '(';
      print(n, out);
      out += ')';
    } else {
      print(n, out);
    }
  }

  static void print(const Node& n, std::string& out) {
    switch (n.op) {
      case Op::constant: {
        std::array<char, 64> buf{};
        auto res = std::to_chars(buf.data(), buf.data() + buf.size(), n.value);
        out.append(buf.data(), res.ptr);
        return;
      }
      case Op::variable:
        out += n.name;
        return;
      case Op::call:
        out += fn_name(n.fn);
        out += '(';
        print(*n.a, out);
        out += ')';
        return;
      case Op::negate:
        out += '-';
        print_child(*n.a, 3, out);
        return;
      case Op::pow:
        print_child(*n.a, 5, out);
        out += '^';
        print_child(*n.b, 3, out);
        return;
      case Op::add:
      case Op::sub:
        print_child(*n.a, 1, out);
        out += n.op == Op::add ? " + " : " - ";
        print_child(*n.b, 2, out);
        return;
      case Op::mul:
      case Op::div:
        print_child(*n.a, 2, out);
        out += n.op == Op::mul ? "*" : "/";
        print_child(*n.b, 3, out);
        return;
    }
  }

  std::shared_ptr<const Node> node_;
};

inline Expr operator-(const Expr& x) { return Expr::negate(x); }
inline Expr operator+(const Expr& x, const Expr& y) { return Expr::binary(Op::add, x, y); }
inline Expr operator-(const Expr& x, const Expr& y) { return Expr::binary(Op::sub, x, y); }
inline Expr operator*(const Expr& x, const Expr& y) { return Expr::binary(Op::mul, x, y); }
inline Expr operator/(const Expr& x, const Expr& y) { return Expr::binary(Op::div, x, y); }
inline Expr pow(const Expr& x, const Expr& y) { return Expr::binary(Op::pow, x, y); }

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& coords) : text_(text), coords_(coords) {}

  Expr run() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError(ParseError::Kind::syntax, pos_, "empty expression");
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) unexpected();
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                   text_[pos_] == '\r'))
      ++pos_;
  }
  bool at(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }
  [[noreturn]] void unexpected() {
    if (pos_ >= text_.size()) throw ParseError(ParseError::Kind::syntax, pos_, "unexpected end of input");
    throw ParseError(ParseError::Kind::syntax, pos_, std::string("unexpected '") + text_[pos_] + "'");
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    while (true) {
      if (at('+')) {
        ++pos_;
        lhs = lhs + parse_term();
      } else if (at('-')) {
        ++pos_;
        lhs = lhs - parse_term();
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    while (true) {
      if (at('*')) {
        ++pos_;
        lhs = lhs * parse_factor();
      } else if (at('/')) {
        ++pos_;
        lhs = lhs / parse_factor();
      } else {
        return lhs;
      }
    }
  }

  Expr parse_factor() {
    if (at('-')) {
      ++pos_;
      return -parse_factor();
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (at('^')) {
      ++pos_;
      return pow(base, parse_factor());
    }
    return base;
  }

  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
  static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) unexpected();
    const char c = text_[pos_];
    if (is_digit(c) || c == '.') return parse_number();
    if (is_ident_start(c)) return parse_identifier();
    if (c == '(') {
      ++pos_;
      Expr inner = parse_expr();
      expect_close();
      return inner;
    }
    unexpected();
  }

  void expect_close() {
    if (!at(')')) {
      if (pos_ >= text_.size()) throw ParseError(ParseError::Kind::syntax, pos_, "expected ')'");
      throw ParseError(ParseError::Kind::syntax, pos_,
                       std::string("expected ')' but found '") + text_[pos_] + "'");
    }
    ++pos_;
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    std::size_t p = pos_;
    bool digits = false;
    while (p < text_.size() && is_digit(text_[p])) {
      ++p;
      digits = true;
    }
    if (p < text_.size() && text_[p] == '.') {
      ++p;
      while (p < text_.size() && is_digit(text_[p])) {
        ++p;
        digits = true;
      }
    }
    if (!digits) throw ParseError(ParseError::Kind::syntax, start, "malformed number");
    if (p < text_.size() && (text_[p] == 'e' || text_[p] == 'E')) {
      std::size_t q = p + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
      if (q < text_.size() && is_digit(text_[q])) {
        while (q < text_.size() && is_digit(text_[q])) ++q;
        p = q;
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(text_.data() + start, text_.data() + p, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + p)
      throw ParseError(ParseError::Kind::syntax, start, "malformed number");
    pos_ = p;
    return Expr::constant(v);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    const std::string name(text_.substr(start, pos_ - start));
    const auto fn = fn_from_name(name);
    if (at('(')) {
      if (!fn) {
        const bool is_coord = std::find(coords_.begin(), coords_.end(), name) != coords_.end();
        throw ParseError(is_coord ? ParseError::Kind::arity : ParseError::Kind::unknown_identifier, start,
                         is_coord ? "coordinate '" + name + "' cannot be called"
                                  : "unknown function '" + name + "'");
      }
      ++pos_;
      if (at(')')) throw ParseError(ParseError::Kind::arity, pos_, "function '" + name + "' expects 1 argument");
      Expr arg = parse_expr();
      if (at(',')) throw ParseError(ParseError::Kind::arity, pos_, "function '" + name + "' expects 1 argument");
      expect_close();
      return Expr::call(*fn, arg);
    }
    if (fn) throw ParseError(ParseError::Kind::arity, start, "function '" + name + "' expects 1 argument");
    if (std::find(coords_.begin(), coords_.end(), name) == coords_.end())
      throw ParseError(ParseError::Kind::unknown_identifier, start, "unknown identifier '" + name + "'");
    return Expr::variable(name);
  }

  std::string_view text_;
  const std::vector<std::string>& coords_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse(std::string_view text, const std::vector<std::string>& coords) {
  return detail::Parser(text, coords).run();
}

using EvalPoint = std::map<std::string, double>;

namespace detail {

inline bool is_small_integer(double c) { return c == std::round(c) && std::abs(c) <= 12.0; }

inline double eval_node(const Expr& e, const EvalPoint& p);

// Constant exponent of a power node, if it has no variables.
inline std::optional<double> constant_exponent(const Expr& e) {
  const Expr r = e.rhs();
  if (r.has_variables()) return std::nullopt;
  return eval_node(r, {});
}

inline double eval_node(const Expr& e, const EvalPoint& p) {
  switch (e.op()) {
    case Op::constant:
      return e.value();
    case Op::variable: {
      const auto it = p.find(e.name());
      if (it == p.end()) throw std::out_of_range("evaluation point does not bind '" + e.name() + "'");
      return it->second;
    }
    case Op::negate:
      return -eval_node(e.lhs(), p);
    case Op::add:
      return eval_node(e.lhs(), p) + eval_node(e.rhs(), p);
    case Op::sub:
      return eval_node(e.lhs(), p) - eval_node(e.rhs(), p);
    case Op::mul:
      return eval_node(e.lhs(), p) * eval_node(e.rhs(), p);
    case Op::div: {
      const double den = eval_node(e.rhs(), p);
      if (den == 0.0) throw DomainError("division by zero", e.to_string());
      return eval_node(e.lhs(), p) / den;
    }
    case Op::pow: {
      const double base = eval_node(e.lhs(), p);
      if (const auto c = constant_exponent(e)) {
        if (is_small_integer(*c)) {
          const int n = static_cast<int>(std::abs(*c));
          double acc = 1.0;
          for (int i = 0; i < n; ++i) acc = i == 0 ? base : acc * base;
          if (*c < 0) {
            if (acc == 0.0) throw DomainError("division by zero", e.to_string());
            acc = 1.0 / acc;
          }
          return acc;
        }
        if (*c == std::round(*c)) return std::pow(base, *c);
        if (base <= 0.0) throw DomainError("non-integer power of a non-positive base", e.to_string());
        return std::pow(base, *c);
      }
      if (base <= 0.0) throw DomainError("variable power of a non-positive base", e.to_string());
      return std::exp(eval_node(e.rhs(), p) * std::log(base));
    }
    case Op::call: {
      const double x = eval_node(e.lhs(), p);
      switch (e.fn()) {
        case Fn::sin:
          return std::sin(x);
        case Fn::cos:
          return std::cos(x);
        case Fn::tan:
          return std::tan(x);
        case Fn::sinh:
          return std::sinh(x);
        case Fn::cosh:
          return std::cosh(x);
        case Fn::tanh:
          return std::tanh(x);
        case Fn::exp:
          return std::exp(x);
        case Fn::log:
          if (x <= 0.0) throw DomainError("log of a non-positive value", e.to_string());
          return std::log(x);
        case Fn::sqrt:
          if (x < 0.0) throw DomainError("sqrt of a negative value", e.to_string());
          return std::sqrt(x);
      }
    }
  }
  return 0.0;
}

}  // namespace detail

inline double evaluate(const Expr& e, const EvalPoint& p) { return detail::eval_node(e, p); }

// Builders that fold the trivial identities produced by differentiation.
namespace build {

inline bool is_zero(const Expr& e) { return e.is_constant_value(0.0); }
inline bool is_one(const Expr& e) { return e.is_constant_value(1.0); }

inline Expr neg(const Expr& a) {
  if (is_zero(a)) return a;
  if (a.op() == Op::negate) return a.lhs();
  return -a;
}
inline Expr add(const Expr& a, const Expr& b) {
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  return a + b;
}
inline Expr sub(const Expr& a, const Expr& b) {
  if (is_zero(b)) return a;
  if (is_zero(a)) return neg(b);
  return a - b;
}
inline Expr mul(const Expr& a, const Expr& b) {
  if (is_zero(a) || is_zero(b)) return Expr::constant(0.0);
  if (is_one(a)) return b;
  if (is_one(b)) return a;
  return a * b;
}
inline Expr div(const Expr& a, const Expr& b) {
  if (is_zero(a)) return Expr::constant(0.0);
  if (is_one(b)) return a;
  return a / b;
}

}  // namespace build

inline Expr differentiate(const Expr& e, std::string_view var) {
  using namespace build;
  switch (e.op()) {
    case Op::constant:
      return Expr::constant(0.0);
    case Op::variable:
      return Expr::constant(e.name() == var ? 1.0 : 0.0);
    case Op::negate:
      return neg(differentiate(e.lhs(), var));
    case Op::add:
      return add(differentiate(e.lhs(), var), differentiate(e.rhs(), var));
    case Op::sub:
      return sub(differentiate(e.lhs(), var), differentiate(e.rhs(), var));
    case Op::mul:
      return add(mul(differentiate(e.lhs(), var), e.rhs()), mul(e.lhs(), differentiate(e.rhs(), var)));
    case Op::div: {
      const Expr da = differentiate(e.lhs(), var);
      const Expr db = differentiate(e.rhs(), var);
      return sub(div(da, e.rhs()), div(mul(e.lhs(), db), pow(e.rhs(), Expr::constant(2.0))));
    }
    case Op::pow: {
      const Expr a = e.lhs();
      const Expr da = differentiate(a, var);
      if (const auto c = detail::constant_exponent(e)) {
        if (*c == 0.0) return Expr::constant(0.0);
        const Expr reduced = *c == 1.0 ? Expr::constant(1.0) : pow(a, Expr::constant(*c - 1.0));
        return mul(mul(Expr::constant(*c), reduced), da);
      }
      const Expr b = e.rhs();
      const Expr db = differentiate(b, var);
      const Expr inner = add(mul(db, Expr::call(Fn::log, a)), div(mul(b, da), a));
      return mul(e, inner);
    }
    case Op::call: {
      const Expr a = e.lhs();
      const Expr da = differentiate(a, var);
      if (is_zero(da)) return Expr::constant(0.0);
      switch (e.fn()) {
        case Fn::sin:
          return mul(Expr::call(Fn::cos, a), da);
        case Fn::cos:
          return neg(mul(Expr::call(Fn::sin, a), da));
        case Fn::tan:
          return mul(add(Expr::constant(1.0), pow(e, Expr::constant(2.0))), da);
        case Fn::sinh:
          return mul(Expr::call(Fn::cosh, a), da);
        case Fn::cosh:
          return mul(Expr::call(Fn::sinh, a), da);
        case Fn::tanh:
          return mul(sub(Expr::constant(1.0), pow(e, Expr::constant(2.0))), da);
        case Fn::exp:
          return mul(e, da);
        case Fn::log:
          return div(da, a);
        case Fn::sqrt:
          return div(da, mul(Expr::constant(2.0), e));
      }
    }
  }
  return Expr::constant(0.0);
}

}  // namespace seqwarp
