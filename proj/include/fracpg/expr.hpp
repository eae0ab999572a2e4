#pragma once

/**
 * @file expr.hpp
 * @brief Coefficient expressions in x: parsing, evaluation, power-sum classification.
 *
 * Grammar (recursive descent):
 *
 *     expr     := term (('+' | '-') term)*
 *     term     := factor (('*' | '/') factor)*
 *     factor   := '-' factor | primary ('^' exponent)?
 *     primary  := number | 'x' | '(' expr ')' | ident '(' expr ')'
 *     exponent := signed-number | '(' signed-number ')'
 *
 * '^' binds tighter than unary minus, so -x^2 is -(x^2). Exponents are
 * numeric literals so singular powers are known before any quadrature is
 * planned. Functions: exp, sin, cos, log, sqrt.
 */

#include <charconv>
#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>

#include "fracpg/errors.hpp"
#include "fracpg/power_sum.hpp"

namespace fracpg::expr {

enum class Func { Exp, Sin, Cos, Log, Sqrt };

inline const char* name(Func f) {
  switch (f) {
    case Func::Exp: return "exp";
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Log: return "log";
    case Func::Sqrt: return "sqrt";
  }
  return "?";
}

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Number {
  double value;
};
struct Variable {};
struct Negate {
  NodePtr operand;
};
struct Binary {
  char op;  // one of + - * /
  NodePtr lhs;
  NodePtr rhs;
};
struct Power {
  NodePtr base;
  double exponent;
};
struct Call {
  Func fn;
  NodePtr arg;
};

struct Node {
  std::variant<Number, Variable, Negate, Binary, Power, Call> value;
};

namespace detail {

template <class T>
NodePtr make(T v) {
  return std::make_shared<const Node>(Node{std::move(v)});
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) fail({"+", "-", "*", "/", "^", "end of input"}, "unexpected character");
    return e;
  }

 private:
  [[noreturn]] void fail(std::set<std::string> expected, const std::string& what) const {
    std::ostringstream msg;
    msg << "syntax error at offset " << pos_ << ": " << what << " (expected one of:";
    for (const auto& e : expected) msg << " '" << e << "'";
    msg << ")";
    throw ParseError(pos_, std::move(expected), msg.str());
  }

  void skip_ws() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (char c = peek(); c == '+' || c == '-'; c = peek()) {
      ++pos_;
      lhs = make(Binary{c, lhs, parse_term()});
    }
    return lhs;
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (char c = peek(); c == '*' || c == '/'; c = peek()) {
      ++pos_;
      lhs = make(Binary{c, lhs, parse_factor()});
    }
    return lhs;
  }

  NodePtr parse_factor() {
    if (accept('-')) return make(Negate{parse_factor()});
    NodePtr base = parse_primary();
    if (accept('^')) return make(Power{base, parse_exponent()});
    return base;
  }

  double parse_exponent() {
    const bool paren = accept('(');
    double sign = 1.0;
    if (accept('-')) {
      sign = -1.0;
    } else {
      accept('+');
    }
    skip_ws();
    auto value = lex_number();
    if (!value) fail({"number"}, "exponent must be a numeric literal");
    if (paren && !accept(')')) fail({")"}, "unclosed exponent");
    return sign * *value;
  }

  std::optional<double> lex_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      const std::size_t s = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      return pos_ > s;
    };
    bool any = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      any = digits() || any;
    }
    if (!any) {
      pos_ = start;
      return std::nullopt;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      const std::size_t mark = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (!digits()) pos_ = mark;
    }
    double v = 0.0;
    const auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != src_.data() + pos_) {
      pos_ = start;
      fail({"number"}, "malformed number");
    }
    return v;
  }

  NodePtr parse_primary() {
    skip_ws();
    static const std::set<std::string> kExpected{"number", "x", "(", "function", "-"};
    if (pos_ >= src_.size()) fail(kExpected, "unexpected end of input");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      auto v = lex_number();
      if (!v) fail(kExpected, "malformed number");
      return make(Number{*v});
    }
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_expr();
      if (!accept(')')) fail({")"}, "unbalanced parenthesis");
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      const std::string_view ident = src_.substr(start, pos_ - start);
      if (ident == "x") return make(Variable{});
      std::optional<Func> fn;
      for (Func f : {Func::Exp, Func::Sin, Func::Cos, Func::Log, Func::Sqrt})
        if (ident == name(f)) fn = f;
      if (!fn) {
        pos_ = start;
        std::ostringstream msg;
        msg << "unknown identifier '" << ident << "' at offset " << start;
        throw ParseError(start, {"x", "exp", "sin", "cos", "log", "sqrt"}, msg.str());
      }
      if (!accept('(')) fail({"("}, "function call needs an argument list");
      NodePtr arg = parse_expr();
      if (!accept(')')) fail({")"}, "unbalanced parenthesis");
      return make(Call{*fn, arg});
    }
    fail(kExpected, "unexpected character");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

inline double eval_node(const Node& n, double x);

inline double checked_pow(double base, double e) {
  if (base == 0.0 && e < 0.0) throw DomainError("eval: zero raised to a negative power");
  if (base < 0.0 && e != std::floor(e)) throw DomainError("eval: negative base with non-integer exponent");
  return std::pow(base, e);
}

inline double eval_node(const Node& n, double x) {
  return std::visit(
      [x](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Number>) {
          return v.value;
        } else if constexpr (std::is_same_v<T, Variable>) {
          return x;
        } else if constexpr (std::is_same_v<T, Negate>) {
          return -eval_node(*v.operand, x);
        } else if constexpr (std::is_same_v<T, Binary>) {
          const double a = eval_node(*v.lhs, x);
          const double b = eval_node(*v.rhs, x);
          switch (v.op) {
            case '+': return a + b;
            case '-': return a - b;
            case '*': return a * b;
            default:
              if (b == 0.0) throw DomainError("eval: division by zero");
              return a / b;
          }
        } else if constexpr (std::is_same_v<T, Power>) {
          return checked_pow(eval_node(*v.base, x), v.exponent);
        } else {
          const double a = eval_node(*v.arg, x);
          switch (v.fn) {
            case Func::Exp: return std::exp(a);
            case Func::Sin: return std::sin(a);
            case Func::Cos: return std::cos(a);
            case Func::Log:
              if (!(a > 0.0)) throw DomainError("eval: log of a nonpositive number");
              return std::log(a);
            case Func::Sqrt:
              if (a < 0.0) throw DomainError("eval: sqrt of a negative number");
              return std::sqrt(a);
          }
          return 0.0;
        }
      },
      n.value);
}

inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string print_node(const Node& n) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Number>) {
          return format_number(v.value);
        } else if constexpr (std::is_same_v<T, Variable>) {
          return "x";
        } else if constexpr (std::is_same_v<T, Negate>) {
          return "(-" + print_node(*v.operand) + ")";
        } else if constexpr (std::is_same_v<T, Binary>) {
          return "(" + print_node(*v.lhs) + " " + v.op + " " + print_node(*v.rhs) + ")";
        } else if constexpr (std::is_same_v<T, Power>) {
          return "(" + print_node(*v.base) + "^" + format_number(v.exponent) + ")";
        } else {
          return std::string(name(v.fn)) + "(" + print_node(*v.arg) + ")";
        }
      },
      n.value);
}

inline bool equal_nodes(const Node& a, const Node& b) {
  if (a.value.index() != b.value.index()) return false;
  return std::visit(
      [&b](const auto& va) -> bool {
        using T = std::decay_t<decltype(va)>;
        const auto& vb = std::get<T>(b.value);
        if constexpr (std::is_same_v<T, Number>) {
          return va.value == vb.value;
        } else if constexpr (std::is_same_v<T, Variable>) {
          return true;
        } else if constexpr (std::is_same_v<T, Negate>) {
          return equal_nodes(*va.operand, *vb.operand);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return va.op == vb.op && equal_nodes(*va.lhs, *vb.lhs) && equal_nodes(*va.rhs, *vb.rhs);
        } else if constexpr (std::is_same_v<T, Power>) {
          return va.exponent == vb.exponent && equal_nodes(*va.base, *vb.base);
        } else {
          return va.fn == vb.fn && equal_nodes(*va.arg, *vb.arg);
        }
      },
      a.value);
}

inline std::optional<PowerSum> classify_node(const Node& n);

inline std::optional<PowerSum> classify_power(const PowerSum& base, double e) {
  if (base.empty()) return e > 0.0 ? std::optional<PowerSum>(PowerSum{}) : std::nullopt;
  const bool integral = e == std::floor(e);
  if (base.size() == 1) {
    const Term t = base.terms().front();
    if (t.coeff < 0.0 && !integral) return std::nullopt;
    return PowerSum::monomial(std::pow(t.coeff, e), t.exponent * e);
  }
  if (!integral || e < 0.0 || e > 16.0) return std::nullopt;
  PowerSum acc = PowerSum::constant(1.0);
  for (int k = 0; k < static_cast<int>(e); ++k) acc = acc * base;
  return acc;
}

inline std::optional<PowerSum> classify_node(const Node& n) {
  return std::visit(
      [](const auto& v) -> std::optional<PowerSum> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Number>) {
          return v.value == 0.0 ? PowerSum{} : PowerSum::constant(v.value);
        } else if constexpr (std::is_same_v<T, Variable>) {
          return PowerSum::monomial(1.0, 1.0);
        } else if constexpr (std::is_same_v<T, Negate>) {
          auto p = classify_node(*v.operand);
          if (!p) return std::nullopt;
          return -*p;
        } else if constexpr (std::is_same_v<T, Binary>) {
          auto a = classify_node(*v.lhs);
          if (!a) return std::nullopt;
          auto b = classify_node(*v.rhs);
          if (!b) return std::nullopt;
          switch (v.op) {
            case '+': return *a + *b;
            case '-': return *a - *b;
            case '*': return *a * *b;
            default: {
              if (b->size() != 1) return std::nullopt;
              const Term t = b->terms().front();
              return *a * PowerSum::monomial(1.0 / t.coeff, -t.exponent);
            }
          }
        } else if constexpr (std::is_same_v<T, Power>) {
          auto base = classify_node(*v.base);
          if (!base) return std::nullopt;
          return classify_power(*base, v.exponent);
        } else {
          return std::nullopt;
        }
      },
      n.value);
}

}  // namespace detail

/// A parsed, immutable coefficient expression.
class Expression {
 public:
  static Expression parse(std::string_view src) {
    Expression e;
    e.source_ = std::string(src);
    e.root_ = detail::Parser(src).parse();
    return e;
  }

  static Expression constant(double c) { return parse(detail::format_number(c)); }

  double operator()(double x) const { return detail::eval_node(*root_, x); }

  /// Equivalent power sum when the expression is a combination of constant powers of x.
  std::optional<PowerSum> classify() const {
    try {
      return detail::classify_node(*root_);
    } catch (const DomainError&) {
      return std::nullopt;  // e.g. 1/x leaves the admissible exponent range
    }
  }

  bool is_zero() const {
    auto p = classify();
    return p && p->empty();
  }

  /// Fully parenthesised text that reparses to a structurally identical tree.
  std::string print() const { return detail::print_node(*root_); }

  const std::string& source() const noexcept { return source_; }
  const Node& root() const noexcept { return *root_; }

  friend bool structurally_equal(const Expression& a, const Expression& b) {
    return detail::equal_nodes(*a.root_, *b.root_);
  }

 private:
  Expression() = default;
  std::string source_;
  NodePtr root_;
};

inline Expression parse(std::string_view src) { return Expression::parse(src); }
inline double eval(const Expression& e, double x) { return e(x); }
inline std::optional<PowerSum> classify(const Expression& e) { return e.classify(); }

}  // namespace fracpg::expr
