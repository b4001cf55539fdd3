#include "mfk/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

#include "mfk/error.hpp"

namespace mfk {
namespace {

constexpr int kOrder = 5;

Jet constant(double c) { return {c, 0.0, 0.0, 0.0, 0.0}; }

Jet add(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k < kOrder; ++k) r[k] = a[k] + b[k];
  return r;
}

Jet sub(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k < kOrder; ++k) r[k] = a[k] - b[k];
  return r;
}

Jet mul(const Jet& a, const Jet& b) {
  Jet r{};
  for (int k = 0; k < kOrder; ++k)
    for (int i = 0; i <= k; ++i) r[k] += a[i] * b[k - i];
  return r;
}

Jet div(const Jet& a, const Jet& b) {
  Jet q{};
  for (int k = 0; k < kOrder; ++k) {
    double s = a[k];
    for (int i = 1; i <= k; ++i) s -= b[i] * q[k - i];
    q[k] = s / b[0];
  }
  return q;
}

Jet exp_jet(const Jet& a) {
  Jet e{};
  e[0] = std::exp(a[0]);
  for (int k = 1; k < kOrder; ++k) {
    double s = 0.0;
    for (int i = 1; i <= k; ++i) s += i * a[i] * e[k - i];
    e[k] = s / k;
  }
  return e;
}

Jet log_jet(const Jet& a) {
  Jet l{};
  l[0] = std::log(a[0]);
  for (int k = 1; k < kOrder; ++k) {
    double s = 0.0;
    for (int i = 1; i < k; ++i) s += i * l[i] * a[k - i];
    l[k] = (a[k] - s / k) / a[0];
  }
  return l;
}

Jet sqrt_jet(const Jet& a) {
  Jet s{};
  s[0] = std::sqrt(a[0]);
  for (int k = 1; k < kOrder; ++k) {
    double t = a[k];
    for (int i = 1; i < k; ++i) t -= s[i] * s[k - i];
    s[k] = t / (2.0 * s[0]);
  }
  return s;
}

Jet pow_int(Jet base, long n) {
  bool invert = n < 0;
  unsigned long e = static_cast<unsigned long>(invert ? -n : n);
  Jet r = constant(1.0);
  while (e != 0) {
    if (e & 1UL) r = mul(r, base);
    e >>= 1;
    if (e != 0) base = mul(base, base);
  }
  return invert ? div(constant(1.0), r) : r;
}

Jet scale(const Jet& a, double c) {
  Jet r;
  for (int k = 0; k < kOrder; ++k) r[k] = a[k] * c;
  return r;
}

}  // namespace

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : text_(text) {}

  Expression run() {
    Expression e;
    e.text_ = std::string(text_);
    out_ = &e;
    e.root_ = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ParseError, msg + " at offset " + std::to_string(pos_) + " in '" +
                                           std::string(text_) + "'");
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int push(Op op, int a = -1, int b = -1, double value = 0.0) {
    out_->nodes_.push_back({op, a, b, value});
    return static_cast<int>(out_->nodes_.size()) - 1;
  }

  bool depends_on_z(int n) const {
    const auto& node = out_->nodes_[n];
    if (node.op == Op::Var) return true;
    return (node.a >= 0 && depends_on_z(node.a)) || (node.b >= 0 && depends_on_z(node.b));
  }

  int parse_sum() {
    int lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = push(Op::Add, lhs, parse_product());
      } else if (accept('-')) {
        lhs = push(Op::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = push(Op::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = push(Op::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    if (accept('-')) return push(Op::Neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  int parse_power() {
    int base = parse_primary();
    if (!accept('^')) return base;
    int exponent = parse_unary();
    if (depends_on_z(exponent)) fail("exponent must not depend on z");
    double p = out_->eval_at(exponent, 0.0);
    if (!std::isfinite(p)) fail("non-finite exponent");
    if (p == std::nearbyint(p) && std::abs(p) <= 64.0) return push(Op::PowInt, base, -1, p);
    return push(Op::PowReal, base, -1, p);
  }

  int parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      int inner = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      std::string_view name = text_.substr(start, pos_ - start);
      if (name == "z") return push(Op::Var);
      if (name == "pi") return push(Op::Const, -1, -1, std::numbers::pi);
      Op fn;
      if (name == "exp") {
        fn = Op::Exp;
      } else if (name == "log") {
        fn = Op::Log;
      } else if (name == "sqrt") {
        fn = Op::Sqrt;
      } else if (name == "cosh") {
        fn = Op::Cosh;
      } else {
        pos_ = start;
        fail("unknown identifier '" + std::string(name) + "'");
      }
      if (!accept('(')) fail("expected '(' after function name");
      int arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return push(fn, arg);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  int parse_number() {
    const char* begin = text_.data() + pos_;
    char* end = nullptr;
    std::string buf(begin, text_.size() - pos_);
    double v = std::strtod(buf.c_str(), &end);
    std::size_t used = static_cast<std::size_t>(end - buf.c_str());
    if (used == 0) fail("malformed number");
    pos_ += used;
    return push(Op::Const, -1, -1, v);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Expression* out_ = nullptr;
};

Expression Expression::parse(std::string_view text) { return ExpressionParser(text).run(); }

double Expression::eval_at(int n, double z) const {
  const Node& node = nodes_[n];
  switch (node.op) {
    case Op::Const: return node.value;
    case Op::Var: return z;
    case Op::Add: return eval_at(node.a, z) + eval_at(node.b, z);
    case Op::Sub: return eval_at(node.a, z) - eval_at(node.b, z);
    case Op::Mul: return eval_at(node.a, z) * eval_at(node.b, z);
    case Op::Div: return eval_at(node.a, z) / eval_at(node.b, z);
    case Op::Neg: return -eval_at(node.a, z);
    case Op::PowInt: {
      double base = eval_at(node.a, z);
      long e = static_cast<long>(node.value);
      double r = 1.0;
      for (long i = 0; i < std::abs(e); ++i) r *= base;
      return e < 0 ? 1.0 / r : r;
    }
    case Op::PowReal: return std::pow(eval_at(node.a, z), node.value);
    case Op::Exp: return std::exp(eval_at(node.a, z));
    case Op::Log: return std::log(eval_at(node.a, z));
    case Op::Sqrt: return std::sqrt(eval_at(node.a, z));
    case Op::Cosh: return std::cosh(eval_at(node.a, z));
  }
  return 0.0;
}

Jet Expression::jet_at(int n, double z) const {
  const Node& node = nodes_[n];
  switch (node.op) {
    case Op::Const: return constant(node.value);
    case Op::Var: return {z, 1.0, 0.0, 0.0, 0.0};
    case Op::Add: return add(jet_at(node.a, z), jet_at(node.b, z));
    case Op::Sub: return sub(jet_at(node.a, z), jet_at(node.b, z));
    case Op::Mul: return mul(jet_at(node.a, z), jet_at(node.b, z));
    case Op::Div: return div(jet_at(node.a, z), jet_at(node.b, z));
    case Op::Neg: return scale(jet_at(node.a, z), -1.0);
    case Op::PowInt: return pow_int(jet_at(node.a, z), static_cast<long>(node.value));
    case Op::PowReal: return exp_jet(scale(log_jet(jet_at(node.a, z)), node.value));
    case Op::Exp: return exp_jet(jet_at(node.a, z));
    case Op::Log: return log_jet(jet_at(node.a, z));
    case Op::Sqrt: return sqrt_jet(jet_at(node.a, z));
    case Op::Cosh: {
      Jet a = jet_at(node.a, z);
      return scale(add(exp_jet(a), exp_jet(scale(a, -1.0))), 0.5);
    }
  }
  return constant(0.0);
}

double Expression::eval(double z) const { return eval_at(root_, z); }

Jet Expression::jet(double z) const { return jet_at(root_, z); }

std::array<double, 5> Expression::derivatives(double z) const {
  Jet t = jet(z);
  return {t[0], t[1], 2.0 * t[2], 6.0 * t[3], 24.0 * t[4]};
}

}  // namespace mfk
