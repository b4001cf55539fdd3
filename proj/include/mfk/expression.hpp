#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mfk {

// Truncated Taylor series in z: c[k] = f^(k)(z0) / k!.
using Jet = std::array<double, 5>;

// A closed-form function of one variable `z`.
//
// Grammar: numbers, `z`, `pi`, binary + - * / ^, unary minus, parentheses and
// the functions exp, log, sqrt, cosh. Exponents must not depend on z.
// Derivatives up to order 4 are exact (forward-mode Taylor arithmetic).
class Expression {
 public:
  static Expression parse(std::string_view text);

  double eval(double z) const;
  Jet jet(double z) const;
  // f, f', f'', f''', f'''' at z.
  std::array<double, 5> derivatives(double z) const;

  const std::string& text() const { return text_; }

 private:
  enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Neg, PowInt, PowReal, Exp, Log, Sqrt, Cosh };
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double value = 0.0;
  };

  friend class ExpressionParser;

  Jet jet_at(int node, double z) const;
  double eval_at(int node, double z) const;

  std::string text_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace mfk
