#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace coclab {

/// Closed-form scalar function of the base coordinates.
///
/// Grammar (whitespace-insensitive):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | primary
///   primary := number | 'x1' | 'x2' | 'pi'
///            | ('sin' | 'cos') '(' expr ')' | '(' expr ')'
///
/// Compiled to a postfix program; evaluation allocates nothing.
class Expression {
 public:
  /// Throws Error(ConfigParse) with the offending position.
  static Expression parse(std::string_view text);

  double eval(double x1, double x2) const;
  const std::string& source() const { return source_; }

 private:
  enum class Op : unsigned char { Const, X1, X2, Add, Sub, Mul, Div, Neg, Sin, Cos };
  struct Instr {
    Op op;
    double value;
  };
  friend class ExpressionParser;

  std::string source_;
  std::vector<Instr> program_;
  int max_depth_ = 0;
};

}  // namespace coclab
