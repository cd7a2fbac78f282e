#include "coclab/expression.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

#include "coclab/error.hpp"

namespace coclab {

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : text_(text) {}

  Expression run() {
    Expression e;
    e.source_ = std::string(text_);
    out_ = &e.program_;
    expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected character");
    e.max_depth_ = max_depth_;
    if (e.program_.empty()) fail("empty expression");
    return e;
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::ConfigParse,
                why + " at position " + std::to_string(pos_) + " in expression '" + std::string(text_) + "'");
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

  void emit(Op op, double value = 0) {
    out_->push_back({op, value});
    switch (op) {
      case Op::Const:
      case Op::X1:
      case Op::X2:
        ++depth_;
        break;
      case Op::Add:
      case Op::Sub:
      case Op::Mul:
      case Op::Div:
        --depth_;
        break;
      default:
        break;
    }
    max_depth_ = std::max(max_depth_, depth_);
  }

  void expr() {
    term();
    for (;;) {
      if (accept('+')) {
        term();
        emit(Op::Add);
      } else if (accept('-')) {
        term();
        emit(Op::Sub);
      } else {
        return;
      }
    }
  }

  void term() {
    unary();
    for (;;) {
      if (accept('*')) {
        unary();
        emit(Op::Mul);
      } else if (accept('/')) {
        unary();
        emit(Op::Div);
      } else {
        return;
      }
    }
  }

  void unary() {
    if (accept('-')) {
      unary();
      emit(Op::Neg);
    } else if (accept('+')) {
      unary();
    } else {
      primary();
    }
  }

  void primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      expr();
      if (!accept(')')) fail("expected ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0;
      const char* begin = text_.data() + pos_;
      const auto [ptr, ec] = std::from_chars(begin, text_.data() + text_.size(), v);
      if (ec != std::errc()) fail("malformed number");
      pos_ += static_cast<std::size_t>(ptr - begin);
      emit(Op::Const, v);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view word = text_.substr(start, pos_ - start);
      if (word == "x1") return emit(Op::X1);
      if (word == "x2") return emit(Op::X2);
      if (word == "pi") return emit(Op::Const, std::numbers::pi);
      if (word == "sin" || word == "cos") {
        if (!accept('(')) fail("expected '(' after " + std::string(word));
        expr();
        if (!accept(')')) fail("expected ')'");
        return emit(word == "sin" ? Op::Sin : Op::Cos);
      }
      pos_ = start;
      fail("unknown identifier '" + std::string(word) + "'");
    }
    fail("unexpected character");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<Expression::Instr>* out_ = nullptr;
  int depth_ = 0;
  int max_depth_ = 0;
};

Expression Expression::parse(std::string_view text) { return ExpressionParser(text).run(); }

double Expression::eval(double x1, double x2) const {
  constexpr int kInline = 32;
  std::array<double, kInline> small{};
  std::vector<double> big;
  double* stack = small.data();
  if (max_depth_ > kInline) {
    big.resize(static_cast<std::size_t>(max_depth_));
    stack = big.data();
  }
  int top = -1;
  for (const Instr& in : program_) {
    switch (in.op) {
      case Op::Const: stack[++top] = in.value; break;
      case Op::X1: stack[++top] = x1; break;
      case Op::X2: stack[++top] = x2; break;
      case Op::Add: stack[top - 1] += stack[top]; --top; break;
      case Op::Sub: stack[top - 1] -= stack[top]; --top; break;
      case Op::Mul: stack[top - 1] *= stack[top]; --top; break;
      case Op::Div: stack[top - 1] /= stack[top]; --top; break;
      case Op::Neg: stack[top] = -stack[top]; break;
      case Op::Sin: stack[top] = std::sin(stack[top]); break;
      case Op::Cos: stack[top] = std::cos(stack[top]); break;
    }
  }
  return stack[0];
}

}  // namespace coclab
