#include "fiolab/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <type_traits>

#include "fiolab/error.hpp"

namespace fiolab {

enum class Op { constant, variable, add, sub, mul, div, pow, neg, sin, cos, exp, log, abs, sqrt, jb, norm, re, im };

struct Expression::Node {
  Op op;
  cplx value = 0.0;
  int slot = 0;
  std::vector<int> args;
};

namespace {

struct Token {
  enum Kind { number, ident, symbol, end } kind;
  std::string text;
  double value = 0.0;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= src_.size()) {
        t.kind = Token::end;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && pos_ + 1 < src_.size() &&
                                                          std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        const char* begin = src_.c_str() + pos_;
        char* stop = nullptr;
        t.kind = Token::number;
        t.value = std::strtod(begin, &stop);
        std::size_t len = static_cast<std::size_t>(stop - begin);
        t.text = src_.substr(pos_, len);
        advance(len);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t len = 0;
        while (pos_ + len < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_ + len])) || src_[pos_ + len] == '_')) {
          ++len;
        }
        t.kind = Token::ident;
        t.text = src_.substr(pos_, len);
        advance(len);
      } else if (std::string("+-*/^(),").find(c) != std::string::npos) {
        t.kind = Token::symbol;
        t.text = std::string(1, c);
        advance(1);
      } else {
        throw ParseError(std::string("unexpected character '") + c + "'", line_, column_);
      }
      out.push_back(t);
    }
  }

 private:
  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance(1);
  }
  void advance(std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else {
        ++column_;
      }
      ++pos_;
    }
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

struct FunctionInfo {
  const char* name;
  Op op;
  int min_args;
  int max_args;
};

constexpr FunctionInfo kFunctions[] = {
    {"sin", Op::sin, 1, 1},   {"cos", Op::cos, 1, 1},   {"exp", Op::exp, 1, 1},
    {"log", Op::log, 1, 1},   {"abs", Op::abs, 1, 1},   {"sqrt", Op::sqrt, 1, 1},
    {"jb", Op::jb, 1, 8},     {"norm", Op::norm, 1, 8}, {"re", Op::re, 1, 1},
    {"im", Op::im, 1, 1},
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<Expression::Node>& nodes, std::vector<bool>& used)
      : tokens_(std::move(tokens)), nodes_(nodes), used_(used) {}

  int parse_all() {
    int root = expr();
    if (peek().kind != Token::end) fail("unexpected '" + peek().text + "'", peek());
    return root;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  Token take() { return tokens_[pos_++]; }
  bool accept(const char* sym) {
    if (peek().kind == Token::symbol && peek().text == sym) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg, const Token& at) { throw ParseError(msg, at.line, at.column); }
  void expect(const char* sym) {
    if (!accept(sym)) {
      const Token& t = peek();
      fail(std::string("expected '") + sym + "'" + (t.kind == Token::end ? " before end of input" : ""), t);
    }
  }

  int add(Expression::Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }
  int binary(Op op, int a, int b) { return add({op, 0.0, 0, {a, b}}); }

  int expr() {
    int lhs = term();
    while (true) {
      if (accept("+")) {
        lhs = binary(Op::add, lhs, term());
      } else if (accept("-")) {
        lhs = binary(Op::sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  int term() {
    int lhs = factor();
    while (true) {
      if (accept("*")) {
        lhs = binary(Op::mul, lhs, factor());
      } else if (accept("/")) {
        lhs = binary(Op::div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  int factor() {
    if (accept("-")) return add({Op::neg, 0.0, 0, {factor()}});
    int base = atom();
    if (accept("^")) return binary(Op::pow, base, factor());
    return base;
  }

  int atom() {
    Token t = take();
    if (t.kind == Token::number) return add({Op::constant, cplx(t.value), 0, {}});
    if (t.kind == Token::symbol && t.text == "(") {
      int inner = expr();
      expect(")");
      return inner;
    }
    if (t.kind == Token::ident) return identifier(t);
    if (t.kind == Token::end) fail("unexpected end of input", t);
    fail("unexpected '" + t.text + "'", t);
  }

  int identifier(const Token& t) {
    const std::string& s = t.text;
    if (s == "i") {
      if (accept("(")) expect(")");
      return add({Op::constant, cplx(0.0, 1.0), 0, {}});
    }
    if (s == "pi") return add({Op::constant, cplx(3.14159265358979323846), 0, {}});
    if (s.size() == 2 && s[0] == 'x' && s[1] >= '1' && s[1] <= '0' + Expression::kMaxCoords) {
      int slot = Expression::x_slot(s[1] - '1');
      used_[static_cast<std::size_t>(slot)] = true;
      return add({Op::variable, 0.0, slot, {}});
    }
    if (s.size() == 4 && s[0] == 'k' && s[2] == '_' && s[1] >= '1' && s[1] <= '0' + Expression::kMaxOperands &&
        s[3] >= '1' && s[3] <= '0' + Expression::kMaxCoords) {
      int slot = Expression::k_slot(s[1] - '1', s[3] - '1');
      used_[static_cast<std::size_t>(slot)] = true;
      return add({Op::variable, 0.0, slot, {}});
    }
    for (const auto& f : kFunctions) {
      if (s != f.name) continue;
      if (!accept("(")) fail("function '" + s + "' needs an argument list", peek());
      std::vector<int> args{expr()};
      while (accept(",")) args.push_back(expr());
      expect(")");
      const int count = static_cast<int>(args.size());
      if (count < f.min_args || count > f.max_args) {
        fail("arity mismatch: '" + s + "' takes " + std::to_string(f.min_args) +
                 (f.max_args > f.min_args ? " or more" : "") + " argument(s), got " + std::to_string(count),
             t);
      }
      return add({f.op, 0.0, 0, std::move(args)});
    }
    fail("unknown identifier '" + s + "'", t);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<Expression::Node>& nodes_;
  std::vector<bool>& used_;
};

// Scalar-specific primitives.
cplx make_const(const cplx&, cplx c) { return c; }
Jet make_const(const Jet& like, cplx c) { return Jet(like.layout(), c); }

cplx val(const cplx& v) { return v; }
cplx val(const Jet& v) { return v.value(); }

cplx f_abs(const cplx& v) { return cplx(std::abs(v)); }
Jet f_abs(const Jet& v) { return abs(v); }
cplx f_re(const cplx& v) { return cplx(v.real()); }
Jet f_re(const Jet& v) { return real(v); }
cplx f_im(const cplx& v) { return cplx(v.imag()); }
Jet f_im(const Jet& v) { return imag(v); }
cplx f_sqrt(const cplx& v) {
  if (v.imag() == 0.0 && v.real() >= 0.0) return cplx(std::sqrt(v.real()));
  return std::sqrt(v);
}
Jet f_sqrt(const Jet& v) { return sqrt(v); }

bool is_constant(const Jet& v) {
  for (std::size_t m = 1; m < v.layout()->size(); ++m) {
    if (v.coeff(m) != cplx(0.0)) return false;
  }
  return true;
}

cplx int_power(cplx b, long k) {
  cplx r = 1.0;
  bool invert = k < 0;
  unsigned long e = static_cast<unsigned long>(invert ? -k : k);
  while (e) {
    if (e & 1UL) r *= b;
    b *= b;
    e >>= 1;
  }
  return invert ? 1.0 / r : r;
}

cplx f_pow(const cplx& b, const cplx& e) {
  if (e.imag() == 0.0 && std::abs(e.real()) <= 64.0 && std::floor(e.real()) == e.real()) {
    return int_power(b, static_cast<long>(e.real()));
  }
  if (e.imag() == 0.0 && b.imag() == 0.0 && b.real() >= 0.0) return cplx(std::pow(b.real(), e.real()));
  return std::pow(b, e);
}
Jet f_pow(const Jet& b, const Jet& e) {
  if (is_constant(e)) return pow(b, e.value());
  return pow(b, e);
}

template <class T>
T eval_node(const std::vector<Expression::Node>& nodes, int index, std::span<const T> vars) {
  const auto& n = nodes[static_cast<std::size_t>(index)];
  auto arg = [&](std::size_t k) { return eval_node<T>(nodes, n.args[k], vars); };
  using std::cos;
  using std::exp;
  using std::sin;
  switch (n.op) {
    case Op::constant:
      return make_const(vars[0], n.value);
    case Op::variable:
      return vars[static_cast<std::size_t>(n.slot)];
    case Op::add:
      return arg(0) + arg(1);
    case Op::sub:
      return arg(0) - arg(1);
    case Op::mul:
      return arg(0) * arg(1);
    case Op::div: {
      T den = arg(1);
      if (val(den) == cplx(0.0)) throw NumericError("division_by_zero", "division by zero");
      return arg(0) / den;
    }
    case Op::pow: {
      T b = arg(0);
      T e = arg(1);
      if (val(b) == cplx(0.0) && (val(e).real() < 0.0 || val(e).imag() != 0.0)) {
        throw NumericError("division_by_zero", "zero raised to a negative power");
      }
      return f_pow(b, e);
    }
    case Op::neg:
      return -arg(0);
    case Op::sin:
      return sin(arg(0));
    case Op::cos:
      return cos(arg(0));
    case Op::exp:
      return exp(arg(0));
    case Op::log: {
      T u = arg(0);
      if (val(u) == cplx(0.0)) throw NumericError("log_of_zero", "log of zero");
      if constexpr (std::is_same_v<T, cplx>) {
        if (u.imag() == 0.0 && u.real() > 0.0) return cplx(std::log(u.real()));
        return std::log(u);
      } else {
        return log(u);
      }
    }
    case Op::abs:
      return f_abs(arg(0));
    case Op::sqrt:
      return f_sqrt(arg(0));
    case Op::jb:
    case Op::norm: {
      T s = make_const(vars[0], n.op == Op::jb ? cplx(1.0) : cplx(0.0));
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        T a = arg(k);
        s = s + a * a;
      }
      return f_sqrt(s);
    }
    case Op::re:
      return f_re(arg(0));
    case Op::im:
      return f_im(arg(0));
  }
  throw Error("corrupt expression tree");
}

}  // namespace

Expression Expression::parse(const std::string& source) {
  Expression e;
  e.source_ = source;
  auto nodes = std::make_shared<std::vector<Node>>();
  Parser parser(Lexer(source).run(), *nodes, e.used_);
  e.root_ = parser.parse_all();
  e.nodes_ = std::move(nodes);
  return e;
}

cplx Expression::evaluate(std::span<const cplx> vars) const {
  if (vars.size() < static_cast<std::size_t>(kSlots)) throw ValidationError("expression needs all variable slots");
  return eval_node<cplx>(*nodes_, root_, vars);
}

Jet Expression::evaluate(std::span<const Jet> vars) const {
  if (vars.size() < static_cast<std::size_t>(kSlots)) throw ValidationError("expression needs all variable slots");
  return eval_node<Jet>(*nodes_, root_, vars);
}

int Expression::max_operand() const {
  int best = 0;
  for (int j = 0; j < kMaxOperands; ++j) {
    for (int c = 0; c < kMaxCoords; ++c) {
      if (used_[static_cast<std::size_t>(k_slot(j, c))]) best = j + 1;
    }
  }
  return best;
}

int Expression::max_coordinate() const {
  int best = 0;
  for (int c = 0; c < kMaxCoords; ++c) {
    if (used_[static_cast<std::size_t>(x_slot(c))]) best = std::max(best, c + 1);
    for (int j = 0; j < kMaxOperands; ++j) {
      if (used_[static_cast<std::size_t>(k_slot(j, c))]) best = std::max(best, c + 1);
    }
  }
  return best;
}

}  // namespace fiolab
