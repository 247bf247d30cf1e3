#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fiolab/jet.hpp"

namespace fiolab {

/// Compiled symbol expression over the variables x1, x2 (space) and kJ_I
/// (coordinate I of the J-th frequency operand). Evaluation works on plain
/// complex numbers and on jets, so parsed symbols get exact derivatives.
///
/// Grammar:
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | atom ('^' factor)?
///   atom   := number | var | 'i' | func '(' expr (',' expr)* ')' | '(' expr ')'
class Expression {
 public:
  static constexpr int kMaxOperands = 3;
  static constexpr int kMaxCoords = 2;
  /// Variable slots: 0..1 are x1, x2; then kJ_I at 2 + (J-1)*2 + (I-1).
  static constexpr int kSlots = 2 + kMaxOperands * kMaxCoords;
  static int x_slot(int coord) { return coord; }
  static int k_slot(int operand, int coord) { return 2 + operand * kMaxCoords + coord; }

  /// Throws ParseError (line/column) or ValidationError.
  static Expression parse(const std::string& source);

  /// vars has kSlots entries. Throws NumericError on division by zero or log(0).
  cplx evaluate(std::span<const cplx> vars) const;
  Jet evaluate(std::span<const Jet> vars) const;

  const std::string& source() const noexcept { return source_; }
  bool uses_slot(int slot) const { return used_[static_cast<std::size_t>(slot)]; }
  bool uses_space() const { return used_[0] || used_[1]; }
  /// Highest operand index J referenced (0 if no frequency variable appears).
  int max_operand() const;
  /// Highest coordinate index over x and k variables (0 if none).
  int max_coordinate() const;

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = 0;
  std::vector<bool> used_ = std::vector<bool>(kSlots, false);
};

}  // namespace fiolab
