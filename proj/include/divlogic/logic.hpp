#pragma once

#include <bitset>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace divlogic::logic {

inline constexpr int kNumVars = 8;

/// One of the eight propositional variables A..H.
class Var {
 public:
  constexpr Var() = default;
  constexpr explicit Var(int index) : index_(static_cast<std::uint8_t>(index)) {
    if (index < 0 || index >= kNumVars) throw std::out_of_range("variable index out of range");
  }

  static Var from_letter(char c);

  constexpr int index() const { return index_; }
  constexpr char letter() const { return static_cast<char>('A' + index_); }

  friend constexpr bool operator==(Var, Var) = default;
  friend constexpr auto operator<=>(Var, Var) = default;

 private:
  std::uint8_t index_ = 0;
};

/// Bit i set means variable i is present.
using VarSet = std::uint8_t;

enum class Op : std::uint8_t { Atom, Not, And, Or, Implies };

class Formula;

struct Literal {
  Var var;
  bool negated = false;

  Formula to_formula() const;
  friend bool operator==(const Literal&, const Literal&) = default;
};

Literal negate_literal(Literal l);

/// Immutable propositional formula. Copies share structure.
class Formula {
 public:
  static Formula atom(Var v);
  static Formula negation(Formula f);
  static Formula conjunction(Formula l, Formula r);
  static Formula disjunction(Formula l, Formula r);
  static Formula implication(Formula l, Formula r);

  Op op() const { return node_->op; }
  Var var() const;              // Atom only
  const Formula& operand() const;  // Not only
  const Formula& lhs() const;   // binary only
  const Formula& rhs() const;   // binary only

  VarSet variables() const { return node_->vars; }
  std::size_t size() const;

  /// Literal view if this is Atom or Not(Atom).
  std::optional<Literal> as_literal() const;

  friend bool operator==(const Formula& a, const Formula& b);

 private:
  struct Node {
    Op op;
    Var var;
    VarSet vars;
    std::vector<Formula> children;
  };
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Formula make(Op op, std::vector<Formula> children);

  std::shared_ptr<const Node> node_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " at position " + std::to_string(pos)), position_(pos) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class UnknownAtomError : public ParseError {
 public:
  using ParseError::ParseError;
};

class MissingVariableError : public std::runtime_error {
 public:
  explicit MissingVariableError(Var v)
      : std::runtime_error(std::string("valuation does not assign variable ") + v.letter()) {}
};

/// Precedence ~ > & > | > ->, with -> right-associative.
/// Accepts the Unicode operators ¬ ∧ ∨ → as well as ASCII.
Formula parse_formula(std::string_view text);

/// Canonical fully parenthesised ASCII form, e.g. "((A -> B) -> (~B -> ~A))".
std::string format_formula(const Formula& f);

/// Total assignment over a declared set of variables.
class Valuation {
 public:
  Valuation() = default;
  Valuation(VarSet declared, std::uint8_t values) : declared_(declared), values_(values & declared) {}

  void set(Var v, bool value);
  bool covers(VarSet vars) const { return (vars & ~declared_) == 0; }
  bool get(Var v) const;

 private:
  VarSet declared_ = 0;
  std::uint8_t values_ = 0;
};

bool evaluate(const Formula& f, const Valuation& v);

/// Truth table of f over all 2^8 assignments; row r assigns variable i the value of bit i of r.
using TruthTable = std::bitset<256>;
TruthTable truth_table(const Formula& f);

/// premises |= conclusion, decided by enumerating every assignment.
bool entails(std::span<const Formula> premises, const Formula& conclusion);
bool entails(std::initializer_list<Formula> premises, const Formula& conclusion);
bool is_tautology(const Formula& f);

}  // namespace divlogic::logic
