#include "divlogic/logic.hpp"

#include <array>
#include <cctype>

namespace divlogic::logic {

Var Var::from_letter(char c) {
  if (c < 'A' || c > 'H') throw std::out_of_range(std::string("no variable named ") + c);
  return Var(c - 'A');
}

Formula Literal::to_formula() const {
  auto a = Formula::atom(var);
  return negated ? Formula::negation(a) : a;
}

Literal negate_literal(Literal l) { return {l.var, !l.negated}; }

Formula Formula::make(Op op, std::vector<Formula> children) {
  VarSet vars = 0;
  for (const auto& c : children) vars |= c.variables();
  return Formula(std::make_shared<const Node>(Node{op, Var(), vars, std::move(children)}));
}

Formula Formula::atom(Var v) {
  return Formula(std::make_shared<const Node>(
      Node{Op::Atom, v, static_cast<VarSet>(1u << v.index()), {}}));
}
Formula Formula::negation(Formula f) { return make(Op::Not, {std::move(f)}); }
Formula Formula::conjunction(Formula l, Formula r) { return make(Op::And, {std::move(l), std::move(r)}); }
Formula Formula::disjunction(Formula l, Formula r) { return make(Op::Or, {std::move(l), std::move(r)}); }
Formula Formula::implication(Formula l, Formula r) {
  return make(Op::Implies, {std::move(l), std::move(r)});
}

Var Formula::var() const {
  if (op() != Op::Atom) throw std::logic_error("var() on non-atom");
  return node_->var;
}
const Formula& Formula::operand() const {
  if (op() != Op::Not) throw std::logic_error("operand() on non-negation");
  return node_->children[0];
}
const Formula& Formula::lhs() const {
  if (node_->children.size() != 2) throw std::logic_error("lhs() on non-binary node");
  return node_->children[0];
}
const Formula& Formula::rhs() const {
  if (node_->children.size() != 2) throw std::logic_error("rhs() on non-binary node");
  return node_->children[1];
}

std::size_t Formula::size() const {
  std::size_t n = 1;
  for (const auto& c : node_->children) n += c.size();
  return n;
}

std::optional<Literal> Formula::as_literal() const {
  if (op() == Op::Atom) return Literal{var(), false};
  if (op() == Op::Not && operand().op() == Op::Atom) return Literal{operand().var(), true};
  return std::nullopt;
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (a.op() != b.op() || a.variables() != b.variables()) return false;
  if (a.op() == Op::Atom) return a.var() == b.var();
  const auto& ca = a.node_->children;
  const auto& cb = b.node_->children;
  for (std::size_t i = 0; i < ca.size(); ++i)
    if (!(ca[i] == cb[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

enum class Tok { Atom, Not, And, Or, Implies, LParen, RParen, End };

struct Token {
  Tok kind;
  std::size_t pos;
  char letter = 0;
};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto starts = [&](std::string_view p) { return s.substr(i, p.size()) == p; };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({Tok::LParen, i++});
    } else if (c == ')') {
      out.push_back({Tok::RParen, i++});
    } else if (c == '~' || c == '!') {
      out.push_back({Tok::Not, i++});
    } else if (c == '&') {
      out.push_back({Tok::And, i++});
    } else if (c == '|') {
      out.push_back({Tok::Or, i++});
    } else if (starts("->")) {
      out.push_back({Tok::Implies, i});
      i += 2;
    } else if (starts("¬")) {
      out.push_back({Tok::Not, i});
      i += 2;
    } else if (starts("∧")) {
      out.push_back({Tok::And, i});
      i += 3;
    } else if (starts("∨")) {
      out.push_back({Tok::Or, i});
      i += 3;
    } else if (starts("→")) {
      out.push_back({Tok::Implies, i});
      i += 3;
    } else if (std::isalpha(static_cast<unsigned char>(c))) {
      if (c < 'A' || c > 'H')
        throw UnknownAtomError(std::string("unknown atom '") + c + "'", i);
      if (i + 1 < s.size() && std::isalnum(static_cast<unsigned char>(s[i + 1])))
        throw UnknownAtomError("unknown atom '" + std::string(s.substr(i, 2)) + "...'", i);
      out.push_back({Tok::Atom, i, c});
      ++i;
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", i);
    }
  }
  out.push_back({Tok::End, s.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Formula parse() {
    auto f = implication();
    if (peek().kind != Tok::End) throw ParseError("unexpected trailing input", peek().pos);
    return f;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& next() { return toks_[i_++]; }

  Formula implication() {
    auto lhs = disjunction();
    if (peek().kind == Tok::Implies) {
      next();
      return Formula::implication(lhs, implication());
    }
    return lhs;
  }
  Formula disjunction() {
    auto f = conjunction();
    while (peek().kind == Tok::Or) {
      next();
      f = Formula::disjunction(f, conjunction());
    }
    return f;
  }
  Formula conjunction() {
    auto f = unary();
    while (peek().kind == Tok::And) {
      next();
      f = Formula::conjunction(f, unary());
    }
    return f;
  }
  Formula unary() {
    if (peek().kind == Tok::Not) {
      next();
      return Formula::negation(unary());
    }
    return primary();
  }
  Formula primary() {
    const auto& t = next();
    switch (t.kind) {
      case Tok::Atom:
        return Formula::atom(Var::from_letter(t.letter));
      case Tok::LParen: {
        auto f = implication();
        if (peek().kind != Tok::RParen) throw ParseError("expected ')'", peek().pos);
        next();
        return f;
      }
      case Tok::End:
        throw ParseError("unexpected end of input", t.pos);
      default:
        throw ParseError("expected atom or '('", t.pos);
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

void format_into(const Formula& f, std::string& out) {
  switch (f.op()) {
    case Op::Atom:
      out += f.var().letter();
      return;
    case Op::Not:
      out += '~';
      format_into(f.operand(), out);
      return;
    default:
      break;
  }
  out += '(';
  format_into(f.lhs(), out);
  out += f.op() == Op::And ? " & " : f.op() == Op::Or ? " | " : " -> ";
  format_into(f.rhs(), out);
  out += ')';
}

}  // namespace

Formula parse_formula(std::string_view text) { return Parser(lex(text)).parse(); }

std::string format_formula(const Formula& f) {
  std::string out;
  format_into(f, out);
  return out;
}

// ---------------------------------------------------------------------------
// Semantics

void Valuation::set(Var v, bool value) {
  const auto bit = static_cast<std::uint8_t>(1u << v.index());
  declared_ |= bit;
  values_ = value ? (values_ | bit) : (values_ & ~bit);
}

bool Valuation::get(Var v) const {
  const auto bit = 1u << v.index();
  if (!(declared_ & bit)) throw MissingVariableError(v);
  return values_ & bit;
}

namespace {

bool eval_covered(const Formula& f, const Valuation& v) {
  switch (f.op()) {
    case Op::Atom:
      return v.get(f.var());
    case Op::Not:
      return !eval_covered(f.operand(), v);
    case Op::And:
      return eval_covered(f.lhs(), v) && eval_covered(f.rhs(), v);
    case Op::Or:
      return eval_covered(f.lhs(), v) || eval_covered(f.rhs(), v);
    case Op::Implies:
      return !eval_covered(f.lhs(), v) || eval_covered(f.rhs(), v);
  }
  return false;
}

}  // namespace

bool evaluate(const Formula& f, const Valuation& v) {
  if (!v.covers(f.variables())) {
    for (int i = 0; i < kNumVars; ++i)
      if ((f.variables() >> i) & 1) v.get(Var(i));  // throws for the first uncovered variable
  }
  return eval_covered(f, v);
}

namespace {

const std::array<TruthTable, kNumVars>& atom_tables() {
  static const auto tables = [] {
    std::array<TruthTable, kNumVars> t{};
    for (int i = 0; i < kNumVars; ++i)
      for (int row = 0; row < 256; ++row)
        if ((row >> i) & 1) t[i].set(row);
    return t;
  }();
  return tables;
}

}  // namespace

TruthTable truth_table(const Formula& f) {
  switch (f.op()) {
    case Op::Atom:
      return atom_tables()[f.var().index()];
    case Op::Not:
      return ~truth_table(f.operand());
    case Op::And:
      return truth_table(f.lhs()) & truth_table(f.rhs());
    case Op::Or:
      return truth_table(f.lhs()) | truth_table(f.rhs());
    case Op::Implies:
      return ~truth_table(f.lhs()) | truth_table(f.rhs());
  }
  return {};
}

bool entails(std::span<const Formula> premises, const Formula& conclusion) {
  TruthTable models;
  models.set();
  for (const auto& p : premises) models &= truth_table(p);
  return (models & ~truth_table(conclusion)).none();
}

bool entails(std::initializer_list<Formula> premises, const Formula& conclusion) {
  return entails(std::span<const Formula>(premises.begin(), premises.size()), conclusion);
}

bool is_tautology(const Formula& f) { return truth_table(f).all(); }

}  // namespace divlogic::logic
