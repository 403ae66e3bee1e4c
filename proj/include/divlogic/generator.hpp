#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "divlogic/logic.hpp"
#include "divlogic/rng.hpp"

namespace divlogic::gen {

using logic::Formula;
using logic::Literal;
using logic::Var;

inline constexpr std::string_view kGeneratorVersion = "divlogic-gen/1";
/// Schema 1c is printed over three variables; the third sampled variable
/// fills slot C but is not counted as consumed.
inline constexpr std::string_view kRule1cReading = "third-slot-filled-not-counted";

enum class QType { k3c1e, k3e1c, kMissingPremise };

std::string_view to_string(QType q);
QType parse_qtype(std::string_view s);
inline constexpr std::array<QType, 3> kAllQTypes = {QType::k3c1e, QType::k3e1c, QType::kMissingPremise};

/// The three implication schemas used to build content.
///   contraposition:        ((A -> B) -> (~B -> ~A))
///   negated conjunction:   ((~(A & B) -> C) -> (~A -> C))
///   disjunctive antecedent: (((A | B) -> C) -> (A -> C))
enum class RuleSchema { kContraposition, kNegatedConjunction, kDisjunctiveAntecedent };

std::string_view to_string(RuleSchema s);

struct RuleInstance {
  RuleSchema schema;
  std::array<Literal, 3> slots;  // A, B, C; C unused by contraposition

  Formula full() const;        // antecedent -> consequent; always a tautology
  Formula antecedent() const;  // the part placed in the content
  Formula consequent() const;
  /// Variables that increment the occurrence counter.
  std::vector<Var> consumed() const;
};

RuleInstance instantiate_rule(RuleSchema schema, Literal a, Literal b, Literal c);

class GenerationExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class PoolTooSmall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NoNecessaryPremise : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenConfig {
  int n = 3;
  std::uint64_t seed = 0;
  int count_3c1e = 0;
  int count_3e1c = 0;
  int count_missing = 0;
  int max_attempts_per_instance = 200;
  int threads = 1;

  void validate() const;  // throws std::invalid_argument
  int total() const { return count_3c1e + count_3e1c + count_missing; }
};

using OccurrenceCounter = std::array<int, logic::kNumVars>;

int sample_proposition_count(int n, CounterRng& rng);

/// Normalised selection probabilities for the eight variables.
/// A variable used n or more times is excluded, one used n-1 times gets raw
/// weight 0.1, and any other gets max(o) + 1 - o_i.
std::array<double, logic::kNumVars> variable_weights(const OccurrenceCounter& o, int n);

RuleInstance sample_rule_instance(const std::array<Var, 3>& vars, CounterRng& rng);

struct Content {
  std::vector<RuleInstance> rules;
  std::vector<Formula> propositions;  // rules[i].antecedent()
  OccurrenceCounter occurrences{};
};

Content build_content(const GenConfig& cfg, CounterRng& rng);

struct CandidatePool {
  logic::VarSet restricted_vars = 0;
  std::vector<Formula> entailed;
  std::vector<Formula> not_entailed;
  /// Entailed by the content but also by a single proposition; dropped.
  std::vector<Formula> single_derivable;
};

/// Literals and literal->literal implications over the variables whose
/// occurrence count is strictly between 0 and n.
std::vector<Formula> candidate_formulas(logic::VarSet vars);

CandidatePool build_candidate_pool(const std::vector<Formula>& content, const OccurrenceCounter& o, int n);

struct SeedTrace {
  std::string algorithm{CounterRng::kAlgorithm};
  std::uint64_t seed = 0;
  std::uint64_t ordinal = 0;
  int attempt = 0;
};

struct SymbolicInstance {
  std::string id;
  QType qtype = QType::k3c1e;
  std::vector<Formula> content;
  std::vector<Formula> options;  // exactly four
  int gold_index = 0;
  std::optional<Formula> conclusion;  // missing-premise only
  SeedTrace trace;
};

SymbolicInstance make_3c1e(const std::vector<Formula>& content, const CandidatePool& pool, CounterRng& rng);
SymbolicInstance make_3e1c(const std::vector<Formula>& content, const CandidatePool& pool, CounterRng& rng);
SymbolicInstance make_missing_premise(const std::vector<Formula>& content, const CandidatePool& pool,
                                      CounterRng& rng);

/// Checks the question-type entailment invariant with the logic core.
bool satisfies_invariant(const SymbolicInstance& inst);

struct SkippedInstance {
  std::uint64_t ordinal;
  QType qtype;
  std::string last_error;
};

struct GenerationReport {
  std::size_t emitted = 0;
  std::vector<SkippedInstance> skipped;
};

/// Emits instances in ordinal order: all 3c1e, then 3e1c, then missing-premise.
/// Each ordinal draws from its own stream split off the seed, so the output
/// does not depend on cfg.threads.
GenerationReport generate(const GenConfig& cfg, const std::function<void(const SymbolicInstance&)>& sink);
std::vector<SymbolicInstance> generate(const GenConfig& cfg, GenerationReport* report = nullptr);

}  // namespace divlogic::gen
