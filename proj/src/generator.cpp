#include "divlogic/generator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

namespace divlogic::gen {

using logic::entails;
using logic::Op;

std::string_view to_string(QType q) {
  switch (q) {
    case QType::k3c1e:
      return "3c1e";
    case QType::k3e1c:
      return "3e1c";
    case QType::kMissingPremise:
      return "missing_premise";
  }
  return "?";
}

QType parse_qtype(std::string_view s) {
  if (s == "3c1e") return QType::k3c1e;
  if (s == "3e1c") return QType::k3e1c;
  if (s == "missing_premise" || s == "missing") return QType::kMissingPremise;
  throw std::invalid_argument("unknown question type '" + std::string(s) + "'");
}

std::string_view to_string(RuleSchema s) {
  switch (s) {
    case RuleSchema::kContraposition:
      return "contraposition";
    case RuleSchema::kNegatedConjunction:
      return "negated_conjunction";
    case RuleSchema::kDisjunctiveAntecedent:
      return "disjunctive_antecedent";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Rule schemas

namespace {

Formula lit(Literal l) { return l.to_formula(); }
Formula neg(const Formula& f) {
  if (auto l = f.as_literal(); l && l->negated) return lit(logic::negate_literal(*l));
  return Formula::negation(f);
}

}  // namespace

Formula RuleInstance::antecedent() const {
  const auto& [a, b, c] = slots;
  switch (schema) {
    case RuleSchema::kContraposition:
      return Formula::implication(lit(a), lit(b));
    case RuleSchema::kNegatedConjunction:
      return Formula::implication(Formula::negation(Formula::conjunction(lit(a), lit(b))), lit(c));
    case RuleSchema::kDisjunctiveAntecedent:
      return Formula::implication(Formula::disjunction(lit(a), lit(b)), lit(c));
  }
  throw std::logic_error("bad schema");
}

// Double negation of a negated slot collapses so consequents stay literal->literal.
Formula RuleInstance::consequent() const {
  const auto& [a, b, c] = slots;
  switch (schema) {
    case RuleSchema::kContraposition:
      return Formula::implication(neg(lit(b)), neg(lit(a)));
    case RuleSchema::kNegatedConjunction:
      return Formula::implication(neg(lit(a)), lit(c));
    case RuleSchema::kDisjunctiveAntecedent:
      return Formula::implication(lit(a), lit(c));
  }
  throw std::logic_error("bad schema");
}

Formula RuleInstance::full() const { return Formula::implication(antecedent(), consequent()); }

std::vector<Var> RuleInstance::consumed() const {
  if (schema == RuleSchema::kNegatedConjunction) return {slots[0].var, slots[1].var, slots[2].var};
  return {slots[0].var, slots[1].var};
}

RuleInstance instantiate_rule(RuleSchema schema, Literal a, Literal b, Literal c) {
  return RuleInstance{schema, {a, b, c}};
}

// ---------------------------------------------------------------------------
// Content

void GenConfig::validate() const {
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  if (count_3c1e < 0 || count_3e1c < 0 || count_missing < 0)
    throw std::invalid_argument("question-type counts must be non-negative");
  if (max_attempts_per_instance < 1) throw std::invalid_argument("max_attempts_per_instance must be >= 1");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

int sample_proposition_count(int n, CounterRng& rng) {
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  return static_cast<int>(rng.uniform_int(2, n + 1));
}

std::array<double, logic::kNumVars> variable_weights(const OccurrenceCounter& o, int n) {
  const int max_o = *std::max_element(o.begin(), o.end());
  std::array<double, logic::kNumVars> w{};
  double total = 0;
  for (int i = 0; i < logic::kNumVars; ++i) {
    if (o[i] >= n)
      w[i] = 0.0;
    else if (o[i] == n - 1)
      w[i] = 0.1;
    else
      w[i] = static_cast<double>(max_o + 1 - o[i]);
    total += w[i];
  }
  if (total <= 0) throw GenerationExhausted("every variable reached its occurrence cap");
  for (auto& x : w) x /= total;
  return w;
}

RuleInstance sample_rule_instance(const std::array<Var, 3>& vars, CounterRng& rng) {
  if (vars[0] == vars[1] || vars[0] == vars[2] || vars[1] == vars[2])
    throw std::invalid_argument("rule instance needs three distinct variables");
  const auto schema = static_cast<RuleSchema>(rng.uniform_int(0, 2));
  return instantiate_rule(schema, {vars[0], false}, {vars[1], false}, {vars[2], false});
}

Content build_content(const GenConfig& cfg, CounterRng& rng) {
  Content out;
  auto& o = out.occurrences;
  const int l = sample_proposition_count(cfg.n, rng);
  for (int i = 0; i < l; ++i) {
    auto weights = variable_weights(o, cfg.n);
    std::array<Var, 3> picked;
    for (auto& slot : picked) {
      if (std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0; }) == 0)
        throw GenerationExhausted("fewer than three variables remain below the occurrence cap");
      const auto k = rng.weighted_index(weights);
      slot = Var(static_cast<int>(k));
      weights[k] = 0;
    }
    auto rule = sample_rule_instance(picked, rng);
    for (Var v : rule.consumed()) ++o[v.index()];
    out.propositions.push_back(rule.antecedent());
    out.rules.push_back(rule);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Candidate pool

std::vector<Formula> candidate_formulas(logic::VarSet vars) {
  std::vector<Literal> lits;
  for (int i = 0; i < logic::kNumVars; ++i) {
    if (!((vars >> i) & 1)) continue;
    lits.push_back({Var(i), false});
    lits.push_back({Var(i), true});
  }
  std::vector<Formula> out;
  for (const auto& l : lits) out.push_back(l.to_formula());
  for (const auto& a : lits)
    for (const auto& b : lits)
      if (a.var != b.var) out.push_back(Formula::implication(a.to_formula(), b.to_formula()));
  return out;
}

CandidatePool build_candidate_pool(const std::vector<Formula>& content, const OccurrenceCounter& o, int n) {
  if (content.empty()) throw std::invalid_argument("content must be nonempty");
  CandidatePool pool;
  for (int k = 0; k < logic::kNumVars; ++k)
    if (o[k] > 0 && o[k] < n) pool.restricted_vars |= static_cast<logic::VarSet>(1u << k);
  if (pool.restricted_vars == 0) throw PoolTooSmall("no variable has an occurrence count in (0, n)");

  for (auto& cand : candidate_formulas(pool.restricted_vars)) {
    if (!entails(content, cand)) {
      pool.not_entailed.push_back(std::move(cand));
      continue;
    }
    const bool single = std::any_of(content.begin(), content.end(),
                                    [&](const Formula& q) { return entails({q}, cand); });
    (single ? pool.single_derivable : pool.entailed).push_back(std::move(cand));
  }
  return pool;
}

// ---------------------------------------------------------------------------
// Question types

namespace {

std::vector<Formula> pick_distinct(const std::vector<Formula>& from, std::size_t k, CounterRng& rng) {
  std::vector<std::size_t> idx(from.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  // partial Fisher-Yates
  std::vector<Formula> out;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + rng.index(idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(from[idx[i]]);
  }
  return out;
}

SymbolicInstance assemble(QType q, std::vector<Formula> content, const Formula& gold,
                          std::vector<Formula> others, CounterRng& rng) {
  std::vector<std::pair<Formula, bool>> opts;
  opts.emplace_back(gold, true);
  for (auto& o : others) opts.emplace_back(std::move(o), false);
  rng.shuffle(opts);
  SymbolicInstance inst;
  inst.qtype = q;
  inst.content = std::move(content);
  for (std::size_t i = 0; i < opts.size(); ++i) {
    if (opts[i].second) inst.gold_index = static_cast<int>(i);
    inst.options.push_back(std::move(opts[i].first));
  }
  return inst;
}

}  // namespace

SymbolicInstance make_3c1e(const std::vector<Formula>& content, const CandidatePool& pool, CounterRng& rng) {
  if (pool.entailed.empty() || pool.not_entailed.size() < 3)
    throw PoolTooSmall("3c1e needs >= 1 entailed and >= 3 non-entailed candidates");
  const auto gold = pool.entailed[rng.index(pool.entailed.size())];
  return assemble(QType::k3c1e, content, gold, pick_distinct(pool.not_entailed, 3, rng), rng);
}

SymbolicInstance make_3e1c(const std::vector<Formula>& content, const CandidatePool& pool, CounterRng& rng) {
  if (pool.entailed.size() < 3 || pool.not_entailed.empty())
    throw PoolTooSmall("3e1c needs >= 3 entailed and >= 1 non-entailed candidates");
  const auto gold = pool.not_entailed[rng.index(pool.not_entailed.size())];
  return assemble(QType::k3e1c, content, gold, pick_distinct(pool.entailed, 3, rng), rng);
}

SymbolicInstance make_missing_premise(const std::vector<Formula>& content, const CandidatePool& pool,
                                      CounterRng& rng) {
  if (pool.entailed.empty()) throw PoolTooSmall("missing premise needs >= 1 entailed candidate");

  struct Choice {
    std::size_t conclusion;
    std::size_t removed;
  };
  std::vector<Choice> choices;
  for (std::size_t c = 0; c < pool.entailed.size(); ++c) {
    for (std::size_t j = 0; j < content.size(); ++j) {
      std::vector<Formula> reduced = content;
      reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(j));
      if (!entails(reduced, pool.entailed[c])) choices.push_back({c, j});
    }
  }
  if (choices.empty()) throw NoNecessaryPremise("every proposition is redundant for every conclusion");

  // Try choices in random order until one admits three valid distractors.
  rng.shuffle(choices);
  for (const auto& ch : choices) {
    const auto& conclusion = pool.entailed[ch.conclusion];
    std::vector<Formula> reduced = content;
    reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(ch.removed));
    const Formula gold = content[ch.removed];

    std::vector<Formula> valid;
    for (const auto& d : pool.not_entailed) {
      if (d == gold) continue;
      auto with = reduced;
      with.push_back(d);
      if (!entails(with, conclusion)) valid.push_back(d);
    }
    if (valid.size() < 3) continue;
    auto inst = assemble(QType::kMissingPremise, reduced, gold, pick_distinct(valid, 3, rng), rng);
    inst.conclusion = conclusion;
    return inst;
  }
  throw PoolTooSmall("no conclusion admits three non-restoring distractors");
}

bool satisfies_invariant(const SymbolicInstance& inst) {
  if (inst.options.size() != 4 || inst.gold_index < 0 || inst.gold_index > 3) return false;
  const auto& gold = inst.options[static_cast<std::size_t>(inst.gold_index)];
  switch (inst.qtype) {
    case QType::k3c1e: {
      if (!entails(inst.content, gold)) return false;
      for (int j = 0; j < 4; ++j)
        if (j != inst.gold_index && entails(inst.content, inst.options[static_cast<std::size_t>(j)])) return false;
      for (const auto& q : inst.content)
        if (entails({q}, gold)) return false;
      return true;
    }
    case QType::k3e1c: {
      if (entails(inst.content, gold)) return false;
      for (int j = 0; j < 4; ++j)
        if (j != inst.gold_index && !entails(inst.content, inst.options[static_cast<std::size_t>(j)])) return false;
      return true;
    }
    case QType::kMissingPremise: {
      if (!inst.conclusion) return false;
      if (entails(inst.content, *inst.conclusion)) return false;
      for (int j = 0; j < 4; ++j) {
        auto with = inst.content;
        with.push_back(inst.options[static_cast<std::size_t>(j)]);
        if (entails(with, *inst.conclusion) != (j == inst.gold_index)) return false;
      }
      return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Driver

namespace {

QType qtype_for_ordinal(const GenConfig& cfg, std::uint64_t ord) {
  if (ord < static_cast<std::uint64_t>(cfg.count_3c1e)) return QType::k3c1e;
  if (ord < static_cast<std::uint64_t>(cfg.count_3c1e + cfg.count_3e1c)) return QType::k3e1c;
  return QType::kMissingPremise;
}

struct Outcome {
  std::optional<SymbolicInstance> instance;
  std::string last_error;
};

Outcome generate_one(const GenConfig& cfg, std::uint64_t ordinal) {
  const QType q = qtype_for_ordinal(cfg, ordinal);
  const CounterRng base = CounterRng(cfg.seed).split(ordinal);
  Outcome out;
  for (int attempt = 0; attempt < cfg.max_attempts_per_instance; ++attempt) {
    CounterRng rng = base.split(static_cast<std::uint64_t>(attempt));
    try {
      auto content = build_content(cfg, rng);
      auto pool = build_candidate_pool(content.propositions, content.occurrences, cfg.n);
      SymbolicInstance inst;
      switch (q) {
        case QType::k3c1e:
          inst = make_3c1e(content.propositions, pool, rng);
          break;
        case QType::k3e1c:
          inst = make_3e1c(content.propositions, pool, rng);
          break;
        case QType::kMissingPremise:
          inst = make_missing_premise(content.propositions, pool, rng);
          break;
      }
      char id[48];
      std::snprintf(id, sizeof id, "s%llu-%s-%06llu", static_cast<unsigned long long>(cfg.seed),
                    std::string(to_string(q)).c_str(), static_cast<unsigned long long>(ordinal));
      inst.id = id;
      inst.trace = SeedTrace{std::string(CounterRng::kAlgorithm), cfg.seed, ordinal, attempt};
      out.instance = std::move(inst);
      return out;
    } catch (const GenerationExhausted& e) {
      out.last_error = e.what();
    } catch (const PoolTooSmall& e) {
      out.last_error = e.what();
    } catch (const NoNecessaryPremise& e) {
      out.last_error = e.what();
    }
  }
  return out;
}

}  // namespace

GenerationReport generate(const GenConfig& cfg, const std::function<void(const SymbolicInstance&)>& sink) {
  cfg.validate();
  GenerationReport report;
  const auto total = static_cast<std::uint64_t>(cfg.total());
  auto handle = [&](std::uint64_t ord, Outcome& o) {
    if (o.instance) {
      sink(*o.instance);
      ++report.emitted;
    } else {
      report.skipped.push_back({ord, qtype_for_ordinal(cfg, ord), o.last_error});
    }
  };

  if (cfg.threads == 1) {
    for (std::uint64_t ord = 0; ord < total; ++ord) {
      auto o = generate_one(cfg, ord);
      handle(ord, o);
    }
    return report;
  }

  std::vector<Outcome> results(total);
  std::atomic<std::uint64_t> next{0};
  {
    std::vector<std::jthread> workers;
    for (int t = 0; t < cfg.threads; ++t)
      workers.emplace_back([&] {
        for (auto ord = next++; ord < total; ord = next++) results[ord] = generate_one(cfg, ord);
      });
  }
  for (std::uint64_t ord = 0; ord < total; ++ord) handle(ord, results[ord]);
  return report;
}

std::vector<SymbolicInstance> generate(const GenConfig& cfg, GenerationReport* report) {
  std::vector<SymbolicInstance> out;
  auto r = generate(cfg, [&](const SymbolicInstance& s) { out.push_back(s); });
  if (report) *report = std::move(r);
  return out;
}

}  // namespace divlogic::gen
