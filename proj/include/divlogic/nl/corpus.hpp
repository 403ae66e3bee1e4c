#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "divlogic/generator.hpp"
#include "divlogic/nl/tagger.hpp"
#include "divlogic/rng.hpp"

namespace divlogic::nl {

struct SentenceGroup {
  std::vector<std::string> paraphrases;
  std::vector<std::string> contradictions;
  std::string source;
};

struct SentencePool {
  std::vector<SentenceGroup> groups;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PoolExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Recognised line formats, detected per line:
///   {"sentence1": ..., "sentence2": ..., "gold_label": ...}   NLI pair
///   {"sentence": ..., "tags": ["NOUN", "VERB", ...]}           pre-tagged, one tag per word
///   anything else                                              plain sentence
/// Entailment pairs merge into one paraphrase group. For a contradiction pair
/// the second sentence is stored as a contradiction of the first sentence's
/// group and does not form a group of its own. Neutral pairs contribute both
/// sentences as separate groups.
SentencePool ingest_corpus(std::istream& in, const PosTagger& tagger, const std::string& source = "stream");
SentencePool ingest_corpus(const std::filesystem::path& path, const PosTagger& tagger);

/// Coarse-tag filter for pre-tagged input.
bool passes_pos_filters(const std::vector<Coarse>& tags);

struct VarAssignment {
  std::size_t group = 0;
  std::vector<std::string> used;  // surface sentence per occurrence, positive or negated
};

struct NegationRecord {
  logic::Var var;
  std::string sentence;
  std::string path;  // "corpus" or "rule"
};

struct Assignment {
  std::map<int, VarAssignment> vars;  // keyed by variable index
  std::vector<NegationRecord> negations;
};

/// Picks one distinct group per variable of the instance. Occurrences are
/// visited content first, then the conclusion, then the options, and the
/// k-th occurrence of a variable uses paraphrase k modulo the group size.
Assignment assign_sentences(const gen::SymbolicInstance& inst, const SentencePool& pool, CounterRng& rng);

/// Variables in first-occurrence order, with their occurrence counts.
std::vector<std::pair<logic::Var, int>> variable_occurrences(const gen::SymbolicInstance& inst);

}  // namespace divlogic::nl
