#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace divlogic::nl {

enum class Coarse { Verb, Aux, Noun, Other };

/// Penn-style fine tags, only as detailed as filtering and negation need.
enum class Fine {
  VB,   // base form after to / modal / do
  VBP,  // non-3sg present
  VBZ,  // 3sg present
  VBD,  // past
  VBN,  // past participle
  VBG,  // gerund / present participle
  MD,   // modal
  NN,
  NNS,
  PRP,
  DT,
  IN,
  CC,
  RB,
  TO,
  NEG,  // not / n't
  X,
};

/// A whitespace-delimited word split into leading punctuation, core and trailing punctuation.
struct Word {
  std::string lead;
  std::string core;
  std::string trail;
};

struct TaggedWord {
  Word word;
  Coarse coarse = Coarse::Other;
  Fine fine = Fine::X;
};

std::vector<Word> split_words(std::string_view sentence);
std::string join_words(const std::vector<Word>& words);

class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual std::vector<TaggedWord> tag(std::string_view sentence) const = 0;
};

/// Closed-class word lists, a verb lexicon with irregular forms, and suffix
/// heuristics for words outside the lexicon. Deterministic.
class RuleBasedTagger final : public PosTagger {
 public:
  std::vector<TaggedWord> tag(std::string_view sentence) const override;
};

/// Morphology over the bundled verb lexicon (regular rules for unknown verbs).
struct VerbForms {
  std::string base, third_singular, past, past_participle, gerund;
};
VerbForms verb_forms(std::string_view lemma);
/// Lemma and tag for an inflected verb form, if it looks like a verb.
std::optional<std::pair<std::string, Fine>> analyse_verb(std::string_view form);
bool in_verb_lexicon(std::string_view lemma);
/// Plural common nouns the tagger knows by name (people, children, ...).
bool is_known_plural_noun(std::string_view word);

/// Ingestion filters: drop sentences whose first word is VERB or AUX, and
/// sentences with no VERB at all.
bool passes_pos_filters(const std::vector<TaggedWord>& tagged);
bool passes_pos_filters(std::string_view sentence, const PosTagger& tagger);

class NoVerbError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Negates the main predicate: removes an existing not/n't and restores the
/// verb form, or adds n't to an auxiliary / do-support (don't, doesn't, didn't)
/// before a lexical verb. Present-participle predicates without an auxiliary
/// get is/are/am reintroduced first.
std::string negate_sentence(std::string_view sentence, const PosTagger& tagger);

}  // namespace divlogic::nl
