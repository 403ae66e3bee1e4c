#include "divlogic/nl/tagger.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace divlogic::nl {

namespace {

#include "lexicon.inc"

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_capitalised(std::string_view s) { return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])); }

std::string with_case_of(std::string_view like, std::string word) {
  if (is_capitalised(like) && !word.empty()) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
  return word;
}

bool ends_with(std::string_view s, std::string_view suf) {
  return s.size() >= suf.size() && s.substr(s.size() - suf.size()) == suf;
}

bool is_vowel(char c) { return std::string_view("aeiou").find(c) != std::string_view::npos; }

using WordSet = std::unordered_set<std::string>;

const WordSet& determiners() {
  static const WordSet s = {"a",     "an",    "the",   "this",    "that",    "these",  "those",  "my",
                            "your",  "his",   "her",   "its",     "our",     "their",  "some",   "any",
                            "no",    "every", "each",  "all",     "both",    "either", "neither", "several",
                            "many",  "few",   "much",  "more",    "most",    "another", "other",  "such",
                            "what",  "which", "whose", "one",     "two",     "three",  "four",   "five",
                            "six",   "seven", "eight", "nine",    "ten",     "a few",  "lots",   "plenty"};
  return s;
}
const WordSet& pronouns() {
  static const WordSet s = {"i",        "you",       "he",        "she",      "it",       "we",        "they",
                            "me",       "him",       "us",        "them",     "someone",  "somebody",  "something",
                            "everyone", "everybody", "everything", "nobody",  "nothing",  "anyone",    "anybody",
                            "anything", "who",       "herself",   "himself",  "themselves", "itself",  "myself"};
  return s;
}
const WordSet& prepositions() {
  static const WordSet s = {"in",     "on",     "at",      "by",      "for",    "with",   "about",  "against",
                            "between", "into",  "through", "during",  "before", "after",  "above",  "below",
                            "from",   "up",     "down",    "out",     "off",    "over",   "under",  "near",
                            "behind", "beside", "across",  "along",   "around", "among",  "inside", "outside",
                            "onto",   "upon",   "toward",  "towards", "without", "within", "like",  "as",
                            "of",     "than",   "past",    "beneath", "next",   "via",    "per",    "despite"};
  return s;
}
const WordSet& conjunctions() {
  static const WordSet s = {"and",  "or",    "but",  "nor",   "so",      "yet",    "because", "while", "although",
                            "though", "if",  "when", "where", "whether", "since",  "unless",  "until", "whereas"};
  return s;
}
const WordSet& adverbs() {
  static const WordSet s = {"very",  "also",  "just",      "still",   "already", "always", "often", "sometimes",
                            "usually", "really", "quite",  "too",     "here",    "there",  "now",   "then",
                            "today", "tomorrow", "yesterday", "together", "away",   "back",   "again", "soon",
                            "almost", "even",  "only",     "never",   "ever",    "rarely", "seldom", "outdoors",
                            "indoors", "home", "downstairs", "upstairs", "once",  "twice",  "well",  "hard"};
  return s;
}
const WordSet& plural_nouns() {
  static const WordSet s = {"people", "men", "women", "children", "police", "feet", "teeth", "mice", "geese", "folks",
                            "cattle", "sheep", "fish", "kids", "guys"};
  return s;
}

const WordSet& ly_nouns() {
  static const WordSet s = {"family", "belly", "jelly", "rally", "bully", "lily", "ally", "assembly", "butterfly",
                            "dragonfly", "supply", "reply", "italy", "holly", "jolly", "lolly", "gully", "trolley"};
  return s;
}

// Positive auxiliary -> negative form. "am" and some modals take a separate "not".
const std::map<std::string, std::string>& aux_negative() {
  static const std::map<std::string, std::string> m = {
      {"is", "isn't"},         {"are", "aren't"},       {"was", "wasn't"},     {"were", "weren't"},
      {"does", "doesn't"},     {"do", "don't"},         {"did", "didn't"},     {"has", "hasn't"},
      {"have", "haven't"},     {"had", "hadn't"},       {"can", "can't"},      {"could", "couldn't"},
      {"will", "won't"},       {"would", "wouldn't"},   {"should", "shouldn't"}, {"must", "mustn't"},
      {"am", "am not"},        {"may", "may not"},      {"might", "might not"}, {"shall", "shall not"}};
  return m;
}
const std::map<std::string, std::string>& aux_positive() {
  static const std::map<std::string, std::string> m = [] {
    std::map<std::string, std::string> r;
    for (const auto& [pos, neg] : aux_negative())
      if (neg.find(' ') == std::string::npos) r[neg] = pos;
    r["cannot"] = "can";
    r["mightn't"] = "might";
    r["needn't"] = "need";
    return r;
  }();
  return m;
}

const WordSet& be_forms() {
  static const WordSet s = {"am", "is", "are", "was", "were", "be", "been", "being"};
  return s;
}
const WordSet& modals() {
  static const WordSet s = {"can", "could", "will", "would", "shall", "should", "may", "might", "must"};
  return s;
}
const WordSet& do_forms() {
  static const WordSet s = {"do", "does", "did"};
  return s;
}
const WordSet& have_forms() {
  static const WordSet s = {"have", "has", "had"};
  return s;
}

Fine aux_fine(const std::string& w) {
  if (modals().count(w)) return Fine::MD;
  if (w == "is" || w == "does" || w == "has") return Fine::VBZ;
  if (w == "was" || w == "were" || w == "did" || w == "had") return Fine::VBD;
  if (w == "be") return Fine::VB;
  if (w == "been") return Fine::VBN;
  if (w == "being") return Fine::VBG;
  return Fine::VBP;
}

// ---- morphology --------------------------------------------------------------

struct Irregular {
  std::string past, participle;
};

const std::unordered_map<std::string, Irregular>& irregulars() {
  static const auto m = [] {
    std::unordered_map<std::string, Irregular> r;
    for (const auto& row : kIrregularVerbs) r[row[0]] = {row[1], row[2]};
    return r;
  }();
  return m;
}

const WordSet& doubling() {
  static const WordSet s(std::begin(kDoublingVerbs), std::end(kDoublingVerbs));
  return s;
}

std::string third_singular_of(const std::string& v) {
  if (v == "be") return "is";
  if (v == "have") return "has";
  if (v.size() >= 2 && v.back() == 'y' && !is_vowel(v[v.size() - 2])) return v.substr(0, v.size() - 1) + "ies";
  if (ends_with(v, "s") || ends_with(v, "x") || ends_with(v, "z") || ends_with(v, "ch") || ends_with(v, "sh") ||
      ends_with(v, "o"))
    return v + "es";
  return v + "s";
}

std::string regular_past_of(const std::string& v) {
  if (ends_with(v, "e")) return v + "d";
  if (v.size() >= 2 && v.back() == 'y' && !is_vowel(v[v.size() - 2])) return v.substr(0, v.size() - 1) + "ied";
  if (doubling().count(v)) return v + v.back() + "ed";
  return v + "ed";
}

std::string gerund_of(const std::string& v) {
  if (ends_with(v, "ie")) return v.substr(0, v.size() - 2) + "ying";
  if (ends_with(v, "e") && !ends_with(v, "ee") && !ends_with(v, "ye") && !ends_with(v, "oe") && v != "be")
    return v.substr(0, v.size() - 1) + "ing";
  if (doubling().count(v)) return v + v.back() + "ing";
  return v + "ing";
}

struct Analysis {
  std::string lemma;
  Fine fine;
  bool past_is_participle = false;
};

// Surface form -> analysis. Earlier insertions win, so base forms beat
// homographic past forms ("lay", "read").
const std::unordered_map<std::string, Analysis>& form_table() {
  static const auto m = [] {
    std::unordered_map<std::string, Analysis> r;
    std::vector<std::string> lemmas;
    for (const auto& row : kIrregularVerbs) lemmas.emplace_back(row[0]);
    for (const auto* v : kRegularVerbs) lemmas.emplace_back(v);
    for (const auto& l : lemmas) r.emplace(l, Analysis{l, Fine::VBP});
    for (const auto& l : lemmas) {
      const auto f = verb_forms(l);
      r.emplace(f.third_singular, Analysis{l, Fine::VBZ});
      r.emplace(f.gerund, Analysis{l, Fine::VBG});
      r.emplace(f.past, Analysis{l, Fine::VBD, f.past == f.past_participle});
      r.emplace(f.past_participle, Analysis{l, Fine::VBN});
    }
    r.erase("be");
    r.erase("is");
    r.erase("was");
    r.erase("been");
    r.erase("being");
    return r;
  }();
  return m;
}

std::optional<Analysis> analyse(const std::string& w) {
  const auto& t = form_table();
  if (auto it = t.find(w); it != t.end()) return it->second;
  if (w.size() > 5 && ends_with(w, "ing")) return Analysis{w.substr(0, w.size() - 3), Fine::VBG};
  if (w.size() > 4 && ends_with(w, "ed")) return Analysis{w.substr(0, w.size() - 2), Fine::VBD, true};
  return std::nullopt;
}

}  // namespace

VerbForms verb_forms(std::string_view lemma_view) {
  const std::string lemma(lemma_view);
  VerbForms f;
  f.base = lemma;
  f.third_singular = third_singular_of(lemma);
  f.gerund = gerund_of(lemma);
  if (auto it = irregulars().find(lemma); it != irregulars().end()) {
    f.past = it->second.past;
    f.past_participle = it->second.participle;
  } else {
    f.past = f.past_participle = regular_past_of(lemma);
  }
  return f;
}

std::optional<std::pair<std::string, Fine>> analyse_verb(std::string_view form) {
  if (auto a = analyse(lower(form))) return std::make_pair(a->lemma, a->fine);
  return std::nullopt;
}

bool in_verb_lexicon(std::string_view lemma) {
  const auto& t = form_table();
  auto it = t.find(std::string(lemma));
  return it != t.end() && it->second.lemma == lemma;
}

bool is_known_plural_noun(std::string_view word) { return plural_nouns().count(lower(word)) > 0; }

// ---- words ---------------------------------------------------------------------

std::vector<Word> split_words(std::string_view s) {
  static constexpr std::string_view kLead = "\"'`([{";
  static constexpr std::string_view kTrail = ".,;:!?\"')]}";
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j == i) break;
    std::string_view chunk = s.substr(i, j - i);
    i = j;
    Word w;
    while (chunk.size() > 1 && kLead.find(chunk.front()) != std::string_view::npos) {
      w.lead += chunk.front();
      chunk.remove_prefix(1);
    }
    std::size_t end = chunk.size();
    while (end > 1 && kTrail.find(chunk[end - 1]) != std::string_view::npos) {
      // keep the apostrophe of a trailing n't-style clitic inside the word
      --end;
    }
    w.core = std::string(chunk.substr(0, end));
    w.trail = std::string(chunk.substr(end));
    out.push_back(std::move(w));
  }
  return out;
}

std::string join_words(const std::vector<Word>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w.lead + w.core + w.trail;
  }
  return out;
}

// ---- tagging ---------------------------------------------------------------------

namespace {

std::string normalise(std::string_view core) {
  std::string w = lower(core);
  for (std::size_t p; (p = w.find("\xE2\x80\x99")) != std::string::npos;) w.replace(p, 3, "'");
  return w;
}

bool is_plural_head(const TaggedWord& t) {
  const auto w = normalise(t.word.core);
  if (t.fine == Fine::PRP) return w == "we" || w == "they" || w == "you" || w == "us" || w == "them";
  return t.fine == Fine::NNS || plural_nouns().count(w);
}

}  // namespace

std::vector<TaggedWord> RuleBasedTagger::tag(std::string_view sentence) const {
  std::vector<TaggedWord> out;
  for (auto& w : split_words(sentence)) out.push_back(TaggedWord{std::move(w)});
  const std::size_t n = out.size();
  std::vector<std::string> lw(n);
  for (std::size_t i = 0; i < n; ++i) lw[i] = normalise(out[i].word.core);

  auto set = [&](std::size_t i, Coarse c, Fine f) {
    out[i].coarse = c;
    out[i].fine = f;
  };
  std::vector<bool> done(n, false);

  // closed classes
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = lw[i];
    done[i] = true;
    if (w == "not" || w == "n't") {
      set(i, Coarse::Other, Fine::NEG);
    } else if (aux_positive().count(w)) {
      set(i, Coarse::Aux, aux_fine(aux_positive().at(w)));
    } else if (be_forms().count(w) || modals().count(w)) {
      set(i, Coarse::Aux, aux_fine(w));
    } else if (w == "to") {
      set(i, Coarse::Other, Fine::TO);
    } else if (pronouns().count(w)) {
      set(i, Coarse::Noun, Fine::PRP);
    } else if (determiners().count(w)) {
      set(i, Coarse::Other, Fine::DT);
    } else if (prepositions().count(w)) {
      set(i, Coarse::Other, Fine::IN);
    } else if (conjunctions().count(w)) {
      set(i, Coarse::Other, Fine::CC);
    } else if (adverbs().count(w) ||
               (w.size() > 4 && ends_with(w, "ly") && !ly_nouns().count(w) && (i == 0 || !determiners().count(lw[i - 1])))) {
      set(i, Coarse::Other, Fine::RB);
    } else if (!w.empty() && std::isdigit(static_cast<unsigned char>(w[0]))) {
      set(i, Coarse::Other, Fine::DT);
    } else {
      done[i] = false;
    }
  }

  auto next_content = [&](std::size_t i) {
    std::size_t j = i + 1;
    while (j < n && done[j] && (out[j].fine == Fine::RB || out[j].fine == Fine::NEG)) ++j;
    return j;
  };
  auto prev_fine = [&](std::size_t i) -> std::optional<Fine> {
    for (std::size_t j = i; j-- > 0;)
      if (!(done[j] && (out[j].fine == Fine::RB || out[j].fine == Fine::NEG))) return out[j].fine;
    return std::nullopt;
  };

  // do / have: auxiliary when followed by a base form / participle, else lexical.
  for (std::size_t i = 0; i < n; ++i) {
    if (done[i]) continue;
    const auto& w = lw[i];
    if (!do_forms().count(w) && !have_forms().count(w)) continue;
    const auto j = next_content(i);
    const auto a = j < n && !done[j] ? analyse(lw[j]) : std::nullopt;
    const bool is_do = do_forms().count(w) > 0;
    const bool aux = a && (is_do ? a->fine == Fine::VBP : (a->fine == Fine::VBN || a->past_is_participle));
    done[i] = true;
    if (aux) {
      set(i, Coarse::Aux, aux_fine(w));
      set(j, Coarse::Verb, is_do ? Fine::VB : Fine::VBN);
      done[j] = true;
    } else {
      set(i, Coarse::Verb, aux_fine(w) == Fine::VBP ? Fine::VBP : aux_fine(w));
    }
  }

  auto is_do_aux = [](const std::string& w) {
    auto it = aux_positive().find(w);
    return do_forms().count(w) > 0 || (it != aux_positive().end() && do_forms().count(it->second) > 0);
  };
  bool conjoined_subject = false;

  // open classes, left to right
  for (std::size_t i = 0; i < n; ++i) {
    if (lw[i] == "and" && out[i].fine == Fine::CC) conjoined_subject = true;
    if (done[i]) continue;
    const auto& w = lw[i];
    const auto prev = prev_fine(i);
    const bool after_np_opener = prev && (*prev == Fine::DT || *prev == Fine::IN);
    const bool after_infinitive = prev && (*prev == Fine::TO || *prev == Fine::MD ||
                                           (i > 0 && out[i - 1].coarse == Coarse::Aux && is_do_aux(lw[i - 1])));
    const std::size_t j = i + 1;
    const bool next_is_verbal =
        j < n && (be_forms().count(lw[j]) || modals().count(lw[j]) || aux_positive().count(lw[j]) ||
                  [&] {
                    auto a = analyse(lw[j]);
                    return a && (a->fine == Fine::VBZ || a->fine == Fine::VBP || a->fine == Fine::VBD);
                  }());

    auto a = analyse(w);
    bool verb = false;
    Fine fine = Fine::X;
    if (a && !after_np_opener) {
      fine = a->fine;
      if (fine == Fine::VBG || after_infinitive) {
        verb = true;
        if (after_infinitive && fine == Fine::VBP) fine = Fine::VB;
      } else if (fine == Fine::VBD || fine == Fine::VBN) {
        verb = i > 0 || a->past_is_participle;
        if (prev && i > 0 && (out[i - 1].coarse == Coarse::Aux)) fine = be_forms().count(lw[i - 1]) || have_forms().count(lw[i - 1]) ? Fine::VBN : fine;
      } else if (i == 0) {
        // sentence-initial base/3sg form: imperative if an object-like word follows
        verb = j >= n || (done[j] && (out[j].fine == Fine::DT || out[j].fine == Fine::PRP || out[j].fine == Fine::IN ||
                                      out[j].fine == Fine::TO || out[j].fine == Fine::RB));
        if (verb) fine = Fine::VB;
      } else if (!next_is_verbal) {
        // finite present needs an agreeing subject to its left
        const auto& p = out[i - 1];
        const bool plural_left = is_plural_head(p) || lw[i - 1] == "i";
        if (fine == Fine::VBP)
          verb = p.coarse == Coarse::Noun && (plural_left || conjoined_subject);
        else
          verb = (p.coarse == Coarse::Noun && !plural_left) || p.fine == Fine::CC || p.fine == Fine::RB ||
                 p.coarse == Coarse::Verb;
        if (fine == Fine::VBZ && p.coarse == Coarse::Noun && p.fine == Fine::NNS && !plural_nouns().count(lw[i - 1]))
          verb = false;
      }
    }
    if (verb) {
      set(i, Coarse::Verb, fine);
      conjoined_subject = false;
    } else if (!a && w.size() > 5 && ends_with(w, "ing") && !after_np_opener) {
      set(i, Coarse::Verb, Fine::VBG);
    } else {
      const bool plural = w.size() > 3 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us");
      set(i, Coarse::Noun, plural || plural_nouns().count(w) ? Fine::NNS : Fine::NN);
    }
    done[i] = true;
  }
  return out;
}

bool passes_pos_filters(const std::vector<TaggedWord>& tagged) {
  if (tagged.empty()) return false;
  if (tagged.front().coarse == Coarse::Verb || tagged.front().coarse == Coarse::Aux) return false;
  return std::any_of(tagged.begin(), tagged.end(), [](const TaggedWord& t) { return t.coarse == Coarse::Verb; });
}

bool passes_pos_filters(std::string_view sentence, const PosTagger& tagger) {
  return passes_pos_filters(tagger.tag(sentence));
}

// ---- negation ------------------------------------------------------------------------

namespace {

enum class Person { First, ThirdSingular, Plural };

Person subject_person(const std::vector<TaggedWord>& t, std::size_t predicate) {
  std::size_t end = predicate;
  for (std::size_t i = 1; i < predicate; ++i)
    if (t[i].fine == Fine::IN) {
      end = i;
      break;
    }
  bool conjoined = false;
  std::optional<std::size_t> head;
  for (std::size_t i = 0; i < end; ++i) {
    if (t[i].fine == Fine::CC && normalise(t[i].word.core) == "and") conjoined = true;
    if (t[i].coarse == Coarse::Noun) head = i;
  }
  if (conjoined) return Person::Plural;
  if (!head) return Person::ThirdSingular;
  const auto w = normalise(t[*head].word.core);
  if (w == "i") return Person::First;
  return is_plural_head(t[*head]) ? Person::Plural : Person::ThirdSingular;
}

void erase_word(std::vector<TaggedWord>& t, std::size_t i) {
  if (i + 1 < t.size()) t[i + 1].word.lead = t[i].word.lead + t[i + 1].word.lead;
  t.erase(t.begin() + static_cast<std::ptrdiff_t>(i));
}

void insert_word(std::vector<TaggedWord>& t, std::size_t at, std::string core) {
  TaggedWord w;
  w.word.core = std::move(core);
  if (at < t.size()) std::swap(w.word.lead, t[at].word.lead);
  t.insert(t.begin() + static_cast<std::ptrdiff_t>(at), std::move(w));
}

void set_core(TaggedWord& t, std::string core) { t.word.core = with_case_of(t.word.core, std::move(core)); }

// Re-inflects the lexical verb that followed removed do-support.
void restore_after_do(std::vector<TaggedWord>& t, std::size_t from, const std::string& do_form) {
  for (std::size_t j = from; j < t.size(); ++j) {
    if (t[j].coarse != Coarse::Verb) continue;
    const auto lemma = analyse(normalise(t[j].word.core));
    const auto forms = verb_forms(lemma ? lemma->lemma : normalise(t[j].word.core));
    if (do_form == "does")
      set_core(t[j], forms.third_singular);
    else if (do_form == "did")
      set_core(t[j], forms.past);
    else
      set_core(t[j], forms.base);
    return;
  }
}

}  // namespace

std::string negate_sentence(std::string_view sentence, const PosTagger& tagger) {
  auto t = tagger.tag(sentence);
  std::optional<std::size_t> pred;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i].coarse == Coarse::Aux || t[i].coarse == Coarse::Verb) {
      pred = i;
      break;
    }
  if (!pred) throw NoVerbError("no verb to negate in: " + std::string(sentence));
  const std::size_t p = *pred;
  const bool first_word = p == 0;
  const auto w = normalise(t[p].word.core);

  if (t[p].coarse == Coarse::Aux) {
    if (auto it = aux_positive().find(w); it != aux_positive().end()) {
      // contracted negation: "isn't" -> "is", "doesn't play" -> "plays"
      if (do_forms().count(it->second)) {
        restore_after_do(t, p + 1, it->second);
        erase_word(t, p);
      } else {
        set_core(t[p], it->second);
      }
    } else if (std::size_t q = p + 1; q < t.size() && t[q].fine == Fine::NEG) {
      if (do_forms().count(w)) {
        restore_after_do(t, q + 1, w);
        erase_word(t, q);
        erase_word(t, p);
      } else {
        erase_word(t, q);
      }
    } else {
      const auto& neg = aux_negative().at(w);
      if (auto sp = neg.find(' '); sp != std::string::npos) {
        set_core(t[p], neg.substr(0, sp));
        insert_word(t, p + 1, neg.substr(sp + 1));
        std::swap(t[p].word.trail, t[p + 1].word.trail);
      } else {
        set_core(t[p], neg);
      }
    }
  } else if (t[p].fine == Fine::VBG) {
    // participle without an auxiliary: reintroduce be, then negate it
    const auto person = subject_person(t, p);
    if (person == Person::First) {
      insert_word(t, p, "not");
      insert_word(t, p, "am");
    } else {
      insert_word(t, p, person == Person::Plural ? "aren't" : "isn't");
    }
  } else {
    const auto a = analyse(w);
    const std::string lemma = a ? a->lemma : w;
    const auto forms = verb_forms(lemma);
    std::string aux;
    if (t[p].fine == Fine::VBZ) {
      aux = "doesn't";
    } else if (t[p].fine == Fine::VBD || t[p].fine == Fine::VBN) {
      aux = "didn't";
    } else {
      const bool third = subject_person(t, p) == Person::ThirdSingular;
      aux = third && forms.past == w ? "didn't" : "don't";
    }
    set_core(t[p], forms.base);
    insert_word(t, p, aux);
  }

  if (first_word && !t.empty()) {
    auto& c = t[0].word.core;
    if (!c.empty()) c[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(c[0])));
  }
  std::vector<Word> words;
  for (auto& x : t) words.push_back(std::move(x.word));
  return join_words(words);
}

}  // namespace divlogic::nl
