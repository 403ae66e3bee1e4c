#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "divlogic/generator.hpp"
#include "divlogic/nl/corpus.hpp"
#include "divlogic/nl/polish.hpp"
#include "divlogic/nl/tagger.hpp"
#include "divlogic/nl/templates.hpp"

namespace divlogic::nl {

class RenderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SegmentPolish {
  std::string segment;  // "content", "question", "option_0" ...
  PolishLog log;
};

struct RenderedInstance {
  std::string id;
  gen::QType qtype = gen::QType::k3c1e;
  std::string content_text;
  std::string question_text;
  std::array<std::string, 4> option_texts;
  int gold_index = 0;
  Assignment assignment;
  gen::SymbolicInstance symbolic;
  std::optional<std::vector<SegmentPolish>> polish_log;
};

struct RenderOptions {
  bool prefer_corpus_contradictions = true;
  int max_option_attempts = 10;
};

/// Strips terminal punctuation and lowercases the first letter when the first
/// word is a function word, so the sentence can sit inside a template.
std::string to_clause(std::string_view sentence, const PosTagger& tagger);
/// Capitalises the first letter and ends with a full stop.
std::string to_sentence(std::string_view clause);

/// Fills assignment.vars[*].used and assignment.negations as it goes.
RenderedInstance render(const gen::SymbolicInstance& inst, Assignment assignment, const SentencePool& pool,
                        const TemplateBank& bank, const PosTagger& tagger, CounterRng& rng,
                        const RenderOptions& opts = {});

/// Formula strings in place of sentences, the bank's first stem per type.
RenderedInstance render_symbolic(const gen::SymbolicInstance& inst, const TemplateBank& bank);

/// Polishes content, question and each option separately and logs each segment.
void polish_instance(RenderedInstance& r, ChatClient* client, int trials, const ApproveFn& approve = {});

}  // namespace divlogic::nl
