#include "divlogic/nl/render.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace divlogic::nl {

using logic::Formula;
using logic::Op;

std::string to_clause(std::string_view sentence, const PosTagger& tagger) {
  std::string s(sentence);
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) || s.back() == '.' || s.back() == '!' ||
                        s.back() == '?'))
    s.pop_back();
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  s.erase(0, first);
  const auto tags = tagger.tag(s);
  if (!tags.empty() && tags[0].word.lead.empty()) {
    const auto f = tags[0].fine;
    // anything else may be a proper name and keeps its capital
    const bool lower = f == Fine::DT || f == Fine::IN || f == Fine::CC || f == Fine::RB || f == Fine::TO ||
                       is_known_plural_noun(tags[0].word.core) || (f == Fine::PRP && tags[0].word.core != "I");
    if (lower) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  }
  return s;
}

std::string to_sentence(std::string_view clause) {
  std::string s(clause);
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s + ".";
}

namespace {

class Renderer {
 public:
  Renderer(Assignment& a, const SentencePool& pool, const TemplateBank& bank, const PosTagger& tagger, CounterRng& rng,
           const RenderOptions& opts)
      : a_(a), pool_(pool), bank_(bank), tagger_(tagger), rng_(rng), opts_(opts) {}

  std::string clause(const Formula& f) {
    if (auto lit = f.as_literal()) return literal(*lit);
    switch (f.op()) {
      case Op::Implies:
        return binary(Section::kImplication, f);
      case Op::And:
        return binary(Section::kConjunction, f);
      case Op::Or:
        return binary(Section::kDisjunction, f);
      case Op::Not:
        if (f.operand().op() == Op::And) return binary(Section::kNegatedConjunction, f.operand());
        return fill(bank_.sample(Section::kNegation, rng_), {{"X", clause(f.operand())}});
      default:
        throw RenderError("unexpected formula shape");
    }
  }

  std::string option(const Formula& f) {
    if (auto lit = f.as_literal()) return fill(bank_.sample(Section::kOptionLiteral, rng_), {{"X", literal(*lit)}});
    if (f.op() == Op::Implies && f.lhs().as_literal() && f.rhs().as_literal()) {
      const auto x = clause(f.lhs());
      const auto y = clause(f.rhs());
      return fill(bank_.sample(Section::kOptionImplication, rng_), {{"X", x}, {"Y", y}});
    }
    return clause(f);
  }

  struct Snapshot {
    std::map<int, int> seen;
    std::map<int, std::size_t> used;
    std::size_t negations;
  };
  Snapshot snapshot() const {
    Snapshot s{seen_, {}, a_.negations.size()};
    for (const auto& [v, va] : a_.vars) s.used[v] = va.used.size();
    return s;
  }
  void restore(const Snapshot& s) {
    seen_ = s.seen;
    for (auto& [v, va] : a_.vars) va.used.resize(s.used.at(v));
    a_.negations.resize(s.negations);
  }

 private:
  std::string binary(Section sec, const Formula& f) {
    const auto x = clause(f.lhs());
    const auto y = clause(f.rhs());
    return fill(bank_.sample(sec, rng_), {{"X", x}, {"Y", y}});
  }

  std::string literal(const logic::Literal& lit) {
    auto it = a_.vars.find(lit.var.index());
    if (it == a_.vars.end())
      throw RenderError(std::string("assignment does not cover variable ") + lit.var.letter());
    auto& va = it->second;
    const auto& group = pool_.groups.at(va.group);
    const int k = seen_[lit.var.index()]++;
    const auto& base = group.paraphrases[static_cast<std::size_t>(k) % group.paraphrases.size()];
    std::string sentence = base;
    if (lit.negated) {
      std::string path;
      if (opts_.prefer_corpus_contradictions && !group.contradictions.empty()) {
        sentence = group.contradictions[static_cast<std::size_t>(k) % group.contradictions.size()];
        path = "corpus";
      } else {
        try {
          sentence = negate_sentence(base, tagger_);
          path = "rule";
        } catch (const NoVerbError&) {
          sentence = to_sentence(fill(bank_.templates(Section::kNegation).front(), {{"X", to_clause(base, tagger_)}}));
          path = "template";
        }
      }
      a_.negations.push_back({lit.var, sentence, path});
    }
    va.used.push_back(sentence);
    return to_clause(sentence, tagger_);
  }

  Assignment& a_;
  const SentencePool& pool_;
  const TemplateBank& bank_;
  const PosTagger& tagger_;
  CounterRng& rng_;
  const RenderOptions& opts_;
  std::map<int, int> seen_;
};

void check_options(const RenderedInstance& r) {
  std::set<std::string> distinct;
  for (const auto& o : r.option_texts) {
    if (o.empty()) throw RenderError(r.id + ": empty option text");
    distinct.insert(o);
  }
  if (distinct.size() != r.option_texts.size()) throw RenderError(r.id + ": option texts are not distinct");
}

}  // namespace

RenderedInstance render(const gen::SymbolicInstance& inst, Assignment assignment, const SentencePool& pool,
                        const TemplateBank& bank, const PosTagger& tagger, CounterRng& rng,
                        const RenderOptions& opts) {
  if (inst.options.size() != 4) throw RenderError(inst.id + ": expected 4 options");
  RenderedInstance r;
  r.id = inst.id;
  r.qtype = inst.qtype;
  r.gold_index = inst.gold_index;
  r.symbolic = inst;
  for (auto& [v, va] : assignment.vars) {
    if (va.group >= pool.groups.size()) throw RenderError(inst.id + ": assignment refers to a missing sentence group");
    va.used.clear();
  }
  assignment.negations.clear();

  Renderer ren(assignment, pool, bank, tagger, rng, opts);
  for (const auto& f : inst.content) {
    if (!r.content_text.empty()) r.content_text += ' ';
    r.content_text += to_sentence(ren.clause(f));
  }
  const auto& stem = bank.sample(question_section(inst.qtype), rng);
  if (inst.qtype == gen::QType::kMissingPremise) {
    if (!inst.conclusion) throw RenderError(inst.id + ": missing-premise instance without a conclusion");
    r.question_text = fill(stem, {{"C", ren.clause(*inst.conclusion)}});
  } else {
    r.question_text = fill(stem, {});
  }

  const auto before = ren.snapshot();
  for (int attempt = 0;; ++attempt) {
    for (std::size_t i = 0; i < 4; ++i) r.option_texts[i] = to_sentence(ren.option(inst.options[i]));
    std::set<std::string> distinct(r.option_texts.begin(), r.option_texts.end());
    if (distinct.size() == 4) break;
    if (attempt + 1 >= opts.max_option_attempts)
      throw RenderError(inst.id + ": could not render four distinct options");
    ren.restore(before);
  }
  r.assignment = std::move(assignment);
  check_options(r);
  return r;
}

RenderedInstance render_symbolic(const gen::SymbolicInstance& inst, const TemplateBank& bank) {
  RenderedInstance r;
  r.id = inst.id;
  r.qtype = inst.qtype;
  r.gold_index = inst.gold_index;
  r.symbolic = inst;
  for (const auto& f : inst.content) {
    if (!r.content_text.empty()) r.content_text += '\n';
    r.content_text += logic::format_formula(f);
  }
  const auto& stem = bank.templates(question_section(inst.qtype)).front();
  if (inst.qtype == gen::QType::kMissingPremise) {
    if (!inst.conclusion) throw RenderError(inst.id + ": missing-premise instance without a conclusion");
    r.question_text = fill(stem, {{"C", logic::format_formula(*inst.conclusion)}});
  } else {
    r.question_text = fill(stem, {});
  }
  if (inst.options.size() != 4) throw RenderError(inst.id + ": expected 4 options");
  for (std::size_t i = 0; i < 4; ++i) r.option_texts[i] = logic::format_formula(inst.options[i]);
  check_options(r);
  return r;
}

void polish_instance(RenderedInstance& r, ChatClient* client, int trials, const ApproveFn& approve) {
  std::vector<SegmentPolish> log;
  auto run = [&](const std::string& name, std::string& text) {
    auto res = grammar_polish(text, client, trials, approve);
    text = std::move(res.text);
    log.push_back({name, std::move(res.log)});
  };
  run("content", r.content_text);
  run("question", r.question_text);
  for (std::size_t i = 0; i < 4; ++i) run("option_" + std::to_string(i), r.option_texts[i]);
  r.polish_log = std::move(log);
}

}  // namespace divlogic::nl
