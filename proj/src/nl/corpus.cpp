#include "divlogic/nl/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace divlogic::nl {

namespace {

class UnionFind {
 public:
  std::size_t add() {
    parent_.push_back(parent_.size());
    return parent_.size() - 1;
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

Coarse parse_coarse(const std::string& t) {
  if (t == "VERB") return Coarse::Verb;
  if (t == "AUX") return Coarse::Aux;
  if (t == "NOUN" || t == "PROPN" || t == "PRON") return Coarse::Noun;
  return Coarse::Other;
}

struct Builder {
  UnionFind uf;
  std::vector<std::string> sentences;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::pair<std::size_t, std::string>> contradictions;

  std::size_t intern(const std::string& s) {
    auto [it, fresh] = index.emplace(s, sentences.size());
    if (fresh) {
      sentences.push_back(s);
      uf.add();
    }
    return it->second;
  }
};

}  // namespace

bool passes_pos_filters(const std::vector<Coarse>& tags) {
  if (tags.empty() || tags.front() == Coarse::Verb || tags.front() == Coarse::Aux) return false;
  return std::find(tags.begin(), tags.end(), Coarse::Verb) != tags.end();
}

SentencePool ingest_corpus(std::istream& in, const PosTagger& tagger, const std::string& source) {
  Builder b;
  auto keep = [&](const std::string& s) { return !s.empty() && passes_pos_filters(s, tagger); };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty()) continue;
    nlohmann::json j;
    if (text.front() == '{') {
      j = nlohmann::json::parse(text, nullptr, false);
      if (j.is_discarded()) throw CorpusError(source + ":" + std::to_string(lineno) + ": malformed JSON");
    }
    if (j.is_object() && j.contains("sentence1") && j.contains("sentence2")) {
      const auto s1 = trim(j["sentence1"].get<std::string>());
      const auto s2 = trim(j["sentence2"].get<std::string>());
      const auto label = j.value("gold_label", std::string("neutral"));
      if (!keep(s1)) continue;
      const auto a = b.intern(s1);
      if (!keep(s2)) continue;
      if (label == "contradiction")
        b.contradictions.emplace_back(a, s2);
      else if (label == "entailment")
        b.uf.unite(a, b.intern(s2));
      else
        b.intern(s2);
    } else if (j.is_object() && j.contains("sentence") && j.contains("tags")) {
      const auto s = trim(j["sentence"].get<std::string>());
      std::vector<Coarse> tags;
      for (const auto& t : j["tags"]) tags.push_back(parse_coarse(t.get<std::string>()));
      if (tags.size() != split_words(s).size())
        throw CorpusError(source + ":" + std::to_string(lineno) + ": tag count does not match word count");
      if (passes_pos_filters(tags)) b.intern(s);
    } else if (j.is_object()) {
      throw CorpusError(source + ":" + std::to_string(lineno) + ": unrecognised record");
    } else if (keep(text)) {
      b.intern(text);
    }
  }
  if (b.sentences.empty()) throw CorpusError(source + ": no sentence survived the POS filters");

  std::map<std::size_t, std::size_t> group_of_root;
  SentencePool pool;
  for (std::size_t i = 0; i < b.sentences.size(); ++i) {
    const auto root = b.uf.find(i);
    auto [it, fresh] = group_of_root.emplace(root, pool.groups.size());
    if (fresh) pool.groups.push_back(SentenceGroup{{}, {}, source});
    pool.groups[it->second].paraphrases.push_back(b.sentences[i]);
  }
  for (const auto& [x, text] : b.contradictions) {
    auto& group = pool.groups[group_of_root.at(b.uf.find(x))];
    const bool paraphrase =
        std::find(group.paraphrases.begin(), group.paraphrases.end(), text) != group.paraphrases.end();
    if (!paraphrase && std::find(group.contradictions.begin(), group.contradictions.end(), text) ==
                           group.contradictions.end())
      group.contradictions.push_back(text);
  }
  return pool;
}

SentencePool ingest_corpus(const std::filesystem::path& path, const PosTagger& tagger) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot read corpus file: " + path.string());
  return ingest_corpus(in, tagger, path.filename().string());
}

std::vector<std::pair<logic::Var, int>> variable_occurrences(const gen::SymbolicInstance& inst) {
  std::vector<std::pair<logic::Var, int>> out;
  auto visit = [&](auto&& self, const logic::Formula& f) -> void {
    if (f.op() == logic::Op::Atom) {
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == f.var(); });
      if (it == out.end())
        out.emplace_back(f.var(), 1);
      else
        ++it->second;
      return;
    }
    if (f.op() == logic::Op::Not) return self(self, f.operand());
    self(self, f.lhs());
    self(self, f.rhs());
  };
  for (const auto& f : inst.content) visit(visit, f);
  if (inst.conclusion) visit(visit, *inst.conclusion);
  for (const auto& f : inst.options) visit(visit, f);
  return out;
}

Assignment assign_sentences(const gen::SymbolicInstance& inst, const SentencePool& pool, CounterRng& rng) {
  const auto occ = variable_occurrences(inst);
  if (occ.size() > pool.groups.size())
    throw PoolExhausted("instance " + inst.id + " needs " + std::to_string(occ.size()) + " sentence groups, pool has " +
                        std::to_string(pool.groups.size()));
  std::vector<std::size_t> order(pool.groups.size());
  std::iota(order.begin(), order.end(), 0);
  // partial Fisher-Yates: only the first occ.size() slots are needed
  for (std::size_t i = 0; i < occ.size(); ++i) {
    const auto j = i + static_cast<std::size_t>(rng.index(order.size() - i));
    std::swap(order[i], order[j]);
  }
  Assignment a;
  for (std::size_t i = 0; i < occ.size(); ++i) a.vars[occ[i].first.index()].group = order[i];
  return a;
}

}  // namespace divlogic::nl
