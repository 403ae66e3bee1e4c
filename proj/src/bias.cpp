#include "divlogic/bias.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "divlogic/rng.hpp"

namespace divlogic::bias {

namespace {

bool is_lead_punct(char c) { return std::string_view("\"'`([{<").find(c) != std::string_view::npos; }
bool is_trail_punct(char c) { return std::string_view(".,;:!?\"')]}>").find(c) != std::string_view::npos; }

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool iends_with(std::string_view s, std::string_view suffix) {
  if (s.size() < suffix.size()) return false;
  for (std::size_t i = 0; i < suffix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[s.size() - suffix.size() + i])) != suffix[i]) return false;
  return true;
}

// Splits a word into stem + clitic ("doesn't" -> "does" "n't", "he's" -> "he" "'s").
void split_clitic(std::string word, std::vector<std::string>& out) {
  if (word.size() > 3 && iends_with(word, "n't")) {
    out.push_back(word.substr(0, word.size() - 3));
    out.push_back(word.substr(word.size() - 3));
    return;
  }
  for (std::string_view c : {"'s", "'re", "'ve", "'ll", "'d", "'m"}) {
    if (word.size() > c.size() && iends_with(word, c)) {
      out.push_back(word.substr(0, word.size() - c.size()));
      out.push_back(word.substr(word.size() - c.size()));
      return;
    }
  }
  out.push_back(std::move(word));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& opts) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view chunk = text.substr(i, j - i);
    i = j;
    if (chunk.empty()) continue;

    while (!chunk.empty() && is_lead_punct(chunk.front()) && chunk.size() > 1) {
      out.emplace_back(1, chunk.front());
      chunk.remove_prefix(1);
    }
    std::vector<std::string> trailing;
    while (chunk.size() > 1 && is_trail_punct(chunk.back())) {
      trailing.emplace_back(1, chunk.back());
      chunk.remove_suffix(1);
    }
    if (!chunk.empty()) split_clitic(std::string(chunk), out);
    out.insert(out.end(), trailing.rbegin(), trailing.rend());
  }
  if (opts.lowercase)
    for (auto& t : out) t = lower(std::move(t));
  return out;
}

void TokenFrequency::add(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) ++counts[t];
  total += tokens.size();
}

void TokenFrequency::merge(const TokenFrequency& other) {
  for (const auto& [t, c] : other.counts) counts[t] += c;
  total += other.total;
}

TokenFrequency count_tokens(const std::vector<std::string>& texts, const TokenizerOptions& opts) {
  TokenFrequency f;
  for (const auto& t : texts) f.add(tokenize(t, opts));
  return f;
}

std::size_t vocab_size(const std::vector<std::string>& texts, const TokenizerOptions& opts) {
  if (texts.empty()) throw std::invalid_argument("vocab_size: empty dataset");
  std::set<std::string> vocab;
  for (const auto& t : texts)
    for (auto& tok : tokenize(t, opts)) vocab.insert(std::move(tok));
  return vocab.size();
}

TokenFrequency subsample_reference(const std::vector<std::string>& documents, std::uint64_t token_budget,
                                   std::uint64_t seed, const TokenizerOptions& opts) {
  if (token_budget == 0) throw std::invalid_argument("subsample_reference: token budget must be positive");
  std::vector<std::vector<std::string>> toks;
  std::uint64_t corpus_total = 0;
  for (const auto& d : documents) {
    toks.push_back(tokenize(d, opts));
    corpus_total += toks.back().size();
  }
  if (corpus_total == 0) throw std::invalid_argument("subsample_reference: reference corpus has no tokens");

  TokenFrequency out;
  if (token_budget >= corpus_total) {
    for (const auto& t : toks) out.add(t);
    return out;
  }
  std::vector<std::size_t> order(documents.size());
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(seed);
  rng.shuffle(order);
  for (auto idx : order) {
    if (out.total >= token_budget) break;
    out.add(toks[idx]);
  }
  return out;
}

double kl_divergence(const TokenFrequency& p, const TokenFrequency& q, double epsilon) {
  if (!(epsilon > 0)) throw std::invalid_argument("kl_divergence: epsilon must be positive");
  if (p.total == 0 || q.total == 0) throw std::invalid_argument("kl_divergence: empty distribution");
  std::set<std::string> vocab;
  for (const auto& [t, _] : p.counts) vocab.insert(t);
  for (const auto& [t, _] : q.counts) vocab.insert(t);
  const double v = static_cast<double>(vocab.size());
  const double zp = static_cast<double>(p.total) + epsilon * v;
  const double zq = static_cast<double>(q.total) + epsilon * v;
  auto count = [](const TokenFrequency& f, const std::string& t) {
    auto it = f.counts.find(t);
    return it == f.counts.end() ? 0.0 : static_cast<double>(it->second);
  };
  double d = 0;
  for (const auto& t : vocab) {
    const double pt = (count(p, t) + epsilon) / zp;
    const double qt = (count(q, t) + epsilon) / zq;
    d += pt * std::log(pt / qt);
  }
  return d;
}

}  // namespace divlogic::bias
