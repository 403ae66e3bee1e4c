#include "divlogic/nl/polish.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace divlogic::nl {

namespace {

struct Split {
  std::vector<std::string> parts;
  std::vector<std::string> seps;  // seps[i] follows parts[i]
};

Split split_keep(std::string_view text) {
  Split s;
  std::size_t start = 0, i = 0;
  auto push = [&](std::size_t end, std::size_t next) {
    s.parts.emplace_back(text.substr(start, end - start));
    s.seps.emplace_back(text.substr(end, next - end));
    start = next;
  };
  while (i < text.size()) {
    const char c = text[i];
    const bool terminal = c == '.' || c == '!' || c == '?';
    if ((terminal && i + 1 < text.size() && std::isspace(static_cast<unsigned char>(text[i + 1]))) || c == '\n') {
      const std::size_t end = c == '\n' ? i : i + 1;
      std::size_t next = end;
      while (next < text.size() && std::isspace(static_cast<unsigned char>(text[next]))) ++next;
      push(end, next);
      i = next;
      continue;
    }
    ++i;
  }
  if (start < text.size()) push(text.size(), text.size());
  std::size_t w = 0;
  for (std::size_t r = 0; r < s.parts.size(); ++r) {
    if (s.parts[r].empty() && w > 0) {
      s.seps[w - 1] += s.seps[r];
      continue;
    }
    if (w != r) {
      s.parts[w] = std::move(s.parts[r]);
      s.seps[w] = std::move(s.seps[r]);
    }
    ++w;
  }
  s.parts.resize(w);
  s.seps.resize(w);
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<std::string> split_fragments(std::string_view text) { return split_keep(text).parts; }

std::size_t longest_common_substring(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double fragment_ratio(std::string_view original, std::string_view proposed) {
  const auto longest = std::max(original.size(), proposed.size());
  if (longest == 0) return 1.0;
  return static_cast<double>(longest_common_substring(original, proposed)) / static_cast<double>(longest);
}

PolishResult grammar_polish(std::string_view text, ChatClient* client, int trials, const ApproveFn& approve) {
  if (trials < 1) throw std::invalid_argument("grammar_polish: trials must be at least 1");
  PolishResult result{std::string(text), {}};
  if (!client) return result;

  const auto original = split_keep(text);
  const std::vector<ChatMessage> request = {{"user", std::string(kPolishPrompt) + "\n\n" + std::string(text)}};

  for (int t = 0; t < trials; ++t) {
    PolishTrial trial;
    try {
      const auto reply = split_fragments(trim(client->complete(request)));
      if (reply.size() != original.parts.size()) {
        trial.error = "fragment count changed from " + std::to_string(original.parts.size()) + " to " +
                      std::to_string(reply.size());
      } else {
        trial.valid = true;
        for (std::size_t i = 0; i < reply.size(); ++i) {
          if (reply[i] == original.parts[i]) continue;
          FragmentEdit e{i, original.parts[i], reply[i], fragment_ratio(original.parts[i], reply[i]), false, {}};
          e.accepted = e.ratio > kMinFragmentRatio;
          if (e.accepted)
            trial.modification += levenshtein(e.original, e.proposed);
          else
            e.reason = "ratio";
          trial.edits.push_back(std::move(e));
        }
      }
    } catch (const ChatError& e) {
      trial.error = e.what();
    }
    result.log.trials.push_back(std::move(trial));
  }

  for (std::size_t t = 0; t < result.log.trials.size(); ++t) {
    const auto& tr = result.log.trials[t];
    if (tr.valid && (!result.log.chosen || tr.modification < result.log.trials[*result.log.chosen].modification))
      result.log.chosen = t;
  }
  if (!result.log.chosen) return result;

  auto& chosen = result.log.trials[*result.log.chosen];
  auto parts = original.parts;
  for (auto& e : chosen.edits) {
    if (!e.accepted) continue;
    if (approve && !approve(e)) {
      e.accepted = false;
      e.reason = "rejected-by-reviewer";
      chosen.modification -= levenshtein(e.original, e.proposed);
      continue;
    }
    parts[e.fragment] = e.proposed;
  }
  result.text.clear();
  for (std::size_t i = 0; i < parts.size(); ++i) result.text += parts[i] + original.seps[i];
  return result;
}

}  // namespace divlogic::nl
