#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "divlogic/chat.hpp"

namespace divlogic::nl {

inline constexpr std::string_view kPolishPrompt =
    "Correct only the grammar of the following text with minimal changes. Don't remove any sentence, change "
    "content structure, or make unnecessary changes in wording, especially don't modify conjunction words and "
    "don't add any new punctuation. Return the complete text after correction.";

/// Minimum longest-common-substring ratio, exclusive, for an edit to be kept.
inline constexpr double kMinFragmentRatio = 0.5;

struct FragmentEdit {
  std::size_t fragment = 0;
  std::string original;
  std::string proposed;
  double ratio = 0;
  bool accepted = false;
  std::string reason;  // "ratio", "rejected-by-reviewer", or empty when accepted
};

struct PolishTrial {
  bool valid = false;
  std::string error;
  std::vector<FragmentEdit> edits;
  std::size_t modification = 0;  // summed edit distance of accepted edits
};

struct PolishLog {
  std::vector<PolishTrial> trials;
  std::optional<std::size_t> chosen;
};

struct PolishResult {
  std::string text;
  PolishLog log;
};

using ApproveFn = std::function<bool(const FragmentEdit&)>;

/// Sentence fragments: split after '.', '!' or '?' followed by whitespace, and at newlines.
std::vector<std::string> split_fragments(std::string_view text);

std::size_t longest_common_substring(std::string_view a, std::string_view b);
std::size_t levenshtein(std::string_view a, std::string_view b);
/// Longest common substring over the longer length; 1 for two empty strings.
double fragment_ratio(std::string_view original, std::string_view proposed);

/// Best-effort grammar correction. A null client means offline mode and
/// returns the text unchanged. Each trial is one request; a trial whose reply
/// fails or changes the fragment count is discarded. Among valid trials the
/// one with the smallest modification wins, earliest on ties, and the
/// reviewer callback (if any) then vets its edits one by one.
PolishResult grammar_polish(std::string_view text, ChatClient* client, int trials, const ApproveFn& approve = {});

}  // namespace divlogic::nl
