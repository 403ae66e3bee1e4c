#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace divlogic::bias {

inline constexpr std::string_view kTokenizerVersion = "word-punct-clitic/1";

struct TokenizerOptions {
  bool lowercase = false;
};

/// Whitespace split, then leading/trailing punctuation and English clitics
/// ("n't", "'s", "'re", ...) become separate tokens.
std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& opts = {});

struct TokenFrequency {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;
  std::string tokenizer{kTokenizerVersion};

  void add(const std::vector<std::string>& tokens);
  void merge(const TokenFrequency& other);
};

TokenFrequency count_tokens(const std::vector<std::string>& texts, const TokenizerOptions& opts = {});

/// Distinct tokens across all texts. Throws on empty input.
std::size_t vocab_size(const std::vector<std::string>& texts, const TokenizerOptions& opts = {});

/// Documents drawn uniformly without replacement until the running token
/// count first reaches the budget. A budget at or above the corpus size
/// takes the whole corpus.
TokenFrequency subsample_reference(const std::vector<std::string>& documents, std::uint64_t token_budget,
                                   std::uint64_t seed, const TokenizerOptions& opts = {});

/// D(P || Q) in nats over the union vocabulary, with epsilon added to every
/// count of both distributions before normalising.
double kl_divergence(const TokenFrequency& p, const TokenFrequency& q, double epsilon = 1e-9);

}  // namespace divlogic::bias
