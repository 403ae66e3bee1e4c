#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "divlogic/generator.hpp"
#include "divlogic/rng.hpp"

namespace divlogic::nl {

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Section {
  kImplication,
  kConjunction,
  kDisjunction,
  kNegatedConjunction,
  kNegation,
  kOptionLiteral,
  kOptionImplication,
  kQuestion3c1e,
  kQuestion3e1c,
  kQuestionMissingPremise,
  kFewShotHeader,
};

std::string_view to_string(Section s);
/// Slots every template of the section must contain exactly once.
std::vector<std::string> required_slots(Section s);
Section question_section(gen::QType q);

class TemplateBank {
 public:
  /// Parses the bank text format: "version = ..." then [section] blocks,
  /// one template per line, '#' comments.
  static TemplateBank parse(std::string_view text);
  static TemplateBank load(const std::filesystem::path& path);
  /// The bank shipped in data/templates.txt, compiled in.
  static const TemplateBank& builtin();

  const std::string& version() const { return version_; }
  const std::vector<std::string>& templates(Section s) const;
  const std::string& sample(Section s, CounterRng& rng) const;

  /// Serialises back to the text format.
  std::string to_text() const;

  /// Appends a template after slot validation.
  void add(Section s, std::string tmpl);

 private:
  std::string version_;
  std::map<Section, std::vector<std::string>> sections_;
};

/// Replaces each {NAME} with its value; throws on an unknown or unfilled slot.
std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace divlogic::nl
