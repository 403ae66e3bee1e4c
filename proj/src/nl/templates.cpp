#include "divlogic/nl/templates.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

namespace divlogic::nl {

namespace {

constexpr std::string_view kBuiltinText =
#include "templates_builtin.inc"
    ;

constexpr std::pair<Section, std::string_view> kNames[] = {
    {Section::kImplication, "implication"},
    {Section::kConjunction, "conjunction"},
    {Section::kDisjunction, "disjunction"},
    {Section::kNegatedConjunction, "negated_conjunction"},
    {Section::kNegation, "negation"},
    {Section::kOptionLiteral, "option_literal"},
    {Section::kOptionImplication, "option_implication"},
    {Section::kQuestion3c1e, "question_3c1e"},
    {Section::kQuestion3e1c, "question_3e1c"},
    {Section::kQuestionMissingPremise, "question_missing_premise"},
    {Section::kFewShotHeader, "fewshot_header"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Slot names in order of appearance; throws on an unbalanced brace.
std::vector<std::string> slots_in(std::string_view t) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '}') throw TemplateError("stray '}' in template: " + std::string(t));
    if (t[i] != '{') continue;
    const auto close = t.find('}', i);
    if (close == std::string_view::npos) throw TemplateError("unclosed slot in template: " + std::string(t));
    out.emplace_back(t.substr(i + 1, close - i - 1));
    i = close;
  }
  return out;
}

void validate(Section s, const std::string& t) {
  auto found = slots_in(t);
  auto required = required_slots(s);
  std::sort(found.begin(), found.end());
  std::sort(required.begin(), required.end());
  if (found != required)
    throw TemplateError("template in [" + std::string(to_string(s)) + "] must use each of its slots exactly once: " + t);
}

}  // namespace

std::string_view to_string(Section s) {
  for (auto [sec, name] : kNames)
    if (sec == s) return name;
  throw std::invalid_argument("unknown section");
}

std::vector<std::string> required_slots(Section s) {
  switch (s) {
    case Section::kImplication:
    case Section::kConjunction:
    case Section::kDisjunction:
    case Section::kNegatedConjunction:
    case Section::kOptionImplication:
      return {"X", "Y"};
    case Section::kNegation:
    case Section::kOptionLiteral:
      return {"X"};
    case Section::kQuestionMissingPremise:
      return {"C"};
    default:
      return {};
  }
}

Section question_section(gen::QType q) {
  switch (q) {
    case gen::QType::k3c1e:
      return Section::kQuestion3c1e;
    case gen::QType::k3e1c:
      return Section::kQuestion3e1c;
    case gen::QType::kMissingPremise:
      return Section::kQuestionMissingPremise;
  }
  throw std::invalid_argument("unknown qtype");
}

TemplateBank TemplateBank::parse(std::string_view text) {
  TemplateBank bank;
  std::optional<Section> current;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto where = "template bank line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw TemplateError(where + "bad section header");
      const auto name = line.substr(1, line.size() - 2);
      auto it = std::find_if(std::begin(kNames), std::end(kNames), [&](const auto& p) { return p.second == name; });
      if (it == std::end(kNames)) throw TemplateError(where + "unknown section [" + name + "]");
      current = it->first;
      continue;
    }
    if (!current) {
      const auto eq = line.find('=');
      if (eq == std::string::npos || trim(line.substr(0, eq)) != "version")
        throw TemplateError(where + "expected 'version = ...' before the first section");
      bank.version_ = trim(line.substr(eq + 1));
      continue;
    }
    try {
      bank.add(*current, line);
    } catch (const TemplateError& e) {
      throw TemplateError(where + e.what());
    }
  }
  if (bank.version_.empty()) throw TemplateError("template bank has no version");
  for (auto [sec, name] : kNames)
    if (bank.sections_[sec].empty()) throw TemplateError("template bank has no [" + std::string(name) + "] templates");
  return bank;
}

TemplateBank TemplateBank::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TemplateError("cannot read template bank: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const TemplateBank& TemplateBank::builtin() {
  static const TemplateBank bank = parse(kBuiltinText);
  return bank;
}

const std::vector<std::string>& TemplateBank::templates(Section s) const {
  auto it = sections_.find(s);
  if (it == sections_.end() || it->second.empty())
    throw TemplateError("missing template for [" + std::string(to_string(s)) + "]");
  return it->second;
}

const std::string& TemplateBank::sample(Section s, CounterRng& rng) const {
  const auto& v = templates(s);
  return v[rng.index(v.size())];
}

void TemplateBank::add(Section s, std::string tmpl) {
  validate(s, tmpl);
  sections_[s].push_back(std::move(tmpl));
}

std::string TemplateBank::to_text() const {
  std::string out = "version = " + version_ + "\n";
  for (const auto& [sec, list] : sections_) {
    out += "\n[" + std::string(to_string(sec)) + "]\n";
    for (const auto& t : list) out += t + "\n";
  }
  return out;
}

std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') {
      out += tmpl[i];
      continue;
    }
    const auto close = tmpl.find('}', i);
    if (close == std::string_view::npos) throw TemplateError("unclosed slot in template: " + std::string(tmpl));
    const std::string name(tmpl.substr(i + 1, close - i - 1));
    auto it = values.find(name);
    if (it == values.end()) throw TemplateError("no value for slot {" + name + "}");
    out += it->second;
    i = close;
  }
  return out;
}

}  // namespace divlogic::nl
