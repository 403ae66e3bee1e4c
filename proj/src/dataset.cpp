#include "divlogic/dataset.hpp"

#include <fstream>

namespace divlogic::dataset {

using nlohmann::json;

namespace {

json polish_log_json(const std::vector<nl::SegmentPolish>& log) {
  json out = json::array();
  for (const auto& seg : log) {
    json trials = json::array();
    for (const auto& t : seg.log.trials) {
      json edits = json::array();
      for (const auto& e : t.edits)
        edits.push_back({{"fragment", e.fragment},
                         {"original", e.original},
                         {"proposed", e.proposed},
                         {"ratio", e.ratio},
                         {"accepted", e.accepted},
                         {"reason", e.reason}});
      trials.push_back({{"valid", t.valid}, {"error", t.error}, {"modification", t.modification}, {"edits", edits}});
    }
    out.push_back({{"segment", seg.segment},
                   {"chosen_trial", seg.log.chosen ? json(*seg.log.chosen) : json(nullptr)},
                   {"trials", trials}});
  }
  return out;
}

std::string require_string(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) throw DatasetError(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

void check_formula(const std::string& s, const char* field) {
  try {
    logic::parse_formula(s);
  } catch (const std::exception& e) {
    throw DatasetError(std::string("field '") + field + "' has an invalid formula \"" + s + "\": " + e.what());
  }
}

}  // namespace

Record from_symbolic(const gen::SymbolicInstance& inst, const gen::GenConfig& cfg) {
  Record r;
  r.id = inst.id;
  r.qtype = inst.qtype;
  for (const auto& f : inst.content) r.content_symbolic.push_back(logic::format_formula(f));
  if (inst.conclusion) r.conclusion_symbolic = logic::format_formula(*inst.conclusion);
  if (inst.options.size() != 4) throw DatasetError(inst.id + ": expected 4 options");
  for (std::size_t i = 0; i < 4; ++i) r.options_symbolic[i] = logic::format_formula(inst.options[i]);
  r.gold_index = inst.gold_index;
  r.metadata = {{"generator_version", gen::kGeneratorVersion},
                {"seed", cfg.seed},
                {"n", cfg.n},
                {"rng_algorithm", inst.trace.algorithm},
                {"rule_1c_reading", gen::kRule1cReading},
                {"ordinal", inst.trace.ordinal},
                {"attempt", inst.trace.attempt},
                {"template_bank_version", nullptr},
                {"polish_applied", false}};
  return r;
}

Record with_rendering(Record r, const nl::RenderedInstance& ri, const std::string& bank_version, bool symbolic_mode) {
  if (ri.id != r.id) throw DatasetError("rendered instance " + ri.id + " does not match record " + r.id);
  if (ri.gold_index != r.gold_index) throw DatasetError(r.id + ": rendering changed gold_index");
  r.content_text = ri.content_text;
  r.question_text = ri.question_text;
  r.options_text = ri.option_texts;
  r.metadata["template_bank_version"] = bank_version;
  r.metadata["render_mode"] = symbolic_mode ? "symbolic" : "natural";
  r.metadata["polish_applied"] = ri.polish_log.has_value();
  if (!symbolic_mode) {
    json assignment = json::object();
    for (const auto& [v, va] : ri.assignment.vars)
      assignment[std::string(1, logic::Var(v).letter())] = {{"group", va.group}, {"sentences", va.used}};
    json negations = json::array();
    for (const auto& n : ri.assignment.negations)
      negations.push_back({{"var", std::string(1, n.var.letter())}, {"path", n.path}, {"sentence", n.sentence}});
    r.metadata["assignment"] = assignment;
    r.metadata["negations"] = negations;
  }
  if (ri.polish_log) r.metadata["polish_log"] = polish_log_json(*ri.polish_log);
  return r;
}

gen::SymbolicInstance to_symbolic(const Record& r) {
  gen::SymbolicInstance s;
  s.id = r.id;
  s.qtype = r.qtype;
  for (const auto& f : r.content_symbolic) s.content.push_back(logic::parse_formula(f));
  if (r.conclusion_symbolic) s.conclusion = logic::parse_formula(*r.conclusion_symbolic);
  for (const auto& f : r.options_symbolic) s.options.push_back(logic::parse_formula(f));
  s.gold_index = r.gold_index;
  const auto& m = r.metadata;
  if (m.contains("seed") && m["seed"].is_number_unsigned()) s.trace.seed = m["seed"].get<std::uint64_t>();
  if (m.contains("ordinal") && m["ordinal"].is_number_unsigned()) s.trace.ordinal = m["ordinal"].get<std::uint64_t>();
  if (m.contains("attempt") && m["attempt"].is_number_integer()) s.trace.attempt = m["attempt"].get<int>();
  if (m.contains("rng_algorithm") && m["rng_algorithm"].is_string())
    s.trace.algorithm = m["rng_algorithm"].get<std::string>();
  return s;
}

json to_json(const Record& r) {
  json j;
  j["id"] = r.id;
  j["qtype"] = gen::to_string(r.qtype);
  j["content_symbolic"] = r.content_symbolic;
  j["conclusion_symbolic"] = r.conclusion_symbolic ? json(*r.conclusion_symbolic) : json(nullptr);
  j["options_symbolic"] = r.options_symbolic;
  j["gold_index"] = r.gold_index;
  j["content_text"] = r.content_text ? json(*r.content_text) : json(nullptr);
  j["question_text"] = r.question_text ? json(*r.question_text) : json(nullptr);
  j["options_text"] = r.options_text ? json(*r.options_text) : json(nullptr);
  j["metadata"] = r.metadata;
  return j;
}

Record from_json(const json& j) {
  if (!j.is_object()) throw DatasetError("record must be a JSON object");
  Record r;
  r.id = require_string(j, "id");
  if (r.id.empty()) throw DatasetError("field 'id' must be nonempty");
  try {
    r.qtype = gen::parse_qtype(require_string(j, "qtype"));
  } catch (const std::invalid_argument& e) {
    throw DatasetError(std::string("field 'qtype': ") + e.what());
  }

  if (!j.contains("content_symbolic") || !j["content_symbolic"].is_array() || j["content_symbolic"].empty())
    throw DatasetError("field 'content_symbolic' must be a nonempty list");
  for (const auto& f : j["content_symbolic"]) {
    if (!f.is_string()) throw DatasetError("field 'content_symbolic' must hold strings");
    check_formula(f.get<std::string>(), "content_symbolic");
    r.content_symbolic.push_back(f.get<std::string>());
  }

  if (!j.contains("conclusion_symbolic")) throw DatasetError("field 'conclusion_symbolic' is missing");
  if (!j["conclusion_symbolic"].is_null()) {
    if (!j["conclusion_symbolic"].is_string()) throw DatasetError("field 'conclusion_symbolic' must be a string or null");
    r.conclusion_symbolic = j["conclusion_symbolic"].get<std::string>();
    check_formula(*r.conclusion_symbolic, "conclusion_symbolic");
  }
  if ((r.qtype == gen::QType::kMissingPremise) != r.conclusion_symbolic.has_value())
    throw DatasetError("field 'conclusion_symbolic' must be set exactly for missing_premise items");

  if (!j.contains("options_symbolic") || !j["options_symbolic"].is_array() || j["options_symbolic"].size() != 4)
    throw DatasetError("field 'options_symbolic' must be a list of 4 strings");
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j["options_symbolic"][i].is_string()) throw DatasetError("field 'options_symbolic' must hold strings");
    r.options_symbolic[i] = j["options_symbolic"][i].get<std::string>();
    check_formula(r.options_symbolic[i], "options_symbolic");
  }

  if (!j.contains("gold_index") || !j["gold_index"].is_number_integer())
    throw DatasetError("field 'gold_index' must be an integer");
  r.gold_index = j["gold_index"].get<int>();
  if (r.gold_index < 0 || r.gold_index >= 4) throw DatasetError("field 'gold_index' must be in [0, 4)");

  auto text = [&](const char* key) -> const json* {
    if (!j.contains(key) || j[key].is_null()) return nullptr;
    return &j[key];
  };
  const json* content = text("content_text");
  const json* question = text("question_text");
  const json* options = text("options_text");
  const int present = (content != nullptr) + (question != nullptr) + (options != nullptr);
  if (present != 0 && present != 3)
    throw DatasetError("text fields must be all present or all null");
  if (present == 3) {
    if (!content->is_string() || !question->is_string())
      throw DatasetError("fields 'content_text' and 'question_text' must be strings");
    r.content_text = content->get<std::string>();
    r.question_text = question->get<std::string>();
    if (!options->is_array() || options->size() != 4) throw DatasetError("field 'options_text' must be a list of 4");
    std::array<std::string, 4> opts;
    for (std::size_t i = 0; i < 4; ++i) {
      if (!(*options)[i].is_string() || (*options)[i].get<std::string>().empty())
        throw DatasetError("field 'options_text' must hold nonempty strings");
      opts[i] = (*options)[i].get<std::string>();
    }
    r.options_text = opts;
  }

  if (!j.contains("metadata") || !j["metadata"].is_object()) throw DatasetError("field 'metadata' must be an object");
  r.metadata = j["metadata"];
  const auto& m = r.metadata;
  if (!m.contains("generator_version") || !m["generator_version"].is_string())
    throw DatasetError("metadata.generator_version must be a string");
  if (!m.contains("seed") || !m["seed"].is_number_unsigned()) throw DatasetError("metadata.seed must be an unsigned integer");
  if (!m.contains("template_bank_version") || !(m["template_bank_version"].is_null() || m["template_bank_version"].is_string()))
    throw DatasetError("metadata.template_bank_version must be a string or null");
  if (!m.contains("polish_applied") || !m["polish_applied"].is_boolean())
    throw DatasetError("metadata.polish_applied must be a boolean");
  return r;
}

std::vector<Record> read(std::istream& in) {
  std::vector<Record> out;
  std::string errors;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      out.push_back(from_json(j));
    } catch (const json::parse_error&) {
      errors += (errors.empty() ? "" : "\n") + std::string("line ") + std::to_string(lineno) + ": malformed JSON";
    } catch (const DatasetError& e) {
      errors += (errors.empty() ? "" : "\n") + std::string("line ") + std::to_string(lineno) + ": " + e.what();
    }
  }
  if (!errors.empty()) throw DatasetError(errors);
  return out;
}

std::vector<Record> read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read dataset: " + path.string());
  return read(in);
}

void write(std::ostream& out, const std::vector<Record>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

void write(const std::filesystem::path& path, const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write dataset: " + path.string());
  write(out, records);
}

}  // namespace divlogic::dataset
