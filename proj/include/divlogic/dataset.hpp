#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "divlogic/generator.hpp"
#include "divlogic/nl/render.hpp"

namespace divlogic::dataset {

class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Record {
  std::string id;
  gen::QType qtype = gen::QType::k3c1e;
  std::vector<std::string> content_symbolic;
  std::optional<std::string> conclusion_symbolic;
  std::array<std::string, 4> options_symbolic;
  int gold_index = 0;
  std::optional<std::string> content_text;
  std::optional<std::string> question_text;
  std::optional<std::array<std::string, 4>> options_text;
  nlohmann::json metadata = nlohmann::json::object();

  bool rendered() const { return content_text.has_value(); }
};

Record from_symbolic(const gen::SymbolicInstance& inst, const gen::GenConfig& cfg);
/// Adds the text fields and rendering metadata to a symbolic record.
Record with_rendering(Record base, const nl::RenderedInstance& r, const std::string& bank_version, bool symbolic_mode);
gen::SymbolicInstance to_symbolic(const Record& r);

nlohmann::json to_json(const Record& r);
/// Validates the schema; throws DatasetError without a line number.
Record from_json(const nlohmann::json& j);

/// Reads a JSONL dataset. Every malformed line is reported, each with its
/// line number, in one DatasetError.
std::vector<Record> read(std::istream& in);
std::vector<Record> read(const std::filesystem::path& path);
void write(std::ostream& out, const std::vector<Record>& records);
void write(const std::filesystem::path& path, const std::vector<Record>& records);

}  // namespace divlogic::dataset
