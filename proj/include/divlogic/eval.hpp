#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "divlogic/chat.hpp"
#include "divlogic/dataset.hpp"
#include "divlogic/metrics.hpp"

namespace divlogic::eval {

inline constexpr std::string_view kZeroShotInstruction =
    "You need to answer in the form of `Answer: <A/B/C/D>' without explanation.";
inline constexpr std::string_view kLetters = "ABCD";

/// Exit statuses shared by evaluate and probe.
enum class RunStatus { kComplete = 0, kPartial = 2, kAborted = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An item ready for prompting, options in canonical (rotation 0) order.
struct Item {
  std::string id;
  gen::QType qtype = gen::QType::k3c1e;
  std::string content;
  std::string question;
  std::array<std::string, 4> options;
  int gold_index = 0;
};

/// Requires the record's text fields.
Item item_from_record(const dataset::Record& r);
std::vector<Item> items_from_records(const std::vector<dataset::Record>& records);

/// One worked example per question type, in the order 3c1e, 3e1c, missing premise.
struct ShotSet {
  std::array<Item, 3> shots;
  std::string header;
};

/// Validates one shot per question type and no overlap with the evaluation ids.
ShotSet make_shot_set(const std::vector<Item>& shots, const std::set<std::string>& eval_ids,
                      std::string header);
/// Draws one unpolished record per question type, skipping excluded ids.
std::vector<dataset::Record> sample_shots(const std::vector<dataset::Record>& pool,
                                          const std::set<std::string>& exclude, std::uint64_t seed);

/// Content, question and lettered options with the options in rotation r order.
std::string format_item(const Item& item, int rotation);
std::string build_prompt(const Item& item, int rotation, const ShotSet* shots = nullptr);

/// Option letter index, or nullopt when no answer can be read.
std::optional<int> extract_answer(std::string_view response);

struct EndpointConfig {
  std::string base_url;
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string token_env = "DIVLOGIC_API_TOKEN";
  double temperature = 0.0;
  int timeout_seconds = 60;
  int max_retries = 5;
  int max_in_flight = 4;
  int per_minute = 0;  // 0: no cap
  int backoff_initial_ms = 500;
  int backoff_max_ms = 30000;
  std::string messages_field = "messages";
  std::string content_pointer = "/choices/0/message/content";

  /// Flat "key = value" lines; unknown keys are rejected.
  static EndpointConfig from_kv(const std::map<std::string, std::string>& kv);
  static EndpointConfig load(const std::filesystem::path& path);
  /// Never contains the token itself.
  nlohmann::json to_json() const;
};

/// Parses a flat "key = value" document with '#' comments.
std::map<std::string, std::string> parse_kv(std::string_view text);
std::map<std::string, std::string> load_kv(const std::filesystem::path& path);

class HttpChatClient : public ChatClient {
 public:
  /// Reads the token from the configured environment variable, if set.
  explicit HttpChatClient(EndpointConfig cfg);
  ~HttpChatClient() override;
  std::string complete(const std::vector<ChatMessage>& messages) override;

 private:
  struct Impl;
  EndpointConfig cfg_;
  std::string token_;
  std::unique_ptr<Impl> impl_;
};

struct RunRecord {
  std::string run_id;
  std::string instance_id;
  int rotation = 0;
  std::string prompt;
  std::string response;
  std::optional<int> letter;                   // nullopt: unparseable
  std::optional<metrics::OptionId> predicted;  // identity behind the letter
  metrics::OptionId gold = 0;
  std::string started_at;
  std::string finished_at;
  int attempts = 0;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

using RecordKey = std::tuple<std::string, std::string, int>;

/// Append-only JSONL record file. Existing records are loaded on open so a
/// rerun with the same run id skips them. Writes are serialised.
class RecordStore {
 public:
  explicit RecordStore(const std::filesystem::path& path);
  bool contains(const RecordKey& key) const;
  void append(const RunRecord& r);
  std::vector<RunRecord> records() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::vector<RunRecord> records_;
  std::set<RecordKey> keys_;
};

std::vector<RunRecord> read_records(const std::filesystem::path& path);

struct RunOptions {
  std::string run_id = "run";
  const ShotSet* shots = nullptr;
  int max_in_flight = 1;
  int per_minute = 0;
  int max_retries = 3;
  int backoff_initial_ms = 500;
  int backoff_max_ms = 30000;
};

RunOptions run_options(const EndpointConfig& cfg, std::string run_id, const ShotSet* shots);

struct RunSummary {
  std::size_t written = 0;
  std::size_t skipped_existing = 0;
  std::size_t failed = 0;  // permanent per-request failures
  bool aborted = false;
  std::string abort_reason;
  RunStatus status() const;
};

/// Queries every (item, rotation) not yet in the store. Transient errors are
/// retried with exponential backoff; exhausting the retries, an auth error or
/// an unreachable endpoint aborts the run. Other permanent errors skip the
/// request and mark the run partial.
RunSummary run_eval(const std::vector<Item>& items, ChatClient& client, RecordStore& store, const RunOptions& opts);

struct ScoredRun {
  metrics::ScoreReport report;
  std::size_t incomplete = 0;  // instances without all four rotations
};

/// Scores the instances with all four rotations recorded under run_id. An
/// empty run_id accepts a single run id found in the records.
ScoredRun score_records(const std::vector<RunRecord>& records, const std::vector<Item>& items, double alpha,
                        const std::string& run_id = {});

std::string sha256_file(const std::filesystem::path& path);
std::string utc_now();

struct RunManifest {
  std::string run_id;
  std::string dataset_hash;
  nlohmann::json endpoint;
  std::optional<std::string> shots_hash;
  std::string started_at;
  std::string finished_at;
  nlohmann::json summary;

  nlohmann::json to_json() const;
};

inline constexpr std::string_view kProbeMasking = "first-incorrect-option-in-canonical-order";
inline constexpr std::string_view kMaskToken = "[MASK]";

struct ProbeResult {
  std::size_t total = 0;
  std::size_t matches = 0;
  std::size_t failed = 0;
  bool aborted = false;
  std::string abort_reason;
  double rate() const { return total ? static_cast<double>(matches) / static_cast<double>(total) : 0.0; }
  nlohmann::json to_json() const;
};

std::string probe_prompt(const Item& item, int masked);
/// Collapses runs of whitespace to one space and trims.
std::string normalize_whitespace(std::string_view s);
ProbeResult contamination_probe(const std::vector<Item>& items, ChatClient& client, const RunOptions& opts);

}  // namespace divlogic::eval
