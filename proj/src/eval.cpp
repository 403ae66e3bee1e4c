#include "divlogic/eval.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <ctime>
#include <deque>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>
#include <thread>

#include "divlogic/rng.hpp"

namespace divlogic::eval {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

int qtype_rank(gen::QType q) {
  for (std::size_t i = 0; i < gen::kAllQTypes.size(); ++i)
    if (gen::kAllQTypes[i] == q) return static_cast<int>(i);
  return 0;
}

class RateLimiter {
 public:
  explicit RateLimiter(int per_minute) : cap_(per_minute) {}
  void acquire() {
    if (cap_ <= 0) return;
    std::unique_lock lock(mu_);
    for (;;) {
      const auto now = std::chrono::steady_clock::now();
      while (!stamps_.empty() && now - stamps_.front() >= std::chrono::minutes(1)) stamps_.pop_front();
      if (static_cast<int>(stamps_.size()) < cap_) {
        stamps_.push_back(now);
        return;
      }
      const auto wake = stamps_.front() + std::chrono::minutes(1);
      lock.unlock();
      std::this_thread::sleep_until(wake);
      lock.lock();
    }
  }

 private:
  int cap_;
  std::mutex mu_;
  std::deque<std::chrono::steady_clock::time_point> stamps_;
};

enum class Outcome { kOk, kFailed, kAbort };

struct CallResult {
  Outcome outcome = Outcome::kOk;
  std::string response;
  int attempts = 0;
  std::string error;
};

CallResult call_with_retry(ChatClient& client, const std::vector<ChatMessage>& messages, const RunOptions& opts,
                           RateLimiter& limiter, const std::atomic<bool>& abort) {
  CallResult res;
  int delay = std::max(0, opts.backoff_initial_ms);
  for (;;) {
    if (abort) {
      res.outcome = Outcome::kAbort;
      res.error = "run aborted";
      return res;
    }
    limiter.acquire();
    ++res.attempts;
    try {
      res.response = client.complete(messages);
      return res;
    } catch (const ChatError& e) {
      res.error = e.what();
      const bool unusable = e.status() == 401 || e.status() == 403;
      if (unusable) {
        res.outcome = Outcome::kAbort;
        return res;
      }
      if (!e.transient()) {
        res.outcome = Outcome::kFailed;
        return res;
      }
      if (res.attempts > opts.max_retries) {
        res.outcome = Outcome::kAbort;
        res.error = "retries exhausted: " + res.error;
        return res;
      }
    } catch (const std::exception& e) {
      res.outcome = Outcome::kFailed;
      res.error = e.what();
      return res;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    delay = std::min(std::max(1, delay * 2), std::max(1, opts.backoff_max_ms));
  }
}

// Runs fn(i) for i in [0, n) on up to `width` threads until stop() is true.
void parallel_for(std::size_t n, int width, const std::function<void(std::size_t)>& fn,
                  const std::atomic<bool>& stop) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; !stop && (i = next++) < n;) fn(i);
  };
  const auto threads = static_cast<std::size_t>(std::max(1, width));
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
}

}  // namespace

Item item_from_record(const dataset::Record& r) {
  if (!r.rendered()) throw ConfigError("record " + r.id + " has no text fields; render the dataset first");
  return Item{r.id, r.qtype, *r.content_text, *r.question_text, *r.options_text, r.gold_index};
}

std::vector<Item> items_from_records(const std::vector<dataset::Record>& records) {
  std::vector<Item> out;
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second) throw ConfigError("duplicate instance id " + r.id);
    out.push_back(item_from_record(r));
  }
  return out;
}

ShotSet make_shot_set(const std::vector<Item>& shots, const std::set<std::string>& eval_ids, std::string header) {
  if (shots.size() != 3) throw ConfigError("a shot set needs exactly 3 examples, got " + std::to_string(shots.size()));
  ShotSet set;
  set.header = std::move(header);
  std::array<bool, 3> seen{};
  for (const auto& s : shots) {
    const int k = qtype_rank(s.qtype);
    if (seen[static_cast<std::size_t>(k)])
      throw ConfigError("shot set has two examples of type " + std::string(gen::to_string(s.qtype)));
    if (eval_ids.count(s.id)) throw ConfigError("shot " + s.id + " is also in the evaluation set");
    seen[static_cast<std::size_t>(k)] = true;
    set.shots[static_cast<std::size_t>(k)] = s;
  }
  return set;
}

std::vector<dataset::Record> sample_shots(const std::vector<dataset::Record>& pool,
                                          const std::set<std::string>& exclude, std::uint64_t seed) {
  std::vector<dataset::Record> out;
  CounterRng root(seed);
  for (std::size_t k = 0; k < gen::kAllQTypes.size(); ++k) {
    std::vector<const dataset::Record*> candidates;
    for (const auto& r : pool) {
      const bool polished = r.metadata.value("polish_applied", false);
      if (r.qtype == gen::kAllQTypes[k] && r.rendered() && !polished && !exclude.count(r.id))
        candidates.push_back(&r);
    }
    if (candidates.empty())
      throw ConfigError("no unpolished rendered item of type " + std::string(gen::to_string(gen::kAllQTypes[k])));
    auto rng = root.split(k);
    out.push_back(*candidates[rng.index(candidates.size())]);
  }
  return out;
}

std::string format_item(const Item& item, int rotation) {
  std::string out = item.content + "\n" + item.question;
  for (int pos = 0; pos < 4; ++pos) {
    const auto id = metrics::MutantSet::identity_at(rotation, pos);
    out += "\n";
    out += kLetters[static_cast<std::size_t>(pos)];
    out += ". " + item.options[static_cast<std::size_t>(id)];
  }
  return out;
}

std::string build_prompt(const Item& item, int rotation, const ShotSet* shots) {
  std::string out(kZeroShotInstruction);
  out += "\n";
  if (shots) {
    if (!shots->header.empty()) out += shots->header + "\n\n";
    for (const auto& s : shots->shots) {
      out += format_item(s, 0);
      out += "\nAnswer: ";
      out += kLetters[static_cast<std::size_t>(s.gold_index)];
      out += "\n\n";
    }
  }
  out += format_item(item, rotation);
  return out;
}

std::optional<int> extract_answer(std::string_view response) {
  static const std::regex re(R"(answer\s*:[\s*_(\[<"'`]*([abcd])(?![a-z0-9]))", std::regex::icase);
  const std::string text(response);
  std::optional<int> found;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it)
    found = std::toupper(static_cast<unsigned char>((*it)[1].str()[0])) - 'A';
  if (found) return found;

  std::string bare = trim(text);
  while (!bare.empty() && std::string_view("([*<\"'`").find(bare.front()) != std::string_view::npos) bare.erase(0, 1);
  while (!bare.empty() && std::string_view(")]*>.\"'`").find(bare.back()) != std::string_view::npos) bare.pop_back();
  if (bare.size() == 1) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(bare[0])));
    if (c >= 'A' && c <= 'D') return c - 'A';
  }
  return std::nullopt;
}

std::map<std::string, std::string> parse_kv(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> load_kv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kv(ss.str());
}

EndpointConfig EndpointConfig::from_kv(const std::map<std::string, std::string>& kv) {
  EndpointConfig c;
  auto to_int = [](const std::string& k, const std::string& v) {
    try {
      std::size_t used = 0;
      const int x = std::stoi(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw ConfigError("endpoint config: " + k + " must be an integer");
    }
  };
  for (const auto& [k, v] : kv) {
    if (k == "base_url") c.base_url = v;
    else if (k == "path") c.path = v;
    else if (k == "model") c.model = v;
    else if (k == "token_env") c.token_env = v;
    else if (k == "temperature") {
      try {
        c.temperature = std::stod(v);
      } catch (const std::exception&) {
        throw ConfigError("endpoint config: temperature must be a number");
      }
    } else if (k == "timeout_seconds") c.timeout_seconds = to_int(k, v);
    else if (k == "max_retries") c.max_retries = to_int(k, v);
    else if (k == "max_in_flight") c.max_in_flight = to_int(k, v);
    else if (k == "per_minute") c.per_minute = to_int(k, v);
    else if (k == "backoff_initial_ms") c.backoff_initial_ms = to_int(k, v);
    else if (k == "backoff_max_ms") c.backoff_max_ms = to_int(k, v);
    else if (k == "messages_field") c.messages_field = v;
    else if (k == "content_pointer") c.content_pointer = v;
    else throw ConfigError("endpoint config: unknown key '" + k + "'");
  }
  if (c.base_url.empty()) throw ConfigError("endpoint config: base_url is required");
  if (c.max_in_flight < 1) throw ConfigError("endpoint config: max_in_flight must be at least 1");
  if (c.max_retries < 0 || c.per_minute < 0) throw ConfigError("endpoint config: negative limit");
  return c;
}

EndpointConfig EndpointConfig::load(const std::filesystem::path& path) { return from_kv(load_kv(path)); }

json EndpointConfig::to_json() const {
  return {{"base_url", base_url},
          {"path", path},
          {"model", model},
          {"token_env", token_env},
          {"temperature", temperature},
          {"timeout_seconds", timeout_seconds},
          {"max_retries", max_retries},
          {"max_in_flight", max_in_flight},
          {"per_minute", per_minute},
          {"backoff_initial_ms", backoff_initial_ms},
          {"backoff_max_ms", backoff_max_ms},
          {"messages_field", messages_field},
          {"content_pointer", content_pointer}};
}

json RunRecord::to_json() const {
  return {{"run_id", run_id},
          {"instance_id", instance_id},
          {"rotation", rotation},
          {"prompt", prompt},
          {"response", response},
          {"extracted", letter ? json(std::string(1, kLetters[static_cast<std::size_t>(*letter)])) : json("Unparseable")},
          {"predicted_identity", predicted ? json(*predicted) : json(nullptr)},
          {"gold_identity", gold},
          {"started_at", started_at},
          {"finished_at", finished_at},
          {"attempts", attempts}};
}

RunRecord RunRecord::from_json(const json& j) {
  RunRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.instance_id = j.at("instance_id").get<std::string>();
  r.rotation = j.at("rotation").get<int>();
  if (r.rotation < 0 || r.rotation >= 4) throw std::invalid_argument("rotation out of range");
  r.prompt = j.value("prompt", "");
  r.response = j.value("response", "");
  const auto ex = j.at("extracted").get<std::string>();
  if (ex.size() == 1 && ex[0] >= 'A' && ex[0] <= 'D') r.letter = ex[0] - 'A';
  if (!j.at("predicted_identity").is_null()) r.predicted = j["predicted_identity"].get<int>();
  r.gold = j.at("gold_identity").get<int>();
  r.started_at = j.value("started_at", "");
  r.finished_at = j.value("finished_at", "");
  r.attempts = j.value("attempts", 0);
  return r;
}

std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read records: " + path.string());
  std::vector<RunRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(RunRecord::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ConfigError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

RecordStore::RecordStore(const std::filesystem::path& path) : path_(path) {
  if (std::filesystem::exists(path)) {
    for (auto& r : read_records(path)) {
      keys_.insert({r.run_id, r.instance_id, r.rotation});
      records_.push_back(std::move(r));
    }
  }
}

bool RecordStore::contains(const RecordKey& key) const {
  std::lock_guard lock(mu_);
  return keys_.count(key) > 0;
}

void RecordStore::append(const RunRecord& r) {
  std::lock_guard lock(mu_);
  if (!keys_.insert({r.run_id, r.instance_id, r.rotation}).second)
    throw std::logic_error("duplicate record key for " + r.instance_id);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw ConfigError("cannot append to " + path_.string());
  out << r.to_json().dump() << '\n';
  out.flush();
  records_.push_back(r);
}

std::vector<RunRecord> RecordStore::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

RunOptions run_options(const EndpointConfig& cfg, std::string run_id, const ShotSet* shots) {
  RunOptions o;
  o.run_id = std::move(run_id);
  o.shots = shots;
  o.max_in_flight = cfg.max_in_flight;
  o.per_minute = cfg.per_minute;
  o.max_retries = cfg.max_retries;
  o.backoff_initial_ms = cfg.backoff_initial_ms;
  o.backoff_max_ms = cfg.backoff_max_ms;
  return o;
}

RunStatus RunSummary::status() const {
  if (aborted) return RunStatus::kAborted;
  if (failed) return RunStatus::kPartial;
  return RunStatus::kComplete;
}

RunSummary run_eval(const std::vector<Item>& items, ChatClient& client, RecordStore& store, const RunOptions& opts) {
  RunSummary summary;
  std::vector<std::pair<std::size_t, int>> todo;
  for (std::size_t i = 0; i < items.size(); ++i)
    for (int r = 0; r < 4; ++r) {
      if (store.contains({opts.run_id, items[i].id, r}))
        ++summary.skipped_existing;
      else
        todo.emplace_back(i, r);
    }

  RateLimiter limiter(opts.per_minute);
  std::atomic<bool> abort{false};
  std::atomic<std::size_t> written{0}, failed{0};
  std::mutex reason_mu;

  parallel_for(
      todo.size(), opts.max_in_flight,
      [&](std::size_t t) {
        const auto& item = items[todo[t].first];
        const int rotation = todo[t].second;
        RunRecord rec;
        rec.run_id = opts.run_id;
        rec.instance_id = item.id;
        rec.rotation = rotation;
        rec.prompt = build_prompt(item, rotation, opts.shots);
        rec.gold = item.gold_index;
        rec.started_at = utc_now();
        const auto res = call_with_retry(client, {{"user", rec.prompt}}, opts, limiter, abort);
        if (res.outcome == Outcome::kAbort) {
          std::lock_guard lock(reason_mu);
          if (!abort.exchange(true)) summary.abort_reason = res.error;
          return;
        }
        if (res.outcome == Outcome::kFailed) {
          ++failed;
          return;
        }
        rec.finished_at = utc_now();
        rec.attempts = res.attempts;
        rec.response = res.response;
        rec.letter = extract_answer(res.response);
        if (rec.letter) rec.predicted = metrics::MutantSet::identity_at(rotation, *rec.letter);
        store.append(rec);
        ++written;
      },
      abort);

  summary.written = written;
  summary.failed = failed;
  summary.aborted = abort;
  return summary;
}

ScoredRun score_records(const std::vector<RunRecord>& records, const std::vector<Item>& items, double alpha,
                        const std::string& run_id) {
  std::string run = run_id;
  if (run.empty()) {
    std::set<std::string> runs;
    for (const auto& r : records) runs.insert(r.run_id);
    if (runs.size() > 1) throw ConfigError("records hold several runs; choose one run id");
    if (!runs.empty()) run = *runs.begin();
  }
  std::map<std::string, std::array<std::optional<metrics::Prediction>, 4>> seen;
  for (const auto& r : records) {
    if (r.run_id != run) continue;
    auto& slot = seen[r.instance_id][static_cast<std::size_t>(r.rotation)];
    if (slot) throw ConfigError("duplicate record for " + r.instance_id + " rotation " + std::to_string(r.rotation));
    slot = r.predicted;
  }
  ScoredRun out;
  std::vector<metrics::InstanceScore> scores;
  for (const auto& item : items) {
    auto it = seen.find(item.id);
    const bool complete =
        it != seen.end() && std::all_of(it->second.begin(), it->second.end(), [](const auto& p) { return p.has_value(); });
    if (!complete) {
      ++out.incomplete;
      continue;
    }
    metrics::MutantPredictionSet p;
    p.gold = item.gold_index;
    for (std::size_t r = 0; r < 4; ++r) p.predicted[r] = *it->second[r];
    scores.push_back(metrics::score_instance(item.id, std::string(gen::to_string(item.qtype)), p, alpha));
  }
  if (scores.empty()) throw ConfigError("run '" + run + "' has no instance with all four rotations recorded");
  out.report = metrics::aggregate(std::move(scores), alpha);
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
  return out.str();
}

json RunManifest::to_json() const {
  return {{"run_id", run_id},
          {"dataset_sha256", dataset_hash},
          {"endpoint", endpoint},
          {"shots_sha256", shots_hash ? json(*shots_hash) : json(nullptr)},
          {"started_at", started_at},
          {"finished_at", finished_at},
          {"summary", summary}};
}

json ProbeResult::to_json() const {
  return {{"total", total},     {"matches", matches},           {"failed", failed},
          {"rate", rate()},     {"aborted", aborted},           {"abort_reason", abort_reason},
          {"masking", kProbeMasking}};
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

std::string probe_prompt(const Item& item, int masked) {
  std::string out =
      "One option of the following multiple-choice question has been replaced by " + std::string(kMaskToken) +
      ". Reply with the exact text of the hidden option and nothing else.\n";
  out += item.content + "\n" + item.question;
  for (int pos = 0; pos < 4; ++pos) {
    out += "\n";
    out += kLetters[static_cast<std::size_t>(pos)];
    out += ". " + (pos == masked ? std::string(kMaskToken) : item.options[static_cast<std::size_t>(pos)]);
  }
  return out;
}

ProbeResult contamination_probe(const std::vector<Item>& items, ChatClient& client, const RunOptions& opts) {
  ProbeResult res;
  RateLimiter limiter(opts.per_minute);
  std::atomic<bool> abort{false};
  std::atomic<std::size_t> total{0}, matches{0}, failed{0};
  std::mutex reason_mu;
  parallel_for(
      items.size(), opts.max_in_flight,
      [&](std::size_t i) {
        const auto& item = items[i];
        const int masked = item.gold_index == 0 ? 1 : 0;
        const auto call = call_with_retry(client, {{"user", probe_prompt(item, masked)}}, opts, limiter, abort);
        if (call.outcome == Outcome::kAbort) {
          std::lock_guard lock(reason_mu);
          if (!abort.exchange(true)) res.abort_reason = call.error;
          return;
        }
        if (call.outcome == Outcome::kFailed) {
          ++failed;
          return;
        }
        ++total;
        if (normalize_whitespace(call.response) == normalize_whitespace(item.options[static_cast<std::size_t>(masked)]))
          ++matches;
      },
      abort);
  res.total = total;
  res.matches = matches;
  res.failed = failed;
  res.aborted = abort;
  return res;
}

}  // namespace divlogic::eval
