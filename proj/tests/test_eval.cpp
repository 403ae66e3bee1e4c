#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "divlogic/eval.hpp"
#include "divlogic/nl/render.hpp"

using namespace divlogic;
using namespace divlogic::eval;

namespace {

std::vector<Item> make_items(int per_type, std::uint64_t seed = 1) {
  gen::GenConfig cfg;
  cfg.seed = seed;
  cfg.count_3c1e = cfg.count_3e1c = cfg.count_missing = per_type;
  std::vector<Item> items;
  for (const auto& inst : gen::generate(cfg)) {
    const auto r = nl::render_symbolic(inst, nl::TemplateBank::builtin());
    items.push_back(Item{r.id, r.qtype, r.content_text, r.question_text, r.option_texts, r.gold_index});
  }
  return items;
}

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "divlogic_test_eval";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

class FixedClient : public ChatClient {
 public:
  explicit FixedClient(std::string reply) : reply_(std::move(reply)) {}
  std::string complete(const std::vector<ChatMessage>&) override {
    ++calls;
    return reply_;
  }
  std::atomic<int> calls{0};

 private:
  std::string reply_;
};

// Fails with the given error on the listed call numbers (1-based), answers A otherwise.
class FlakyClient : public ChatClient {
 public:
  FlakyClient(std::set<int> failing, bool transient, int status)
      : failing_(std::move(failing)), transient_(transient), status_(status) {}
  std::string complete(const std::vector<ChatMessage>&) override {
    const int n = ++calls;
    if (failing_.count(n)) throw ChatError("scripted", transient_, status_);
    return "Answer: A";
  }
  std::atomic<int> calls{0};

 private:
  std::set<int> failing_;
  bool transient_;
  int status_;
};

RunOptions fast_options(std::string run_id = "r1") {
  RunOptions o;
  o.run_id = std::move(run_id);
  o.max_retries = 3;
  o.backoff_initial_ms = 1;
  o.backoff_max_ms = 2;
  return o;
}

}  // namespace

TEST(Prompt, ZeroShotStartsWithInstruction) {
  const auto items = make_items(1);
  const auto p = build_prompt(items[0], 0);
  EXPECT_EQ(p.rfind(std::string(kZeroShotInstruction) + "\n", 0), 0u);
  EXPECT_NE(p.find("\nA. " + items[0].options[0]), std::string::npos);
  EXPECT_NE(p.find("\nD. " + items[0].options[3]), std::string::npos);
  EXPECT_EQ(p, build_prompt(items[0], 0));
}

TEST(Prompt, RotationOnlyReordersOptions) {
  const auto items = make_items(1);
  const auto& it = items[1];
  const auto base = build_prompt(it, 0);
  const auto stem_end = base.find("\nA. ");
  for (int r = 1; r < 4; ++r) {
    const auto p = build_prompt(it, r);
    EXPECT_EQ(p.substr(0, stem_end), base.substr(0, stem_end));
    for (int pos = 0; pos < 4; ++pos) {
      const std::string line = std::string("\n") + kLetters[static_cast<std::size_t>(pos)] + ". " +
                               it.options[static_cast<std::size_t>((pos + r) % 4)];
      EXPECT_NE(p.find(line), std::string::npos);
    }
  }
}

TEST(Prompt, ThreeShot) {
  const auto items = make_items(2);
  // ids 0,1 are 3c1e, 2,3 are 3e1c, 4,5 are missing premise
  const auto shots = make_shot_set({items[4], items[0], items[2]}, {items[1].id}, "Here are some examples.");
  EXPECT_EQ(shots.shots[0].qtype, gen::QType::k3c1e);
  EXPECT_EQ(shots.shots[1].qtype, gen::QType::k3e1c);
  EXPECT_EQ(shots.shots[2].qtype, gen::QType::kMissingPremise);
  const auto p = build_prompt(items[1], 0, &shots);
  EXPECT_EQ(p.rfind(std::string(kZeroShotInstruction), 0), 0u);
  std::size_t count = 0;
  for (auto pos = p.find("\nAnswer: "); pos != std::string::npos; pos = p.find("\nAnswer: ", pos + 1)) ++count;
  EXPECT_EQ(count, 3u);
  EXPECT_LT(p.find(shots.shots[0].question), p.find(shots.shots[2].question));
  EXPECT_EQ(p, build_prompt(items[1], 0, &shots));

  EXPECT_THROW(make_shot_set({items[0], items[1], items[2]}, {}, ""), ConfigError);
  EXPECT_THROW(make_shot_set({items[0], items[2], items[4]}, {items[0].id}, ""), ConfigError);
  EXPECT_THROW(make_shot_set({items[0], items[2]}, {}, ""), ConfigError);
}

TEST(Extract, Cases) {
  EXPECT_EQ(extract_answer("Answer: B"), 1);
  EXPECT_EQ(extract_answer("### Key Information\nlots of reasoning\nAnswer: A"), 0);
  EXPECT_EQ(extract_answer("I cannot decide."), std::nullopt);
  EXPECT_EQ(extract_answer("answer:(c)"), 2);
  EXPECT_EQ(extract_answer("**Answer:** D"), 3);
  EXPECT_EQ(extract_answer("Answer: **D**"), 3);
  EXPECT_EQ(extract_answer("Answer: B, no wait. Answer: C"), 2);
  EXPECT_EQ(extract_answer("Answer: Both are wrong"), std::nullopt);
  EXPECT_EQ(extract_answer("  d. "), 3);
  EXPECT_EQ(extract_answer("(A)"), 0);
  EXPECT_EQ(extract_answer("E"), std::nullopt);
  EXPECT_EQ(extract_answer(""), std::nullopt);
  for (int l = 0; l < 4; ++l) {
    const std::string norm = std::string("Answer: ") + kLetters[static_cast<std::size_t>(l)];
    EXPECT_EQ(extract_answer(norm), l);
  }
}

TEST(Endpoint, ConfigParsing) {
  const auto kv = parse_kv("# endpoint\nbase_url = http://localhost:1\nmodel = m\nmax_in_flight = 2\n");
  const auto c = EndpointConfig::from_kv(kv);
  EXPECT_EQ(c.base_url, "http://localhost:1");
  EXPECT_EQ(c.max_in_flight, 2);
  EXPECT_THROW(EndpointConfig::from_kv({{"base_url", "x"}, {"bogus", "1"}}), ConfigError);
  EXPECT_THROW(EndpointConfig::from_kv({{"model", "m"}}), ConfigError);
  EXPECT_THROW(EndpointConfig::from_kv({{"base_url", "x"}, {"max_retries", "two"}}), ConfigError);
  EXPECT_THROW(parse_kv("novalue\n"), ConfigError);
}

TEST(Run, FullCoverageAndResume) {
  const auto items = make_items(2);
  const auto path = temp_file("resume.jsonl");
  {
    FlakyClient client({8}, false, 401);
    RecordStore store(path);
    const auto s = run_eval(items, client, store, fast_options());
    EXPECT_TRUE(s.aborted);
    EXPECT_EQ(s.status(), RunStatus::kAborted);
    EXPECT_EQ(s.written, 7u);
  }
  EXPECT_EQ(read_records(path).size(), 7u);
  {
    FixedClient client("Answer: A");
    RecordStore store(path);
    const auto s = run_eval(items, client, store, fast_options());
    EXPECT_EQ(s.skipped_existing, 7u);
    EXPECT_EQ(s.written, 4 * items.size() - 7);
    EXPECT_EQ(s.status(), RunStatus::kComplete);
  }
  const auto records = read_records(path);
  EXPECT_EQ(records.size(), 4 * items.size());
  std::set<RecordKey> keys;
  for (const auto& r : records) keys.insert({r.run_id, r.instance_id, r.rotation});
  EXPECT_EQ(keys.size(), records.size());

  FixedClient again("Answer: A");
  RecordStore store(path);
  const auto s = run_eval(items, again, store, fast_options());
  EXPECT_EQ(s.written, 0u);
  EXPECT_EQ(again.calls, 0);
}

TEST(Run, RetriesTransientErrors) {
  const auto items = make_items(1);
  FlakyClient client({1, 2, 5}, true, 503);
  RecordStore store(temp_file("retry.jsonl"));
  const auto s = run_eval(items, client, store, fast_options());
  EXPECT_EQ(s.status(), RunStatus::kComplete);
  EXPECT_EQ(s.written, 12u);
  EXPECT_EQ(store.records()[0].attempts, 3);
}

TEST(Run, ExhaustedRetriesAbort) {
  const auto items = make_items(1);
  FlakyClient client({1, 2, 3, 4}, true, 0);
  RecordStore store(temp_file("exhaust.jsonl"));
  const auto s = run_eval(items, client, store, fast_options());
  EXPECT_TRUE(s.aborted);
  EXPECT_EQ(s.written, 0u);
  EXPECT_NE(s.abort_reason.find("retries exhausted"), std::string::npos);
}

TEST(Run, PermanentRequestErrorIsPartial) {
  const auto items = make_items(1);
  FlakyClient client({2}, false, 400);
  RecordStore store(temp_file("partial.jsonl"));
  const auto s = run_eval(items, client, store, fast_options());
  EXPECT_EQ(s.failed, 1u);
  EXPECT_EQ(s.written, 11u);
  EXPECT_EQ(s.status(), RunStatus::kPartial);
}

TEST(Run, ConcurrentWorkers) {
  const auto items = make_items(5);
  FixedClient client("Answer: C");
  const auto path = temp_file("concurrent.jsonl");
  RecordStore store(path);
  auto opts = fast_options();
  opts.max_in_flight = 4;
  const auto s = run_eval(items, client, store, opts);
  EXPECT_EQ(s.written, 4 * items.size());
  EXPECT_EQ(read_records(path).size(), 4 * items.size());
}

TEST(Run, DuplicateAppendRejected) {
  RecordStore store(temp_file("dup.jsonl"));
  RunRecord r;
  r.run_id = "x";
  r.instance_id = "i";
  store.append(r);
  EXPECT_THROW(store.append(r), std::logic_error);
}

TEST(Score, FixedAnswerIsHandComputable) {
  // Letter A under rotation r names identity r, so the four answers are the four
  // distinct identities: c = 1, entropy is maximal, PC = 0, CIR = 0, and ACC is 1
  // exactly when the gold option sits first.
  const auto items = make_items(4, 9);
  FixedClient client("Answer: A");
  const auto path = temp_file("score.jsonl");
  RecordStore store(path);
  run_eval(items, client, store, fast_options());
  const auto scored = score_records(read_records(path), items, 1.0);
  EXPECT_EQ(scored.incomplete, 0u);
  double gold_first = 0;
  for (const auto& it : items) gold_first += it.gold_index == 0;
  EXPECT_DOUBLE_EQ(scored.report.overall.acc, gold_first / static_cast<double>(items.size()));
  EXPECT_DOUBLE_EQ(scored.report.overall.cir, 0.0);
  EXPECT_NEAR(scored.report.overall.pc, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(scored.report.overall.mutant_acc, 0.25);
}

TEST(Score, IncompleteInstancesSkipped) {
  const auto items = make_items(1);
  std::vector<RunRecord> recs;
  for (int r = 0; r < 4; ++r) {
    RunRecord x;
    x.run_id = "a";
    x.instance_id = items[0].id;
    x.rotation = r;
    x.gold = items[0].gold_index;
    x.predicted = items[0].gold_index;
    recs.push_back(x);
  }
  auto partial = recs[0];
  partial.instance_id = items[1].id;
  recs.push_back(partial);
  const auto s = score_records(recs, items, 1.0);
  EXPECT_EQ(s.incomplete, 2u);
  EXPECT_EQ(s.report.overall.count, 1u);
  EXPECT_DOUBLE_EQ(s.report.overall.pc, 1.0);
  auto other = recs[0];
  other.run_id = "b";
  recs.push_back(other);
  EXPECT_THROW(score_records(recs, items, 1.0), ConfigError);
  EXPECT_NO_THROW(score_records(recs, items, 1.0, "a"));
}

TEST(Http, MockServerAndSecrets) {
  httplib::Server server;
  std::mutex mu;
  std::vector<std::string> auth_headers;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(mu);
      auth_headers.push_back(req.get_header_value("Authorization"));
    }
    const auto body = nlohmann::json::parse(req.body);
    EXPECT_TRUE(body.contains("messages"));
    nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "Answer: A"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("DIVLOGIC_TEST_TOKEN", "sekret-token-123", 1);
  EndpointConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "mock";
  cfg.token_env = "DIVLOGIC_TEST_TOKEN";
  HttpChatClient client(cfg);
  const auto items = make_items(1);
  const auto path = temp_file("http.jsonl");
  RecordStore store(path);
  const auto s = run_eval(items, client, store, fast_options());
  server.stop();
  t.join();

  EXPECT_EQ(s.status(), RunStatus::kComplete);
  EXPECT_EQ(s.written, 12u);
  ASSERT_FALSE(auth_headers.empty());
  EXPECT_EQ(auth_headers[0], "Bearer sekret-token-123");
  std::ifstream in(path);
  const std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(all.find("sekret"), std::string::npos);
  EXPECT_EQ(cfg.to_json().dump().find("sekret"), std::string::npos);
}

TEST(Http, ErrorsClassified) {
  httplib::Server server;
  server.Post("/unauth", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  server.Post("/busy", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  server.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  server.Post("/shape", [](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  auto call = [&](const std::string& path) {
    EndpointConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.path = path;
    HttpChatClient c(cfg);
    try {
      c.complete({{"user", "hi"}});
    } catch (const ChatError& e) {
      return std::make_pair(e.transient(), e.status());
    }
    return std::make_pair(false, -1);
  };
  EXPECT_EQ(call("/unauth"), std::make_pair(false, 401));
  EXPECT_EQ(call("/busy"), std::make_pair(true, 503));
  EXPECT_EQ(call("/bad"), std::make_pair(false, 400));
  EXPECT_EQ(call("/shape").first, false);
  server.stop();
  t.join();

  EndpointConfig dead;
  dead.base_url = "http://127.0.0.1:" + std::to_string(port);
  dead.timeout_seconds = 1;
  HttpChatClient c(dead);
  try {
    c.complete({{"user", "hi"}});
    FAIL();
  } catch (const ChatError& e) {
    EXPECT_TRUE(e.transient());
    EXPECT_EQ(e.status(), 0);
  }
}

TEST(Probe, Rates) {
  const auto items = make_items(2);
  FixedClient unrelated("Something else entirely.");
  auto r0 = contamination_probe(items, unrelated, fast_options());
  EXPECT_EQ(r0.total, items.size());
  EXPECT_DOUBLE_EQ(r0.rate(), 0.0);

  class Echo : public ChatClient {
   public:
    explicit Echo(const std::vector<Item>& items) : items_(items) {}
    std::string complete(const std::vector<ChatMessage>& m) override {
      for (const auto& it : items_)
        if (m[0].content.find(it.content + "\n" + it.question) != std::string::npos) {
          const int masked = it.gold_index == 0 ? 1 : 0;
          return "  " + it.options[static_cast<std::size_t>(masked)] + "\n";
        }
      return "";
    }

   private:
    const std::vector<Item>& items_;
  } echo(items);
  auto r1 = contamination_probe(items, echo, fast_options());
  EXPECT_DOUBLE_EQ(r1.rate(), 1.0);
  EXPECT_EQ(r1.to_json()["masking"], std::string(kProbeMasking));

  const auto p = probe_prompt(items[0], 1);
  EXPECT_NE(p.find("B. [MASK]"), std::string::npos);
  EXPECT_EQ(p.find(items[0].options[1]), std::string::npos);
  EXPECT_EQ(normalize_whitespace("  a \n b\t c "), "a b c");
}

TEST(Shots, Sampler) {
  gen::GenConfig cfg;
  cfg.seed = 4;
  cfg.count_3c1e = cfg.count_3e1c = cfg.count_missing = 4;
  std::vector<dataset::Record> pool;
  for (const auto& inst : gen::generate(cfg))
    pool.push_back(dataset::with_rendering(dataset::from_symbolic(inst, cfg),
                                           nl::render_symbolic(inst, nl::TemplateBank::builtin()), "v", true));
  const auto a = sample_shots(pool, {}, 7);
  const auto b = sample_shots(pool, {}, 7);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a[k].qtype, gen::kAllQTypes[k]);
    EXPECT_EQ(a[k].id, b[k].id);
  }
  std::set<std::string> exclude;
  for (const auto& r : pool)
    if (r.qtype == gen::QType::k3c1e && r.id != pool[3].id) exclude.insert(r.id);
  EXPECT_EQ(sample_shots(pool, exclude, 1)[0].id, pool[3].id);
  for (auto& r : pool) r.metadata["polish_applied"] = true;
  EXPECT_THROW(sample_shots(pool, {}, 1), ConfigError);
}

TEST(Hash, Sha256) {
  const auto p = temp_file("abc.txt");
  std::ofstream(p, std::ios::binary) << "abc";
  EXPECT_EQ(sha256_file(p), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
