#include <httplib.h>

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "divlogic/bias.hpp"
#include "divlogic/dataset.hpp"
#include "divlogic/eval.hpp"
#include "divlogic/generator.hpp"
#include "divlogic/metrics.hpp"
#include "divlogic/nl/tagger.hpp"
#include "negation_fixture.hpp"
#include "oracle.hpp"

namespace fs = std::filesystem;
using namespace divlogic;

namespace {

class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

// -1 stands for an unparseable answer.
double pc_oracle(const std::array<int, 4>& pred, int gold) {
  int c = 0;
  std::map<int, int> freq;
  for (int p : pred) {
    c += p == gold;
    ++freq[p];
  }
  double h = 0;
  for (const auto& [k, n] : freq) {
    const double q = n / 4.0;
    h += q * std::log(q) / std::log(4.0);
  }
  return c / 4.0 * (1.0 + h);
}

metrics::MutantPredictionSet to_set(const std::array<int, 4>& pred, int gold) {
  metrics::MutantPredictionSet s;
  s.gold = gold;
  for (std::size_t r = 0; r < 4; ++r)
    if (pred[r] >= 0) s.predicted[r] = pred[r];
  return s;
}

std::array<int, 4> random_pattern(CounterRng& rng) {
  std::array<int, 4> p{};
  for (auto& x : p) x = static_cast<int>(rng.uniform_int(-1, 3));
  return p;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "divlogic_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& cmd) {
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string cli(const std::string& args) { return std::string("\"") + DIVLOGIC_CLI + "\" " + args + " >/dev/null"; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  check(static_cast<bool>(in), "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- criteria

void worked_example() {
  const double pc = metrics::partial_circular(to_set({0, 0, 2, 3}, 0));
  check(std::abs(pc - 0.125) <= 1e-12, "PC = " + fmt(pc));
}

void pc_range() {
  CounterRng rng(2024);
  for (int i = 0; i < 100000; ++i) {
    const auto pred = random_pattern(rng);
    const int gold = static_cast<int>(rng.uniform_int(0, 3));
    const auto set = to_set(pred, gold);
    const double pc = metrics::partial_circular(set);
    const int c = static_cast<int>(std::count(pred.begin(), pred.end(), gold));
    check(pc >= 0.0 && pc <= 1.0, "PC out of range: " + fmt(pc));
    check(pc <= c / 4.0 + 1e-15, "PC above c/4");
    check(std::abs(pc - pc_oracle(pred, gold)) <= 1e-12, "PC disagrees with direct computation");
    check((std::abs(pc - 1.0) <= 1e-12) == (c == 4), "PC = 1 without all-correct, or all-correct without PC = 1");
  }
  std::array<int, 4> perm{0, 1, 2, 3};
  do {
    for (int gold = 0; gold < 4; ++gold)
      check(std::abs(metrics::partial_circular(to_set(perm, gold))) <= 1e-12, "four distinct answers give PC != 0");
  } while (std::next_permutation(perm.begin(), perm.end()));
}

void pc_alpha_endpoints() {
  CounterRng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const auto pred = random_pattern(rng);
    const int gold = static_cast<int>(rng.uniform_int(0, 3));
    const auto set = to_set(pred, gold);
    const double c4 = static_cast<double>(std::count(pred.begin(), pred.end(), gold)) / 4.0;
    check(std::abs(metrics::partial_circular_alpha(set, 1.0) - metrics::partial_circular(set)) <= 1e-12,
          "alpha = 1 differs from PC");
    check(std::abs(metrics::partial_circular_alpha(set, 0.0) - c4) <= 1e-12, "alpha = 0 differs from c/4");
  }
}

void cv_of_runs() {
  const std::vector<double> acc{30.0, 32.0, 32.4, 30.1, 32.0};
  const std::vector<double> cir{7.4, 8.1, 8.0, 8.0, 9.0};
  const std::vector<double> pc{17.6, 18.8, 18.1, 18.5, 19.1};
  const double a = metrics::coefficient_of_variation(acc);
  const double c = metrics::coefficient_of_variation(cir);
  const double p = metrics::coefficient_of_variation(pc);
  check(std::abs(a - 3.3) <= 0.05, "ACC CV " + fmt(a));
  check(std::abs(c - 6.3) <= 0.05, "CIR CV " + fmt(c));
  check(std::abs(p - 3.1) <= 0.3, "PC CV " + fmt(p));
}

void schemas_are_tautologies() {
  std::vector<logic::Literal> lits;
  for (int v = 0; v < 3; ++v)
    for (bool neg : {false, true}) lits.push_back({logic::Var(v), neg});
  int checked = 0;
  for (auto schema : {gen::RuleSchema::kContraposition, gen::RuleSchema::kNegatedConjunction,
                      gen::RuleSchema::kDisjunctiveAntecedent})
    for (const auto& a : lits)
      for (const auto& b : lits)
        for (const auto& c : lits) {
          if (a == b || a == c || b == c) continue;
          const auto f = gen::instantiate_rule(schema, a, b, c).full();
          check(oracle::tt_tautology(f), std::string(gen::to_string(schema)) + " instance is not a tautology: " +
                                             logic::format_formula(f));
          ++checked;
        }
  check(checked == 3 * 120, "expected 360 instances, checked " + std::to_string(checked));
}

void generator_semantics() {
  std::size_t total = 0;
  for (int n : {2, 3}) {
    gen::GenConfig cfg;
    cfg.n = n;
    cfg.seed = 100 + static_cast<std::uint64_t>(n);
    cfg.count_3c1e = 1667;
    cfg.count_3e1c = 1667;
    cfg.count_missing = 1666;
    cfg.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const auto report = gen::generate(cfg, [&](const gen::SymbolicInstance& inst) {
      check(oracle::revalidate(inst), inst.id + " fails its question-type invariant");
      ++total;
    });
    check(report.skipped.empty(), std::to_string(report.skipped.size()) + " instances skipped at n = " +
                                      std::to_string(n));
  }
  check(total == 10000, "validated " + std::to_string(total) + " instances");
}

void determinism() {
  const auto dir = scratch("determinism");
  const std::string gen_flags = "generate --n 3 --seed 11 --count-3c1e 30 --count-3e1c 30 --count-missing 30 --out ";
  check(run(cli(gen_flags + (dir / "g1.jsonl").string())) == 0, "generate failed");
  check(run(cli(gen_flags + (dir / "g2.jsonl").string())) == 0, "second generate failed");
  check(slurp(dir / "g1.jsonl") == slurp(dir / "g2.jsonl"), "generate output differs between runs");

  const std::string render_flags = "render --polish off --seed 5 --corpus \"" DIVLOGIC_DATA_DIR
                                   "/sample_corpus.jsonl\" --in " + (dir / "g1.jsonl").string() + " --out ";
  check(run(cli(render_flags + (dir / "r1.jsonl").string())) == 0, "render failed");
  check(run(cli(render_flags + (dir / "r2.jsonl").string())) == 0, "second render failed");
  check(slurp(dir / "r1.jsonl") == slurp(dir / "r2.jsonl"), "render output differs between runs");
  check(dataset::read(dir / "r1.jsonl").size() == 90, "render dropped instances");
}

void mutant_latin_square() {
  const auto m = metrics::make_mutants("fixture", 4, 0);
  const std::array<std::array<int, 4>, 4> footnote{{{0, 1, 2, 3}, {1, 2, 3, 0}, {2, 3, 0, 1}, {3, 0, 1, 2}}};
  for (int r = 0; r < 4; ++r) {
    const auto order = m.order(r);
    check(std::equal(order.begin(), order.end(), footnote[static_cast<std::size_t>(r)].begin()),
          "rotation " + std::to_string(r) + " does not match the fixture");
  }
  CounterRng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const auto mi = metrics::make_mutants("i" + std::to_string(i), 4, static_cast<int>(rng.uniform_int(0, 3)));
    std::array<std::set<int>, 4> columns;
    std::set<int> gold_positions;
    for (int r = 0; r < 4; ++r) {
      const auto order = mi.order(r);
      check(std::set<int>(order.begin(), order.end()).size() == 4, "a mutant repeats an option");
      for (std::size_t pos = 0; pos < 4; ++pos) columns[pos].insert(order[pos]);
      check(order[static_cast<std::size_t>(mi.gold_position(r))] == mi.gold, "gold position is wrong");
      gold_positions.insert(mi.gold_position(r));
    }
    for (const auto& col : columns) check(col.size() == 4, "a position repeats an option across mutants");
    check(gold_positions.size() == 4, "gold does not visit every position");
  }
}

void logic_oracle() {
  CounterRng rng(9);
  for (int i = 0; i < 10000; ++i) {
    std::vector<logic::Formula> premises;
    const int k = static_cast<int>(rng.uniform_int(0, 3));
    for (int j = 0; j < k; ++j) premises.push_back(oracle::random_formula(rng, 4, 3));
    const auto c = oracle::random_formula(rng, 4, 3);
    check(logic::entails(premises, c) == oracle::cnf_entails(premises, c),
          "entails disagrees with the CNF oracle on " + logic::format_formula(c));
  }
}

void negation_fixture() {
  const nl::RuleBasedTagger tagger;
  check(std::size(fixture::kNegation) == 50, "fixture size");
  for (const auto& c : fixture::kNegation) {
    const auto neg = nl::negate_sentence(c.sentence, tagger);
    check(neg == c.negated, std::string(c.sentence) + " -> " + neg);
    check(nl::negate_sentence(neg, tagger) == c.sentence, std::string(c.sentence) + " does not round-trip");
  }
}

bias::TokenFrequency freq(const std::map<std::string, std::uint64_t>& counts) {
  bias::TokenFrequency f;
  for (const auto& [t, n] : counts) {
    f.counts[t] = n;
    f.total += n;
  }
  return f;
}

void kl_properties() {
  CounterRng rng(11);
  for (int i = 0; i < 10000; ++i) {
    std::map<std::string, std::uint64_t> p, q;
    const int size = static_cast<int>(rng.uniform_int(1, 12));
    for (int t = 0; t < size; ++t) {
      if (auto n = rng.uniform_int(0, 50)) p["t" + std::to_string(t)] = static_cast<std::uint64_t>(n);
      if (auto n = rng.uniform_int(0, 50)) q["t" + std::to_string(t)] = static_cast<std::uint64_t>(n);
    }
    if (p.empty() || q.empty()) continue;
    const auto fp = freq(p);
    check(bias::kl_divergence(fp, freq(q)) >= 0.0, "negative KL");
    check(std::abs(bias::kl_divergence(fp, fp)) <= 1e-12, "KL(p, p) != 0");
  }
  const double kl = bias::kl_divergence(freq({{"x", 1}, {"y", 1}}), freq({{"x", 1}, {"y", 3}}));
  const double hand = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  check(std::abs(kl - 0.1438) <= 1e-3 && std::abs(kl - hand) <= 1e-6, "two-point KL " + fmt(kl));
}

void harness_end_to_end() {
  const auto dir = scratch("harness");
  check(run(cli("generate --seed 12 --count-3c1e 7 --count-3e1c 7 --count-missing 6 --out " +
                (dir / "d.jsonl").string())) == 0,
        "generate failed");
  check(run(cli("render --corpus \"" DIVLOGIC_DATA_DIR "/sample_corpus.jsonl\" --in " + (dir / "d.jsonl").string() +
                " --out " + (dir / "r.jsonl").string())) == 0,
        "render failed");

  httplib::Server server;
  std::atomic<int> requests{0};
  std::atomic<int> bad_auth{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++requests;
    if (req.get_header_value("Authorization") != "Bearer acceptance-token") ++bad_auth;
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Answer: A"}}]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  struct Stop {
    httplib::Server& s;
    std::thread& t;
    ~Stop() {
      s.stop();
      t.join();
    }
  } stop{server, t};

  std::ofstream(dir / "endpoint.conf") << "base_url = http://127.0.0.1:" << port
                                        << "\nmodel = mock\ntoken_env = DIVLOGIC_ACCEPTANCE_TOKEN\n";
  ::setenv("DIVLOGIC_ACCEPTANCE_TOKEN", "acceptance-token", 1);
  const auto records = dir / "records.jsonl";
  const int rc = run(cli("evaluate --in " + (dir / "r.jsonl").string() + " --endpoint-config " +
                         (dir / "endpoint.conf").string() + " --run-id mock --out " + records.string()));
  check(rc == 0, "evaluate exit status " + std::to_string(rc));
  check(requests == 80, std::to_string(requests) + " requests served");
  check(bad_auth == 0, "request without the bearer token");
  const auto recs = eval::read_records(records);
  check(recs.size() == 80, std::to_string(recs.size()) + " records written");
  check(slurp(records).find("acceptance-token") == std::string::npos, "token leaked into the records");

  check(run(cli("score --records " + records.string() + " --dataset " + (dir / "r.jsonl").string() + " --out " +
                (dir / "score.json").string())) == 0,
        "score failed");
  const auto overall = nlohmann::json::parse(slurp(dir / "score.json"))["runs"][0]["overall"];

  // Letter A under rotation r is identity r, so each instance's four answers
  // are four distinct identities: exactly one is gold, CIR = 0 and PC = 0.
  // ACC counts the instances whose gold option comes first.
  const auto data = dataset::read(dir / "r.jsonl");
  check(data.size() == 20, "dataset size");
  int gold_first = 0;
  for (const auto& r : data) gold_first += r.gold_index == 0;
  const double acc = gold_first / 20.0;
  check(overall["count"] == 20, "scored instance count");
  check(overall["acc"].get<double>() == acc, "ACC " + fmt(overall["acc"]) + " expected " + fmt(acc));
  check(overall["cir"].get<double>() == 0.0, "CIR " + fmt(overall["cir"]));
  check(std::abs(overall["pc"].get<double>()) <= 1e-12, "PC " + fmt(overall["pc"]));
  check(overall["mutant_acc"].get<double>() == 0.25, "ACC over mutants " + fmt(overall["mutant_acc"]));
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<void()> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "PartialCircular worked example is 0.125", 1, worked_example},
      {2, "PC range and edge cases over 100000 patterns", 10, pc_range},
      {3, "PC_alpha endpoints over 10000 patterns", 10, pc_alpha_endpoints},
      {4, "CV of five recorded runs", 1, cv_of_runs},
      {5, "rule schemas over all ordered literal triples are tautologies", 5, schemas_are_tautologies},
      {6, "10000 generated instances pass the truth-table validator", 120, generator_semantics},
      {7, "generate and render --polish off are byte-identical across runs", 60, determinism},
      {8, "mutant rotations and Latin square over 1000 instances", 10, mutant_latin_square},
      {9, "entails agrees with the CNF oracle on 10000 sets", 30, logic_oracle},
      {10, "50-sentence negation fixture matches and round-trips", 10, negation_fixture},
      {11, "KL non-negativity, identity and two-point example", 10, kl_properties},
      {12, "mock endpoint run gives 80 records and hand-computed metrics", 60, harness_end_to_end},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
      c.body();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (error.empty() && secs > c.limit_seconds) error = "took " + fmt(secs) + " s";
    std::ostringstream line;
    line.precision(3);
    line << std::fixed << (error.empty() ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " ("
         << secs << " s)";
    if (!error.empty()) line << ": " << error;
    std::cout << line.str() << std::endl;
    failed += !error.empty();
  }
  return failed ? 1 : 0;
}
