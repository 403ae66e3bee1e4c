#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "divlogic/bias.hpp"
#include "divlogic/dataset.hpp"
#include "divlogic/eval.hpp"
#include "divlogic/generator.hpp"
#include "divlogic/metrics.hpp"
#include "divlogic/nl/render.hpp"

namespace fs = std::filesystem;
using namespace divlogic;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kPartial = 2, kAborted = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw std::runtime_error(what + " not found: " + p.string());
}

// ---- generate

struct GenerateArgs {
  gen::GenConfig cfg;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  a.cfg.validate();
  std::vector<dataset::Record> records;
  const auto report = gen::generate(a.cfg, [&](const gen::SymbolicInstance& inst) {
    records.push_back(dataset::from_symbolic(inst, a.cfg));
  });
  dataset::write(a.out, records);
  std::cout << "generated " << report.emitted << " of " << a.cfg.total() << " instances -> " << a.out << "\n";
  if (report.skipped.empty()) return kOk;
  std::cerr << "skipped " << report.skipped.size() << " instances:\n";
  for (const auto& s : report.skipped)
    std::cerr << "  ordinal " << s.ordinal << " (" << gen::to_string(s.qtype) << "): " << s.last_error << "\n";
  return kFailure;
}

// ---- render

struct RenderArgs {
  std::string in, out, corpus, templates, endpoint_config;
  std::string polish = "off";
  bool symbolic = false;
  bool approve = false;
  std::uint64_t seed = 0;
  int trials = 3;
};

bool ask_reviewer(const nl::FragmentEdit& e) {
  std::cerr << "\n- " << e.original << "\n+ " << e.proposed << "\naccept? [y/N] " << std::flush;
  std::string line;
  if (!std::getline(std::cin, line)) return false;
  return !line.empty() && (line[0] == 'y' || line[0] == 'Y');
}

int cmd_render(const RenderArgs& a) {
  if (a.polish != "off" && a.polish != "llm") throw UsageError("--polish must be off or llm");
  if (a.symbolic && a.polish == "llm") throw UsageError("--symbolic output is not polished");
  std::unique_ptr<eval::HttpChatClient> client;
  if (a.polish == "llm") {
    if (a.endpoint_config.empty()) throw eval::ConfigError("--polish llm needs --endpoint-config");
    const auto ep = eval::EndpointConfig::load(a.endpoint_config);
    if (!std::getenv(ep.token_env.c_str()))
      throw eval::ConfigError("--polish llm: environment variable " + ep.token_env + " is not set");
    client = std::make_unique<eval::HttpChatClient>(ep);
  }
  const auto records = dataset::read(a.in);
  const nl::TemplateBank bank = a.templates.empty() ? nl::TemplateBank::builtin() : nl::TemplateBank::load(a.templates);
  const nl::RuleBasedTagger tagger;
  nl::SentencePool pool;
  if (!a.symbolic) {
    if (a.corpus.empty()) throw UsageError("--corpus is required unless --symbolic is given");
    pool = nl::ingest_corpus(fs::path(a.corpus), tagger);
  }
  nl::ApproveFn approve;
  if (a.approve) approve = ask_reviewer;

  const CounterRng root(a.seed);
  std::vector<dataset::Record> out;
  std::vector<std::pair<std::string, std::string>> failed;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto inst = dataset::to_symbolic(records[i]);
    try {
      if (a.symbolic) {
        out.push_back(dataset::with_rendering(records[i], nl::render_symbolic(inst, bank), bank.version(), true));
        continue;
      }
      auto rng = root.split(i);
      auto r = nl::render(inst, nl::assign_sentences(inst, pool, rng), pool, bank, tagger, rng);
      if (client) nl::polish_instance(r, client.get(), a.trials, approve);
      out.push_back(dataset::with_rendering(records[i], r, bank.version(), false));
    } catch (const nl::PoolExhausted& e) {
      failed.emplace_back(records[i].id, e.what());
    } catch (const nl::RenderError& e) {
      failed.emplace_back(records[i].id, e.what());
    }
  }
  dataset::write(a.out, out);
  std::cout << "rendered " << out.size() << " of " << records.size() << " instances -> " << a.out << "\n";
  if (failed.empty()) return kOk;
  std::cerr << "skipped " << failed.size() << " instances:\n";
  for (const auto& [id, why] : failed) std::cerr << "  " << id << ": " << why << "\n";
  return kFailure;
}

// ---- evaluate

struct EvaluateArgs {
  std::string in, endpoint_config, run_id, out, manifest;
  std::string shots = "none";
};

int cmd_evaluate(const EvaluateArgs& a) {
  require_file(a.in, "dataset");
  const auto ep = eval::EndpointConfig::load(a.endpoint_config);
  const auto items = eval::items_from_records(dataset::read(a.in));
  std::optional<eval::ShotSet> shots;
  std::optional<std::string> shots_hash;
  if (a.shots != "none") {
    std::set<std::string> ids;
    for (const auto& it : items) ids.insert(it.id);
    shots = eval::make_shot_set(eval::items_from_records(dataset::read(a.shots)), ids,
                                nl::TemplateBank::builtin().templates(nl::Section::kFewShotHeader).front());
    shots_hash = eval::sha256_file(a.shots);
  }
  eval::RunManifest m;
  m.run_id = a.run_id;
  m.dataset_hash = eval::sha256_file(a.in);
  m.endpoint = ep.to_json();
  m.shots_hash = shots_hash;
  m.started_at = eval::utc_now();

  eval::HttpChatClient client(ep);
  eval::RecordStore store(a.out);
  const auto opts = eval::run_options(ep, a.run_id, shots ? &*shots : nullptr);
  const auto s = eval::run_eval(items, client, store, opts);
  m.finished_at = eval::utc_now();
  m.summary = {{"written", s.written},
               {"skipped_existing", s.skipped_existing},
               {"failed", s.failed},
               {"aborted", s.aborted},
               {"status", static_cast<int>(s.status())}};
  if (s.aborted) m.summary["abort_reason"] = s.abort_reason;
  std::optional<eval::ScoredRun> scored;
  if (s.status() == eval::RunStatus::kComplete) {
    scored = eval::score_records(store.records(), items, 1.0, a.run_id);
    m.summary["metrics"] = metrics::to_json(scored->report)["overall"];
  }
  write_json(a.manifest.empty() ? a.out + ".manifest.json" : a.manifest, m.to_json());

  std::cout << "records written " << s.written << ", already present " << s.skipped_existing << ", failed "
            << s.failed << "\n";
  if (s.aborted) std::cerr << "run aborted: " << s.abort_reason << "\n";
  if (scored) std::cout << metrics::format_table(scored->report);
  return static_cast<int>(s.status());
}

// ---- score

struct ScoreArgs {
  std::vector<std::string> records;
  std::string dataset, run_id, out;
  double alpha = 1.0;
};

int cmd_score(const ScoreArgs& a) {
  const auto items = eval::items_from_records(dataset::read(a.dataset));
  std::vector<metrics::ScoreReport> reports;
  json runs = json::array();
  for (const auto& path : a.records) {
    require_file(path, "records file");
    const auto scored = eval::score_records(eval::read_records(path), items, a.alpha, a.run_id);
    if (scored.incomplete)
      std::cerr << path << ": " << scored.incomplete << " instances without all four rotations left out\n";
    std::cout << path << "\n" << metrics::format_table(scored.report) << "\n";
    auto j = metrics::to_json(scored.report);
    j["records"] = path;
    j["incomplete"] = scored.incomplete;
    runs.push_back(j);
    reports.push_back(scored.report);
  }
  json result = {{"runs", runs}};
  if (reports.size() > 1) {
    const auto cv = metrics::run_variation(reports);
    std::cout << "coefficient of variation across " << reports.size() << " runs (%)\n";
    for (const auto& [k, v] : cv) std::cout << "  " << k << " " << v << "\n";
    result["cv"] = cv;
  }
  if (!a.out.empty()) write_json(a.out, result);
  return kOk;
}

// ---- bias

struct BiasArgs {
  std::string dataset, reference, out;
  double epsilon = 1e-9;
  std::uint64_t budget = 0;
  std::uint64_t seed = 0;
  bool lowercase = false;
};

std::vector<std::string> dataset_texts(const std::vector<dataset::Record>& records) {
  std::vector<std::string> texts;
  for (const auto& r : records) {
    if (!r.content_text) throw std::runtime_error("dataset record " + r.id + " has no rendered text");
    texts.push_back(*r.content_text);
    texts.push_back(*r.question_text);
    for (const auto& o : *r.options_text) texts.push_back(o);
  }
  return texts;
}

// Plain text lines, or JSONL objects whose "text" field (or else every string
// field) is the document.
std::vector<std::string> reference_documents(const fs::path& path) {
  require_file(path, "reference corpus");
  std::ifstream in(path);
  std::vector<std::string> docs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.front() == '{') {
      const auto j = json::parse(line, nullptr, false);
      if (j.is_object()) {
        if (j.contains("text") && j["text"].is_string()) {
          docs.push_back(j["text"]);
        } else {
          std::string doc;
          for (const auto& [k, v] : j.items())
            if (v.is_string()) doc += (doc.empty() ? "" : " ") + v.get<std::string>();
          docs.push_back(doc);
        }
        continue;
      }
    }
    docs.push_back(line);
  }
  return docs;
}

int cmd_bias(const BiasArgs& a) {
  require_file(a.dataset, "dataset");
  const auto docs = reference_documents(a.reference);
  const bias::TokenizerOptions topts{a.lowercase};
  const auto texts = dataset_texts(dataset::read(a.dataset));
  const auto p = bias::count_tokens(texts, topts);
  const std::uint64_t budget = a.budget ? a.budget : p.total;
  const auto q = bias::subsample_reference(docs, budget, a.seed, topts);
  const double kl = bias::kl_divergence(p, q, a.epsilon);
  const json report = {{"vocab_size", p.counts.size()},
                       {"total_tokens", p.total},
                       {"kl", kl},
                       {"config",
                        {{"direction", "dataset||reference"},
                         {"log", "natural"},
                         {"epsilon", a.epsilon},
                         {"budget", budget},
                         {"seed", a.seed},
                         {"lowercase", a.lowercase},
                         {"tokenizer", bias::kTokenizerVersion},
                         {"reference", a.reference},
                         {"reference_tokens", q.total},
                         {"reference_vocab_size", q.counts.size()}}}};
  std::cout << "vocab_size " << p.counts.size() << "\ntotal_tokens " << p.total << "\nkl " << kl << "\n";
  if (!a.out.empty()) write_json(a.out, report);
  return kOk;
}

// ---- sample-shots

struct ShotArgs {
  std::string pool, exclude, out;
  std::uint64_t seed = 0;
};

int cmd_sample_shots(const ShotArgs& a) {
  std::set<std::string> exclude;
  if (!a.exclude.empty())
    for (const auto& r : dataset::read(a.exclude)) exclude.insert(r.id);
  const auto shots = eval::sample_shots(dataset::read(a.pool), exclude, a.seed);
  dataset::write(a.out, shots);
  for (const auto& s : shots) std::cout << gen::to_string(s.qtype) << " " << s.id << "\n";
  return kOk;
}

// ---- probe

struct ProbeArgs {
  std::string in, endpoint_config, out;
};

int cmd_probe(const ProbeArgs& a) {
  const auto ep = eval::EndpointConfig::load(a.endpoint_config);
  const auto items = eval::items_from_records(dataset::read(a.in));
  eval::HttpChatClient client(ep);
  const auto r = eval::contamination_probe(items, client, eval::run_options(ep, "probe", nullptr));
  auto j = r.to_json();
  j["dataset_hash"] = eval::sha256_file(a.in);
  j["endpoint"] = ep.to_json();
  if (!a.out.empty()) write_json(a.out, j);
  std::cout << "exact reproductions " << r.matches << " of " << r.total << " (" << 100.0 * r.rate() << "%)\n";
  if (r.aborted) {
    std::cerr << "probe aborted: " << r.abort_reason << "\n";
    return kAborted;
  }
  return r.failed ? kPartial : kOk;
}

void add_config(CLI::App* sub) {
  sub->add_option("--config", "Flat key = value file mirroring the flags; flags take precedence")
      ->check(CLI::ExistingFile);
}

// Expands "--config FILE" after the subcommand into "--key=value" arguments for
// every key not already given as a flag. Multi-value options split on whitespace.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
  if (args.size() < 2) return args;
  const auto* sub = app.get_subcommand_no_throw(args[1]);
  if (!sub) return args;
  std::optional<std::string> path;
  std::set<std::string> given;
  for (std::size_t i = 2; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const auto eq = a.find('=');
    const auto name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    if (name == "config") {
      if (eq != std::string::npos) path = a.substr(eq + 1);
      else if (i + 1 < args.size()) path = args[i + 1];
    }
    given.insert(name);
  }
  if (!path) return args;
  std::vector<std::string> extra;
  for (const auto& [key, value] : eval::load_kv(*path)) {
    const auto* opt = sub->get_option_no_throw("--" + key);
    if (!opt || key == "config") throw UsageError("config " + *path + ": unknown key " + key);
    if (given.count(key)) continue;
    if (opt->get_items_expected_max() > 1) {
      std::istringstream ss(value);
      for (std::string v; ss >> v;) extra.push_back("--" + key + "=" + v);
    } else {
      extra.push_back("--" + key + "=" + value);
    }
  }
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Propositional-logic multiple-choice benchmark toolkit"};
  app.require_subcommand(1);
  std::function<int()> action;

  GenerateArgs ga;
  auto* g = app.add_subcommand("generate", "Generate symbolic instances");
  add_config(g);
  g->add_option("--n", ga.cfg.n, "Maximum occurrences per variable")->capture_default_str();
  g->add_option("--seed", ga.cfg.seed)->capture_default_str();
  g->add_option("--count-3c1e", ga.cfg.count_3c1e)->capture_default_str();
  g->add_option("--count-3e1c", ga.cfg.count_3e1c)->capture_default_str();
  g->add_option("--count-missing", ga.cfg.count_missing)->capture_default_str();
  g->add_option("--max-attempts", ga.cfg.max_attempts_per_instance)->capture_default_str();
  g->add_option("--threads", ga.cfg.threads)->capture_default_str();
  g->add_option("--out", ga.out)->required();
  g->callback([&] { action = [&] { return cmd_generate(ga); }; });

  RenderArgs ra;
  auto* r = app.add_subcommand("render", "Render instances to natural language");
  add_config(r);
  r->add_option("--in", ra.in)->required()->check(CLI::ExistingFile);
  r->add_option("--out", ra.out)->required();
  r->add_option("--corpus", ra.corpus, "NLI-style JSONL, pre-tagged JSONL or plain text lines");
  r->add_option("--templates", ra.templates, "Template bank file; the bundled bank by default");
  r->add_option("--polish", ra.polish, "off or llm")->capture_default_str();
  r->add_flag("--symbolic", ra.symbolic, "Keep formula strings as the text");
  r->add_option("--seed", ra.seed)->capture_default_str();
  r->add_option("--trials", ra.trials, "Polish trials per segment")->capture_default_str();
  r->add_option("--endpoint-config", ra.endpoint_config);
  r->add_flag("--approve", ra.approve, "Review each polish edit on the terminal");
  r->callback([&] { action = [&] { return cmd_render(ra); }; });

  EvaluateArgs ea;
  auto* e = app.add_subcommand("evaluate", "Query an endpoint with all four rotations of every instance");
  add_config(e);
  e->add_option("--in", ea.in)->required();
  e->add_option("--endpoint-config", ea.endpoint_config)->required()->check(CLI::ExistingFile);
  e->add_option("--shots", ea.shots, "none or a dataset file with one example per question type")
      ->capture_default_str();
  e->add_option("--run-id", ea.run_id)->required();
  e->add_option("--out", ea.out, "Run records JSONL, appended to on resume")->required();
  e->add_option("--manifest", ea.manifest, "Defaults to <out>.manifest.json");
  e->callback([&] { action = [&] { return cmd_evaluate(ea); }; });

  ScoreArgs sa;
  auto* s = app.add_subcommand("score", "Score run records");
  add_config(s);
  s->add_option("--records", sa.records, "One file per run; several give run-to-run variation")->required();
  s->add_option("--dataset", sa.dataset)->required()->check(CLI::ExistingFile);
  s->add_option("--alpha", sa.alpha)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  s->add_option("--run-id", sa.run_id);
  s->add_option("--out", sa.out);
  s->callback([&] { action = [&] { return cmd_score(sa); }; });

  BiasArgs ba;
  auto* b = app.add_subcommand("bias", "Vocabulary size and KL divergence against a reference corpus");
  add_config(b);
  b->add_option("--dataset", ba.dataset)->required();
  b->add_option("--reference", ba.reference)->required();
  b->add_option("--epsilon", ba.epsilon)->capture_default_str();
  b->add_option("--budget", ba.budget, "Reference token budget; the dataset's token count by default");
  b->add_option("--seed", ba.seed)->capture_default_str();
  b->add_flag("--lowercase", ba.lowercase);
  b->add_option("--out", ba.out);
  b->callback([&] { action = [&] { return cmd_bias(ba); }; });

  ShotArgs sh;
  auto* k = app.add_subcommand("sample-shots", "Draw one unpolished example per question type");
  add_config(k);
  k->add_option("--pool", sh.pool)->required()->check(CLI::ExistingFile);
  k->add_option("--exclude", sh.exclude, "Dataset whose ids may not be drawn")->check(CLI::ExistingFile);
  k->add_option("--seed", sh.seed)->capture_default_str();
  k->add_option("--out", sh.out)->required();
  k->callback([&] { action = [&] { return cmd_sample_shots(sh); }; });

  ProbeArgs pa;
  auto* p = app.add_subcommand("probe", "Masked-option reproduction probe");
  add_config(p);
  p->add_option("--in", pa.in)->required()->check(CLI::ExistingFile);
  p->add_option("--endpoint-config", pa.endpoint_config)->required()->check(CLI::ExistingFile);
  p->add_option("--out", pa.out);
  p->callback([&] { action = [&] { return cmd_probe(pa); }; });

  std::string bank_out;
  auto* t = app.add_subcommand("templates", "Write the bundled template bank");
  add_config(t);
  t->add_option("--out", bank_out)->required();
  t->callback([&] {
    action = [&] {
      std::ofstream(bank_out, std::ios::binary) << nl::TemplateBank::builtin().to_text();
      return static_cast<int>(kOk);
    };
  });

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(app, std::move(args));
  } catch (const std::exception& ex) {
    std::cerr << "configuration error: " << ex.what() << "\n";
    return kFailure;
  }
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());
  CLI11_PARSE(app, static_cast<int>(cargs.size()), cargs.data());
  try {
    return action();
  } catch (const UsageError& ex) {
    std::cerr << "usage error: " << ex.what() << "\n";
  } catch (const eval::ConfigError& ex) {
    std::cerr << "configuration error: " << ex.what() << "\n";
  } catch (const std::invalid_argument& ex) {
    std::cerr << "validation error: " << ex.what() << "\n";
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
  }
  return kFailure;
}
