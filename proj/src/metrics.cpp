#include "divlogic/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

namespace divlogic::metrics {

std::array<OptionId, kNumOptions> MutantSet::order(int rotation) const {
  std::array<OptionId, kNumOptions> out{};
  for (int pos = 0; pos < kNumOptions; ++pos) out[pos] = identity_at(rotation, pos);
  return out;
}

MutantSet make_mutants(const std::string& base_id, std::size_t option_count, OptionId gold) {
  if (option_count != kNumOptions) throw std::invalid_argument("circular evaluation needs exactly 4 options");
  if (gold < 0 || gold >= kNumOptions) throw std::invalid_argument("gold index out of range");
  return MutantSet{base_id, gold};
}

int MutantPredictionSet::correct() const {
  int c = 0;
  for (const auto& p : predicted) c += (p && *p == gold);
  return c;
}

std::array<double, kNumOptions + 1> MutantPredictionSet::distribution() const {
  std::array<double, kNumOptions + 1> d{};
  for (const auto& p : predicted) d[p ? *p : kNumOptions] += 1.0 / kNumOptions;
  return d;
}

double neg_entropy_base4(const MutantPredictionSet& preds) {
  double s = 0;
  for (double p : preds.distribution())
    if (p > 0) s += p * std::log(p) / std::log(4.0);
  return s;
}

double accuracy(const MutantPredictionSet& preds) {
  return preds.predicted[0] && *preds.predicted[0] == preds.gold ? 1.0 : 0.0;
}

double circular(const MutantPredictionSet& preds) { return preds.correct() == kNumOptions ? 1.0 : 0.0; }

double mutant_accuracy(const MutantPredictionSet& preds) { return preds.correct() / double(kNumOptions); }

double partial_circular(const MutantPredictionSet& preds) {
  const double v = mutant_accuracy(preds) * (1.0 + neg_entropy_base4(preds));
  // c > 0 bounds the entropy by 1 (at most four outcomes); clamp rounding noise only
  return std::max(0.0, v);
}

double partial_circular_alpha(const MutantPredictionSet& preds, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (alpha == 1.0) return partial_circular(preds);
  return mutant_accuracy(preds) * ((1.0 - alpha) + alpha * (1.0 + neg_entropy_base4(preds)));
}

double coefficient_of_variation(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("coefficient of variation needs at least two values");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  if (mean == 0.0) throw std::invalid_argument("coefficient of variation undefined for zero mean");
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return 100.0 * std::sqrt(ss / values.size()) / mean;
}

InstanceScore score_instance(const std::string& id, const std::string& qtype, const MutantPredictionSet& preds,
                             double alpha) {
  return InstanceScore{id,
                       qtype,
                       accuracy(preds),
                       circular(preds),
                       partial_circular(preds),
                       partial_circular_alpha(preds, alpha),
                       mutant_accuracy(preds)};
}

namespace {

void accumulate_into(Means& m, const InstanceScore& s) {
  ++m.count;
  m.acc += s.acc;
  m.cir += s.cir;
  m.pc += s.pc;
  m.pc_alpha += s.pc_alpha;
  m.mutant_acc += s.mutant_acc;
}

void finish(Means& m) {
  const double n = static_cast<double>(m.count);
  m.acc /= n;
  m.cir /= n;
  m.pc /= n;
  m.pc_alpha /= n;
  m.mutant_acc /= n;
}

nlohmann::json means_json(const Means& m) {
  return {{"count", m.count}, {"acc", m.acc},         {"cir", m.cir},
          {"pc", m.pc},       {"pc_alpha", m.pc_alpha}, {"mutant_acc", m.mutant_acc}};
}

}  // namespace

ScoreReport aggregate(std::vector<InstanceScore> scores, double alpha) {
  if (scores.empty()) throw std::invalid_argument("nothing to aggregate");
  ScoreReport r;
  r.alpha = alpha;
  for (const auto& s : scores) {
    accumulate_into(r.overall, s);
    accumulate_into(r.by_qtype[s.qtype], s);
  }
  finish(r.overall);
  for (auto& [_, m] : r.by_qtype) finish(m);
  r.instances = std::move(scores);
  return r;
}

std::map<std::string, double> run_variation(std::span<const ScoreReport> runs) {
  std::map<std::string, std::vector<double>> cols;
  for (const auto& r : runs) {
    cols["acc"].push_back(100 * r.overall.acc);
    cols["cir"].push_back(100 * r.overall.cir);
    cols["pc"].push_back(100 * r.overall.pc);
    cols["pc_alpha"].push_back(100 * r.overall.pc_alpha);
  }
  std::map<std::string, double> out;
  for (const auto& [k, v] : cols) out[k] = coefficient_of_variation(v);
  return out;
}

nlohmann::json to_json(const ScoreReport& report) {
  nlohmann::json j;
  j["alpha"] = report.alpha;
  j["overall"] = means_json(report.overall);
  for (const auto& [q, m] : report.by_qtype) j["by_qtype"][q] = means_json(m);
  auto& inst = j["instances"] = nlohmann::json::array();
  for (const auto& s : report.instances)
    inst.push_back({{"id", s.id},   {"qtype", s.qtype},           {"acc", s.acc},
                    {"cir", s.cir}, {"pc", s.pc}, {"pc_alpha", s.pc_alpha}, {"mutant_acc", s.mutant_acc}});
  return j;
}

std::string format_table(const ScoreReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %6s %6s %6s %6s %8s %8s\n", "split", "N", "ACC", "CIR", "PC", "PC_a",
                "ACC_mut");
  out += line;
  auto row = [&](const std::string& name, const Means& m) {
    std::snprintf(line, sizeof line, "%-18s %6zu %6.1f %6.1f %6.1f %6.1f %8.1f\n", name.c_str(), m.count,
                  100 * m.acc, 100 * m.cir, 100 * m.pc, 100 * m.pc_alpha, 100 * m.mutant_acc);
    out += line;
  };
  row("overall", report.overall);
  for (const auto& [q, m] : report.by_qtype) row(q, m);
  std::snprintf(line, sizeof line, "(PC_a uses alpha = %.3g)\n", report.alpha);
  out += line;
  return out;
}

}  // namespace divlogic::metrics
