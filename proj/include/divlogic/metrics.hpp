#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace divlogic::metrics {

inline constexpr int kNumOptions = 4;

/// Option identity in [0, 4): the option's index in the original (rotation 0) order.
using OptionId = int;
/// A model answer mapped back to an option identity; nullopt means unparseable.
using Prediction = std::optional<OptionId>;

/// The four cyclic rotations of an instance's options.
/// Rotation r shows identity (pos + r) % 4 at position pos.
struct MutantSet {
  std::string base_id;
  OptionId gold = 0;

  static constexpr OptionId identity_at(int rotation, int position) { return (position + rotation) % kNumOptions; }
  static constexpr int position_of(int rotation, OptionId id) { return ((id - rotation) % kNumOptions + kNumOptions) % kNumOptions; }

  std::array<OptionId, kNumOptions> order(int rotation) const;
  int gold_position(int rotation) const { return position_of(rotation, gold); }
};

MutantSet make_mutants(const std::string& base_id, std::size_t option_count, OptionId gold);

struct MutantPredictionSet {
  std::array<Prediction, kNumOptions> predicted;  // indexed by rotation
  OptionId gold = 0;

  int correct() const;
  /// Frequencies of the 4 identities plus an unparseable bucket; sums to 1.
  std::array<double, kNumOptions + 1> distribution() const;
};

/// sum p log4 p over the predicted distribution, in [-log4(5), 0]; 0 log 0 := 0.
double neg_entropy_base4(const MutantPredictionSet& preds);

double accuracy(const MutantPredictionSet& preds);
double circular(const MutantPredictionSet& preds);
double partial_circular(const MutantPredictionSet& preds);
double partial_circular_alpha(const MutantPredictionSet& preds, double alpha);
/// c / 4, the mean accuracy over all four mutants.
double mutant_accuracy(const MutantPredictionSet& preds);

/// 100 * population standard deviation / mean.
double coefficient_of_variation(std::span<const double> values);

struct InstanceScore {
  std::string id;
  std::string qtype;
  double acc = 0, cir = 0, pc = 0, pc_alpha = 0, mutant_acc = 0;
};

InstanceScore score_instance(const std::string& id, const std::string& qtype, const MutantPredictionSet& preds,
                             double alpha);

struct Means {
  std::size_t count = 0;
  double acc = 0, cir = 0, pc = 0, pc_alpha = 0, mutant_acc = 0;
};

struct ScoreReport {
  double alpha = 1.0;
  std::vector<InstanceScore> instances;
  Means overall;
  std::map<std::string, Means> by_qtype;
};

ScoreReport aggregate(std::vector<InstanceScore> scores, double alpha);

/// CV of each metric's overall mean across repeated runs.
std::map<std::string, double> run_variation(std::span<const ScoreReport> runs);

nlohmann::json to_json(const ScoreReport& report);
/// Percent table, one decimal, rows overall then per question type.
std::string format_table(const ScoreReport& report);

}  // namespace divlogic::metrics
