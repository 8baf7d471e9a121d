#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lerp {

// Scores and targets for R records × N_Y labels, plus the threshold used
// for hard decisions.
struct PredictionSet {
  std::vector<std::vector<double>> scores;  // R × N_Y, in [0,1]
  std::vector<std::vector<int>> targets;    // R × N_Y, 0/1
  double threshold = 0.5;

  std::size_t n_records() const { return scores.size(); }
  std::size_t n_labels() const { return scores.empty() ? 0 : scores[0].size(); }
  void validate() const;
};

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct PrecisionRecall {
  double micro_precision;
  double macro_precision;
  double micro_recall;
  double macro_recall;
};

// Micro pools TP/FP/FN over all labels; macro averages per-label values.
// Zero-denominator conventions: a label with zero predicted positives
// contributes precision 0 to the macro mean; a label with zero actual
// positives is excluded from macro recall.
PrecisionRecall precision_recall(const PredictionSet& pred);

// Probability that a uniformly random positive outranks a random negative,
// ties counting 1/2 (the Mann-Whitney statistic, via average ranks).
// nullopt when targets are single-class.
std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<int>& targets);

struct MetricsReport {
  double micro_precision = 0.0;
  double macro_precision = 0.0;
  double micro_recall = 0.0;
  double macro_recall = 0.0;
  std::optional<double> micro_roc_auc;
  std::optional<double> macro_roc_auc;
  std::vector<ConfusionCounts> per_label;
  std::vector<std::optional<double>> per_label_auc;

  // Flat JSON text with the six headline fields.
  std::string to_json() const;
};

MetricsReport report(const PredictionSet& pred);

}  // namespace lerp
