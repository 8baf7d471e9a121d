#include "lerp/metrics.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "lerp/errors.hpp"

namespace lerp {

void PredictionSet::validate() const {
  if (scores.empty()) throw DataError("metrics: zero records");
  if (scores.size() != targets.size()) {
    throw DimensionError("metrics: " + std::to_string(scores.size()) + " score rows vs " +
                         std::to_string(targets.size()) + " target rows");
  }
  const std::size_t n = scores[0].size();
  for (std::size_t r = 0; r < scores.size(); ++r) {
    if (scores[r].size() != n || targets[r].size() != n) {
      throw DimensionError("metrics: ragged row " + std::to_string(r));
    }
    for (double s : scores[r]) {
      if (!(s >= 0.0 && s <= 1.0)) {
        throw DataError("metrics: score " + std::to_string(s) + " outside [0,1] in row " +
                        std::to_string(r));
      }
    }
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("metrics: threshold must be in (0,1), got " + std::to_string(threshold));
  }
}

namespace {

std::vector<ConfusionCounts> confusion(const PredictionSet& pred) {
  const std::size_t n = pred.n_labels();
  std::vector<ConfusionCounts> counts(n);
  for (std::size_t r = 0; r < pred.n_records(); ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool hit = pred.scores[r][j] >= pred.threshold;
      const bool truth = pred.targets[r][j] != 0;
      if (hit && truth) ++counts[j].tp;
      else if (hit) ++counts[j].fp;
      else if (truth) ++counts[j].fn;
      else ++counts[j].tn;
    }
  }
  return counts;
}

}  // namespace

PrecisionRecall precision_recall(const PredictionSet& pred) {
  pred.validate();
  const auto counts = confusion(pred);
  std::uint64_t tp = 0, fp = 0, fn = 0;
  double macro_p = 0.0, macro_r = 0.0;
  std::size_t recall_defined = 0;
  for (const auto& c : counts) {
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
    macro_p += (c.tp + c.fp) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    if (c.tp + c.fn) {
      macro_r += static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
      ++recall_defined;
    }
  }
  PrecisionRecall out;
  out.micro_precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  out.micro_recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  out.macro_precision = macro_p / static_cast<double>(counts.size());
  out.macro_recall = recall_defined ? macro_r / static_cast<double>(recall_defined) : 0.0;
  return out;
}

std::optional<double> roc_auc(const std::vector<double>& scores, const std::vector<int>& targets) {
  if (scores.size() != targets.size()) {
    throw DimensionError("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(targets.size()) + " targets");
  }
  const std::size_t n = scores.size();
  std::size_t pos = 0;
  for (int t : targets) pos += (t != 0);
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of positive ranks with ties sharing the average rank. Ranks are
  // integers or exact halves, so the sum is exact in doubles.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based average
    for (std::size_t k = i; k < j; ++k) {
      if (targets[order[k]] != 0) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double numerator = rank_sum_pos - p * (p + 1.0) / 2.0;
  return numerator / (p * static_cast<double>(neg));
}

MetricsReport report(const PredictionSet& pred) {
  pred.validate();
  MetricsReport out;
  const auto pr = precision_recall(pred);
  out.micro_precision = pr.micro_precision;
  out.macro_precision = pr.macro_precision;
  out.micro_recall = pr.micro_recall;
  out.macro_recall = pr.macro_recall;
  out.per_label = confusion(pred);

  const std::size_t n = pred.n_labels();
  std::vector<double> pooled_scores;
  std::vector<int> pooled_targets;
  pooled_scores.reserve(pred.n_records() * n);
  pooled_targets.reserve(pred.n_records() * n);
  double macro_auc_sum = 0.0;
  std::size_t macro_auc_defined = 0;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> s(pred.n_records());
    std::vector<int> t(pred.n_records());
    for (std::size_t r = 0; r < pred.n_records(); ++r) {
      s[r] = pred.scores[r][j];
      t[r] = pred.targets[r][j];
      pooled_scores.push_back(s[r]);
      pooled_targets.push_back(t[r]);
    }
    auto auc = roc_auc(s, t);
    out.per_label_auc.push_back(auc);
    if (auc) {
      macro_auc_sum += *auc;
      ++macro_auc_defined;
    }
  }
  out.micro_roc_auc = roc_auc(pooled_scores, pooled_targets);
  if (macro_auc_defined) out.macro_roc_auc = macro_auc_sum / static_cast<double>(macro_auc_defined);
  return out;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["micro_precision"] = micro_precision;
  j["macro_precision"] = macro_precision;
  j["micro_recall"] = micro_recall;
  j["macro_recall"] = macro_recall;
  if (micro_roc_auc) j["micro_roc_auc"] = *micro_roc_auc; else j["micro_roc_auc"] = nullptr;
  if (macro_roc_auc) j["macro_roc_auc"] = *macro_roc_auc; else j["macro_roc_auc"] = nullptr;
  return j.dump(2);
}

}  // namespace lerp
