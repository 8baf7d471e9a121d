#pragma once

#include <string>
#include <vector>

#include "lerp/data.hpp"
#include "lerp/model.hpp"

namespace lerp {

// Per-word attention for one record, with scores min-max normalized to
// percent over the real (non-padding) tokens. Normalization is monotone in
// the raw weights; a constant row maps to 100 everywhere.
struct AttentionReport {
  std::string record_id;
  std::string variant;
  std::vector<std::string> tokens;        // real tokens, after truncation
  std::vector<double> alpha_event;        // raw weights, one per token
  std::vector<double> alpha_label;
  std::vector<double> event_pct;          // normalized 0..100
  std::vector<double> label_pct;
  std::vector<std::string> label_names;
  std::vector<double> y_hat;
};

// Min-max to [0,100]; all-equal input maps to all-100.
std::vector<double> normalize_percent(const std::vector<double>& raw);

AttentionReport make_attention_report(const std::string& record_id, Variant variant,
                                      const std::vector<std::string>& tokens,
                                      const ForwardOutput& out,
                                      const std::vector<std::string>& label_names);

std::string attention_report_json(const AttentionReport& report);

// Self-contained HTML page: tokens on red backgrounds whose darkness tracks
// the normalized score, one row per branch, plus the predicted
// probabilities. No external resources.
std::string attention_report_html(const AttentionReport& report);

}  // namespace lerp
