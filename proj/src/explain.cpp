#include "lerp/explain.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "lerp/errors.hpp"

namespace lerp {

std::vector<double> normalize_percent(const std::vector<double>& raw) {
  if (raw.empty()) return {};
  const double lo = *std::min_element(raw.begin(), raw.end());
  const double hi = *std::max_element(raw.begin(), raw.end());
  std::vector<double> pct(raw.size());
  if (hi == lo) {
    std::fill(pct.begin(), pct.end(), 100.0);
    return pct;
  }
  for (std::size_t i = 0; i < raw.size(); ++i) pct[i] = 100.0 * (raw[i] - lo) / (hi - lo);
  return pct;
}

AttentionReport make_attention_report(const std::string& record_id, Variant variant,
                                      const std::vector<std::string>& tokens,
                                      const ForwardOutput& out,
                                      const std::vector<std::string>& label_names) {
  if (tokens.size() > out.alpha_e.size()) {
    throw ContractError("attention report: " + std::to_string(tokens.size()) + " tokens vs " +
                        std::to_string(out.alpha_e.size()) + " attention entries");
  }
  AttentionReport report;
  report.record_id = record_id;
  report.variant = variant_name(variant);
  report.tokens = tokens;
  // Real tokens occupy the leading positions; the tail is padding.
  report.alpha_event.assign(out.alpha_e.begin(), out.alpha_e.begin() + tokens.size());
  report.alpha_label.assign(out.alpha_y.begin(), out.alpha_y.begin() + tokens.size());
  report.event_pct = normalize_percent(report.alpha_event);
  report.label_pct = normalize_percent(report.alpha_label);
  report.label_names = label_names;
  report.y_hat = out.y_hat;
  return report;
}

std::string attention_report_json(const AttentionReport& report) {
  nlohmann::json j;
  j["id"] = report.record_id;
  j["variant"] = report.variant;
  j["tokens"] = report.tokens;
  j["alpha_event"] = report.alpha_event;
  j["alpha_label"] = report.alpha_label;
  j["event_attention_pct"] = report.event_pct;
  j["label_attention_pct"] = report.label_pct;
  nlohmann::json preds = nlohmann::json::array();
  for (std::size_t i = 0; i < report.y_hat.size(); ++i) {
    preds.push_back({{"label", i < report.label_names.size() ? report.label_names[i] : ""},
                     {"probability", report.y_hat[i]}});
  }
  j["predictions"] = std::move(preds);
  return j.dump(2);
}

namespace {

std::string escape_html(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

void render_row(std::ostringstream& html, const std::string& title,
                const std::vector<std::string>& tokens, const std::vector<double>& pct) {
  html << "  <h2>" << escape_html(title) << "</h2>\n  <p class=\"note\">";
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    char style[96];
    std::snprintf(style, sizeof(style), "background: rgba(220, 20, 20, %.3f);", pct[i] / 100.0);
    html << "<span class=\"tok\" style=\"" << style << "\" title=\"" << pct[i] << "%\">"
         << escape_html(tokens[i]) << "</span> ";
  }
  html << "</p>\n";
}

}  // namespace

std::string attention_report_html(const AttentionReport& report) {
  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>Attention "
       << escape_html(report.record_id) << "</title>\n<style>\n"
       << "body { font-family: sans-serif; margin: 2em; }\n"
       << ".note { line-height: 1.9; max-width: 60em; }\n"
       << ".tok { padding: 1px 3px; border-radius: 3px; }\n"
       << "table { border-collapse: collapse; margin-top: 1em; }\n"
       << "td, th { border: 1px solid #999; padding: 4px 10px; text-align: left; }\n"
       << "</style>\n</head>\n<body>\n"
       << "  <h1>Record " << escape_html(report.record_id) << " (" << escape_html(report.variant)
       << ")</h1>\n";
  render_row(html, "Event-guided attention", report.tokens, report.event_pct);
  render_row(html, "Label-dependent attention", report.tokens, report.label_pct);
  html << "  <table>\n    <tr><th>Risk label</th><th>Probability</th></tr>\n";
  for (std::size_t i = 0; i < report.y_hat.size(); ++i) {
    char prob[32];
    std::snprintf(prob, sizeof(prob), "%.4f", report.y_hat[i]);
    html << "    <tr><td>"
         << escape_html(i < report.label_names.size() ? report.label_names[i] : "")
         << "</td><td>" << prob << "</td></tr>\n";
  }
  html << "  </table>\n</body>\n</html>\n";
  return html.str();
}

}  // namespace lerp
