#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "lerp/errors.hpp"
#include "lerp/metrics.hpp"
#include "oracles.hpp"

using lerp::PredictionSet;
using lerp::roc_auc;

namespace {

PredictionSet random_predictions(std::size_t records, std::size_t labels, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::bernoulli_distribution bit(0.4);
  PredictionSet pred;
  pred.scores.assign(records, std::vector<double>(labels));
  pred.targets.assign(records, std::vector<int>(labels));
  for (std::size_t r = 0; r < records; ++r)
    for (std::size_t j = 0; j < labels; ++j) {
      pred.scores[r][j] = score(rng);
      pred.targets[r][j] = bit(rng) ? 1 : 0;
    }
  return pred;
}

}  // namespace

TEST_CASE("perfect predictions score 1.0 everywhere") {
  PredictionSet pred;
  pred.scores = {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  pred.targets = {{1, 0}, {0, 1}, {1, 1}};
  const auto pr = lerp::precision_recall(pred);
  CHECK(pr.micro_precision == 1.0);
  CHECK(pr.macro_precision == 1.0);
  CHECK(pr.micro_recall == 1.0);
  CHECK(pr.macro_recall == 1.0);
  const auto rep = lerp::report(pred);
  CHECK(*rep.micro_roc_auc == 1.0);
  CHECK(*rep.macro_roc_auc == 1.0);
}

TEST_CASE("all-negative predictions give zero recall") {
  PredictionSet pred;
  pred.scores = {{0.1, 0.2}, {0.3, 0.1}};
  pred.targets = {{1, 0}, {1, 1}};
  const auto pr = lerp::precision_recall(pred);
  CHECK(pr.micro_recall == 0.0);
  CHECK(pr.macro_recall == 0.0);
  // no predicted positives: precision 0 by convention
  CHECK(pr.micro_precision == 0.0);
  CHECK(pr.macro_precision == 0.0);
}

TEST_CASE("zero records is a data error") {
  PredictionSet pred;
  CHECK_THROWS_AS(lerp::precision_recall(pred), lerp::DataError);
}

TEST_CASE("precision/recall match hand-counted confusion matrices") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 25; ++trial) {
    PredictionSet pred = random_predictions(6, 3, rng);
    const auto pr = lerp::precision_recall(pred);

    std::uint64_t tp = 0, fp = 0, fn = 0;
    double macro_p = 0.0, macro_r = 0.0;
    std::size_t recall_defined = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      const auto c = oracle::count_label(pred.scores, pred.targets, j, pred.threshold);
      tp += c.tp;
      fp += c.fp;
      fn += c.fn;
      macro_p += (c.tp + c.fp) ? double(c.tp) / double(c.tp + c.fp) : 0.0;
      if (c.tp + c.fn) {
        macro_r += double(c.tp) / double(c.tp + c.fn);
        ++recall_defined;
      }
    }
    CHECK(pr.micro_precision == ((tp + fp) ? double(tp) / double(tp + fp) : 0.0));
    CHECK(pr.micro_recall == ((tp + fn) ? double(tp) / double(tp + fn) : 0.0));
    CHECK(pr.macro_precision == macro_p / 3.0);
    CHECK(pr.macro_recall == (recall_defined ? macro_r / double(recall_defined) : 0.0));
  }
}

TEST_CASE("micro precision equals micro recall when predicted == actual positives") {
  // 2 predicted positives, 2 actual positives, 1 overlapping
  PredictionSet pred;
  pred.scores = {{0.9, 0.1}, {0.1, 0.9}, {0.1, 0.1}};
  pred.targets = {{1, 0}, {1, 0}, {0, 0}};
  const auto pr = lerp::precision_recall(pred);
  CHECK(pr.micro_precision == pr.micro_recall);
}

TEST_CASE("roc_auc trivial cases") {
  CHECK(*roc_auc({0.9, 0.1}, {1, 0}) == 1.0);
  CHECK(*roc_auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}) == 0.5);
  CHECK(!roc_auc({0.2, 0.3}, {1, 1}).has_value());
  CHECK(!roc_auc({0.2, 0.3}, {0, 0}).has_value());
}

TEST_CASE("roc_auc equals the pairwise oracle") {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 10;
    std::vector<double> scores(n);
    std::vector<int> targets(n);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // quantized scores so ties actually happen
      scores[i] = std::floor(score(rng) * 8.0) / 8.0;
      targets[i] = rng() % 2;
      (targets[i] ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) continue;
    CHECK(std::abs(*roc_auc(scores, targets) - oracle::pairwise_auc(scores, targets)) < 1e-6);
  }
}

TEST_CASE("roc_auc is invariant under strictly monotone transforms") {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> score(0.01, 0.99);
  std::vector<double> scores(12);
  std::vector<int> targets{1, 0, 0, 1, 1, 0, 1, 0, 0, 1, 0, 1};
  for (auto& s : scores) s = std::floor(score(rng) * 16.0) / 16.0;

  const double base = *roc_auc(scores, targets);
  auto transformed = scores;
  for (auto& s : transformed) s = std::exp(3.0 * s) - 0.5;  // strictly increasing
  CHECK(*roc_auc(transformed, targets) == base);
  for (auto& s : transformed) s = std::atan(s) * 2.0 + 7.0;
  CHECK(*roc_auc(transformed, targets) == base);
}

TEST_CASE("complement identity holds exactly") {
  std::mt19937_64 rng(109);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 40;
    std::vector<double> scores(n);
    std::vector<int> targets(n);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = std::floor(score(rng) * 6.0) / 6.0;
      targets[i] = rng() % 2;
      (targets[i] ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) continue;
    std::vector<int> flipped(n);
    for (std::size_t i = 0; i < n; ++i) flipped[i] = 1 - targets[i];
    CHECK(*roc_auc(scores, targets) + *roc_auc(scores, flipped) == 1.0);
  }
}

TEST_CASE("report assembles all six metrics") {
  SUBCASE("identity case") {
    PredictionSet pred;
    pred.scores = {{1.0, 0.0}, {0.0, 1.0}};
    pred.targets = {{1, 0}, {0, 1}};
    const auto rep = lerp::report(pred);
    CHECK(rep.micro_precision == 1.0);
    CHECK(rep.macro_recall == 1.0);
    CHECK(*rep.micro_roc_auc == 1.0);
  }

  SUBCASE("inverted scores pool to micro AUC 0") {
    PredictionSet pred;
    pred.scores = {{0.0, 1.0}, {1.0, 0.0}};
    pred.targets = {{1, 0}, {0, 1}};
    CHECK(*lerp::report(pred).micro_roc_auc == 0.0);
  }

  SUBCASE("fixed random 50x5 equals the independent reference") {
    std::mt19937_64 rng(113);
    PredictionSet pred = random_predictions(50, 5, rng);
    const auto rep = lerp::report(pred);

    std::vector<double> pooled_s;
    std::vector<int> pooled_t;
    double macro_auc = 0.0;
    std::size_t defined = 0;
    for (std::size_t j = 0; j < 5; ++j) {
      std::vector<double> s(50);
      std::vector<int> t(50);
      for (std::size_t r = 0; r < 50; ++r) {
        s[r] = pred.scores[r][j];
        t[r] = pred.targets[r][j];
        pooled_s.push_back(s[r]);
        pooled_t.push_back(t[r]);
      }
      bool has_pos = std::any_of(t.begin(), t.end(), [](int v) { return v == 1; });
      bool has_neg = std::any_of(t.begin(), t.end(), [](int v) { return v == 0; });
      if (has_pos && has_neg) {
        macro_auc += oracle::pairwise_auc(s, t);
        ++defined;
      }
      CHECK(rep.per_label_auc[j].has_value() == (has_pos && has_neg));
    }
    REQUIRE(defined > 0);
    CHECK(std::abs(*rep.micro_roc_auc - oracle::pairwise_auc(pooled_s, pooled_t)) < 1e-6);
    CHECK(std::abs(*rep.macro_roc_auc - macro_auc / double(defined)) < 1e-6);
  }
}

TEST_CASE("macro metrics are invariant under label reordering") {
  std::mt19937_64 rng(127);
  PredictionSet pred = random_predictions(20, 4, rng);
  const auto rep = lerp::report(pred);

  PredictionSet shuffled = pred;
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t j = 0; j < 4; ++j) {
      shuffled.scores[r][j] = pred.scores[r][perm[j]];
      shuffled.targets[r][j] = pred.targets[r][perm[j]];
    }
  const auto rep2 = lerp::report(shuffled);
  CHECK(rep2.macro_precision == doctest::Approx(rep.macro_precision).epsilon(1e-12));
  CHECK(rep2.macro_recall == doctest::Approx(rep.macro_recall).epsilon(1e-12));
  CHECK(*rep2.macro_roc_auc == doctest::Approx(*rep.macro_roc_auc).epsilon(1e-12));
  CHECK(*rep2.micro_roc_auc == doctest::Approx(*rep.micro_roc_auc).epsilon(1e-12));
}

TEST_CASE("report JSON is flat and carries the six headline keys") {
  std::mt19937_64 rng(131);
  PredictionSet pred = random_predictions(10, 3, rng);
  const auto parsed = nlohmann::json::parse(lerp::report(pred).to_json());
  for (const char* key : {"micro_precision", "macro_precision", "micro_recall", "macro_recall",
                          "micro_roc_auc", "macro_roc_auc"}) {
    CHECK(parsed.contains(key));
  }
}

TEST_CASE("scores outside [0,1] are rejected") {
  PredictionSet pred;
  pred.scores = {{1.2}};
  pred.targets = {{1}};
  CHECK_THROWS_AS(lerp::precision_recall(pred), lerp::DataError);
}
