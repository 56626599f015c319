#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lund/corpus.hpp"
#include "lund/ensemble.hpp"

namespace lund::evaluate {

// Fake is the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  ConfusionMatrix operator+(const ConfusionMatrix& o) const {
    return {tp + o.tp, fp + o.fp, fn + o.fn, tn + o.tn};
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

// Throws Error(LengthMismatch) or Error(EmptyMatrix) for empty input.
ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> gold);

// 2PR / (P + R); 0 when P + R is 0.
double harmonic_f1(double precision, double recall);

struct EvalReport {
  std::string model_id;
  std::string config_hash;
  ConfusionMatrix matrix;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double macro_f1 = 0.0;
  // Names of metrics whose denominator was zero; they are reported as 0.
  std::vector<std::string> undefined;

  bool is_undefined(std::string_view metric) const;
  bool operator==(const EvalReport&) const = default;
};

// Throws Error(EmptyMatrix) when the matrix total is 0.
EvalReport metrics(const ConfusionMatrix& matrix);

nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

struct LabeledPrediction {
  std::string item_id;
  std::string source_id;
  Label predicted = Label::Fake;
  Label gold = Label::Fake;
};

struct CrossDatasetReport {
  std::vector<std::pair<std::string, EvalReport>> per_source;  // by source_id
  EvalReport pooled;
};

// Per-source reports plus the pooled report over the selected sources.
// `sources` restricts the evaluation; an id absent from the predictions
// throws Error(UnknownSource).
CrossDatasetReport cross_dataset_eval(std::span<const LabeledPrediction> predictions,
                                      const std::vector<std::string>& sources = {});

nlohmann::ordered_json to_json(const CrossDatasetReport& report);

// Joins vote records with gold labels by item id. Throws
// Error(UnknownItemId) for a record without a gold entry.
std::vector<LabeledPrediction> join_gold(std::span<const ensemble::VoteRecord> records,
                                         std::span<const NewsRecord> gold);

struct Verdict {
  Label corrected = Label::Fake;
  std::string reviewer;
  std::string note;
  bool operator==(const Verdict&) const = default;
};

struct PredictorVote {
  std::string predictor_id;
  std::string vote;  // "legit", "fake" or "error"
  bool operator==(const PredictorVote&) const = default;
};

struct ReviewItem {
  std::string item_id;
  std::string text;
  Label gold = Label::Fake;
  Label predicted = Label::Fake;
  std::vector<PredictorVote> votes;
  std::optional<Verdict> verdict;
  bool operator==(const ReviewItem&) const = default;
};

// Misclassified items only, in record order.
std::vector<ReviewItem> export_review(std::span<const ensemble::VoteRecord> records,
                                      std::span<const NewsRecord> gold);

nlohmann::ordered_json to_json(const ReviewItem& item);
ReviewItem review_item_from_json(const nlohmann::json& j);
std::string write_review(std::span<const ReviewItem> items);
std::vector<ReviewItem> read_review(std::string_view jsonl);

// Spreadsheet round trip. Columns: item_id, text, gold, predicted, votes,
// verdict, reviewer, note. Tabs, newlines and backslashes are escaped.
std::string review_to_tsv(std::span<const ReviewItem> items);
std::vector<ReviewItem> review_from_tsv(std::string_view tsv);

struct ReviewOutcome {
  EvalReport original;
  EvalReport amended;
  std::vector<std::pair<std::string, Verdict>> applied;  // by item id
};

// Applies expert verdicts to the gold labels and recomputes the report.
// Throws Error(UnknownItemId) for a verdict on an item that was not exported
// and Error(ConflictingVerdicts) for contradictory verdicts on one item.
ReviewOutcome import_review(std::span<const ensemble::VoteRecord> records,
                            std::span<const NewsRecord> gold,
                            std::span<const ReviewItem> reviewed);

nlohmann::ordered_json to_json(const ReviewOutcome& outcome);

// Fixed-width table: Model, Accuracy, Precision, Recall, F1-Score.
std::string render_table(std::span<const EvalReport> reports);

}  // namespace lund::evaluate
