#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "lund/classifiers.hpp"
#include "lund/features.hpp"
#include "lund/prediction.hpp"
#include "lund/scorer_bridge.hpp"

namespace lund::ensemble {

enum class PredictorKind { InProcessModel, ExternalScorer };

std::string_view to_string(PredictorKind kind);

struct Item {
  std::string id;
  std::string text;
};

// An item after the shared preprocessing pass.
struct PreparedItem {
  std::string id;
  std::string cleaned;                // cleaned, unstemmed text for scorers
  features::FeatureVector features;   // shared feature space
};

// Either an output or the reason there is none.
struct Outcome {
  std::optional<PredictorOutput> output;
  std::string error;
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual const std::string& id() const = 0;
  virtual PredictorKind kind() const = 0;
  // Called once before the first predict(); scorers handshake here.
  virtual void prepare() {}
  // One outcome per item. May throw for a whole-batch failure, in which case
  // the runner retries item by item.
  virtual std::vector<Outcome> predict(std::span<const PreparedItem> items) = 0;
};

class ModelPredictor final : public Predictor {
 public:
  ModelPredictor(std::string id, classifiers::TrainedModel model);
  const std::string& id() const override { return id_; }
  PredictorKind kind() const override { return PredictorKind::InProcessModel; }
  std::vector<Outcome> predict(std::span<const PreparedItem> items) override;
  const classifiers::TrainedModel& model() const { return model_; }

 private:
  std::string id_;
  classifiers::TrainedModel model_;
};

class ScorerPredictor final : public Predictor {
 public:
  ScorerPredictor(std::string id, scorer::Endpoint endpoint);
  const std::string& id() const override { return id_; }
  PredictorKind kind() const override { return PredictorKind::ExternalScorer; }
  void prepare() override;
  std::vector<Outcome> predict(std::span<const PreparedItem> items) override;
  scorer::ScorerClient& client() { return client_; }

 private:
  std::string id_;
  scorer::ScorerClient client_;
};

struct Decision {
  Label label = Label::Fake;
  std::array<std::size_t, 2> tally{};  // indexed by index_of(Label)
  bool tie_broken = false;
};

// Plurality vote; a tied count goes to the label with the higher mean
// probability over all voters, and a tie there goes to Fake.
// Throws Error(NoVotes) on empty input.
Decision aggregate(std::span<const PredictorOutput> outputs);

struct Vote {
  std::string predictor_id;
  std::optional<PredictorOutput> output;
  std::string error;

  bool operator==(const Vote&) const = default;
};

struct VoteRecord {
  std::string item_id;
  std::vector<Vote> votes;  // predictor order
  std::array<std::size_t, 2> tally{};
  Label decision = Label::Fake;
  bool tie_broken = false;

  bool operator==(const VoteRecord&) const = default;
};

nlohmann::ordered_json to_json(const VoteRecord& record);
VoteRecord vote_record_from_json(const nlohmann::json& j);
std::string write_vote_records(std::span<const VoteRecord> records);
std::vector<VoteRecord> read_vote_records(std::string_view jsonl);

struct RunOptions {
  std::size_t fan_out = 4;     // predictors invoked concurrently
  std::size_t chunk_size = 256;  // items per predictor call
  std::size_t jobs = 1;        // featurization workers
};

// Prepares every item once, collects one outcome per predictor per item and
// aggregates. A failed predictor loses only its own vote for that item.
// Throws Error(AllPredictorsFailed) naming the item when no vote remains, and
// std::invalid_argument for duplicate predictor ids.
std::vector<VoteRecord> run_ensemble(std::span<Predictor* const> predictors,
                                     const features::FeatureSpace& space,
                                     std::span<const Item> items, const RunOptions& options = {});

struct PredictorSpec {
  std::string id;
  PredictorKind kind = PredictorKind::InProcessModel;
  std::filesystem::path model_path;
  std::optional<scorer::Endpoint> endpoint;
};

struct EnsembleConfig {
  std::filesystem::path feature_space;
  std::vector<PredictorSpec> predictors;
  RunOptions options;
};

// Relative paths resolve against `base_dir`.
EnsembleConfig ensemble_config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});
nlohmann::ordered_json to_json(const EnsembleConfig& config);

std::vector<std::unique_ptr<Predictor>> make_predictors(const EnsembleConfig& config);

}  // namespace lund::ensemble
